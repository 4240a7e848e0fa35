#pragma once

// Small 2x2-tile system used across the test binaries: full stack semantics
// (die with BEOL bands, optical layer, one TX and one RX slot per ONI) at a
// mesh coarse enough that a steady solve takes well under a second.

#include <filesystem>
#include <fstream>
#include <string>

namespace photonoc::testfix {

inline std::string mini_config_text() {
    return R"(
[chip]
x_um = 1600.0
y_um = 1600.0

[simulation]
ambient_c = 25.0
seed = 7
gradient_limit_c = 1.0

[[materials]]
name = "silicon"
conductivity_w_mc = 130.0

[[materials]]
name = "beol"
conductivity_w_mc = 2.25

[[materials]]
name = "oxide"
conductivity_w_mc = 1.4

[[materials]]
name = "iii_v"
conductivity_w_mc = 30.0

[[materials]]
name = "germanium"
conductivity_w_mc = 60.0

[[materials]]
name = "polysilicon"
conductivity_w_mc = 30.0

[[materials]]
name = "copper"
conductivity_w_mc = 390.0

[[layers]]
name = "die"
material = "silicon"
thickness_um = 100.0
role = "die"
beol_thickness_um = 10.0
beol_material = "beol"
tiles_x = 2
tiles_y = 2

[[layers]]
name = "optical"
material = "oxide"
thickness_um = 10.0
role = "optical"

[[layers]]
name = "lid"
material = "copper"
thickness_um = 200.0

[oni]
tracks = 1
tx_per_track = 1
rx_per_track = 1
slot_pitch_um = 20.0
track_pitch_um = 40.0

[oni.vcsel]
dx_um = 15.0
dy_um = 30.0
dz_um = 4.0
material = "iii_v"

[oni.mr]
dx_um = 10.0
dy_um = 10.0
dz_um = 4.0
material = "silicon"

[oni.photodetector]
dx_um = 10.0
dy_um = 10.0
dz_um = 4.0
material = "germanium"

[oni.heater]
dx_um = 10.0
dy_um = 10.0
dz_um = 2.0
material = "polysilicon"

[oni.driver]
dx_um = 15.0
dy_um = 25.0
material = "silicon"

[oni.tsv]
dx_um = 5.0
dy_um = 5.0
material = "copper"

[boundary.top]
kind = "convective"
h_w_m2c = 50000.0

[devices]
pvcsel_mw = 2.0
pheater_mw = 0.5
pdriver_mw = 0.25

[channels]
stride = 2
base_wavelength_nm = 1550.0
spacing_nm = 20.0

[[rings]]
name = "short"
length_mm = 10.0

[[rings]]
name = "long"
length_mm = 20.0

[mesh]
fine_um = 20.0
source_um = 200.0
package_um = 400.0
min_cell_um = 0.05

[solver]
tolerance = 1e-8
max_iterations = 20000
preconditioner = "ic0"

[activity]
default = "uniform:2W"
)";
}

// Writes the mini config under /tmp and returns its path. Repeated calls
// rewrite the same file, which keeps reruns byte-stable.
inline std::string write_mini_config(const std::string& stem = "photonoc_mini") {
    const std::filesystem::path dir = std::filesystem::temp_directory_path();
    const std::filesystem::path path = dir / (stem + ".toml");
    std::ofstream out(path);
    out << mini_config_text();
    return path.string();
}

}  // namespace photonoc::testfix
