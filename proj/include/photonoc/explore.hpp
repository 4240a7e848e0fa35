#pragma once

// Design-space exploration: one-knob sweeps, trim-heater optimization, and
// activity scenario comparisons. Every sample is a full thermal solve plus
// an SNR evaluation of each configured ring variant.

#include <optional>
#include <string>
#include <vector>

#include "photonoc/chipmodel.hpp"
#include "photonoc/photonics.hpp"
#include "photonoc/snr.hpp"
#include "photonoc/thermal.hpp"

namespace photonoc::explore {

// Ring variant: an ordering of the ONIs and a total physical length. Segment
// lengths follow the ONI centre-to-centre distances along the route, scaled
// to the requested total.
struct RingSpec {
    std::string name;
    double total_length_mm = 0;
    std::vector<int> order;  // ONI ids around the ring; empty = snake route
};

// Channel plan: ONI at ring position p transmits to position (p + stride),
// wavelength index = p mod stride. Default keeps same-wavelength channels on
// disjoint segments by construction.
struct ChannelPlan {
    int stride = 3;
    double base_wavelength_nm = 1550.0;
    double spacing_nm = 20.0;
};

struct LinkParams {
    double propagation_loss_db_cm = 0.5;
    double noise_floor_mw = 1e-12;
    double snr_ceiling_db = 120.0;
    double sensitivity_dbm = -20.0;
};

// Everything needed to evaluate one operating point, loaded from a config
// file once and reused across samples (the mesh is built a single time).
struct System {
    chipmodel::SystemModel model;
    photonics::VcselModel vcsel;
    photonics::MrModel mr;
    photonics::ThermoOpticModel thermo;
    photonics::HeatPolicy heat_policy = photonics::HeatPolicy::WorstCase;
    LinkParams link;
    ChannelPlan plan;
    std::vector<RingSpec> rings;
    thermal::MeshPolicy mesh_policy;
    thermal::SolveOptions solve;
    std::shared_ptr<const thermal::Mesh> mesh;  // geometry shared by all samples

    chipmodel::ActivityScenario activity;  // default scenario
    double pvcsel_mw = 0;                  // per-laser electrical/dissipated power
    double pheater_mw = 0;
    double pdriver_mw = 0;
    double ivcsel_ma = 0;  // alternative drive knob; pvcsel = V * I when set
    double gradient_limit_c = 1.0;
    uint64_t seed = 0;

    static System load(const std::string& config_path);
};

// Overrides applied to the system for a single evaluation.
struct Operating {
    std::optional<double> pvcsel_mw;
    std::optional<double> pheater_mw;
    std::optional<double> pdriver_mw;
    std::optional<chipmodel::ActivityScenario> activity;
};

struct RingResult {
    std::string name;
    double length_mm = 0;
    snr::SnrReport report;
};

struct Evaluation {
    thermal::ThermalMap map;
    std::vector<thermal::OniThermalStats> stats;
    std::vector<RingResult> rings;
    double pvcsel_mw = 0, pheater_mw = 0, pdriver_mw = 0;
    double chip_power_mw = 0;
    double total_optical_mw = 0;  // sum of injected OP_net over channels
    double max_gradient_c = 0;
    double worst_snr_db = 0;
    bool gradient_ok = true;
    bool sensitivity_ok = true;
};

Evaluation evaluate(const System& sys, const Operating& op);

enum class SweepVariable { PHeater, IVcsel, PChip };
const char* sweep_variable_name(SweepVariable v);
SweepVariable sweep_variable_from(const std::string& name);

struct SweepSpec {
    SweepVariable variable = SweepVariable::PHeater;
    double min = 0, max = 0;  // mW for powers, mA for current
    int steps = 0;            // >= 2; min < max
};

struct SamplePoint {
    double knob = 0;
    Evaluation eval;
};

struct ExplorationResult {
    SweepVariable variable = SweepVariable::PHeater;
    std::vector<SamplePoint> samples;
};

// jobs > 1 solves samples concurrently; outputs are merged in knob order and
// are bitwise identical to a serial run.
ExplorationResult sweep(const System& sys, const SweepSpec& spec, int jobs = 1);

struct HeaterOptimum {
    double pheater_mw = 0;
    double gradient_c = 0;
    double no_heater_gradient_c = 0;
    bool unimodal = true;  // false = golden section rejected, grid scan used
    int evaluations = 0;
};

// Minimizes the worst intra-ONI gradient over P_heater in [0, P_VCSEL] by
// golden-section search; budget caps thermal solves. A non-unimodal screen
// falls back to a uniform grid scan of the remaining budget.
HeaterOptimum optimize_heater(const System& sys, double pvcsel_mw, int budget = 16);

struct ScenarioRow {
    std::string name;
    double chip_power_mw = 0;
    double oni_avg_min_c = 0, oni_avg_max_c = 0;
    double spread_c = 0;  // max - min of ONI average temperatures
    double max_gradient_c = 0;
    std::vector<std::pair<std::string, double>> worst_snr_by_ring;
};

std::vector<ScenarioRow> evaluate_scenarios(const System& sys,
                                            const std::vector<chipmodel::ActivityScenario>& scenarios);

// Builds the ring network for one variant from a finished thermal evaluation;
// exposed for tests.
snr::RingNetwork build_ring(const System& sys, const RingSpec& ring,
                            const std::vector<thermal::OniThermalStats>& stats, double pvcsel_mw);

}  // namespace photonoc::explore
