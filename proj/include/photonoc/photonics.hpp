#pragma once

// Temperature-dependent device models for the optical path: VCSEL wall-plug
// efficiency, thermo-optic wavelength drift, and microring drop response.
// Powers in mW, wavelengths in nm, temperatures in degrees C.

#include <functional>
#include <string>
#include <vector>

namespace photonoc::photonics {

double mw_to_dbm(double mw);
double dbm_to_mw(double dbm);

// Wall-plug efficiency sampled on a (temperature, current) grid. Lookups use
// bilinear interpolation and clamp outside the hull.
struct VcselModel {
    std::vector<double> temps_c;     // strictly increasing
    std::vector<double> currents_ma; // strictly increasing
    std::vector<double> eta;         // row-major [temp][current], each in (0,1)

    double coupling_efficiency = 0.70;  // laser-to-waveguide
    double drive_voltage_v = 1.0;       // P_elec = V * I; assumed constant
    double nominal_wavelength_nm = 1550.0;
    double linewidth_nm = 0.1;
    double modulation_bandwidth_ghz = 12.0;

    // Two-point table: 15% at 40 C falling to 4% at 60 C at one reference
    // current, which is the default characterization.
    static VcselModel default_model();
    // CSV rows "temp_c,current_ma,eta" forming a full grid.
    static VcselModel from_csv(const std::string& path);

    void validate() const;  // throws ValidationError
    double electrical_mw(double i_ma) const { return drive_voltage_v * i_ma; }
};

// Interpolated efficiency; clamps T and I to the table hull.
double vcsel_efficiency(const VcselModel& m, double t_c, double i_ma);

// Resonance drop filter centred on its resonance; delta is the absolute
// detuning between signal and resonance. drop(0) = peak, drop(bw/2) = peak/2.
struct MrModel {
    double bandwidth_3db_nm = 1.55;
    double peak_drop = 1.0;
};

double mr_drop_ratio(const MrModel& m, double delta_nm);

// Linear resonance/emission drift with temperature.
struct ThermoOpticModel {
    double sensitivity_nm_per_c = 0.1;
    double reference_c = 25.0;
};

double wavelength_at(const ThermoOpticModel& m, double nominal_nm, double t_c);

// How laser self-heating enters the thermal model. WorstCase dissipates the
// full electrical power (lasing power not subtracted); SelfConsistent
// dissipates P_elec * (1 - eta(T)).
enum class HeatPolicy { WorstCase, SelfConsistent };

struct VcselOperatingPoint {
    double temperature_c = 0;   // converged junction temperature
    double eta = 0;             // efficiency at that temperature
    double electrical_mw = 0;   // drive power
    double dissipated_mw = 0;   // heat handed to the thermal model
    double op_vcsel_mw = 0;     // emitted optical power
    double op_net_mw = 0;       // after waveguide coupling
    int iterations = 0;
};

// Finds the self-consistent temperature T = local_t_c(dissipated(T)) by
// damped fixed-point iteration (factor 0.5). local_t_c maps an injected heat
// load in mW to the laser's local steady temperature in C. Throws SolveError
// with the last two iterates if not converged within max_iterations.
VcselOperatingPoint vcsel_operating_point(const VcselModel& m, double i_ma,
                                          const std::function<double(double)>& local_t_c,
                                          double tol_c = 0.01, HeatPolicy policy = HeatPolicy::SelfConsistent,
                                          int max_iterations = 100, double damping = 0.5);

// Emitted power at a known operating temperature (no iteration): returns the
// operating point with op_vcsel = eta * P_elec and op_net = coupling * op_vcsel.
VcselOperatingPoint emitted_power(const VcselModel& m, double i_ma, double t_c,
                                  HeatPolicy policy = HeatPolicy::WorstCase);

}  // namespace photonoc::photonics
