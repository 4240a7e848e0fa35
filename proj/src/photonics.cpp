#include "photonoc/photonics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "photonoc/common.hpp"

namespace photonoc::photonics {

double mw_to_dbm(double mw) {
    if (!(mw > 0)) throw ValidationError("mw_to_dbm requires a positive power");
    return 10.0 * std::log10(mw);
}

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

VcselModel VcselModel::default_model() {
    VcselModel m;
    m.temps_c = {40.0, 60.0};
    m.currents_ma = {6.0};  // single characterization current
    m.eta = {0.15, 0.04};
    m.validate();
    return m;
}

VcselModel VcselModel::from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(strfmt("cannot open efficiency table '%s'", path.c_str()));
    // Collect triplets, then require that they form a full (T, I) grid.
    std::vector<double> ts, is, etas;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty() || line[0] == '#') continue;
        if (lineno == 1 && line.find_first_not_of("0123456789+-.eE, \t\r") != std::string::npos)
            continue;  // header row
        std::istringstream ss(line);
        std::string cell;
        double v[3];
        for (int c = 0; c < 3; c++) {
            if (!std::getline(ss, cell, ','))
                throw ConfigError(strfmt("%s:%d: expected temp_c,current_ma,eta", path.c_str(), lineno));
            try {
                v[c] = std::stod(cell);
            } catch (const std::exception&) {
                throw ConfigError(strfmt("%s:%d: non-numeric cell '%s'", path.c_str(), lineno, cell.c_str()));
            }
        }
        ts.push_back(v[0]);
        is.push_back(v[1]);
        etas.push_back(v[2]);
    }
    if (ts.empty()) throw ConfigError(strfmt("efficiency table '%s' is empty", path.c_str()));

    VcselModel m;
    auto axis = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    };
    m.temps_c = axis(ts);
    m.currents_ma = axis(is);
    size_t nt = m.temps_c.size(), ni = m.currents_ma.size();
    if (nt * ni != ts.size())
        throw ConfigError(strfmt("efficiency table '%s' is not a full %zux%zu grid", path.c_str(), nt, ni));
    m.eta.assign(nt * ni, -1.0);
    for (size_t r = 0; r < ts.size(); r++) {
        size_t t = std::lower_bound(m.temps_c.begin(), m.temps_c.end(), ts[r]) - m.temps_c.begin();
        size_t i = std::lower_bound(m.currents_ma.begin(), m.currents_ma.end(), is[r]) - m.currents_ma.begin();
        if (m.eta[t * ni + i] >= 0)
            throw ConfigError(strfmt("efficiency table '%s' has a duplicate entry (%g, %g)",
                                     path.c_str(), ts[r], is[r]));
        m.eta[t * ni + i] = etas[r];
    }
    m.validate();
    return m;
}

void VcselModel::validate() const {
    if (temps_c.empty() || currents_ma.empty() || eta.size() != temps_c.size() * currents_ma.size())
        throw ValidationError("efficiency table is empty or has a mismatched grid");
    for (size_t i = 1; i < temps_c.size(); i++)
        if (!(temps_c[i] > temps_c[i - 1]))
            throw ValidationError("efficiency table temperatures must be strictly increasing");
    for (size_t i = 1; i < currents_ma.size(); i++)
        if (!(currents_ma[i] > currents_ma[i - 1]))
            throw ValidationError("efficiency table currents must be strictly increasing");
    for (double e : eta)
        if (!(e > 0.0 && e < 1.0)) throw ValidationError("efficiency values must lie in (0, 1)");
    size_t ni = currents_ma.size();
    for (size_t i = 0; i < ni; i++)
        for (size_t t = 1; t < temps_c.size(); t++)
            if (eta[t * ni + i] > eta[(t - 1) * ni + i])
                throw ValidationError("efficiency must be non-increasing with temperature");
    if (!(coupling_efficiency > 0 && coupling_efficiency <= 1))
        throw ValidationError("coupling efficiency must lie in (0, 1]");
    if (!(drive_voltage_v > 0)) throw ValidationError("drive voltage must be positive");
}

namespace {

// Index i with axis[i] <= v <= axis[i+1], plus the interpolation weight;
// clamps outside the hull (weight pinned to an end point).
std::pair<size_t, double> bracket(const std::vector<double>& axis, double v) {
    if (axis.size() == 1 || v <= axis.front()) return {0, 0.0};
    if (v >= axis.back()) return {axis.size() - 2, 1.0};
    size_t hi = std::upper_bound(axis.begin(), axis.end(), v) - axis.begin();
    size_t lo = hi - 1;
    return {lo, (v - axis[lo]) / (axis[hi] - axis[lo])};
}

}  // namespace

double vcsel_efficiency(const VcselModel& m, double t_c, double i_ma) {
    if (m.eta.size() != m.temps_c.size() * m.currents_ma.size() || m.eta.empty())
        throw ValidationError("efficiency lookup on an empty or mismatched table");
    size_t ni = m.currents_ma.size();
    auto [t0, wt] = bracket(m.temps_c, t_c);
    auto [i0, wi] = bracket(m.currents_ma, i_ma);
    size_t t1 = std::min(t0 + 1, m.temps_c.size() - 1);
    size_t i1 = std::min(i0 + 1, ni - 1);
    double e00 = m.eta[t0 * ni + i0], e01 = m.eta[t0 * ni + i1];
    double e10 = m.eta[t1 * ni + i0], e11 = m.eta[t1 * ni + i1];
    // Symmetric blend so table nodes reproduce exactly (weight 0 or 1 leaves
    // no residual term, unlike the e0 + w * (e1 - e0) form).
    double lo = (1.0 - wi) * e00 + wi * e01;
    double hi = (1.0 - wi) * e10 + wi * e11;
    return (1.0 - wt) * lo + wt * hi;
}

double mr_drop_ratio(const MrModel& m, double delta_nm) {
    if (!(m.bandwidth_3db_nm > 0)) throw ValidationError("ring bandwidth must be positive");
    if (!(m.peak_drop > 0 && m.peak_drop <= 1)) throw ValidationError("peak drop must lie in (0, 1]");
    double x = 2.0 * delta_nm / m.bandwidth_3db_nm;
    return m.peak_drop / (1.0 + x * x);
}

double wavelength_at(const ThermoOpticModel& m, double nominal_nm, double t_c) {
    return nominal_nm + m.sensitivity_nm_per_c * (t_c - m.reference_c);
}

VcselOperatingPoint emitted_power(const VcselModel& m, double i_ma, double t_c, HeatPolicy policy) {
    VcselOperatingPoint op;
    op.temperature_c = t_c;
    op.eta = vcsel_efficiency(m, t_c, i_ma);
    op.electrical_mw = m.electrical_mw(i_ma);
    op.op_vcsel_mw = op.eta * op.electrical_mw;
    op.dissipated_mw = policy == HeatPolicy::WorstCase ? op.electrical_mw
                                                       : op.electrical_mw - op.op_vcsel_mw;
    op.op_net_mw = m.coupling_efficiency * op.op_vcsel_mw;
    return op;
}

VcselOperatingPoint vcsel_operating_point(const VcselModel& m, double i_ma,
                                          const std::function<double(double)>& local_t_c,
                                          double tol_c, HeatPolicy policy, int max_iterations,
                                          double damping) {
    if (!local_t_c) throw ValidationError("vcsel_operating_point needs a thermal response callback");
    double p_elec = m.electrical_mw(i_ma);
    auto heat_at = [&](double t) {
        if (policy == HeatPolicy::WorstCase) return p_elec;
        return p_elec * (1.0 - vcsel_efficiency(m, t, i_ma));
    };

    // Worst case dissipates the full drive power regardless of temperature,
    // so the first response evaluation already is the fixed point.
    if (policy == HeatPolicy::WorstCase) {
        VcselOperatingPoint op = emitted_power(m, i_ma, local_t_c(p_elec), policy);
        op.iterations = 1;
        return op;
    }

    // Start from the cold-cavity temperature (no self-heating).
    double t = local_t_c(0.0);
    double t_prev = t;
    for (int it = 1; it <= max_iterations; it++) {
        double t_next = local_t_c(heat_at(t));
        double t_damped = t + damping * (t_next - t);
        if (std::abs(t_damped - t) <= tol_c) {
            VcselOperatingPoint op = emitted_power(m, i_ma, t_damped, policy);
            op.iterations = it;
            return op;
        }
        t_prev = t;
        t = t_damped;
    }
    throw SolveError(strfmt("laser operating point did not converge in %d iterations "
                            "(last iterates %.4f C, %.4f C)",
                            max_iterations, t_prev, t));
}

}  // namespace photonoc::photonics
