#include "photonoc/explore.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>
#include <map>
#include <set>
#include <numeric>

#include "photonoc/common.hpp"

namespace photonoc::explore {

using chipmodel::ActivityScenario;
using chipmodel::DeviceKind;

namespace {

// Snake route through the ONI grid: rows bottom-up, direction alternating,
// which is also the bundled configs' physical waveguide route.
std::vector<int> snake_order(const std::vector<chipmodel::OniLayout>& onis) {
    std::map<double, std::vector<const chipmodel::OniLayout*>> rows;
    for (const auto& oni : onis) rows[oni.cy()].push_back(&oni);
    std::vector<int> order;
    bool reverse = false;
    for (auto& [cy, row] : rows) {
        std::sort(row.begin(), row.end(),
                  [](const auto* a, const auto* b) { return a->cx() < b->cx(); });
        if (reverse) std::reverse(row.begin(), row.end());
        for (const auto* oni : row) order.push_back(oni->id);
        reverse = !reverse;
    }
    return order;
}

photonics::HeatPolicy heat_policy_from(const std::string& name) {
    if (name == "worst_case") return photonics::HeatPolicy::WorstCase;
    if (name == "self_consistent") return photonics::HeatPolicy::SelfConsistent;
    throw ConfigError(strfmt("unknown heat policy '%s'", name.c_str()));
}

}  // namespace

const char* sweep_variable_name(SweepVariable v) {
    switch (v) {
        case SweepVariable::PHeater: return "pheater";
        case SweepVariable::IVcsel: return "ivcsel";
        case SweepVariable::PChip: return "pchip";
    }
    return "?";
}

SweepVariable sweep_variable_from(const std::string& name) {
    if (name == "pheater") return SweepVariable::PHeater;
    if (name == "ivcsel") return SweepVariable::IVcsel;
    if (name == "pchip") return SweepVariable::PChip;
    throw ConfigError(strfmt("unknown sweep variable '%s' (pheater|ivcsel|pchip)", name.c_str()));
}

System System::load(const std::string& config_path) {
    config::Value root = config::parse_file(config_path);
    System sys;
    sys.model = chipmodel::build_system(root);

    const std::string dir = std::filesystem::path(config_path).parent_path().string();
    if (root.has("photonics.table")) {
        std::string rel = root.string_at("photonics.table");
        std::filesystem::path p(rel);
        if (p.is_relative() && !dir.empty()) p = std::filesystem::path(dir) / p;
        sys.vcsel = photonics::VcselModel::from_csv(p.string());
    } else {
        sys.vcsel = photonics::VcselModel::default_model();
    }
    sys.vcsel.coupling_efficiency = root.number_or("photonics.coupling_efficiency", 0.70);
    sys.vcsel.drive_voltage_v = root.number_or("photonics.drive_voltage_v", 1.0);
    sys.vcsel.nominal_wavelength_nm = root.number_or("photonics.nominal_wavelength_nm", 1550.0);
    sys.vcsel.linewidth_nm = root.number_or("photonics.linewidth_nm", 0.1);
    sys.vcsel.modulation_bandwidth_ghz = root.number_or("photonics.modulation_bandwidth_ghz", 12.0);
    sys.vcsel.validate();
    sys.heat_policy = heat_policy_from(root.string_or("photonics.heat_policy", "worst_case"));

    sys.mr.bandwidth_3db_nm = root.number_or("mr.bandwidth_3db_nm", 1.55);
    sys.mr.peak_drop = root.number_or("mr.peak_drop", 1.0);
    sys.thermo.sensitivity_nm_per_c = root.number_or("thermo_optic.sensitivity_nm_per_c", 0.1);
    sys.thermo.reference_c = root.number_or("thermo_optic.reference_c", 25.0);

    sys.link.propagation_loss_db_cm = root.number_or("link.propagation_loss_db_cm", 0.5);
    sys.link.noise_floor_mw = root.number_or("link.noise_floor_mw", 1e-12);
    sys.link.snr_ceiling_db = root.number_or("link.snr_ceiling_db", 120.0);
    sys.link.sensitivity_dbm = root.number_or("link.sensitivity_dbm", -20.0);

    sys.plan.stride = static_cast<int>(root.number_or("channels.stride", 3));
    sys.plan.base_wavelength_nm = root.number_or("channels.base_wavelength_nm",
                                                 sys.vcsel.nominal_wavelength_nm);
    sys.plan.spacing_nm = root.number_or("channels.spacing_nm", 20.0);

    for (const config::Value* rc : root.table_array("rings")) {
        RingSpec ring;
        ring.name = rc->string_at("name");
        ring.total_length_mm = rc->number_at("length_mm");
        if (rc->has("order"))
            for (double v : rc->number_array_at("order")) ring.order.push_back(static_cast<int>(v));
        sys.rings.push_back(std::move(ring));
    }

    sys.mesh_policy.fine_um = root.number_or("mesh.fine_um", 5.0);
    sys.mesh_policy.source_um = root.number_or("mesh.source_um", 100.0);
    sys.mesh_policy.package_um = root.number_or("mesh.package_um", 500.0);
    sys.mesh_policy.min_cell_um = root.number_or("mesh.min_cell_um", 0.05);

    sys.solve.tolerance = root.number_or("solver.tolerance", 1e-8);
    sys.solve.max_iterations = static_cast<int>(root.number_or("solver.max_iterations", 10000));
    std::string precond = root.string_or("solver.preconditioner", "ic0");
    if (precond == "ic0")
        sys.solve.preconditioner = thermal::SolveOptions::Preconditioner::IncompleteCholesky;
    else if (precond == "jacobi")
        sys.solve.preconditioner = thermal::SolveOptions::Preconditioner::Jacobi;
    else
        throw ConfigError(strfmt("unknown preconditioner '%s' (ic0|jacobi)", precond.c_str()));

    sys.pvcsel_mw = root.number_or("devices.pvcsel_mw", 0.0);
    sys.pheater_mw = root.number_or("devices.pheater_mw", 0.0);
    sys.pdriver_mw = root.number_or("devices.pdriver_mw", sys.pvcsel_mw);
    sys.ivcsel_ma = root.number_or("devices.ivcsel_ma", 0.0);
    if (sys.ivcsel_ma > 0) sys.pvcsel_mw = sys.vcsel.electrical_mw(sys.ivcsel_ma);

    sys.gradient_limit_c = root.number_or("simulation.gradient_limit_c", 1.0);
    sys.seed = static_cast<uint64_t>(root.number_or("simulation.seed", 0.0));

    if (root.has("activity.default")) {
        sys.activity = chipmodel::parse_activity(root.string_at("activity.default"));
        if (sys.activity.kind == ActivityScenario::Kind::Random && sys.activity.seed == 0)
            sys.activity.seed = sys.seed;
    } else if (root.has("activity.custom")) {
        sys.activity.kind = ActivityScenario::Kind::Custom;
        for (const auto& [name, v] : root.table_at("activity.custom").table) {
            if (v.kind != config::Value::Kind::Number)
                throw ConfigError("activity.custom entries must be tile = power_mw");
            sys.activity.custom.emplace_back(name, v.number);
        }
    }

    sys.mesh = std::make_shared<const thermal::Mesh>(
        thermal::build_mesh(sys.model.stack, sys.model.onis, sys.mesh_policy));
    return sys;
}

snr::RingNetwork build_ring(const System& sys, const RingSpec& ring,
                            const std::vector<thermal::OniThermalStats>& stats, double pvcsel_mw) {
    const auto& onis = sys.model.onis;
    if (onis.empty()) throw ValidationError("system has no ONIs to build a ring from");

    std::vector<int> order = ring.order.empty() ? snake_order(onis) : ring.order;
    int n = static_cast<int>(order.size());
    if (n < 2) throw ValidationError(strfmt("ring '%s' has fewer than two ONIs", ring.name.c_str()));
    if (std::set<int>(order.begin(), order.end()).size() != order.size())
        throw ValidationError(strfmt("ring '%s' visits an ONI more than once", ring.name.c_str()));
    if (sys.plan.stride < 1 || sys.plan.stride >= n || n % sys.plan.stride != 0)
        throw ValidationError(strfmt("channel stride %d must divide the ring size %d",
                                     sys.plan.stride, n));

    std::map<int, const chipmodel::OniLayout*> by_id;
    for (const auto& oni : onis) by_id[oni.id] = &oni;
    std::map<int, double> temp_by_id;
    for (const auto& st : stats) temp_by_id[st.oni_id] = st.avg_c;

    snr::RingNetwork net;
    net.n_onis = n;
    net.propagation_loss_db_cm = sys.link.propagation_loss_db_cm;
    net.mr = sys.mr;
    net.thermo = sys.thermo;
    net.noise_floor_mw = sys.link.noise_floor_mw;
    net.snr_ceiling_db = sys.link.snr_ceiling_db;
    net.sensitivity_dbm = sys.link.sensitivity_dbm;

    // Physical route distances, rescaled to the variant's total length.
    std::vector<double> dist(n);
    double total_um = 0;
    for (int p = 0; p < n; p++) {
        auto a = by_id.find(order[p]);
        auto b = by_id.find(order[(p + 1) % n]);
        if (a == by_id.end() || b == by_id.end())
            throw ValidationError(strfmt("ring '%s' references an unknown ONI id", ring.name.c_str()));
        double dx = a->second->cx() - b->second->cx();
        double dy = a->second->cy() - b->second->cy();
        dist[p] = std::sqrt(dx * dx + dy * dy);
        total_um = total_um + dist[p];
    }
    if (!(total_um > 0)) throw ValidationError(strfmt("ring '%s' has zero route length", ring.name.c_str()));
    double scale_to_cm = ring.total_length_mm * 0.1 / total_um;
    net.segment_cm.resize(n);
    for (int p = 0; p < n; p++) net.segment_cm[p] = dist[p] * scale_to_cm;

    net.oni_temperature_c.resize(n);
    for (int p = 0; p < n; p++) {
        auto it = temp_by_id.find(order[p]);
        if (it == temp_by_id.end())
            throw ValidationError(strfmt("no thermal stats for ONI %d", order[p]));
        net.oni_temperature_c[p] = it->second;
    }

    // One transmitter per ONI on the modeled waveguide; drive current either
    // configured or implied by the electrical power knob.
    double i_ma = sys.ivcsel_ma > 0 ? sys.ivcsel_ma : pvcsel_mw / sys.vcsel.drive_voltage_v;
    for (int p = 0; p < n; p++) {
        snr::Channel ch;
        ch.id = p;
        ch.source = p;
        ch.dest = (p + sys.plan.stride) % n;
        ch.nominal_wavelength_nm = sys.plan.base_wavelength_nm + (p % sys.plan.stride) * sys.plan.spacing_nm;
        double eta = photonics::vcsel_efficiency(sys.vcsel, net.oni_temperature_c[p], i_ma);
        ch.injected_mw = sys.vcsel.coupling_efficiency * eta * pvcsel_mw;
        net.channels.push_back(ch);
    }
    net.validate();
    return net;
}

Evaluation evaluate(const System& sys, const Operating& op) {
    Evaluation ev;
    ev.pvcsel_mw = op.pvcsel_mw.value_or(sys.pvcsel_mw);
    ev.pheater_mw = op.pheater_mw.value_or(sys.pheater_mw);
    // Driver dissipation is bias dominated, an independent knob rather than
    // a fraction of the laser power.
    ev.pdriver_mw = op.pdriver_mw.value_or(sys.pdriver_mw);

    chipmodel::ChipStack stack = chipmodel::apply_activity(
        sys.model.stack, op.activity ? *op.activity : sys.activity);
    stack = chipmodel::with_device_power(stack, sys.model.onis, DeviceKind::Vcsel, ev.pvcsel_mw);
    stack = chipmodel::with_device_power(stack, sys.model.onis, DeviceKind::Heater, ev.pheater_mw);
    stack = chipmodel::with_device_power(stack, sys.model.onis, DeviceKind::Driver, ev.pdriver_mw);
    ev.chip_power_mw = chipmodel::chip_power_mw(stack);

    auto mesh = std::make_shared<thermal::Mesh>(*sys.mesh);
    thermal::reassign_sources(*mesh, stack);
    ev.map = thermal::solve_steady(std::move(mesh), stack.boundary, stack.ambient_c, sys.solve);
    ev.stats = thermal::oni_stats(ev.map, sys.model.onis, sys.gradient_limit_c);

    ev.max_gradient_c = 0;
    ev.gradient_ok = true;
    for (const auto& st : ev.stats) {
        ev.max_gradient_c = std::max(ev.max_gradient_c, st.gradient_c);
        ev.gradient_ok = ev.gradient_ok && st.within_limit;
    }

    bool have_worst = false;
    for (const RingSpec& spec : sys.rings) {
        RingResult rr;
        rr.name = spec.name;
        rr.length_mm = spec.total_length_mm;
        snr::RingNetwork net = build_ring(sys, spec, ev.stats, ev.pvcsel_mw);
        rr.report = snr::evaluate(net);
        for (const auto& row : rr.report.rows) {
            if (!row.no_signal && (!have_worst || row.snr_db < ev.worst_snr_db)) {
                ev.worst_snr_db = row.snr_db;
                have_worst = true;
            }
            ev.sensitivity_ok = ev.sensitivity_ok && row.sensitivity_ok;
        }
        ev.rings.push_back(std::move(rr));
    }
    if (!sys.rings.empty() && !ev.rings.empty()) {
        for (const auto& ch : ev.rings.front().report.ledgers) ev.total_optical_mw += ch.injected_mw;
    }
    return ev;
}

ExplorationResult sweep(const System& sys, const SweepSpec& spec, int jobs) {
    if (spec.steps < 2) throw ValidationError("a sweep needs at least 2 steps");
    if (!(spec.min < spec.max))
        throw ValidationError("sweep range must satisfy min < max (degenerate ranges are not allowed)");
    if (spec.min < 0) throw ValidationError("sweep range must be non-negative");
    if (jobs < 1) throw ValidationError("jobs must be >= 1");

    std::vector<double> knobs(spec.steps);
    for (int s = 0; s < spec.steps; s++)
        knobs[s] = spec.min + (spec.max - spec.min) * s / (spec.steps - 1);

    auto run_one = [&](double knob) {
        Operating op;
        switch (spec.variable) {
            case SweepVariable::PHeater:
                op.pheater_mw = knob;
                break;
            case SweepVariable::IVcsel:
                op.pvcsel_mw = sys.vcsel.electrical_mw(knob);
                break;
            case SweepVariable::PChip: {
                ActivityScenario a;
                a.kind = ActivityScenario::Kind::Uniform;
                a.total_mw = knob;
                op.activity = a;
                break;
            }
        }
        try {
            return evaluate(sys, op);
        } catch (const SolveError& e) {
            throw SolveError(strfmt("sweep sample %s=%.10g failed: %s",
                                    sweep_variable_name(spec.variable), knob, e.what()));
        }
    };

    ExplorationResult result;
    result.variable = spec.variable;
    result.samples.resize(spec.steps);
    for (int s = 0; s < spec.steps; s++) result.samples[s].knob = knobs[s];

    if (jobs <= 1) {
        for (int s = 0; s < spec.steps; s++) result.samples[s].eval = run_one(knobs[s]);
        return result;
    }
    // Window the samples so at most `jobs` solves run at once. Each sample is
    // independent (zero initial guess), so concurrency cannot change results.
    for (int base = 0; base < spec.steps; base += jobs) {
        int count = std::min(jobs, spec.steps - base);
        std::vector<std::future<Evaluation>> futs;
        futs.reserve(count);
        for (int s = 0; s < count; s++)
            futs.push_back(std::async(std::launch::async, run_one, knobs[base + s]));
        for (int s = 0; s < count; s++) result.samples[base + s].eval = futs[s].get();
    }
    return result;
}

HeaterOptimum optimize_heater(const System& sys, double pvcsel_mw, int budget) {
    if (pvcsel_mw < 0) throw ValidationError("pvcsel must be >= 0");
    HeaterOptimum opt;

    auto gradient_at = [&](double ph) {
        Operating op;
        op.pvcsel_mw = pvcsel_mw;
        op.pheater_mw = ph;
        opt.evaluations++;
        return evaluate(sys, op).max_gradient_c;
    };

    double g0 = gradient_at(0.0);
    opt.no_heater_gradient_c = g0;
    opt.pheater_mw = 0.0;
    opt.gradient_c = g0;
    if (pvcsel_mw == 0.0) return opt;  // nothing to trim against
    if (budget < 6) throw ValidationError("heater optimization needs a budget of at least 6 solves");

    auto consider = [&](double ph, double g) {
        if (g < opt.gradient_c) {
            opt.gradient_c = g;
            opt.pheater_mw = ph;
        }
    };

    // Coarse screen for unimodality before trusting golden section.
    const int kScreen = 5;
    double xs[kScreen], gs[kScreen];
    for (int i = 0; i < kScreen; i++) {
        xs[i] = pvcsel_mw * i / (kScreen - 1);
        gs[i] = i == 0 ? g0 : gradient_at(xs[i]);
        consider(xs[i], gs[i]);
    }
    int best = 0;
    for (int i = 1; i < kScreen; i++)
        if (gs[i] < gs[best]) best = i;
    bool unimodal = true;
    for (int i = 1; i < kScreen; i++) {
        if (i <= best && gs[i] > gs[i - 1] + 1e-12) unimodal = false;
        if (i > best && gs[i] < gs[i - 1] - 1e-12) unimodal = false;
    }
    opt.unimodal = unimodal;

    int remaining = budget - opt.evaluations;
    if (!unimodal) {
        // Non-unimodal response: fall back to a plain grid scan.
        log_info("heater response not unimodal; falling back to grid scan");
        for (int i = 0; i < remaining; i++) {
            double ph = pvcsel_mw * (i + 0.5) / remaining;
            consider(ph, gradient_at(ph));
        }
        return opt;
    }

    // Golden section inside the bracketing neighbours of the screen minimum.
    double a = xs[std::max(0, best - 1)];
    double b = xs[std::min(kScreen - 1, best + 1)];
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = gradient_at(x1), f2 = gradient_at(x2);
    consider(x1, f1);
    consider(x2, f2);
    remaining -= 2;
    while (remaining > 0 && (b - a) > 1e-3 * pvcsel_mw) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = gradient_at(x1);
            consider(x1, f1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = gradient_at(x2);
            consider(x2, f2);
        }
        remaining--;
    }
    return opt;
}

std::vector<ScenarioRow> evaluate_scenarios(const System& sys,
                                            const std::vector<ActivityScenario>& scenarios) {
    if (scenarios.empty()) throw ValidationError("no scenarios to evaluate");
    std::vector<ScenarioRow> rows;
    for (const auto& scenario : scenarios) {
        Operating op;
        op.activity = scenario;
        Evaluation ev = evaluate(sys, op);
        ScenarioRow row;
        row.name = scenario.label();
        row.chip_power_mw = ev.chip_power_mw;
        bool first = true;
        for (const auto& st : ev.stats) {
            if (first || st.avg_c < row.oni_avg_min_c) row.oni_avg_min_c = st.avg_c;
            if (first || st.avg_c > row.oni_avg_max_c) row.oni_avg_max_c = st.avg_c;
            first = false;
        }
        row.spread_c = row.oni_avg_max_c - row.oni_avg_min_c;
        row.max_gradient_c = ev.max_gradient_c;
        for (const auto& rr : ev.rings)
            row.worst_snr_by_ring.emplace_back(rr.name, rr.report.worst_snr_db);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace photonoc::explore
