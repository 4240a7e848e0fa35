#include "photonoc/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>

#include "photonoc/common.hpp"
#include "photonoc/explore.hpp"

namespace photonoc::cli {
namespace {

using nlohmann::ordered_json;

struct CommonArgs {
    std::string config;
    std::string out = "out";
    std::string activity;
    std::string pvcsel, pheater, pdriver;  // strings so the W suffix works
    double ivcsel_ma = 0;
    uint64_t seed = 0;
    int jobs = 1;
};

void add_common(CLI::App* sub, CommonArgs& a) {
    sub->add_option("--config", a.config, "System config file")->required();
    sub->add_option("--out", a.out, "Output directory, created if missing")->capture_default_str();
    sub->add_option("--activity", a.activity,
                    "Activity override: zero | uniform:<P> | diagonal:<Pa>:<Pb> | random:<P>[:seed]");
    sub->add_option("--pvcsel", a.pvcsel, "Per-VCSEL electrical power, mW (W suffix accepted)");
    sub->add_option("--pheater", a.pheater, "Per-heater power, mW (W suffix accepted)");
    sub->add_option("--pdriver", a.pdriver, "Per-driver power, mW (W suffix accepted)");
    sub->add_option("--ivcsel", a.ivcsel_ma, "VCSEL drive current in mA; implies pvcsel = V * I")
        ->excludes("--pvcsel");
    sub->add_option("--seed", a.seed, "Seed for random activity scenarios");
    sub->add_option("--jobs", a.jobs, "Concurrent solves where samples are independent")
        ->check(CLI::PositiveNumber);
}

// Loads the system and applies command-line overrides. Every override is
// echoed; nothing is adjusted silently.
explore::System load_system(const CLI::App* sub, const CommonArgs& a) {
    explore::System sys = explore::System::load(a.config);
    if (sub->count("--seed")) {
        sys.seed = a.seed;
        if (sys.activity.kind == chipmodel::ActivityScenario::Kind::Random) sys.activity.seed = a.seed;
        printf("seed = %llu (from --seed)\n", static_cast<unsigned long long>(a.seed));
    }
    if (!a.activity.empty()) {
        sys.activity = chipmodel::parse_activity(a.activity);
        if (sys.activity.kind == chipmodel::ActivityScenario::Kind::Random && sys.activity.seed == 0)
            sys.activity.seed = sys.seed;
        printf("activity = %s (from --activity)\n", sys.activity.label().c_str());
    }
    if (sub->count("--ivcsel")) {
        sys.ivcsel_ma = a.ivcsel_ma;
        sys.pvcsel_mw = sys.vcsel.electrical_mw(a.ivcsel_ma);
        printf("pvcsel = %.10g mW (%.10g mA at %.10g V, from --ivcsel)\n", sys.pvcsel_mw,
               a.ivcsel_ma, sys.vcsel.drive_voltage_v);
    }
    if (!a.pvcsel.empty()) {
        sys.pvcsel_mw = chipmodel::parse_power_mw(a.pvcsel);
        sys.ivcsel_ma = 0;  // current now follows the power knob
        printf("pvcsel = %.10g mW (from --pvcsel)\n", sys.pvcsel_mw);
    }
    if (!a.pheater.empty()) {
        sys.pheater_mw = chipmodel::parse_power_mw(a.pheater);
        printf("pheater = %.10g mW (from --pheater)\n", sys.pheater_mw);
    }
    if (!a.pdriver.empty()) {
        sys.pdriver_mw = chipmodel::parse_power_mw(a.pdriver);
        printf("pdriver = %.10g mW (from --pdriver)\n", sys.pdriver_mw);
    }
    return sys;
}

std::string out_path(const CommonArgs& a, const std::string& name) {
    std::filesystem::create_directories(a.out);
    return (std::filesystem::path(a.out) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    FILE* f = fopen(path.c_str(), "wb");
    if (!f) throw ConfigError(strfmt("cannot open '%s' for writing", path.c_str()));
    fwrite(text.data(), 1, text.size(), f);
    fclose(f);
}

void write_json(const std::string& path, const ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

void write_oni_stats_csv(const std::vector<thermal::OniThermalStats>& stats, const std::string& path) {
    FILE* f = fopen(path.c_str(), "wb");
    if (!f) throw ConfigError(strfmt("cannot open '%s' for writing", path.c_str()));
    fprintf(f, "oni,avg_c,gradient_c,within_limit\n");
    for (const auto& st : stats)
        fprintf(f, "%d,%.10g,%.10g,%d\n", st.oni_id, st.avg_c, st.gradient_c, st.within_limit ? 1 : 0);
    fclose(f);
}

ordered_json eval_summary(const explore::System& sys, const explore::Evaluation& ev) {
    ordered_json j;
    j["pvcsel_mw"] = ev.pvcsel_mw;
    j["pheater_mw"] = ev.pheater_mw;
    j["pdriver_mw"] = ev.pdriver_mw;
    j["chip_power_mw"] = ev.chip_power_mw;
    j["total_optical_mw"] = ev.total_optical_mw;
    j["max_gradient_c"] = ev.max_gradient_c;
    j["gradient_limit_c"] = sys.gradient_limit_c;
    j["gradient_ok"] = ev.gradient_ok;
    if (!ev.rings.empty()) {
        j["worst_snr_db"] = ev.worst_snr_db;
        j["sensitivity_ok"] = ev.sensitivity_ok;
        ordered_json rings = ordered_json::array();
        for (const auto& rr : ev.rings) {
            ordered_json r;
            r["name"] = rr.name;
            r["length_mm"] = rr.length_mm;
            r["worst_snr_db"] = rr.report.worst_snr_db;
            rings.push_back(std::move(r));
        }
        j["rings"] = std::move(rings);
    }
    return j;
}

void print_eval_line(const explore::System& sys, const explore::Evaluation& ev, bool with_snr) {
    if (with_snr)
        printf("worst gradient %.6g C (limit %.6g), worst SNR %.6g dB, gradient %s, sensitivity %s\n",
               ev.max_gradient_c, sys.gradient_limit_c, ev.worst_snr_db,
               ev.gradient_ok ? "ok" : "VIOLATED", ev.sensitivity_ok ? "ok" : "VIOLATED");
    else
        printf("worst gradient %.6g C (limit %.6g), gradient %s\n", ev.max_gradient_c,
               sys.gradient_limit_c, ev.gradient_ok ? "ok" : "VIOLATED");
}

int cmd_thermal(const CLI::App* sub, const CommonArgs& a, bool dump_grid) {
    explore::System sys = load_system(sub, a);
    sys.rings.clear();  // thermal only; no link evaluation
    explore::Evaluation ev = explore::evaluate(sys, {});
    thermal::write_map_csv(ev.map, out_path(a, "thermal_map.csv"));
    write_oni_stats_csv(ev.stats, out_path(a, "oni_stats.csv"));
    if (dump_grid) thermal::write_grid_dump(ev.map, out_path(a, "grid.bin"));
    ordered_json j;
    j["command"] = "thermal";
    j["activity"] = sys.activity.label();
    j.update(eval_summary(sys, ev));
    j["solver_iterations"] = ev.map.iterations;
    j["solver_residual"] = ev.map.residual;
    write_json(out_path(a, "summary.json"), j);
    print_eval_line(sys, ev, false);
    return ev.gradient_ok ? 0 : 2;
}

int cmd_snr(const CLI::App* sub, const CommonArgs& a) {
    explore::System sys = load_system(sub, a);
    if (sys.rings.empty()) throw ConfigError("config defines no rings; nothing to evaluate");
    explore::Evaluation ev = explore::evaluate(sys, {});
    write_oni_stats_csv(ev.stats, out_path(a, "oni_stats.csv"));
    for (const auto& rr : ev.rings) {
        snr::write_report_csv(rr.report, out_path(a, strfmt("snr_%s.csv", rr.name.c_str())));
        snr::write_ledger_csv(rr.report, out_path(a, strfmt("ledger_%s.csv", rr.name.c_str())));
    }
    ordered_json j;
    j["command"] = "snr";
    j["activity"] = sys.activity.label();
    j.update(eval_summary(sys, ev));
    write_json(out_path(a, "summary.json"), j);
    print_eval_line(sys, ev, true);
    return ev.gradient_ok && ev.sensitivity_ok ? 0 : 2;
}

struct SweepArgs {
    std::string variable;
    double min = 0, max = 0;
    int steps = 0;
};

// Per-sample mean ONI average temperature; the linearity probe for chip
// power sweeps.
double mean_oni_avg(const explore::Evaluation& ev) {
    double sum = 0;
    for (const auto& st : ev.stats) sum += st.avg_c;
    return ev.stats.empty() ? 0 : sum / static_cast<double>(ev.stats.size());
}

int cmd_sweep(const CLI::App* sub, const CommonArgs& a, const SweepArgs& sw) {
    explore::System sys = load_system(sub, a);
    explore::SweepSpec spec;
    spec.variable = explore::sweep_variable_from(sw.variable);
    spec.min = sw.min;
    spec.max = sw.max;
    spec.steps = sw.steps;
    explore::ExplorationResult result = explore::sweep(sys, spec, a.jobs);
    if (result.samples.empty()) throw ValidationError("sweep produced no samples; nothing to write");

    const char* var = explore::sweep_variable_name(spec.variable);
    const char* unit = spec.variable == explore::SweepVariable::IVcsel ? "ma" : "mw";

    std::string csv_path = out_path(a, strfmt("sweep_%s.csv", var));
    FILE* f = fopen(csv_path.c_str(), "wb");
    if (!f) throw ConfigError(strfmt("cannot open '%s' for writing", csv_path.c_str()));
    fprintf(f, "%s_%s,pvcsel_mw,pheater_mw,pdriver_mw,chip_power_mw,total_optical_mw,"
               "oni_avg_mean_c,oni_avg_min_c,oni_avg_max_c,max_gradient_c,gradient_ok",
            var, unit);
    for (const auto& rr : sys.rings) fprintf(f, ",snr_%s_db", rr.name.c_str());
    fprintf(f, ",worst_snr_db,sensitivity_ok\n");
    for (const auto& s : result.samples) {
        const explore::Evaluation& ev = s.eval;
        double avg_min = 0, avg_max = 0;
        for (size_t i = 0; i < ev.stats.size(); i++) {
            if (i == 0 || ev.stats[i].avg_c < avg_min) avg_min = ev.stats[i].avg_c;
            if (i == 0 || ev.stats[i].avg_c > avg_max) avg_max = ev.stats[i].avg_c;
        }
        fprintf(f, "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%d", s.knob,
                ev.pvcsel_mw, ev.pheater_mw, ev.pdriver_mw, ev.chip_power_mw, ev.total_optical_mw,
                mean_oni_avg(ev), avg_min, avg_max, ev.max_gradient_c, ev.gradient_ok ? 1 : 0);
        for (const auto& rr : ev.rings) fprintf(f, ",%.10g", rr.report.worst_snr_db);
        fprintf(f, ",%.10g,%d\n", ev.worst_snr_db, ev.sensitivity_ok ? 1 : 0);
    }
    fclose(f);

    // gnuplot companions: knob vs gradient, knob vs worst SNR.
    std::string grad_path = out_path(a, strfmt("sweep_%s_gradient.dat", var));
    f = fopen(grad_path.c_str(), "wb");
    if (!f) throw ConfigError(strfmt("cannot open '%s' for writing", grad_path.c_str()));
    fprintf(f, "# %s_%s  max_gradient_c\n", var, unit);
    for (const auto& s : result.samples) fprintf(f, "%.10g %.10g\n", s.knob, s.eval.max_gradient_c);
    fclose(f);
    if (!sys.rings.empty()) {
        std::string snr_path = out_path(a, strfmt("sweep_%s_snr.dat", var));
        f = fopen(snr_path.c_str(), "wb");
        if (!f) throw ConfigError(strfmt("cannot open '%s' for writing", snr_path.c_str()));
        fprintf(f, "# %s_%s  worst_snr_db", var, unit);
        for (const auto& rr : sys.rings) fprintf(f, "  snr_%s_db", rr.name.c_str());
        fprintf(f, "\n");
        for (const auto& s : result.samples) {
            fprintf(f, "%.10g %.10g", s.knob, s.eval.worst_snr_db);
            for (const auto& rr : s.eval.rings) fprintf(f, " %.10g", rr.report.worst_snr_db);
            fprintf(f, "\n");
        }
        fclose(f);
    }

    size_t argmin = 0, argmax_snr = 0;
    bool all_gradient_ok = true, all_sensitivity_ok = true;
    for (size_t i = 0; i < result.samples.size(); i++) {
        if (result.samples[i].eval.max_gradient_c < result.samples[argmin].eval.max_gradient_c)
            argmin = i;
        if (result.samples[i].eval.worst_snr_db > result.samples[argmax_snr].eval.worst_snr_db)
            argmax_snr = i;
        all_gradient_ok = all_gradient_ok && result.samples[i].eval.gradient_ok;
        all_sensitivity_ok = all_sensitivity_ok && result.samples[i].eval.sensitivity_ok;
    }
    ordered_json j;
    j["command"] = "sweep";
    j["variable"] = var;
    j["min"] = spec.min;
    j["max"] = spec.max;
    j["steps"] = spec.steps;
    j["argmin_gradient"] = {{"knob", result.samples[argmin].knob},
                            {"max_gradient_c", result.samples[argmin].eval.max_gradient_c}};
    if (!sys.rings.empty())
        j["argmax_snr"] = {{"knob", result.samples[argmax_snr].knob},
                           {"worst_snr_db", result.samples[argmax_snr].eval.worst_snr_db}};
    j["all_gradient_ok"] = all_gradient_ok;
    j["all_sensitivity_ok"] = all_sensitivity_ok;
    write_json(out_path(a, "summary.json"), j);
    printf("sweep %s in [%.10g, %.10g] x%d: min gradient %.6g C at %.10g, gradient %s, sensitivity %s\n",
           var, spec.min, spec.max, spec.steps, result.samples[argmin].eval.max_gradient_c,
           result.samples[argmin].knob, all_gradient_ok ? "ok" : "violated somewhere",
           all_sensitivity_ok ? "ok" : "violated somewhere");
    return 0;
}

int cmd_optimize(const CLI::App* sub, const CommonArgs& a, int budget) {
    explore::System sys = load_system(sub, a);
    explore::HeaterOptimum opt = explore::optimize_heater(sys, sys.pvcsel_mw, budget);
    ordered_json j;
    j["command"] = "optimize";
    j["pvcsel_mw"] = sys.pvcsel_mw;
    j["pheater_mw"] = opt.pheater_mw;
    j["gradient_c"] = opt.gradient_c;
    j["no_heater_gradient_c"] = opt.no_heater_gradient_c;
    j["gradient_limit_c"] = sys.gradient_limit_c;
    j["gradient_ok"] = opt.gradient_c <= sys.gradient_limit_c;
    j["unimodal"] = opt.unimodal;
    j["evaluations"] = opt.evaluations;
    write_json(out_path(a, "summary.json"), j);
    printf("optimal pheater %.6g mW: gradient %.6g C (no heater %.6g C), %d solves%s\n",
           opt.pheater_mw, opt.gradient_c, opt.no_heater_gradient_c, opt.evaluations,
           opt.unimodal ? "" : ", grid fallback");
    return opt.gradient_c <= sys.gradient_limit_c ? 0 : 2;
}

int cmd_scenarios(const CLI::App* sub, const CommonArgs& a, const std::vector<std::string>& names) {
    explore::System sys = load_system(sub, a);
    std::vector<chipmodel::ActivityScenario> scenarios;
    if (!names.empty()) {
        for (const auto& n : names) {
            chipmodel::ActivityScenario s = chipmodel::parse_activity(n);
            if (s.kind == chipmodel::ActivityScenario::Kind::Random && s.seed == 0) s.seed = sys.seed;
            scenarios.push_back(s);
        }
    } else {
        // Default comparison: uniform, diagonal, and random at the total
        // power of the configured activity.
        using K = chipmodel::ActivityScenario::Kind;
        double total = 0;
        switch (sys.activity.kind) {
            case K::Uniform:
            case K::Random: total = sys.activity.total_mw; break;
            case K::Diagonal: total = 2 * (sys.activity.quad_a_mw + sys.activity.quad_b_mw); break;
            case K::Custom:
                for (const auto& [name, mw] : sys.activity.custom) total += mw;
                break;
            case K::Zero: break;
        }
        if (!(total > 0))
            throw ConfigError("configured activity has zero total power; pass explicit --scenario values");
        scenarios = {chipmodel::parse_activity(strfmt("uniform:%.10gmW", total)),
                     chipmodel::parse_activity(strfmt("diagonal:%.10gmW:0mW", total / 2)),
                     chipmodel::parse_activity(strfmt("random:%.10gmW:%llu", total,
                                                      static_cast<unsigned long long>(sys.seed)))};
        printf("comparing uniform, diagonal, random at %.10g mW total (defaults)\n", total);
    }

    std::vector<explore::ScenarioRow> rows = explore::evaluate_scenarios(sys, scenarios);

    std::string csv_path = out_path(a, "scenarios.csv");
    FILE* f = fopen(csv_path.c_str(), "wb");
    if (!f) throw ConfigError(strfmt("cannot open '%s' for writing", csv_path.c_str()));
    fprintf(f, "scenario,chip_power_mw,oni_avg_min_c,oni_avg_max_c,spread_c,max_gradient_c");
    for (const auto& rr : sys.rings) fprintf(f, ",snr_%s_db", rr.name.c_str());
    fprintf(f, "\n");
    for (const auto& row : rows) {
        fprintf(f, "%s,%.10g,%.10g,%.10g,%.10g,%.10g", row.name.c_str(), row.chip_power_mw,
                row.oni_avg_min_c, row.oni_avg_max_c, row.spread_c, row.max_gradient_c);
        for (const auto& [ring, snr_db] : row.worst_snr_by_ring) fprintf(f, ",%.10g", snr_db);
        fprintf(f, "\n");
    }
    fclose(f);

    std::string dat_path = out_path(a, "scenarios.dat");
    f = fopen(dat_path.c_str(), "wb");
    if (!f) throw ConfigError(strfmt("cannot open '%s' for writing", dat_path.c_str()));
    fprintf(f, "# scenario  chip_power_mw  spread_c  max_gradient_c");
    for (const auto& rr : sys.rings) fprintf(f, "  snr_%s_db", rr.name.c_str());
    fprintf(f, "\n");
    for (const auto& row : rows) {
        fprintf(f, "%s %.10g %.10g %.10g", row.name.c_str(), row.chip_power_mw, row.spread_c,
                row.max_gradient_c);
        for (const auto& [ring, snr_db] : row.worst_snr_by_ring) fprintf(f, " %.10g", snr_db);
        fprintf(f, "\n");
    }
    fclose(f);

    ordered_json j;
    j["command"] = "scenarios";
    ordered_json list = ordered_json::array();
    for (const auto& row : rows) {
        ordered_json r;
        r["scenario"] = row.name;
        r["chip_power_mw"] = row.chip_power_mw;
        r["spread_c"] = row.spread_c;
        r["max_gradient_c"] = row.max_gradient_c;
        for (const auto& [ring, snr_db] : row.worst_snr_by_ring) r["snr_" + ring + "_db"] = snr_db;
        list.push_back(std::move(r));
    }
    j["scenarios"] = std::move(list);
    write_json(out_path(a, "summary.json"), j);
    for (const auto& row : rows)
        printf("%-28s spread %.6g C, gradient %.6g C\n", row.name.c_str(), row.spread_c,
               row.max_gradient_c);
    return 0;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Thermal and SNR simulator for VCSEL-based ring optical networks-on-chip"};
    app.require_subcommand(1);

    CommonArgs targs;
    bool dump_grid = false;
    CLI::App* thermal = app.add_subcommand("thermal", "Solve one operating point; export map and stats");
    add_common(thermal, targs);
    thermal->add_flag("--dump-grid", dump_grid, "Also write the raw binary grid dump");

    CommonArgs sargs;
    CLI::App* snr = app.add_subcommand("snr", "Solve one operating point; export SNR per ring variant");
    add_common(snr, sargs);

    CommonArgs wargs;
    SweepArgs sweep_args;
    CLI::App* sweep = app.add_subcommand("sweep", "Sweep one knob; export per-sample results");
    add_common(sweep, wargs);
    sweep->add_option("--var", sweep_args.variable, "Knob: pheater | ivcsel | pchip")->required();
    sweep->add_option("--min", sweep_args.min, "Range start (mW, or mA for ivcsel)")->required();
    sweep->add_option("--max", sweep_args.max, "Range end")->required();
    sweep->add_option("--steps", sweep_args.steps, "Sample count, >= 2")->required();

    CommonArgs oargs;
    int budget = 16;
    CLI::App* optimize = app.add_subcommand("optimize", "Find the heater power minimizing the gradient");
    add_common(optimize, oargs);
    optimize->add_option("--budget", budget, "Thermal solve budget")->capture_default_str();

    CommonArgs cargs;
    std::vector<std::string> scenario_names;
    CLI::App* scenarios = app.add_subcommand("scenarios", "Compare activity scenarios side by side");
    add_common(scenarios, cargs);
    scenarios->add_option("--scenario", scenario_names,
                          "Scenario to include (repeatable); default uniform/diagonal/random");

    int rc = 0;
    thermal->callback([&] { rc = cmd_thermal(thermal, targs, dump_grid); });
    snr->callback([&] { rc = cmd_snr(snr, sargs); });
    sweep->callback([&] { rc = cmd_sweep(sweep, wargs, sweep_args); });
    optimize->callback([&] { rc = cmd_optimize(optimize, oargs, budget); });
    scenarios->callback([&] { rc = cmd_scenarios(scenarios, cargs, scenario_names); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const SolveError& e) {
        fprintf(stderr, "solver error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return rc;
}

int run(const std::vector<std::string>& args) {
    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.push_back("photonoc");
    for (const auto& a : args) storage.push_back(a);
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace photonoc::cli
