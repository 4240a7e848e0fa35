#include "doctest.h"

#include "photonoc/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fixture.hpp"

namespace fs = std::filesystem;
using photonoc::cli::run;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct OutDir {
    fs::path dir;
    explicit OutDir(const std::string& name) : dir(fs::temp_directory_path() / name) {
        fs::remove_all(dir);
    }
    ~OutDir() { fs::remove_all(dir); }
    std::string str() const { return dir.string(); }
    std::string file(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("help and argument errors use conventional exit codes") {
    CHECK(run({"--help"}) == 0);
    CHECK(run({"thermal", "--help"}) == 0);
    CHECK(run({}) != 0);                              // a command is required
    CHECK(run({"warp-drive"}) != 0);                  // unknown command
    CHECK(run({"thermal"}) != 0);                     // --config is required
    CHECK(run({"thermal", "--config"}) != 0);         // missing value
    CHECK(run({"sweep", "--config", "x.toml"}) != 0); // sweep needs --var/--min/--max/--steps
}

TEST_CASE("a missing config file is an error, not a crash") {
    OutDir out("photonoc_cli_missing");
    CHECK(run({"thermal", "--config", "/tmp/definitely_absent.toml", "--out", out.str()}) == 1);
}

TEST_CASE("thermal run writes its exports and is rerun-stable") {
    const std::string config = photonoc::testfix::write_mini_config("photonoc_cli_mini");
    OutDir out("photonoc_cli_thermal");

    const int rc = run({"thermal", "--config", config, "--out", out.str(), "--dump-grid"});
    // 0 = within the gradient limit, 2 = limit exceeded; both are valid solves.
    CHECK((rc == 0 || rc == 2));

    CHECK(fs::exists(out.file("thermal_map.csv")));
    CHECK(fs::exists(out.file("oni_stats.csv")));
    CHECK(fs::exists(out.file("grid.bin")));
    CHECK(fs::exists(out.file("summary.json")));

    const std::string map1 = slurp(out.file("thermal_map.csv"));
    const std::string stats1 = slurp(out.file("oni_stats.csv"));
    const std::string summary1 = slurp(out.file("summary.json"));
    CHECK(!map1.empty());
    CHECK(summary1.find("max_gradient_c") != std::string::npos);

    const int rc2 = run({"thermal", "--config", config, "--out", out.str(), "--dump-grid"});
    CHECK(rc2 == rc);
    CHECK(slurp(out.file("thermal_map.csv")) == map1);
    CHECK(slurp(out.file("oni_stats.csv")) == stats1);
    CHECK(slurp(out.file("summary.json")) == summary1);
}

TEST_CASE("power overrides accept watt-suffixed values") {
    const std::string config = photonoc::testfix::write_mini_config("photonoc_cli_mini");
    OutDir out_a("photonoc_cli_wsuffix_a");
    OutDir out_b("photonoc_cli_wsuffix_b");

    const int rc_a = run({"thermal", "--config", config, "--out", out_a.str(),
                          "--pvcsel", "0.002W"});
    const int rc_b = run({"thermal", "--config", config, "--out", out_b.str(),
                          "--pvcsel", "2"});
    CHECK(rc_a == rc_b);
    CHECK(slurp(out_a.file("oni_stats.csv")) == slurp(out_b.file("oni_stats.csv")));
    CHECK(slurp(out_a.file("thermal_map.csv")) == slurp(out_b.file("thermal_map.csv")));
}

TEST_CASE("snr run writes per-ring reports") {
    const std::string config = photonoc::testfix::write_mini_config("photonoc_cli_mini");
    OutDir out("photonoc_cli_snr");

    const int rc = run({"snr", "--config", config, "--out", out.str()});
    CHECK((rc == 0 || rc == 2));
    CHECK(fs::exists(out.file("snr_short.csv")));
    CHECK(fs::exists(out.file("ledger_short.csv")));
    CHECK(fs::exists(out.file("snr_long.csv")));
    CHECK(fs::exists(out.file("ledger_long.csv")));
    CHECK(fs::exists(out.file("summary.json")));

    const std::string summary = slurp(out.file("summary.json"));
    CHECK(summary.find("worst_snr_db") != std::string::npos);
    CHECK(summary.find("\"short\"") != std::string::npos);
}

TEST_CASE("sweep validates its range before solving") {
    const std::string config = photonoc::testfix::write_mini_config("photonoc_cli_mini");
    OutDir out("photonoc_cli_sweep_bad");
    CHECK(run({"sweep", "--config", config, "--out", out.str(), "--var", "pheater",
               "--min", "1", "--max", "1", "--steps", "4"}) == 1);
    CHECK(run({"sweep", "--config", config, "--out", out.str(), "--var", "nonsense",
               "--min", "0", "--max", "1", "--steps", "4"}) == 1);
}

TEST_CASE("sweep writes a csv plus plot-ready tables") {
    const std::string config = photonoc::testfix::write_mini_config("photonoc_cli_mini");
    OutDir out("photonoc_cli_sweep");

    const int rc = run({"sweep", "--config", config, "--out", out.str(), "--var", "pheater",
                        "--min", "0", "--max", "1", "--steps", "3"});
    CHECK(rc == 0);
    CHECK(fs::exists(out.file("sweep_pheater.csv")));
    CHECK(fs::exists(out.file("sweep_pheater_gradient.dat")));
    CHECK(fs::exists(out.file("sweep_pheater_snr.dat")));
    CHECK(fs::exists(out.file("summary.json")));

    const std::string csv = slurp(out.file("sweep_pheater.csv"));
    // Header plus one line per step.
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.find("pheater_mw") != std::string::npos);
    CHECK(csv.find("max_gradient_c") != std::string::npos);
    CHECK(csv.find("snr_short_db") != std::string::npos);

    const std::string summary = slurp(out.file("summary.json"));
    CHECK(summary.find("argmin_gradient") != std::string::npos);
}

TEST_CASE("optimize reports the chosen heater power") {
    const std::string config = photonoc::testfix::write_mini_config("photonoc_cli_mini");
    OutDir out("photonoc_cli_opt");

    const int rc = run({"optimize", "--config", config, "--out", out.str(), "--budget", "8"});
    CHECK((rc == 0 || rc == 2));
    const std::string summary = slurp(out.file("summary.json"));
    CHECK(summary.find("pheater_mw") != std::string::npos);
    CHECK(summary.find("no_heater_gradient_c") != std::string::npos);
}

TEST_CASE("scenario comparison runs its default set") {
    const std::string config = photonoc::testfix::write_mini_config("photonoc_cli_mini");
    OutDir out("photonoc_cli_scen");

    const int rc = run({"scenarios", "--config", config, "--out", out.str()});
    CHECK(rc == 0);
    CHECK(fs::exists(out.file("scenarios.csv")));
    CHECK(fs::exists(out.file("scenarios.dat")));
    const std::string csv = slurp(out.file("scenarios.csv"));
    CHECK(csv.find("uniform") != std::string::npos);
    CHECK(csv.find("diagonal") != std::string::npos);
    CHECK(csv.find("random") != std::string::npos);
}

TEST_CASE("argv-style entry point matches the vector convenience wrapper") {
    const char* argv[] = {"photonoc", "--help"};
    CHECK(photonoc::cli::run(2, const_cast<char**>(argv)) == 0);
}
