#include "doctest.h"

#include "photonoc/chipmodel.hpp"
#include "photonoc/common.hpp"
#include "photonoc/config.hpp"
#include "photonoc/thermal.hpp"

#include "fixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

using namespace photonoc;
using namespace photonoc::chipmodel;
using namespace photonoc::thermal;

namespace {

// Single-material box with one block spanning the whole domain.
ChipStack make_box(double lx, double ly, double lz, double k_w_mc, double power_mw,
                   BlockRole role = BlockRole::ActivityTile) {
    ChipStack s;
    s.materials = {{"mat", k_w_mc}};
    s.x0 = 0;
    s.y0 = 0;
    s.x1 = lx;
    s.y1 = ly;
    Layer layer;
    layer.name = "body";
    layer.z0 = 0;
    layer.thickness = lz;
    Block b;
    b.name = "body_block";
    b.dx = lx;
    b.dy = ly;
    b.dz = lz;
    b.material = 0;
    b.power_mw = power_mw;
    b.role = role;
    layer.blocks.push_back(b);
    s.layers.push_back(layer);
    return s;
}

MeshPolicy uniform_policy(double h_um) {
    MeshPolicy p;
    p.fine_um = h_um;
    p.source_um = h_um;
    p.package_um = h_um;
    p.min_cell_um = 0.001;
    return p;
}

SystemModel mini_model() {
    return build_system(config::parse_string(testfix::mini_config_text(), "mini.toml"));
}

struct MiniSetup {
    SystemModel model;
    std::shared_ptr<const Mesh> mesh;
    ChipStack loaded;  // uniform 2 W activity on top of configured device powers
};

MiniSetup mini_setup() {
    MiniSetup ms{mini_model(), nullptr, {}};
    MeshPolicy policy;
    policy.fine_um = 20.0;
    policy.source_um = 200.0;
    policy.package_um = 400.0;
    ActivityScenario uniform;
    uniform.kind = ActivityScenario::Kind::Uniform;
    uniform.total_mw = 2000.0;
    ms.loaded = apply_activity(ms.model.stack, uniform);
    ms.mesh = std::make_shared<const Mesh>(build_mesh(ms.loaded, ms.model.onis, policy));
    return ms;
}

// Cell index along one axis; mirrors the map lookup convention (a point on a
// shared plane belongs to the lower cell).
int axis_cell(const std::vector<double>& planes, double v) {
    auto it = std::lower_bound(planes.begin(), planes.end(), v);
    size_t idx = static_cast<size_t>(it - planes.begin());
    if (idx == 0) return 0;
    if (idx >= planes.size()) return static_cast<int>(planes.size()) - 2;
    return static_cast<int>(idx) - 1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("uniform policy subdivides a box into the expected cell counts") {
    const ChipStack box = make_box(100.0, 100.0, 10.0, 100.0, 0.0);
    const Mesh m = build_mesh(box, {}, uniform_policy(5.0));
    CHECK(m.nx == 20);
    CHECK(m.ny == 20);
    CHECK(m.nz == 2);
    CHECK(m.cell_count() == 800);
    // Planes start and end on the domain bounds.
    CHECK(m.xs.front() == 0.0);
    CHECK(m.xs.back() == 100.0);
}

TEST_CASE("cell sources add up to the block powers") {
    const MiniSetup ms = mini_setup();
    CHECK(ms.mesh->total_source_mw() ==
          doctest::Approx(total_power_mw(ms.loaded)).epsilon(1e-9));

    // Ownership fractions of every block sum to one, so each block's power is
    // fully distributed.
    double frac_sum = 0.0;
    for (double f : ms.mesh->owner_fraction) frac_sum += f;
    size_t block_count = 0;
    for (const Layer& l : ms.loaded.layers) block_count += l.blocks.size();
    CHECK(frac_sum == doctest::Approx(static_cast<double>(block_count)).epsilon(1e-9));
}

TEST_CASE("planes closer than min_cell are an error naming the blocks") {
    ChipStack s;
    s.materials = {{"mat", 100.0}};
    s.x0 = 0;
    s.y0 = 0;
    s.x1 = 100.0;
    s.y1 = 100.0;
    auto add_layer = [&](const std::string& name, double z0, double split) {
        Layer layer;
        layer.name = name;
        layer.z0 = z0;
        layer.thickness = 10.0;
        Block a;
        a.name = name + "_left";
        a.x0 = 0;
        a.dx = split;
        a.dy = 100.0;
        a.z0 = z0;
        a.dz = 10.0;
        a.material = 0;
        Block b = a;
        b.name = name + "_right";
        b.x0 = split;
        b.dx = 100.0 - split;
        layer.blocks = {a, b};
        s.layers.push_back(layer);
    };
    add_layer("lower", 0.0, 50.0);
    add_layer("upper", 10.0, 50.01);

    MeshPolicy policy = uniform_policy(10.0);
    policy.min_cell_um = 0.05;
    try {
        build_mesh(s, {}, policy);
        FAIL("expected a plane clash error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("min_cell") != std::string::npos);
        CHECK(msg.find("lower_") != std::string::npos);
        CHECK(msg.find("upper_") != std::string::npos);
    }
}

TEST_CASE("uniformly heated column matches the analytic profile") {
    // 1 x 1 x 100 um column, heated uniformly, bottom held at 30 C, all other
    // faces adiabatic. Pure 1D: T(z) = T0 + (q/k) * (L*z - z^2/2).
    const double k = 50.0, lz_um = 100.0, p_mw = 0.01;
    ChipStack box = make_box(1.0, 1.0, lz_um, k, p_mw);
    box.boundary.face[4].kind = BoundaryFace::Kind::Fixed;
    box.boundary.face[4].fixed_t_c = 30.0;

    const double lz = lz_um * 1e-6;
    const double vol_m3 = 1e-6 * 1e-6 * lz;
    const double q = p_mw * 1e-3 / vol_m3;  // W/m^3
    const double max_rise = q * lz * lz / (2.0 * k);

    for (int n : {10, 20, 50}) {
        auto mesh = std::make_shared<const Mesh>(build_mesh(box, {}, uniform_policy(lz_um / n)));
        REQUIRE(mesh->nz == n);
        REQUIRE(mesh->nx == 1);
        const ThermalMap map = solve_steady(mesh, box.boundary, 25.0);

        double worst = 0.0;
        for (int c = 0; c < n; c++) {
            const double zc = 0.5 * (mesh->zs[c] + mesh->zs[c + 1]) * 1e-6;
            const double analytic = 30.0 + (q / k) * (lz * zc - 0.5 * zc * zc);
            worst = std::max(worst, std::abs(map.temperature_c[mesh->idx(0, 0, c)] - analytic));
        }
        // Discretization error shrinks as 1/(4 n^2) of the total rise.
        CHECK(worst / max_rise < 0.5 / (n * n) + 1e-9);
    }
}

TEST_CASE("temperature rises are exactly linear in the sources") {
    const MiniSetup ms = mini_setup();
    const SolveOptions opts;

    Mesh m1 = *ms.mesh;
    reassign_sources(m1, ms.loaded);
    const ThermalMap t1 = solve_steady(std::make_shared<const Mesh>(m1), ms.loaded.boundary, 25.0, opts);

    // Double every source: activity and all three powered device kinds.
    ActivityScenario uniform;
    uniform.kind = ActivityScenario::Kind::Uniform;
    uniform.total_mw = 4000.0;
    ChipStack doubled = apply_activity(ms.model.stack, uniform);
    doubled = with_device_power(doubled, ms.model.onis, DeviceKind::Vcsel, 4.0);
    doubled = with_device_power(doubled, ms.model.onis, DeviceKind::Heater, 1.0);
    doubled = with_device_power(doubled, ms.model.onis, DeviceKind::Driver, 0.5);

    Mesh m2 = *ms.mesh;
    reassign_sources(m2, doubled);
    const ThermalMap t2 = solve_steady(std::make_shared<const Mesh>(m2), doubled.boundary, 25.0, opts);

    double max_rise = 0.0, max_err = 0.0;
    for (size_t c = 0; c < t1.temperature_c.size(); c++) {
        const double r1 = t1.temperature_c[c] - 25.0;
        const double r2 = t2.temperature_c[c] - 25.0;
        max_rise = std::max(max_rise, std::abs(r2));
        max_err = std::max(max_err, std::abs(r2 - 2.0 * r1));
    }
    CHECK(max_rise > 0.0);
    CHECK(max_err / max_rise < 1e-9);
}

TEST_CASE("zero sources with a convective face give the ambient exactly") {
    ChipStack box = make_box(100.0, 100.0, 50.0, 100.0, 0.0);
    box.boundary.face[5].kind = BoundaryFace::Kind::Convective;
    box.boundary.face[5].h_w_m2c = 1000.0;
    auto mesh = std::make_shared<const Mesh>(build_mesh(box, {}, uniform_policy(25.0)));
    const ThermalMap map = solve_steady(mesh, box.boundary, 31.5);
    for (double t : map.temperature_c) CHECK(t == 31.5);
    CHECK(map.iterations == 0);
}

TEST_CASE("zero sources with every face fixed give that temperature everywhere") {
    ChipStack box = make_box(100.0, 100.0, 50.0, 100.0, 0.0);
    for (int f = 0; f < 6; f++) {
        box.boundary.face[f].kind = BoundaryFace::Kind::Fixed;
        box.boundary.face[f].fixed_t_c = 60.0;
    }
    auto mesh = std::make_shared<const Mesh>(build_mesh(box, {}, uniform_policy(25.0)));
    SolveOptions tight;
    tight.tolerance = 1e-12;
    const ThermalMap map = solve_steady(mesh, box.boundary, 25.0, tight);
    for (double t : map.temperature_c) CHECK(t == doctest::Approx(60.0).epsilon(1e-9));
}

TEST_CASE("heated fields stay above ambient and balance energy") {
    const MiniSetup ms = mini_setup();
    const ThermalMap map = solve_steady(ms.mesh, ms.loaded.boundary, 25.0);

    double t_min = 1e300, t_max = -1e300;
    for (double t : map.temperature_c) {
        t_min = std::min(t_min, t);
        t_max = std::max(t_max, t);
    }
    CHECK(t_min >= 25.0 - 1e-9);
    CHECK(t_max > 25.0);

    CHECK(map.source_w == doctest::Approx(total_power_mw(ms.loaded) * 1e-3).epsilon(1e-12));
    CHECK(map.boundary_outflow_w == doctest::Approx(map.source_w).epsilon(1e-6));
}

TEST_CASE("both preconditioners find the same field") {
    const MiniSetup ms = mini_setup();
    SolveOptions ic0;
    SolveOptions jacobi;
    jacobi.preconditioner = SolveOptions::Preconditioner::Jacobi;
    jacobi.max_iterations = 200000;
    const ThermalMap a = solve_steady(ms.mesh, ms.loaded.boundary, 25.0, ic0);
    const ThermalMap b = solve_steady(ms.mesh, ms.loaded.boundary, 25.0, jacobi);
    double worst = 0.0;
    for (size_t c = 0; c < a.temperature_c.size(); c++)
        worst = std::max(worst, std::abs(a.temperature_c[c] - b.temperature_c[c]));
    CHECK(worst < 1e-4);
    // The incomplete factorization should not be slower than diagonal scaling.
    CHECK(a.iterations <= b.iterations);
}

TEST_CASE("point lookups pick the lower cell on shared planes and reject outside points") {
    ThermalMap map;
    auto mesh = std::make_shared<Mesh>();
    mesh->xs = {0.0, 1.0, 2.0};
    mesh->ys = {0.0, 1.0};
    mesh->zs = {0.0, 1.0};
    mesh->nx = 2;
    mesh->ny = 1;
    mesh->nz = 1;
    map.mesh = mesh;
    map.temperature_c = {10.0, 20.0};

    CHECK(temperature_at(map, 0.5, 0.5, 0.5) == 10.0);
    CHECK(temperature_at(map, 1.5, 0.5, 0.5) == 20.0);
    // Exactly on the shared plane: lower cell wins.
    CHECK(temperature_at(map, 1.0, 0.5, 0.5) == 10.0);
    // Domain boundary points are inside.
    CHECK(temperature_at(map, 0.0, 0.0, 0.0) == 10.0);
    CHECK(temperature_at(map, 2.0, 1.0, 1.0) == 20.0);

    CHECK_THROWS_AS(temperature_at(map, -0.5, 0.5, 0.5), ValidationError);
    CHECK_THROWS_AS(temperature_at(map, 2.5, 0.5, 0.5), ValidationError);
    CHECK_THROWS_AS(temperature_at(map, 0.5, 0.5, 9.0), ValidationError);
}

TEST_CASE("per-ONI stats average interface devices and track laser/ring spread") {
    const MiniSetup ms = mini_setup();

    // Zero out all sources: the early exit yields an exactly isothermal map.
    ChipStack cold = apply_activity(ms.model.stack, ActivityScenario{});
    cold = with_device_power(cold, ms.model.onis, DeviceKind::Vcsel, 0.0);
    cold = with_device_power(cold, ms.model.onis, DeviceKind::Heater, 0.0);
    cold = with_device_power(cold, ms.model.onis, DeviceKind::Driver, 0.0);
    Mesh m = *ms.mesh;
    reassign_sources(m, cold);
    ThermalMap map = solve_steady(std::make_shared<const Mesh>(m), cold.boundary, 25.0);

    auto stats = oni_stats(map, ms.model.onis, 1.0);
    REQUIRE(stats.size() == 4);
    for (const auto& st : stats) {
        CHECK(st.avg_c == doctest::Approx(25.0));
        CHECK(st.gradient_c == 0.0);
        CHECK(st.within_limit);
    }
    CHECK(stats[0].oni_id == 0);

    // Warm the cell holding ONI 0's laser by 2 C. The gradient tracks the
    // laser/ring pair; the average spreads over the 4 interface devices
    // (driver and via are excluded).
    const Device* vcsel = nullptr;
    for (const Device& d : ms.model.onis[0].devices)
        if (d.kind == DeviceKind::Vcsel) vcsel = &d;
    REQUIRE(vcsel != nullptr);
    const Mesh& mm = *map.mesh;
    const size_t cell = mm.idx(axis_cell(mm.xs, vcsel->cx), axis_cell(mm.ys, vcsel->cy),
                               axis_cell(mm.zs, vcsel->cz));
    map.temperature_c[cell] += 2.0;

    stats = oni_stats(map, ms.model.onis, 1.0);
    CHECK(stats[0].gradient_c == doctest::Approx(2.0));
    CHECK(stats[0].avg_c == doctest::Approx(25.5));
    CHECK_FALSE(stats[0].within_limit);
    CHECK(stats[1].gradient_c == 0.0);

    // An ONI with only electrical parts cannot be scored.
    OniLayout degenerate = ms.model.onis[0];
    degenerate.devices.clear();
    for (const Device& d : ms.model.onis[0].devices)
        if (d.kind == DeviceKind::Driver) degenerate.devices.push_back(d);
    CHECK_THROWS_AS(oni_stats(map, {degenerate}, 1.0), ValidationError);
}

TEST_CASE("fully adiabatic problems are rejected as singular") {
    ChipStack box = make_box(100.0, 100.0, 50.0, 100.0, 1.0);
    auto mesh = std::make_shared<const Mesh>(build_mesh(box, {}, uniform_policy(25.0)));
    CHECK_THROWS_AS(solve_steady(mesh, box.boundary, 25.0), SolveError);
}

TEST_CASE("iteration caps and bad tolerances are reported") {
    const MiniSetup ms = mini_setup();

    SolveOptions strangled;
    strangled.tolerance = 1e-14;
    strangled.max_iterations = 1;
    try {
        solve_steady(ms.mesh, ms.loaded.boundary, 25.0, strangled);
        FAIL("expected non-convergence");
    } catch (const SolveError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("converge") != std::string::npos);
        CHECK(msg.find("residual") != std::string::npos);
    }

    SolveOptions bad;
    bad.tolerance = 0.0;
    CHECK_THROWS_AS(solve_steady(ms.mesh, ms.loaded.boundary, 25.0, bad), ValidationError);
    bad.tolerance = 1e-8;
    bad.max_iterations = 0;
    CHECK_THROWS_AS(solve_steady(ms.mesh, ms.loaded.boundary, 25.0, bad), ValidationError);
}

TEST_CASE("source refresh follows block power edits without rebuilding") {
    const MiniSetup ms = mini_setup();
    Mesh m = *ms.mesh;
    CHECK(m.total_source_mw() == doctest::Approx(total_power_mw(ms.loaded)).epsilon(1e-9));

    const ChipStack hot = with_device_power(ms.loaded, ms.model.onis, DeviceKind::Vcsel, 6.0);
    reassign_sources(m, hot);
    CHECK(m.total_source_mw() == doctest::Approx(total_power_mw(hot)).epsilon(1e-9));
    CHECK(total_power_mw(hot) == doctest::Approx(total_power_mw(ms.loaded) + 4.0 * 4.0).epsilon(1e-9));
}

TEST_CASE("map exports are byte-stable across repeated writes") {
    const MiniSetup ms = mini_setup();
    const ThermalMap map = solve_steady(ms.mesh, ms.loaded.boundary, 25.0);

    const std::string csv1 = "/tmp/photonoc_map_a.csv", csv2 = "/tmp/photonoc_map_b.csv";
    write_map_csv(map, csv1);
    write_map_csv(map, csv2);
    const std::string a = slurp(csv1), b = slurp(csv2);
    CHECK(!a.empty());
    CHECK(a == b);
    CHECK(a.rfind("x_um,y_um,z_um,t_c", 0) == 0);

    const std::string bin1 = "/tmp/photonoc_grid_a.bin", bin2 = "/tmp/photonoc_grid_b.bin";
    write_grid_dump(map, bin1);
    write_grid_dump(map, bin2);
    const std::string ga = slurp(bin1), gb = slurp(bin2);
    CHECK(ga == gb);
    CHECK(ga.rfind("PHGRID01", 0) == 0);

    for (const char* p : {csv1.c_str(), csv2.c_str(), bin1.c_str(), bin2.c_str()})
        std::remove(p);
}
