#pragma once

// Steady-state heat conduction on a non-uniform structured grid, finite
// volume discretization with harmonic-mean face conductances. Geometry comes
// in as um/mW; conversion to SI happens here and nowhere else.

#include <memory>
#include <string>
#include <vector>

#include "photonoc/chipmodel.hpp"

namespace photonoc::thermal {

// Target cell sizes by region class. Fine covers ONI boxes (devices, TSVs,
// BEOL underneath); source covers activity/device blocks; package is the
// rest. Planes are always inserted at every block boundary first, then each
// span is subdivided to meet its target.
struct MeshPolicy {
    double fine_um = 5.0;
    double source_um = 100.0;
    double package_um = 500.0;
    // Two distinct planes closer than this cannot be meshed apart; building
    // such a mesh reports the offending blocks instead of merging them.
    double min_cell_um = 0.05;
};

struct Mesh {
    std::vector<double> xs, ys, zs;  // plane coordinates, um
    int nx = 0, ny = 0, nz = 0;      // cell counts per axis

    std::vector<float> conductivity;   // per cell, W/(m*C)
    std::vector<double> source_mw;     // per cell
    std::vector<int32_t> owner_layer;  // per cell: covering block
    std::vector<int32_t> owner_block;
    std::vector<double> owner_fraction;  // cell volume / block volume

    size_t cell_count() const { return static_cast<size_t>(nx) * ny * nz; }
    size_t idx(int i, int j, int k) const {
        return (static_cast<size_t>(k) * ny + j) * nx + i;
    }
    double dx(int i) const { return xs[i + 1] - xs[i]; }
    double dy(int j) const { return ys[j + 1] - ys[j]; }
    double dz(int k) const { return zs[k + 1] - zs[k]; }
    double total_source_mw() const;
};

Mesh build_mesh(const chipmodel::ChipStack& stack, const std::vector<chipmodel::OniLayout>& onis,
                const MeshPolicy& policy);

// Refreshes per-cell sources from the stack's current block powers. The stack
// must have identical geometry to the one the mesh was built from.
void reassign_sources(Mesh& mesh, const chipmodel::ChipStack& stack);

struct SolveOptions {
    double tolerance = 1e-8;  // relative residual, 2-norm
    int max_iterations = 10000;
    enum class Preconditioner { IncompleteCholesky, Jacobi } preconditioner =
        Preconditioner::IncompleteCholesky;
};

struct ThermalMap {
    std::shared_ptr<const Mesh> mesh;
    std::vector<double> temperature_c;  // per cell
    double ambient_c = 0;
    double residual = 0;  // final relative residual
    int iterations = 0;
    // Power leaving through non-adiabatic boundary faces, W; equals the total
    // source power up to solver tolerance.
    double boundary_outflow_w = 0;
    double source_w = 0;
};

// Solves for the steady temperature field. The system is singular when every
// face is adiabatic; that and non-convergence raise SolveError (no partial
// results). The linear system is solved in temperature-rise form, so the
// field is exactly linear in the sources.
ThermalMap solve_steady(std::shared_ptr<const Mesh> mesh, const chipmodel::BoundarySet& boundary,
                        double ambient_c, const SolveOptions& options = {});

// Temperature of the cell containing the point; a point on a shared face
// belongs to the lower-index cell. Out-of-domain points are an error.
double temperature_at(const ThermalMap& map, double x_um, double y_um, double z_um);

struct OniThermalStats {
    int oni_id = 0;
    double avg_c = 0;       // mean over the ONI's optical-layer devices
    double gradient_c = 0;  // max - min over its lasers and rings
    bool within_limit = true;  // gradient <= limit (1 C default)
};

std::vector<OniThermalStats> oni_stats(const ThermalMap& map,
                                       const std::vector<chipmodel::OniLayout>& onis,
                                       double gradient_limit_c = 1.0);

// Exports: CSV of cell centres, and a raw grid dump (header + planes +
// row-major float64 temperatures) for plotting tools.
void write_map_csv(const ThermalMap& map, const std::string& path);
void write_grid_dump(const ThermalMap& map, const std::string& path);

}  // namespace photonoc::thermal
