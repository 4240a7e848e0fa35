#include "photonoc/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "photonoc/common.hpp"

namespace photonoc::thermal {

using chipmodel::Block;
using chipmodel::BlockRole;
using chipmodel::BoundaryFace;
using chipmodel::BoundarySet;
using chipmodel::ChipStack;
using chipmodel::OniLayout;

namespace {

constexpr double kPlaneTol = 1e-6;    // um
constexpr double kUm = 1e-6;          // um -> m
constexpr double kUm2 = 1e-12;        // um^2 -> m^2
constexpr size_t kMaxCells = 60'000'000;

struct Interval {
    double lo, hi;
};

// One axis of the tensor grid: boundary planes first, then subdivision of
// each span to its region target (fine wins over source wins over package).
std::vector<double> build_axis(std::vector<double> bounds, const std::vector<Interval>& fine,
                               const std::vector<Interval>& source, const MeshPolicy& policy,
                               const char* axis_name, const ChipStack& stack) {
    for (const auto& iv : fine) {
        bounds.push_back(iv.lo);
        bounds.push_back(iv.hi);
    }
    for (const auto& iv : source) {
        bounds.push_back(iv.lo);
        bounds.push_back(iv.hi);
    }
    std::sort(bounds.begin(), bounds.end());
    std::vector<double> planes;
    for (double b : bounds)
        if (planes.empty() || b - planes.back() > kPlaneTol) planes.push_back(b);

    // Two distinct planes too close to mesh apart: report the blocks that
    // own them rather than silently merging geometry away.
    for (size_t i = 1; i < planes.size(); i++) {
        if (planes[i] - planes[i - 1] >= policy.min_cell_um) continue;
        auto owner = [&](double v) -> std::string {
            for (const auto& layer : stack.layers)
                for (const auto& blk : layer.blocks) {
                    double lo, hi;
                    if (std::strcmp(axis_name, "x") == 0) {
                        lo = blk.x0; hi = blk.x1();
                    } else if (std::strcmp(axis_name, "y") == 0) {
                        lo = blk.y0; hi = blk.y1();
                    } else {
                        lo = blk.z0; hi = blk.z1();
                    }
                    if (std::abs(lo - v) <= kPlaneTol || std::abs(hi - v) <= kPlaneTol)
                        return blk.name;
                }
            return "<region bound>";
        };
        throw ValidationError(strfmt(
            "mesh resolution cannot separate %s-planes %.6f and %.6f um "
            "(blocks '%s' and '%s' are closer than min_cell_um = %g)",
            axis_name, planes[i - 1], planes[i], owner(planes[i - 1]).c_str(),
            owner(planes[i]).c_str(), policy.min_cell_um));
    }

    auto covered = [](const std::vector<Interval>& ivs, double mid) {
        for (const auto& iv : ivs)
            if (mid > iv.lo - kPlaneTol && mid < iv.hi + kPlaneTol) return true;
        return false;
    };

    std::vector<double> out;
    out.reserve(planes.size() * 2);
    for (size_t i = 0; i + 1 < planes.size(); i++) {
        double a = planes[i], b = planes[i + 1];
        double mid = 0.5 * (a + b);
        double target = policy.package_um;
        if (covered(source, mid)) target = policy.source_um;
        if (covered(fine, mid)) target = policy.fine_um;
        int n = std::max(1, static_cast<int>(std::ceil((b - a) / target - 1e-9)));
        out.push_back(a);
        for (int s = 1; s < n; s++) out.push_back(a + (b - a) * s / n);
    }
    out.push_back(planes.back());
    return out;
}

int locate_plane(const std::vector<double>& planes, double v, const char* what) {
    auto it = std::lower_bound(planes.begin(), planes.end(), v - kPlaneTol);
    if (it == planes.end() || std::abs(*it - v) > kPlaneTol)
        throw ValidationError(strfmt("%s coordinate %.6f um is not on a mesh plane", what, v));
    return static_cast<int>(it - planes.begin());
}

// Cell index along one axis for a point; points on a shared plane belong to
// the lower-index cell.
int locate_cell(const std::vector<double>& planes, double v, const char* axis) {
    if (v < planes.front() - kPlaneTol || v > planes.back() + kPlaneTol)
        throw ValidationError(strfmt("point %s=%.6f um is outside the mesh", axis, v));
    auto it = std::lower_bound(planes.begin(), planes.end(), v);
    size_t idx = static_cast<size_t>(it - planes.begin());
    if (idx == 0) return 0;
    if (idx >= planes.size()) return static_cast<int>(planes.size()) - 2;
    return static_cast<int>(idx) - 1;
}

}  // namespace

double Mesh::total_source_mw() const {
    double s = 0;
    for (double v : source_mw) s += v;
    return s;
}

Mesh build_mesh(const ChipStack& stack, const std::vector<OniLayout>& onis, const MeshPolicy& policy) {
    if (!(policy.fine_um > 0 && policy.source_um > 0 && policy.package_um > 0))
        throw ValidationError("mesh policy cell sizes must be positive");

    std::vector<double> bx{stack.x0, stack.x1}, by{stack.y0, stack.y1};
    std::vector<double> bz;
    std::vector<Interval> fx, fy, fz, sx, sy, sz;
    for (const auto& layer : stack.layers) {
        bz.push_back(layer.z0);
        bz.push_back(layer.z0 + layer.thickness);
        for (const auto& blk : layer.blocks) {
            bx.push_back(blk.x0);
            bx.push_back(blk.x1());
            by.push_back(blk.y0);
            by.push_back(blk.y1());
            bz.push_back(blk.z0);
            bz.push_back(blk.z1());
            if (blk.role == BlockRole::ActivityTile || blk.role == BlockRole::Device) {
                sx.push_back({blk.x0, blk.x1()});
                sy.push_back({blk.y0, blk.y1()});
                sz.push_back({blk.z0, blk.z1()});
            }
        }
    }
    for (const auto& oni : onis) {
        fx.push_back({oni.box_x0, oni.box_x1});
        fy.push_back({oni.box_y0, oni.box_y1});
        fz.push_back({oni.z0, oni.z1});
    }

    Mesh m;
    m.xs = build_axis(std::move(bx), fx, sx, policy, "x", stack);
    m.ys = build_axis(std::move(by), fy, sy, policy, "y", stack);
    m.zs = build_axis(std::move(bz), fz, sz, policy, "z", stack);
    m.nx = static_cast<int>(m.xs.size()) - 1;
    m.ny = static_cast<int>(m.ys.size()) - 1;
    m.nz = static_cast<int>(m.zs.size()) - 1;
    if (m.nx < 1 || m.ny < 1 || m.nz < 1) throw ValidationError("mesh degenerated to zero cells");
    size_t n = m.cell_count();
    if (n > kMaxCells)
        throw ValidationError(strfmt("mesh of %zu cells exceeds the %zu-cell cap; coarsen the policy",
                                     n, kMaxCells));

    m.conductivity.assign(n, -1.0f);
    m.source_mw.assign(n, 0.0);
    m.owner_layer.assign(n, -1);
    m.owner_block.assign(n, -1);
    m.owner_fraction.assign(n, 0.0);

    for (size_t li = 0; li < stack.layers.size(); li++) {
        const auto& layer = stack.layers[li];
        for (size_t bi = 0; bi < layer.blocks.size(); bi++) {
            const Block& blk = layer.blocks[bi];
            int i0 = locate_plane(m.xs, blk.x0, "block x0");
            int i1 = locate_plane(m.xs, blk.x1(), "block x1");
            int j0 = locate_plane(m.ys, blk.y0, "block y0");
            int j1 = locate_plane(m.ys, blk.y1(), "block y1");
            int k0 = locate_plane(m.zs, blk.z0, "block z0");
            int k1 = locate_plane(m.zs, blk.z1(), "block z1");
            float cond = static_cast<float>(stack.materials[blk.material].conductivity_w_mc);
            double inv_vol = 1.0 / blk.volume_um3();
            for (int k = k0; k < k1; k++)
                for (int j = j0; j < j1; j++)
                    for (int i = i0; i < i1; i++) {
                        size_t c = m.idx(i, j, k);
                        if (m.owner_layer[c] >= 0)
                            throw ValidationError(strfmt(
                                "blocks '%s' and '%s' both cover mesh cell (%d,%d,%d)",
                                stack.layers[m.owner_layer[c]].blocks[m.owner_block[c]].name.c_str(),
                                blk.name.c_str(), i, j, k));
                        m.owner_layer[c] = static_cast<int32_t>(li);
                        m.owner_block[c] = static_cast<int32_t>(bi);
                        m.conductivity[c] = cond;
                        double frac = m.dx(i) * m.dy(j) * m.dz(k) * inv_vol;
                        m.owner_fraction[c] = frac;
                        m.source_mw[c] = blk.power_mw * frac;
                    }
        }
    }
    for (size_t c = 0; c < n; c++)
        if (m.owner_layer[c] < 0)
            throw ValidationError("mesh has a cell covered by no block (stack not validated?)");
    log_info(strfmt("mesh: %d x %d x %d = %zu cells", m.nx, m.ny, m.nz, n));
    return m;
}

void reassign_sources(Mesh& mesh, const ChipStack& stack) {
    size_t n = mesh.cell_count();
    for (size_t c = 0; c < n; c++) {
        const Block& blk = stack.layers[mesh.owner_layer[c]].blocks[mesh.owner_block[c]];
        mesh.source_mw[c] = blk.power_mw * mesh.owner_fraction[c];
    }
}

namespace {

// Assembled SPD system in temperature-rise form: A u = b with
// u = T - ambient. Face conductances are stored per axis; boundary
// conductances fold into the diagonal.
struct LinearSystem {
    int nx, ny, nz;
    size_t n;
    std::vector<double> gx, gy, gz;  // face conductances, W/C
    std::vector<double> diag;
    std::vector<double> b;

    size_t cell(int i, int j, int k) const { return (static_cast<size_t>(k) * ny + j) * nx + i; }
    size_t fx(int i, int j, int k) const { return (static_cast<size_t>(k) * ny + j) * (nx + 1) + i; }
    size_t fy(int i, int j, int k) const { return (static_cast<size_t>(k) * (ny + 1) + j) * nx + i; }
    size_t fz(int i, int j, int k) const { return (static_cast<size_t>(k) * ny + j) * nx + i; }

    void matvec(const std::vector<double>& x, std::vector<double>& y) const {
        for (int k = 0; k < nz; k++)
            for (int j = 0; j < ny; j++)
                for (int i = 0; i < nx; i++) {
                    size_t c = cell(i, j, k);
                    double v = diag[c] * x[c];
                    if (i > 0) v -= gx[fx(i, j, k)] * x[c - 1];
                    if (i < nx - 1) v -= gx[fx(i + 1, j, k)] * x[c + 1];
                    if (j > 0) v -= gy[fy(i, j, k)] * x[c - nx];
                    if (j < ny - 1) v -= gy[fy(i, j + 1, k)] * x[c + nx];
                    if (k > 0) v -= gz[fz(i, j, k)] * x[c - static_cast<size_t>(nx) * ny];
                    if (k < nz - 1) v -= gz[fz(i, j, k + 1)] * x[c + static_cast<size_t>(nx) * ny];
                    y[c] = v;
                }
    }
};

LinearSystem assemble(const Mesh& m, const BoundarySet& boundary, double ambient_c) {
    LinearSystem s;
    s.nx = m.nx;
    s.ny = m.ny;
    s.nz = m.nz;
    s.n = m.cell_count();
    s.gx.assign(static_cast<size_t>(m.nx + 1) * m.ny * m.nz, 0.0);
    s.gy.assign(static_cast<size_t>(m.ny + 1) * m.nx * m.nz, 0.0);
    s.gz.assign(static_cast<size_t>(m.nz + 1) * m.nx * m.ny, 0.0);
    s.diag.assign(s.n, 0.0);
    s.b.assign(s.n, 0.0);

    auto k_of = [&](int i, int j, int k) {
        return static_cast<double>(m.conductivity[m.idx(i, j, k)]);
    };
    // Boundary face handling: conductance from cell centre to face, composed
    // with the convective film when present. Fixed faces also inject into b.
    auto boundary_g = [&](const BoundaryFace& f, double area_m2, double half_m, double cond) {
        switch (f.kind) {
            case BoundaryFace::Kind::Adiabatic: return 0.0;
            case BoundaryFace::Kind::Convective: return area_m2 / (half_m / cond + 1.0 / f.h_w_m2c);
            case BoundaryFace::Kind::Fixed: return area_m2 * cond / half_m;
        }
        return 0.0;
    };

    for (int k = 0; k < m.nz; k++)
        for (int j = 0; j < m.ny; j++) {
            double ay = m.dy(j), az = m.dz(k);
            for (int i = 0; i <= m.nx; i++) {
                double area = ay * az * kUm2;
                double g;
                if (i == 0 || i == m.nx) {
                    const BoundaryFace& f = boundary.face[i == 0 ? 0 : 1];
                    int ci = i == 0 ? 0 : m.nx - 1;
                    g = boundary_g(f, area, 0.5 * m.dx(ci) * kUm, k_of(ci, j, k));
                    if (g > 0) {
                        size_t c = m.idx(ci, j, k);
                        s.diag[c] += g;
                        if (f.kind == BoundaryFace::Kind::Fixed)
                            s.b[c] += g * (f.fixed_t_c - ambient_c);
                    }
                } else {
                    double d1 = 0.5 * m.dx(i - 1) * kUm / k_of(i - 1, j, k);
                    double d2 = 0.5 * m.dx(i) * kUm / k_of(i, j, k);
                    g = area / (d1 + d2);
                    s.diag[m.idx(i - 1, j, k)] += g;
                    s.diag[m.idx(i, j, k)] += g;
                }
                s.gx[s.fx(i, j, k)] = (i == 0 || i == m.nx) ? 0.0 : g;
            }
        }
    for (int k = 0; k < m.nz; k++)
        for (int i = 0; i < m.nx; i++) {
            double ax = m.dx(i), az = m.dz(k);
            for (int j = 0; j <= m.ny; j++) {
                double area = ax * az * kUm2;
                double g;
                if (j == 0 || j == m.ny) {
                    const BoundaryFace& f = boundary.face[j == 0 ? 2 : 3];
                    int cj = j == 0 ? 0 : m.ny - 1;
                    g = boundary_g(f, area, 0.5 * m.dy(cj) * kUm, k_of(i, cj, k));
                    if (g > 0) {
                        size_t c = m.idx(i, cj, k);
                        s.diag[c] += g;
                        if (f.kind == BoundaryFace::Kind::Fixed)
                            s.b[c] += g * (f.fixed_t_c - ambient_c);
                    }
                } else {
                    double d1 = 0.5 * m.dy(j - 1) * kUm / k_of(i, j - 1, k);
                    double d2 = 0.5 * m.dy(j) * kUm / k_of(i, j, k);
                    g = area / (d1 + d2);
                    s.diag[m.idx(i, j - 1, k)] += g;
                    s.diag[m.idx(i, j, k)] += g;
                }
                s.gy[s.fy(i, j, k)] = (j == 0 || j == m.ny) ? 0.0 : g;
            }
        }
    for (int j = 0; j < m.ny; j++)
        for (int i = 0; i < m.nx; i++) {
            double ax = m.dx(i), ay = m.dy(j);
            for (int k = 0; k <= m.nz; k++) {
                double area = ax * ay * kUm2;
                double g;
                if (k == 0 || k == m.nz) {
                    const BoundaryFace& f = boundary.face[k == 0 ? 4 : 5];
                    int ck = k == 0 ? 0 : m.nz - 1;
                    g = boundary_g(f, area, 0.5 * m.dz(ck) * kUm, k_of(i, j, ck));
                    if (g > 0) {
                        size_t c = m.idx(i, j, ck);
                        s.diag[c] += g;
                        if (f.kind == BoundaryFace::Kind::Fixed)
                            s.b[c] += g * (f.fixed_t_c - ambient_c);
                    }
                } else {
                    double d1 = 0.5 * m.dz(k - 1) * kUm / k_of(i, j, k - 1);
                    double d2 = 0.5 * m.dz(k) * kUm / k_of(i, j, k);
                    g = area / (d1 + d2);
                    s.diag[m.idx(i, j, k - 1)] += g;
                    s.diag[m.idx(i, j, k)] += g;
                }
                s.gz[s.fz(i, j, k)] = (k == 0 || k == m.nz) ? 0.0 : g;
            }
        }

    for (size_t c = 0; c < s.n; c++) s.b[c] += m.source_mw[c] * 1e-3;  // mW -> W
    return s;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); i++) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Incomplete Cholesky (zero fill) pivots for the 7-point stencil. The FVM
// matrix is an M-matrix, so the factorization cannot break down; the Jacobi
// fallback is pure belt-and-braces.
bool ic0_pivots(const LinearSystem& s, std::vector<double>& d) {
    d.assign(s.n, 0.0);
    size_t plane = static_cast<size_t>(s.nx) * s.ny;
    for (int k = 0; k < s.nz; k++)
        for (int j = 0; j < s.ny; j++)
            for (int i = 0; i < s.nx; i++) {
                size_t c = s.cell(i, j, k);
                double v = s.diag[c];
                if (i > 0) {
                    double g = s.gx[s.fx(i, j, k)];
                    v -= g * g / d[c - 1];
                }
                if (j > 0) {
                    double g = s.gy[s.fy(i, j, k)];
                    v -= g * g / d[c - s.nx];
                }
                if (k > 0) {
                    double g = s.gz[s.fz(i, j, k)];
                    v -= g * g / d[c - plane];
                }
                if (!(v > 0)) return false;
                d[c] = v;
            }
    return true;
}

void ic0_apply(const LinearSystem& s, const std::vector<double>& d, const std::vector<double>& r,
               std::vector<double>& z, std::vector<double>& scratch) {
    size_t plane = static_cast<size_t>(s.nx) * s.ny;
    std::vector<double>& u = scratch;
    for (int k = 0; k < s.nz; k++)
        for (int j = 0; j < s.ny; j++)
            for (int i = 0; i < s.nx; i++) {
                size_t c = s.cell(i, j, k);
                double v = r[c];
                if (i > 0) v += s.gx[s.fx(i, j, k)] * u[c - 1];
                if (j > 0) v += s.gy[s.fy(i, j, k)] * u[c - s.nx];
                if (k > 0) v += s.gz[s.fz(i, j, k)] * u[c - plane];
                u[c] = v / d[c];
            }
    for (int k = s.nz - 1; k >= 0; k--)
        for (int j = s.ny - 1; j >= 0; j--)
            for (int i = s.nx - 1; i >= 0; i--) {
                size_t c = s.cell(i, j, k);
                double v = 0.0;
                if (i < s.nx - 1) v += s.gx[s.fx(i + 1, j, k)] * z[c + 1];
                if (j < s.ny - 1) v += s.gy[s.fy(i, j + 1, k)] * z[c + s.nx];
                if (k < s.nz - 1) v += s.gz[s.fz(i, j, k + 1)] * z[c + plane];
                z[c] = u[c] + v / d[c];
            }
}

}  // namespace

ThermalMap solve_steady(std::shared_ptr<const Mesh> mesh, const BoundarySet& boundary,
                        double ambient_c, const SolveOptions& options) {
    if (!mesh) throw ValidationError("solve_steady needs a mesh");
    if (!boundary.any_non_adiabatic())
        throw SolveError("all boundary faces are adiabatic; the steady problem is singular");
    if (!(options.tolerance > 0) || options.max_iterations < 1)
        throw ValidationError("solver tolerance must be positive and max_iterations >= 1");

    const Mesh& m = *mesh;
    LinearSystem s = assemble(m, boundary, ambient_c);

    ThermalMap map;
    map.mesh = mesh;
    map.ambient_c = ambient_c;
    map.source_w = m.total_source_mw() * 1e-3;

    size_t n = s.n;
    std::vector<double> u(n, 0.0);
    double bnorm = norm2(s.b);
    if (bnorm == 0.0) {
        map.temperature_c.assign(n, ambient_c);
        map.residual = 0.0;
        map.iterations = 0;
        map.boundary_outflow_w = 0.0;
        return map;
    }

    std::vector<double> d;
    bool use_ic0 = options.preconditioner == SolveOptions::Preconditioner::IncompleteCholesky;
    if (use_ic0 && !ic0_pivots(s, d)) {
        log_info("incomplete Cholesky pivot breakdown, falling back to Jacobi");
        use_ic0 = false;
    }

    std::vector<double> r = s.b, z(n), p(n), q(n), scratch(n);
    auto precondition = [&](const std::vector<double>& in, std::vector<double>& out) {
        if (use_ic0) {
            ic0_apply(s, d, in, out, scratch);
        } else {
            for (size_t c = 0; c < n; c++) out[c] = in[c] / s.diag[c];
        }
    };

    precondition(r, z);
    p = z;
    double rz = dot(r, z);
    double rnorm = norm2(r);
    int it = 0;
    while (rnorm > options.tolerance * bnorm) {
        if (it >= options.max_iterations)
            throw SolveError(strfmt("thermal solve did not converge: relative residual %.3e after %d "
                                    "iterations (tolerance %.1e)",
                                    rnorm / bnorm, it, options.tolerance));
        it++;
        s.matvec(p, q);
        double alpha = rz / dot(p, q);
        for (size_t c = 0; c < n; c++) u[c] += alpha * p[c];
        for (size_t c = 0; c < n; c++) r[c] -= alpha * q[c];
        rnorm = norm2(r);
        if (rnorm <= options.tolerance * bnorm) {
            // Recurrence residuals drift; accept only on the true residual.
            s.matvec(u, q);
            for (size_t c = 0; c < n; c++) r[c] = s.b[c] - q[c];
            rnorm = norm2(r);
            if (rnorm <= options.tolerance * bnorm) break;
        }
        precondition(r, z);
        double rz_next = dot(r, z);
        double beta = rz_next / rz;
        rz = rz_next;
        for (size_t c = 0; c < n; c++) p[c] = z[c] + beta * p[c];
    }
    map.iterations = it;
    map.residual = rnorm / bnorm;
    log_info(strfmt("thermal solve: %zu cells, %d iterations, relative residual %.3e", n, it,
                    map.residual));

    map.temperature_c.resize(n);
    for (size_t c = 0; c < n; c++) map.temperature_c[c] = ambient_c + u[c];

    // Energy balance: flux through every non-adiabatic boundary face.
    double outflow = 0.0;
    auto face_flux = [&](int face_id, int i, int j, int k, double area_um2, double half_um) {
        const BoundaryFace& f = boundary.face[face_id];
        if (f.kind == BoundaryFace::Kind::Adiabatic) return;
        size_t c = m.idx(i, j, k);
        double cond = static_cast<double>(m.conductivity[c]);
        double area = area_um2 * kUm2, half = half_um * kUm;
        double g = f.kind == BoundaryFace::Kind::Convective ? area / (half / cond + 1.0 / f.h_w_m2c)
                                                            : area * cond / half;
        double u_ref = f.kind == BoundaryFace::Kind::Fixed ? f.fixed_t_c - ambient_c : 0.0;
        outflow += g * (u[c] - u_ref);
    };
    for (int k = 0; k < m.nz; k++)
        for (int j = 0; j < m.ny; j++) {
            face_flux(0, 0, j, k, m.dy(j) * m.dz(k), 0.5 * m.dx(0));
            face_flux(1, m.nx - 1, j, k, m.dy(j) * m.dz(k), 0.5 * m.dx(m.nx - 1));
        }
    for (int k = 0; k < m.nz; k++)
        for (int i = 0; i < m.nx; i++) {
            face_flux(2, i, 0, k, m.dx(i) * m.dz(k), 0.5 * m.dy(0));
            face_flux(3, i, m.ny - 1, k, m.dx(i) * m.dz(k), 0.5 * m.dy(m.ny - 1));
        }
    for (int j = 0; j < m.ny; j++)
        for (int i = 0; i < m.nx; i++) {
            face_flux(4, i, j, 0, m.dx(i) * m.dy(j), 0.5 * m.dz(0));
            face_flux(5, i, j, m.nz - 1, m.dx(i) * m.dy(j), 0.5 * m.dz(m.nz - 1));
        }
    map.boundary_outflow_w = outflow;
    return map;
}

double temperature_at(const ThermalMap& map, double x_um, double y_um, double z_um) {
    const Mesh& m = *map.mesh;
    int i = locate_cell(m.xs, x_um, "x");
    int j = locate_cell(m.ys, y_um, "y");
    int k = locate_cell(m.zs, z_um, "z");
    return map.temperature_c[m.idx(i, j, k)];
}

std::vector<OniThermalStats> oni_stats(const ThermalMap& map,
                                       const std::vector<chipmodel::OniLayout>& onis,
                                       double gradient_limit_c) {
    std::vector<OniThermalStats> out;
    out.reserve(onis.size());
    for (const auto& oni : onis) {
        OniThermalStats st;
        st.oni_id = oni.id;
        double sum = 0;
        int count = 0;
        double lo = 0, hi = 0;
        bool first = true;
        for (const auto& dev : oni.devices) {
            using chipmodel::DeviceKind;
            if (dev.kind == DeviceKind::Driver || dev.kind == DeviceKind::Tsv)
                continue;  // electrical-layer parts are not interface devices
            double t = temperature_at(map, dev.cx, dev.cy, dev.cz);
            sum += t;
            count++;
            if (dev.kind == DeviceKind::Vcsel || dev.kind == DeviceKind::Mr) {
                if (first || t < lo) lo = t;
                if (first || t > hi) hi = t;
                first = false;
            }
        }
        if (count == 0)
            throw ValidationError(strfmt("ONI %d has no optical-layer devices", oni.id));
        st.avg_c = sum / count;
        st.gradient_c = first ? 0.0 : hi - lo;
        st.within_limit = st.gradient_c <= gradient_limit_c + 1e-12;
        out.push_back(st);
    }
    return out;
}

void write_map_csv(const ThermalMap& map, const std::string& path) {
    FILE* f = fopen(path.c_str(), "wb");
    if (!f) throw ConfigError(strfmt("cannot open '%s' for writing", path.c_str()));
    const Mesh& m = *map.mesh;
    fprintf(f, "x_um,y_um,z_um,t_c\n");
    for (int k = 0; k < m.nz; k++)
        for (int j = 0; j < m.ny; j++)
            for (int i = 0; i < m.nx; i++)
                fprintf(f, "%.10g,%.10g,%.10g,%.10g\n", 0.5 * (m.xs[i] + m.xs[i + 1]),
                        0.5 * (m.ys[j] + m.ys[j + 1]), 0.5 * (m.zs[k] + m.zs[k + 1]),
                        map.temperature_c[m.idx(i, j, k)]);
    fclose(f);
}

void write_grid_dump(const ThermalMap& map, const std::string& path) {
    FILE* f = fopen(path.c_str(), "wb");
    if (!f) throw ConfigError(strfmt("cannot open '%s' for writing", path.c_str()));
    const Mesh& m = *map.mesh;
    const char magic[8] = {'P', 'H', 'G', 'R', 'I', 'D', '0', '1'};
    fwrite(magic, 1, 8, f);
    int32_t dims[3] = {m.nx, m.ny, m.nz};
    fwrite(dims, sizeof(int32_t), 3, f);
    fwrite(m.xs.data(), sizeof(double), m.xs.size(), f);
    fwrite(m.ys.data(), sizeof(double), m.ys.size(), f);
    fwrite(m.zs.data(), sizeof(double), m.zs.size(), f);
    fwrite(map.temperature_c.data(), sizeof(double), map.temperature_c.size(), f);
    fclose(f);
}

}  // namespace photonoc::thermal
