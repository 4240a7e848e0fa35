#include "photonoc/chipmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <random>

#include "photonoc/common.hpp"

namespace photonoc::chipmodel {

namespace {

constexpr double kPlaneTol = 1e-6;  // um; closure tolerance for shared faces

// Sorted unique plane coordinates along one axis, with tolerant lookup.
struct Axis {
    std::vector<double> planes;

    void add(double v) { planes.push_back(v); }
    void finish() {
        std::sort(planes.begin(), planes.end());
        std::vector<double> out;
        for (double p : planes) {
            if (out.empty() || p - out.back() > kPlaneTol) out.push_back(p);
        }
        planes = std::move(out);
    }
    // Index of the plane equal to v (within tolerance); -1 if absent.
    int find(double v) const {
        auto it = std::lower_bound(planes.begin(), planes.end(), v - kPlaneTol);
        if (it == planes.end() || std::abs(*it - v) > kPlaneTol) return -1;
        return static_cast<int>(it - planes.begin());
    }
    int cells() const { return static_cast<int>(planes.size()) - 1; }
};

struct LayerGrid {
    Axis x, y, z;
    // cover[cell] = index of covering block + 1, 0 = uncovered.
    std::vector<int> cover;
    int idx(int i, int j, int k) const { return (k * y.cells() + j) * x.cells() + i; }
};

LayerGrid decompose_layer(const ChipStack& stack, const Layer& layer) {
    LayerGrid g;
    g.x.add(stack.x0);
    g.x.add(stack.x1);
    g.y.add(stack.y0);
    g.y.add(stack.y1);
    g.z.add(layer.z0);
    g.z.add(layer.z0 + layer.thickness);
    for (const Block& b : layer.blocks) {
        g.x.add(b.x0);
        g.x.add(b.x1());
        g.y.add(b.y0);
        g.y.add(b.y1());
        g.z.add(b.z0);
        g.z.add(b.z1());
    }
    g.x.finish();
    g.y.finish();
    g.z.finish();
    g.cover.assign(static_cast<size_t>(g.x.cells()) * g.y.cells() * g.z.cells(), 0);
    return g;
}

// Stamps a block's covered elementary cells; returns the index of a block it
// collides with (or -1). Also flags blocks whose corners fall off the grid.
int stamp_block(LayerGrid& g, const Layer& layer, int block_index) {
    const Block& b = layer.blocks[block_index];
    int i0 = g.x.find(b.x0), i1 = g.x.find(b.x1());
    int j0 = g.y.find(b.y0), j1 = g.y.find(b.y1());
    int k0 = g.z.find(b.z0), k1 = g.z.find(b.z1());
    if (i0 < 0 || i1 < 0 || j0 < 0 || j1 < 0 || k0 < 0 || k1 < 0)
        throw ValidationError(strfmt("block '%s' in layer '%s' has corners off the layer grid",
                                     b.name.c_str(), layer.name.c_str()));
    for (int k = k0; k < k1; k++)
        for (int j = j0; j < j1; j++)
            for (int i = i0; i < i1; i++) {
                int& c = g.cover[g.idx(i, j, k)];
                if (c != 0) return c - 1;
                c = block_index + 1;
            }
    return -1;
}

ActivityScenario::Kind activity_kind_from(const std::string& name) {
    if (name == "zero") return ActivityScenario::Kind::Zero;
    if (name == "uniform") return ActivityScenario::Kind::Uniform;
    if (name == "diagonal") return ActivityScenario::Kind::Diagonal;
    if (name == "random") return ActivityScenario::Kind::Random;
    if (name == "custom") return ActivityScenario::Kind::Custom;
    throw ConfigError(strfmt("unknown activity scenario '%s' (expected zero|uniform|diagonal|random|custom)",
                             name.c_str()));
}

// Uniform double in [0,1) from the top 53 bits; the engine is standardized,
// distributions are not, and scenario draws must be reproducible everywhere.
double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct DeviceDims {
    double dx = 0, dy = 0, dz = 0;
    int material = -1;
};

DeviceDims parse_device_dims(const config::Value& oni, const std::string& key,
                             const std::map<std::string, int>& materials, double default_dz) {
    const config::Value& t = oni.table_at(key);
    DeviceDims d;
    d.dx = t.number_at("dx_um");
    d.dy = t.number_at("dy_um");
    d.dz = t.number_or("dz_um", default_dz);
    std::string mat = t.string_at("material");
    auto it = materials.find(mat);
    if (it == materials.end())
        throw ConfigError(strfmt("oni.%s references unknown material '%s'", key.c_str(), mat.c_str()));
    d.material = it->second;
    if (d.dx <= 0 || d.dy <= 0 || d.dz <= 0)
        throw ConfigError(strfmt("oni.%s has non-positive dimensions", key.c_str()));
    return d;
}

BoundaryFace parse_face(const config::Value& t, const std::string& face_key) {
    BoundaryFace f;
    std::string kind = t.string_at("kind");
    if (kind == "adiabatic") {
        f.kind = BoundaryFace::Kind::Adiabatic;
    } else if (kind == "convective") {
        f.kind = BoundaryFace::Kind::Convective;
        f.h_w_m2c = t.number_at("h_w_m2c");
        if (f.h_w_m2c <= 0) throw ConfigError(strfmt("boundary.%s: h_w_m2c must be > 0", face_key.c_str()));
    } else if (kind == "fixed") {
        f.kind = BoundaryFace::Kind::Fixed;
        f.fixed_t_c = t.number_at("t_c");
    } else {
        throw ConfigError(strfmt("boundary.%s: unknown kind '%s'", face_key.c_str(), kind.c_str()));
    }
    return f;
}

}  // namespace

const char* device_kind_name(DeviceKind k) {
    switch (k) {
        case DeviceKind::Vcsel: return "vcsel";
        case DeviceKind::Mr: return "mr";
        case DeviceKind::Photodetector: return "photodetector";
        case DeviceKind::Driver: return "driver";
        case DeviceKind::Tsv: return "tsv";
        case DeviceKind::Heater: return "heater";
    }
    return "?";
}

bool BoundarySet::any_non_adiabatic() const {
    for (const auto& f : face)
        if (f.kind != BoundaryFace::Kind::Adiabatic) return true;
    return false;
}

int ChipStack::find_layer(const std::string& name) const {
    for (size_t i = 0; i < layers.size(); i++)
        if (layers[i].name == name) return static_cast<int>(i);
    return -1;
}

std::string ActivityScenario::label() const {
    switch (kind) {
        case Kind::Zero: return "zero";
        case Kind::Uniform: return strfmt("uniform:%.6gmW", total_mw);
        case Kind::Diagonal: return strfmt("diagonal:%.6gmW:%.6gmW", quad_a_mw, quad_b_mw);
        case Kind::Random: return strfmt("random:%.6gmW:seed%llu", total_mw, (unsigned long long)seed);
        case Kind::Custom: return "custom";
    }
    return "?";
}

double parse_power_mw(const std::string& text) {
    if (text.empty()) throw ConfigError("empty power value");
    const char* begin = text.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw ConfigError(strfmt("cannot parse power '%s'", text.c_str()));
    std::string suffix(end);
    if (suffix.empty() || suffix == "mW" || suffix == "mw") return v;
    if (suffix == "W" || suffix == "w") return v * 1000.0;
    throw ConfigError(strfmt("unknown power suffix '%s' in '%s' (use mW or W)", suffix.c_str(), text.c_str()));
}

ActivityScenario parse_activity(const std::string& text) {
    std::vector<std::string> parts;
    size_t start = 0;
    while (true) {
        size_t colon = text.find(':', start);
        parts.push_back(text.substr(start, colon == std::string::npos ? std::string::npos : colon - start));
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    ActivityScenario s;
    s.kind = activity_kind_from(parts[0]);
    switch (s.kind) {
        case ActivityScenario::Kind::Zero:
            if (parts.size() != 1) throw ConfigError("zero scenario takes no arguments");
            break;
        case ActivityScenario::Kind::Uniform:
            if (parts.size() != 2) throw ConfigError("expected uniform:<total-power>");
            s.total_mw = parse_power_mw(parts[1]);
            break;
        case ActivityScenario::Kind::Diagonal:
            if (parts.size() != 3) throw ConfigError("expected diagonal:<quadA-power>:<quadB-power>");
            s.quad_a_mw = parse_power_mw(parts[1]);
            s.quad_b_mw = parse_power_mw(parts[2]);
            break;
        case ActivityScenario::Kind::Random:
            if (parts.size() != 2 && parts.size() != 3)
                throw ConfigError("expected random:<total-power>[:<seed>]");
            s.total_mw = parse_power_mw(parts[1]);
            if (parts.size() == 3) s.seed = std::strtoull(parts[2].c_str(), nullptr, 10);
            break;
        case ActivityScenario::Kind::Custom:
            throw ConfigError("custom scenarios are config-file only (per-block power table)");
    }
    return s;
}

void validate_stack(const ChipStack& stack) {
    if (stack.materials.empty()) throw ValidationError("stack has no materials");
    for (const auto& m : stack.materials)
        if (!(m.conductivity_w_mc > 0))
            throw ValidationError(strfmt("material '%s' must have positive conductivity", m.name.c_str()));
    if (stack.layers.empty()) throw ValidationError("stack has no layers");
    if (!(stack.x1 > stack.x0) || !(stack.y1 > stack.y0))
        throw ValidationError("stack footprint is degenerate");

    double zcursor = stack.layers.front().z0;
    for (const Layer& layer : stack.layers) {
        if (!(layer.thickness > 0))
            throw ValidationError(strfmt("layer '%s' has non-positive thickness", layer.name.c_str()));
        if (std::abs(layer.z0 - zcursor) > kPlaneTol)
            throw ValidationError(strfmt("layer '%s' does not start where the previous layer ends "
                                         "(z=%.6f vs %.6f)",
                                         layer.name.c_str(), layer.z0, zcursor));
        zcursor = layer.z0 + layer.thickness;

        LayerGrid g = decompose_layer(stack, layer);
        for (size_t b = 0; b < layer.blocks.size(); b++) {
            const Block& blk = layer.blocks[b];
            if (!(blk.dx > 0 && blk.dy > 0 && blk.dz > 0))
                throw ValidationError(strfmt("block '%s' has non-positive dimensions", blk.name.c_str()));
            if (blk.material < 0 || blk.material >= static_cast<int>(stack.materials.size()))
                throw ValidationError(strfmt("block '%s' references unknown material index %d",
                                             blk.name.c_str(), blk.material));
            if (blk.x0 < stack.x0 - kPlaneTol || blk.x1() > stack.x1 + kPlaneTol ||
                blk.y0 < stack.y0 - kPlaneTol || blk.y1() > stack.y1 + kPlaneTol ||
                blk.z0 < layer.z0 - kPlaneTol || blk.z1() > layer.z0 + layer.thickness + kPlaneTol)
                throw ValidationError(strfmt("block '%s' sticks out of layer '%s'", blk.name.c_str(),
                                             layer.name.c_str()));
            int collision = stamp_block(g, layer, static_cast<int>(b));
            if (collision >= 0)
                throw ValidationError(strfmt("blocks '%s' and '%s' overlap in layer '%s'",
                                             layer.blocks[collision].name.c_str(), blk.name.c_str(),
                                             layer.name.c_str()));
        }
        for (int k = 0; k < g.z.cells(); k++)
            for (int j = 0; j < g.y.cells(); j++)
                for (int i = 0; i < g.x.cells(); i++)
                    if (g.cover[g.idx(i, j, k)] == 0)
                        throw ValidationError(strfmt(
                            "layer '%s' has an uncovered gap near (%.3f, %.3f, %.3f) um",
                            layer.name.c_str(), 0.5 * (g.x.planes[i] + g.x.planes[i + 1]),
                            0.5 * (g.y.planes[j] + g.y.planes[j + 1]),
                            0.5 * (g.z.planes[k] + g.z.planes[k + 1])));
    }
}

// Generates filler blocks of `material` covering every part of the layer not
// already claimed by a block. Overlapping declared blocks are reported here
// too, since the same decomposition sees them first.
void fill_layer_gaps(ChipStack& stack, int layer_index, int material) {
    Layer& layer = stack.layers[layer_index];
    LayerGrid g = decompose_layer(stack, layer);
    for (size_t b = 0; b < layer.blocks.size(); b++) {
        int collision = stamp_block(g, layer, static_cast<int>(b));
        if (collision >= 0)
            throw ValidationError(strfmt("blocks '%s' and '%s' overlap in layer '%s'",
                                         layer.blocks[collision].name.c_str(),
                                         layer.blocks[b].name.c_str(), layer.name.c_str()));
    }
    int counter = 0;
    for (int k = 0; k < g.z.cells(); k++)
        for (int j = 0; j < g.y.cells(); j++)
            for (int i = 0; i < g.x.cells(); i++) {
                if (g.cover[g.idx(i, j, k)] != 0) continue;
                // Open an x-run of uncovered cells and merge it into one block.
                int i_end = i;
                while (i_end < g.x.cells() && g.cover[g.idx(i_end, j, k)] == 0) i_end++;
                Block f;
                f.name = strfmt("fill_%s_%d", layer.name.c_str(), counter++);
                f.x0 = g.x.planes[i];
                f.dx = g.x.planes[i_end] - f.x0;
                f.y0 = g.y.planes[j];
                f.dy = g.y.planes[j + 1] - f.y0;
                f.z0 = g.z.planes[k];
                f.dz = g.z.planes[k + 1] - f.z0;
                f.material = material;
                f.role = BlockRole::Filler;
                layer.blocks.push_back(std::move(f));
                i = i_end;
            }
}

namespace {

struct OniTemplate {
    int tracks = 4;
    int tx_per_track = 4;
    int rx_per_track = 4;
    double slot_pitch = 20.0;
    double track_pitch = 40.0;
    DeviceDims vcsel, mr, pd, heater, driver, tsv;

    double box_w() const { return (tx_per_track + rx_per_track) * slot_pitch; }
    double box_h() const { return tracks * track_pitch; }
};

// Emits one ONI's devices into the die (BEOL device band) and optical layer.
void emit_oni(SystemModel& model, const OniTemplate& t, int oni_id, double ox, double oy,
              double beol_dev_z0, double beol_dev_dz, double opt_z0) {
    OniLayout oni;
    oni.id = oni_id;
    oni.box_x0 = ox;
    oni.box_y0 = oy;
    oni.box_x1 = ox + t.box_w();
    oni.box_y1 = oy + t.box_h();
    oni.z0 = beol_dev_z0;
    oni.z1 = opt_z0 + t.vcsel.dz + t.heater.dz;

    Layer& die = model.stack.layers[model.die_layer];
    Layer& opt = model.stack.layers[model.optical_layer];
    int die_idx = model.die_layer;
    int opt_idx = model.optical_layer;

    auto push = [&](Layer& layer, int layer_idx, DeviceKind kind, const DeviceDims& d,
                    double x, double y, double z, const char* tag, int track, int slot) {
        Block b;
        b.name = strfmt("oni%d_t%ds%d_%s", oni_id, track, slot, tag);
        b.x0 = x;
        b.y0 = y;
        b.z0 = z;
        b.dx = d.dx;
        b.dy = d.dy;
        b.dz = d.dz;
        b.material = d.material;
        b.role = BlockRole::Device;
        layer.blocks.push_back(b);
        Device dev;
        dev.kind = kind;
        dev.name = b.name;
        dev.ref = {layer_idx, static_cast<int>(layer.blocks.size()) - 1};
        dev.oni = oni_id;
        dev.cx = b.cx();
        dev.cy = b.cy();
        dev.cz = b.cz();
        oni.devices.push_back(dev);
    };

    for (int track = 0; track < t.tracks; track++) {
        double row_y = oy + track * t.track_pitch + 0.5 * (t.track_pitch - t.vcsel.dy);
        for (int slot = 0; slot < t.tx_per_track + t.rx_per_track; slot++) {
            double sx = ox + slot * t.slot_pitch;
            if (slot % 2 == 0) {
                // Transmitter slot: VCSEL in the optical device band, its
                // driver and TSV in the BEOL device band directly below.
                push(opt, opt_idx, DeviceKind::Vcsel, t.vcsel, sx, row_y, opt_z0, "vcsel", track, slot);
                push(die, die_idx, DeviceKind::Driver,
                     {t.driver.dx, t.driver.dy, beol_dev_dz, t.driver.material}, sx, row_y,
                     beol_dev_z0, "driver", track, slot);
                push(die, die_idx, DeviceKind::Tsv,
                     {t.tsv.dx, t.tsv.dy, beol_dev_dz, t.tsv.material}, sx,
                     row_y + t.driver.dy, beol_dev_z0, "tsv", track, slot);
            } else {
                // Receiver slot: photodetector + ring with its trim heater
                // sitting directly on top of the ring.
                double mx = sx + 0.5 * (t.slot_pitch - t.mr.dx);
                push(opt, opt_idx, DeviceKind::Photodetector, t.pd, mx, row_y, opt_z0, "pd", track, slot);
                push(opt, opt_idx, DeviceKind::Mr, t.mr, mx, row_y + t.pd.dy, opt_z0, "mr", track, slot);
                push(opt, opt_idx, DeviceKind::Heater, t.heater,
                     mx + 0.5 * (t.mr.dx - t.heater.dx),
                     row_y + t.pd.dy + 0.5 * (t.mr.dy - t.heater.dy),
                     opt_z0 + t.mr.dz, "heater", track, slot);
            }
        }
    }
    model.onis.push_back(std::move(oni));
}

}  // namespace

SystemModel build_system(const config::Value& root) {
    SystemModel model;
    ChipStack& stack = model.stack;

    // Materials.
    std::map<std::string, int> mat_index;
    for (const config::Value* m : root.table_array("materials")) {
        Material mat;
        mat.name = m->string_at("name");
        mat.conductivity_w_mc = m->number_at("conductivity_w_mc");
        if (mat_index.count(mat.name))
            throw ConfigError(strfmt("duplicate material '%s'", mat.name.c_str()));
        mat_index[mat.name] = static_cast<int>(stack.materials.size());
        stack.materials.push_back(mat);
    }
    if (stack.materials.empty()) throw ConfigError("config declares no [[materials]]");
    auto material_of = [&](const std::string& name, const std::string& where) {
        auto it = mat_index.find(name);
        if (it == mat_index.end())
            throw ConfigError(strfmt("%s references unknown material '%s'", where.c_str(), name.c_str()));
        return it->second;
    };

    // Footprint (all layers share it; packages with wider boards than dies
    // are approximated by filler slabs of the board material).
    stack.x0 = 0.0;
    stack.y0 = 0.0;
    stack.x1 = root.number_at("chip.x_um");
    stack.y1 = root.number_at("chip.y_um");
    stack.ambient_c = root.number_or("simulation.ambient_c", 25.0);

    // Layers bottom-up.
    struct DieInfo {
        double beol_total = 0, bulk_z0 = 0, act_z0 = 0, dev_z0 = 0, top = 0;
        int tiles_x = 0, tiles_y = 0;
        int beol_mat = -1;
    } die_info;
    double opt_z0 = 0;
    double zcursor = 0.0;
    for (const config::Value* lc : root.table_array("layers")) {
        Layer layer;
        layer.name = lc->string_at("name");
        layer.thickness = lc->number_at("thickness_um");
        layer.z0 = zcursor;
        zcursor += layer.thickness;
        int base_mat = material_of(lc->string_at("material"), "layer '" + layer.name + "'");
        std::string role = lc->string_or("role", "plain");

        if (role == "plain") {
            Block b;
            b.name = layer.name + "_slab";
            b.x0 = stack.x0;
            b.y0 = stack.y0;
            b.z0 = layer.z0;
            b.dx = stack.x1 - stack.x0;
            b.dy = stack.y1 - stack.y0;
            b.dz = layer.thickness;
            b.material = base_mat;
            stack.layers.push_back(std::move(layer));
            stack.layers.back().blocks.push_back(std::move(b));
        } else if (role == "die") {
            if (model.die_layer >= 0) throw ConfigError("more than one layer has role = \"die\"");
            model.die_layer = static_cast<int>(stack.layers.size());
            die_info.beol_total = lc->number_or("beol_thickness_um", 10.0);
            if (die_info.beol_total <= 0 || die_info.beol_total >= layer.thickness)
                throw ConfigError("die beol_thickness_um must be in (0, layer thickness)");
            die_info.beol_mat = material_of(lc->string_or("beol_material", lc->string_at("material")),
                                            "die BEOL");
            die_info.tiles_x = static_cast<int>(lc->number_or("tiles_x", 1));
            die_info.tiles_y = static_cast<int>(lc->number_or("tiles_y", 1));
            if (die_info.tiles_x < 1 || die_info.tiles_y < 1)
                throw ConfigError("die tile counts must be >= 1");
            die_info.bulk_z0 = layer.z0;
            die_info.top = layer.z0 + layer.thickness;
            // BEOL splits into an activity band (tiles) under a device band
            // (drivers/TSVs); both are part of this one layer.
            die_info.act_z0 = die_info.top - die_info.beol_total;
            die_info.dev_z0 = die_info.top - 0.5 * die_info.beol_total;

            Block bulk;
            bulk.name = "die_bulk";
            bulk.x0 = stack.x0;
            bulk.y0 = stack.y0;
            bulk.z0 = layer.z0;
            bulk.dx = stack.x1 - stack.x0;
            bulk.dy = stack.y1 - stack.y0;
            bulk.dz = die_info.act_z0 - layer.z0;
            bulk.material = base_mat;
            layer.blocks.push_back(std::move(bulk));

            double tile_w = (stack.x1 - stack.x0) / die_info.tiles_x;
            double tile_h = (stack.y1 - stack.y0) / die_info.tiles_y;
            for (int j = 0; j < die_info.tiles_y; j++)
                for (int i = 0; i < die_info.tiles_x; i++) {
                    Block t;
                    t.name = strfmt("tile_x%d_y%d", i, j);
                    t.x0 = stack.x0 + i * tile_w;
                    t.y0 = stack.y0 + j * tile_h;
                    t.z0 = die_info.act_z0;
                    t.dx = tile_w;
                    t.dy = tile_h;
                    t.dz = die_info.dev_z0 - die_info.act_z0;
                    t.material = die_info.beol_mat;
                    t.role = BlockRole::ActivityTile;
                    layer.blocks.push_back(std::move(t));
                }
            stack.layers.push_back(std::move(layer));
        } else if (role == "optical") {
            if (model.optical_layer >= 0) throw ConfigError("more than one layer has role = \"optical\"");
            model.optical_layer = static_cast<int>(stack.layers.size());
            opt_z0 = layer.z0;
            stack.layers.push_back(std::move(layer));
        } else {
            throw ConfigError(strfmt("layer '%s': unknown role '%s'", layer.name.c_str(), role.c_str()));
        }
    }
    if (stack.layers.empty()) throw ConfigError("config declares no [[layers]]");

    // ONI template + placement, one per die tile, centered.
    if (root.has("oni")) {
        if (model.die_layer < 0 || model.optical_layer < 0)
            throw ConfigError("[oni] requires one die layer and one optical layer");
        const config::Value& oc = root.table_at("oni");
        OniTemplate t;
        t.tracks = static_cast<int>(oc.number_or("tracks", 4));
        t.tx_per_track = static_cast<int>(oc.number_or("tx_per_track", 4));
        t.rx_per_track = static_cast<int>(oc.number_or("rx_per_track", 4));
        t.slot_pitch = oc.number_or("slot_pitch_um", 20.0);
        t.track_pitch = oc.number_or("track_pitch_um", 40.0);
        if (t.tracks < 1 || t.tx_per_track < 1 || t.rx_per_track != t.tx_per_track)
            throw ConfigError("oni: tracks >= 1 and rx_per_track == tx_per_track required "
                              "(transmitters and receivers alternate)");
        t.vcsel = parse_device_dims(oc, "vcsel", mat_index, 4.0);
        t.mr = parse_device_dims(oc, "mr", mat_index, t.vcsel.dz);
        t.pd = parse_device_dims(oc, "photodetector", mat_index, t.vcsel.dz);
        t.heater = parse_device_dims(oc, "heater", mat_index, 2.0);
        t.driver = parse_device_dims(oc, "driver", mat_index, 1.0);
        t.tsv = parse_device_dims(oc, "tsv", mat_index, 1.0);

        const Layer& opt = stack.layers[model.optical_layer];
        if (t.vcsel.dz + t.heater.dz >= opt.thickness)
            throw ConfigError("optical layer too thin for device + heater bands");
        if (t.mr.dz != t.vcsel.dz || t.pd.dz != t.vcsel.dz)
            throw ConfigError("vcsel, mr and photodetector must share one device band thickness");

        double tile_w = (stack.x1 - stack.x0) / die_info.tiles_x;
        double tile_h = (stack.y1 - stack.y0) / die_info.tiles_y;
        if (t.box_w() > tile_w || t.box_h() > tile_h)
            throw ConfigError(strfmt("ONI footprint %.1f x %.1f um does not fit a %.1f x %.1f um tile",
                                     t.box_w(), t.box_h(), tile_w, tile_h));
        double beol_dev_dz = die_info.top - die_info.dev_z0;
        for (int j = 0; j < die_info.tiles_y; j++)
            for (int i = 0; i < die_info.tiles_x; i++) {
                int id = j * die_info.tiles_x + i;
                double ox = stack.x0 + i * tile_w + 0.5 * (tile_w - t.box_w());
                double oy = stack.y0 + j * tile_h + 0.5 * (tile_h - t.box_h());
                emit_oni(model, t, id, ox, oy, die_info.dev_z0, beol_dev_dz, opt_z0);
            }
    }

    // Close every layer with filler of its base material, then validate.
    int li = 0;
    for (const config::Value* lc : root.table_array("layers")) {
        int fill_mat = material_of(lc->string_at("material"), "layer fill");
        if (lc->string_or("role", "plain") == "die" && lc->has("beol_material")) {
            // Gaps in a die layer can only occur in the BEOL device band.
            fill_mat = material_of(lc->string_at("beol_material"), "die BEOL fill");
        }
        fill_layer_gaps(stack, li, fill_mat);
        li++;
    }

    // Boundary conditions. Default: adiabatic everywhere.
    if (root.has("boundary")) {
        const config::Value& bc = root.table_at("boundary");
        auto set = [&](const std::string& key, std::initializer_list<int> faces) {
            if (!bc.has(key)) return;
            BoundaryFace f = parse_face(bc.table_at(key), key);
            for (int i : faces) stack.boundary.face[i] = f;
        };
        set("sides", {0, 1, 2, 3});
        set("xneg", {0});
        set("xpos", {1});
        set("yneg", {2});
        set("ypos", {3});
        set("bottom", {4});
        set("top", {5});
    }

    validate_stack(stack);

    // Default device powers, if configured.
    if (root.has("devices")) {
        const config::Value& dv = root.table_at("devices");
        double pv = dv.number_or("pvcsel_mw", 0.0);
        double ph = dv.number_or("pheater_mw", 0.0);
        double pd = dv.number_or("pdriver_mw", pv);  // worst case: driver matches laser
        stack = with_device_power(stack, model.onis, DeviceKind::Vcsel, pv);
        stack = with_device_power(stack, model.onis, DeviceKind::Heater, ph);
        stack = with_device_power(stack, model.onis, DeviceKind::Driver, pd);
    }
    return model;
}

ChipStack apply_activity(const ChipStack& stack, const ActivityScenario& scenario) {
    ChipStack out = stack;
    std::vector<Block*> tiles;
    for (auto& layer : out.layers)
        for (auto& b : layer.blocks)
            if (b.role == BlockRole::ActivityTile) tiles.push_back(&b);
    if (tiles.empty()) throw ValidationError("stack has no activity tiles to apply a scenario to");

    switch (scenario.kind) {
        case ActivityScenario::Kind::Zero:
            for (Block* t : tiles) t->power_mw = 0.0;
            break;
        case ActivityScenario::Kind::Uniform: {
            double per = scenario.total_mw / static_cast<double>(tiles.size());
            for (Block* t : tiles) t->power_mw = per;
            break;
        }
        case ActivityScenario::Kind::Diagonal: {
            double mx = 0.5 * (out.x0 + out.x1), my = 0.5 * (out.y0 + out.y1);
            // Quadrant A = upper-right + bottom-left; B = the other diagonal.
            std::vector<Block*> quad[4];
            for (Block* t : tiles) {
                bool right = t->cx() > mx, up = t->cy() > my;
                int q = (up ? (right ? 0 : 1) : (right ? 3 : 2));  // UR, UL, BL, BR
                quad[q].push_back(t);
            }
            for (int q = 0; q < 4; q++) {
                if (quad[q].empty())
                    throw ValidationError("diagonal scenario needs tiles in all four quadrants");
                double total = (q == 0 || q == 2) ? scenario.quad_a_mw : scenario.quad_b_mw;
                for (Block* t : quad[q]) t->power_mw = total / static_cast<double>(quad[q].size());
            }
            break;
        }
        case ActivityScenario::Kind::Random: {
            std::mt19937_64 rng(scenario.seed);
            std::vector<double> draws(tiles.size());
            double sum = 0.0;
            for (auto& d : draws) {
                d = next_uniform(rng);
                sum += d;
            }
            for (size_t i = 0; i < tiles.size(); i++)
                tiles[i]->power_mw = sum > 0 ? scenario.total_mw * draws[i] / sum
                                             : scenario.total_mw / tiles.size();
            break;
        }
        case ActivityScenario::Kind::Custom: {
            for (Block* t : tiles) t->power_mw = 0.0;
            for (const auto& [name, mw] : scenario.custom) {
                bool found = false;
                for (Block* t : tiles)
                    if (t->name == name) {
                        t->power_mw = mw;
                        found = true;
                    }
                if (!found)
                    throw ConfigError(strfmt("custom scenario references unknown tile '%s'", name.c_str()));
            }
            break;
        }
    }
    return out;
}

ChipStack with_device_power(const ChipStack& stack, const std::vector<OniLayout>& onis,
                            DeviceKind kind, double power_mw) {
    if (power_mw < 0) throw ValidationError("device power must be >= 0");
    ChipStack out = stack;
    for (const OniLayout& oni : onis)
        for (const Device& d : oni.devices)
            if (d.kind == kind) out.at(d.ref).power_mw = power_mw;
    return out;
}

double total_power_mw(const ChipStack& stack) {
    double sum = 0.0;
    for (const auto& layer : stack.layers)
        for (const auto& b : layer.blocks) sum += b.power_mw;
    return sum;
}

double chip_power_mw(const ChipStack& stack) {
    double sum = 0.0;
    for (const auto& layer : stack.layers)
        for (const auto& b : layer.blocks)
            if (b.role == BlockRole::ActivityTile) sum += b.power_mw;
    return sum;
}

}  // namespace photonoc::chipmodel
