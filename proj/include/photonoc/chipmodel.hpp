#pragma once

// Package/chip geometry model. Everything here is in micrometres and
// milliwatts; SI conversion happens only inside the thermal solver.

#include <cstdint>
#include <string>
#include <vector>

#include "photonoc/config.hpp"

namespace photonoc::chipmodel {

struct Material {
    std::string name;
    double conductivity_w_mc = 0.0;  // W/(m*C)
};

// How a block participates in power bookkeeping. ActivityTile blocks receive
// chip activity power; Device blocks belong to an ONI; Filler blocks are
// auto-generated gap fill and never carry power.
enum class BlockRole : uint8_t { Passive, ActivityTile, Device, Filler };

enum class DeviceKind : uint8_t { Vcsel, Mr, Photodetector, Driver, Tsv, Heater };

const char* device_kind_name(DeviceKind k);

struct Block {
    std::string name;
    double x0 = 0, y0 = 0, z0 = 0;  // um, absolute coordinates
    double dx = 0, dy = 0, dz = 0;  // um
    int material = -1;              // index into ChipStack::materials
    double power_mw = 0.0;
    BlockRole role = BlockRole::Passive;

    double x1() const { return x0 + dx; }
    double y1() const { return y0 + dy; }
    double z1() const { return z0 + dz; }
    double volume_um3() const { return dx * dy * dz; }
    double cx() const { return x0 + 0.5 * dx; }
    double cy() const { return y0 + 0.5 * dy; }
    double cz() const { return z0 + 0.5 * dz; }
};

struct Layer {
    std::string name;
    double z0 = 0;         // um, absolute
    double thickness = 0;  // um
    std::vector<Block> blocks;
};

struct BoundaryFace {
    enum class Kind : uint8_t { Adiabatic, Convective, Fixed };
    Kind kind = Kind::Adiabatic;
    double h_w_m2c = 0.0;    // Convective only
    double fixed_t_c = 0.0;  // Fixed only
};

// Six outer faces of the stack bounding box, x-/x+/y-/y+/z-/z+.
struct BoundarySet {
    BoundaryFace face[6];
    bool any_non_adiabatic() const;
};

// Reference to a block inside a ChipStack, stable across power edits.
struct BlockRef {
    int layer = -1;
    int block = -1;
};

struct Device {
    DeviceKind kind;
    std::string name;
    BlockRef ref;
    int oni = -1;
    double cx = 0, cy = 0, cz = 0;  // block centroid, um (cached for lookups)
};

struct OniLayout {
    int id = 0;
    double box_x0 = 0, box_y0 = 0, box_x1 = 0, box_y1 = 0;  // um, on-die footprint
    double z0 = 0, z1 = 0;                                   // um, vertical extent of interest
    std::vector<Device> devices;
    double cx() const { return 0.5 * (box_x0 + box_x1); }
    double cy() const { return 0.5 * (box_y0 + box_y1); }
};

struct ChipStack {
    std::vector<Material> materials;
    std::vector<Layer> layers;
    BoundarySet boundary;
    double ambient_c = 25.0;

    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // shared lateral footprint, um
    double z0() const { return layers.empty() ? 0.0 : layers.front().z0; }
    double z1() const { return layers.empty() ? 0.0 : layers.back().z0 + layers.back().thickness; }

    const Block& at(BlockRef r) const { return layers[r.layer].blocks[r.block]; }
    Block& at(BlockRef r) { return layers[r.layer].blocks[r.block]; }
    int find_layer(const std::string& name) const;  // -1 if absent
};

struct ActivityScenario {
    enum class Kind : uint8_t { Zero, Uniform, Diagonal, Random, Custom };
    Kind kind = Kind::Zero;
    double total_mw = 0.0;                        // Uniform / Random
    double quad_a_mw = 0.0;                       // Diagonal: upper-right + bottom-left, each
    double quad_b_mw = 0.0;                       // Diagonal: upper-left + bottom-right, each
    uint64_t seed = 0;                            // Random
    std::vector<std::pair<std::string, double>> custom;  // Custom: block name -> mW
    std::string label() const;
};

// Parses "uniform:12.5W", "diagonal:4W:8W", "random:12.5W:seed", "zero".
// Power values accept an optional W suffix; bare numbers are mW.
ActivityScenario parse_activity(const std::string& text);
double parse_power_mw(const std::string& text);  // "3.6" -> 3.6, "12.5W" -> 12500

// Validated geometry plus the ONI device map built from a parsed config.
struct SystemModel {
    ChipStack stack;
    std::vector<OniLayout> onis;
    int die_layer = -1;      // layer carrying the activity tiles
    int optical_layer = -1;  // layer carrying the photonic devices
};

// Builds and validates the stack described by a parsed config tree.
// Throws ConfigError/ValidationError on overlaps, gaps, dangling material
// references, or negative dimensions.
SystemModel build_system(const config::Value& root);

// Structural checks on an assembled stack: positive dimensions, resolvable
// materials, layers stacked without z gaps, and every layer exactly tiled by
// its blocks (no overlap, no gap). Throws ValidationError.
void validate_stack(const ChipStack& stack);

// Closes a layer by adding filler blocks of `material` over uncovered space.
void fill_layer_gaps(ChipStack& stack, int layer_index, int material);

// Returns a copy with die-layer activity-tile powers replaced per scenario.
// Device and filler blocks are untouched. Unknown block names in a Custom
// scenario are an error.
ChipStack apply_activity(const ChipStack& stack, const ActivityScenario& scenario);

// Returns a copy with every device block of the given kind set to `power_mw`.
ChipStack with_device_power(const ChipStack& stack, const std::vector<OniLayout>& onis,
                            DeviceKind kind, double power_mw);

// Sum of all block powers, mW.
double total_power_mw(const ChipStack& stack);
// Sum of activity-tile powers only, mW.
double chip_power_mw(const ChipStack& stack);

}  // namespace photonoc::chipmodel
