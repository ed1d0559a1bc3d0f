#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "igs/core/vecmath.hpp"

namespace igs {

// Multi-resolution feature grid. Every level is a hash table of table_size
// rows with feature_dim features; per-axis resolutions grow geometrically
// from n_min to n_max. Levels are always concatenated coarsest-first.
struct GridMeta {
    int levels = 12;
    uint32_t table_size = 1u << 15;
    int feature_dim = 4;
    int n_min = 16;
    int n_max = 512;
    Vec3 bb_min{0, 0, 0};
    Vec3 bb_max{1, 1, 1};

    std::vector<int> resolutions() const;  // strictly increasing, validated
    int64_t level_entries() const {
        return static_cast<int64_t>(table_size) * feature_dim;
    }
};

// Spatial hash of an integer lattice corner, wraparound 64-bit arithmetic.
uint64_t hash_index(int64_t cx, int64_t cy, int64_t cz, uint32_t table_size);

// Trilinear interpolation of the first `active_levels` tables at world
// position x (clamped to the bounding box). out must hold
// active_levels * feature_dim values.
void grid_interpolate(const GridMeta& meta,
                      std::span<const std::span<const double>> tables,
                      int active_levels, const Vec3& x, std::span<double> out);

// Accumulates gradients into the per-level table sinks (empty span = frozen)
// and, when d_x is non-null, into the position.
void grid_interpolate_backward(const GridMeta& meta,
                               std::span<const std::span<const double>> tables,
                               int active_levels, const Vec3& x,
                               std::span<const double> d_out,
                               std::span<const std::span<double>> d_tables,
                               Vec3* d_x);

}  // namespace igs
