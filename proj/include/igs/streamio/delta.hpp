#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "igs/synopsis/lod_model.hpp"

namespace igs {

inline constexpr uint16_t kDeltaFormatVersion = 1;

struct DeltaStats {
    int new_anchors = 0;
    int patched_anchors = 0;
    int new_grid_levels = 0;
};

// "IGSD" payload turning the level-L model into level L+1: records for
// anchors newly active at L+1 (ascending id), bitmap patches for shared
// anchors whose slot sets grew, the newly activated grid tables, and the full
// codebook and decoder weights of L+1. Trailing CRC32.
std::vector<uint8_t> compute_delta(const LevelSnapshot& from, const LevelSnapshot& to,
                                   DeltaStats* stats = nullptr);

// Pure: returns the reconstructed level L+1 snapshot, never mutates `from`.
// serialize_model(apply_delta(from, d)) is byte-identical to the directly
// saved L+1 checkpoint.
LevelSnapshot apply_delta(const LevelSnapshot& from, std::span<const uint8_t> delta);

}  // namespace igs
