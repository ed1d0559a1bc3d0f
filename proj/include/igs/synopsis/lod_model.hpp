#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "igs/diffcore/param_store.hpp"
#include "igs/fields/decoder.hpp"
#include "igs/fields/hash_grid.hpp"

namespace igs {

enum class AblationMode : uint8_t {
    full = 0,      // per-LOD codebooks and per-LOD decoders
    base = 1,      // foundational codebook and decoders everywhere
    lad_only = 2,  // per-LOD decoders, local-feature branch dropped
    cbm_only = 3,  // per-LOD codebooks, foundational decoders frozen
};

const char* ablation_name(AblationMode m);
AblationMode ablation_from_name(const std::string& s);

// Static description shared by every level of a hierarchy.
struct ModelMeta {
    int lmax = 4;   // number of LODs; finest level index is lmax - 1
    int K = 4;      // offsets per anchor
    int n_codes = 256;
    int code_dim = 32;
    int fused_dim = 32;
    int mlp_hidden = 64;
    GridMeta grid;
    std::vector<int> active_schedule;  // active grid levels per LOD, L0 first
    AblationMode mode = AblationMode::full;
    int deflate_level = 6;

    double bound_radius() const {
        return 0.5 * (grid.bb_max - grid.bb_min).norm();
    }
    double resolution_scale(int level) const {
        return 1.0 / static_cast<double>(1 << (lmax - 1 - level));
    }
    int active_levels(int level) const { return active_schedule.at(level); }
    int bitmap_stride() const { return (K + 7) / 8; }
    void validate() const;
};

// Which decoder/codebook a level uses under the current ablation mode.
bool level_has_local(const ModelMeta& meta, int level);
int level_decoder_owner(const ModelMeta& meta, int level);  // level whose decoder runs
int level_dec_in_width(const ModelMeta& meta, int level);
std::string decoder_prefix(int owner_level);
std::string codebook_block_name(const ModelMeta& meta, int level);  // "" when absent

MlpDims fuse_dims(const ModelMeta& meta, int level);
MlpDims head_dims(const ModelMeta& meta, int head);
int64_t decoder_total_size(const ModelMeta& meta, int level);

// Bit (anchor, slot) in a K-bit-per-anchor bitmap, LSB first, pad bits zero.
bool bitmap_get(std::span<const uint8_t> bm, int stride, int anchor, int slot);
void bitmap_set(std::vector<uint8_t>& bm, int stride, int anchor, int slot, bool on);

// A single level materialized out of a hierarchy (or parsed from a file):
// only anchors active at this level, only active grid tables.
struct LevelSnapshot {
    ModelMeta meta;
    int level = 0;
    std::vector<uint32_t> ids;        // ascending global anchor ids
    std::vector<double> pos;          // [A,3]
    std::vector<double> offsets;      // [A,K,3]
    std::vector<double> logscale;     // [A,3]
    std::vector<uint8_t> idx;         // [A]
    std::vector<uint8_t> bitmap;      // [A * stride]
    std::vector<std::vector<double>> grid_tables;
    std::vector<double> codebook;     // empty when the level has no local branch
    std::vector<double> dec_weights;  // fuse then heads, each w0,b0,w1,b1

    int anchor_count() const { return static_cast<int>(ids.size()); }
};

// Read-only inputs for decoding one level; assembled either from a training
// hierarchy or from a snapshot.
struct LevelView {
    const ModelMeta* meta = nullptr;
    int level = 0;
    int anchor_count = 0;
    std::span<const double> pos, offsets, logscale;
    std::span<const uint8_t> idx;
    std::span<const uint8_t> bitmap;
    std::vector<std::span<const double>> grid_tables;
    std::span<const double> codebook;
    DecoderWeights dec;
    std::span<const double> vlogits;  // non-empty only in the STE training phase
};

LevelView make_view(const LevelSnapshot& snap);

// Training-side model: every anchor ever created, full parameter store,
// per-level activity bitmaps filled in as unfolding proceeds.
struct Hierarchy {
    ModelMeta meta;
    ParamStore params;
    std::vector<uint32_t> anchor_ids;
    std::vector<uint8_t> idx;
    std::vector<std::vector<uint8_t>> bitmaps;   // [lmax], finest one all-ones
    std::vector<bool> level_built;

    int anchor_count() const { return static_cast<int>(anchor_ids.size()); }

    // Splits decoder/codebook parameter blocks for `level` off its parent.
    void instantiate_level_params(int level);

    LevelView view(int level, bool ste_phase = false) const;
    LevelSnapshot snapshot(int level) const;

    DecoderWeights decoder_weights(int level) const;
    int active_slot_count(int level) const;
    int active_anchor_count(int level) const;
    int fully_pruned_anchor_count(int level) const;
};

// Fresh foundational model: one anchor per occupied voxel of the seed points.
Hierarchy init_hierarchy(const ModelMeta& meta, std::span<const Vec3> points,
                         double voxel_size, uint64_t seed);

// Rebuilds a trainable hierarchy from a finest-level checkpoint so unfolding
// can run in a separate process from full training. The straight-through
// logits are gone by then; only the frozen idx bytes survive, which is all
// unfolding needs.
Hierarchy hierarchy_from_snapshot(const LevelSnapshot& snap);

}  // namespace igs
