#pragma once

#include <span>
#include <vector>

#include "igs/fields/codebook.hpp"
#include "igs/render/projection.hpp"
#include "igs/synopsis/lod_model.hpp"

namespace igs {

enum class DecodePhase {
    inference,     // bitmap-gated, frozen index lookup
    ste_train,     // every slot, straight-through codebook lookup
    unfold_train,  // parent-bitmap-gated, binary masks scale alpha and scale
};

// Maps (anchor, slot) pairs that carry a trainable mask logit to positions in
// the mask block; group offsets feed the sparsity loss.
struct MaskLayout {
    std::vector<int64_t> slot_index;    // [A*K], -1 when the slot has no logit
    std::vector<int64_t> group_starts;  // one group per participating anchor
    int64_t count = 0;
};

MaskLayout build_mask_layout(const ModelMeta& meta, int anchor_count,
                             const std::vector<uint8_t>& parent_bitmap);

struct DecodeResult {
    std::vector<GaussianPrim> prims;
    std::vector<int> anchor_of, slot_of;   // provenance per prim
    std::vector<uint8_t> mbit;             // mask forward value per prim
    std::vector<double> alpha_pre;         // pre-mask attributes per prim
    std::vector<Vec3> scale_pre;

    // Per decoded anchor, in emission order.
    std::vector<int> anchors;
    std::vector<AnchorAttrCache> cache;
    std::vector<AnchorAttrs> attrs;
    std::vector<SteCache> ste;
    std::vector<std::vector<double>> fhier;
    std::vector<Vec3> l_a, dirhat;
    std::vector<double> sigma_c;
};

DecodeResult decode_level(const LevelView& view, const Vec3& cam_pos,
                          DecodePhase phase,
                          std::span<const double> mask_logits = {},
                          const MaskLayout* mask_layout = nullptr,
                          double mask_threshold = 0.01);

// Gradient sinks; empty spans mean the corresponding block is frozen.
struct DecodeSinks {
    std::span<double> pos, offsets, logscale;
    std::vector<std::span<double>> grid_tables;
    std::span<double> codebook, vlogits, mask_logits;
    DecoderGrads dec;
};

void decode_level_backward(const LevelView& view, const Vec3& cam_pos,
                           DecodePhase phase, std::span<const double> mask_logits,
                           const MaskLayout* mask_layout, double mask_threshold,
                           const DecodeResult& dr,
                           std::span<const PrimGrad> prim_grads, DecodeSinks& sinks);

}  // namespace igs
