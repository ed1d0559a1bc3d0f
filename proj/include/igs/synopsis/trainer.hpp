#pragma once

#include <functional>
#include <span>
#include <string>

#include "igs/losses/objective.hpp"
#include "igs/render/camera.hpp"
#include "igs/render/image.hpp"
#include "igs/render/rasterizer.hpp"
#include "igs/synopsis/lod_model.hpp"

namespace igs {

struct TrainItem {
    Camera cam;
    const Image* gt = nullptr;
};

// Absolute Adam step sizes per parameter family; the phase schedule decays
// them all by the same factor.
struct OptimRates {
    double pos = 2e-4;
    double offsets = 4e-3;
    double logscale = 4e-3;
    double grid = 8e-3;
    double mlp = 2e-3;
    double codebook = 4e-3;
    double vlogits = 2e-2;
    double mask = 1e-2;
    double final_ratio = 0.1;
};

struct TrainPhaseConfig {
    int iterations = 30000;
    LossWeights loss;
    double lambda_mask = 5e-4;   // at the first unfold; x4 per coarser level
    double mask_threshold = 0.01;
    OptimRates rates;
    RenderOptions render;
    uint64_t seed = 0;
    int log_every = 50;
};

struct MetricsRow {
    std::string phase;
    int iteration = 0;
    double total = 0, l1 = 0, dssim = 0, vol = 0, sparsity = 0;
    int active_anchors = 0;
    int active_slots = 0;
};

using MetricsSink = std::function<void(const MetricsRow&)>;

// Optimizes every foundational parameter of the finest level against the
// full-resolution views, then refreezes the codebook indices from the
// straight-through logits.
void train_full(Hierarchy& h, std::span<const TrainItem> views,
                const TrainPhaseConfig& cfg, const MetricsSink& sink = {});

// Derives level L from trained level L+1: learns slot masks (plus the level's
// codebook and decoders, modulo ablation mode) against views downsampled to
// the level's resolution scale, then materializes the nested bitmap. Anchor
// geometry, grid tables, and codebook indices stay frozen.
void unfold_level(Hierarchy& h, int level, std::span<const TrainItem> views,
                  const TrainPhaseConfig& cfg, const MetricsSink& sink = {});

double lambda_mask_at(const TrainPhaseConfig& cfg, const ModelMeta& meta, int level);

// Rewrites the frozen byte indices from the current straight-through logits.
void refresh_codebook_indices(Hierarchy& h);

}  // namespace igs
