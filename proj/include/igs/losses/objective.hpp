#pragma once

#include <cstdint>
#include <span>

#include "igs/core/vecmath.hpp"
#include "igs/render/image.hpp"

namespace igs {

struct LossWeights {
    double lambda_ssim = 0.2;
    double lambda_vol = 0.001;
    double lambda_group = 0.01;
};

struct FullLossResult {
    double total = 0.0;
    double l1 = 0.0;
    double dssim = 0.0;   // (1 - SSIM) / 2
    double vol = 0.0;     // sum over prims of the scale product
};

// (1 - lambda_ssim) * L1 + lambda_ssim * (1 - SSIM)/2 + lambda_vol * vol.
// `scales` are the post-mask per-Gaussian scale vectors of the rendered view.
FullLossResult loss_full(const Image& render, const Image& gt,
                         std::span<const Vec3> scales, const LossWeights& w);

// Same value, plus gradients accumulated into d_render and d_scales.
FullLossResult loss_full_backward(const Image& render, const Image& gt,
                                  std::span<const Vec3> scales, const LossWeights& w,
                                  Image& d_render, std::span<Vec3> d_scales);

struct SparsityResult {
    double total = 0.0;   // single + lambda_group * group
    double single = 0.0;  // sum of sigmoid(logit)
    double group = 0.0;   // sum over groups of ||sigmoid(logits)||_2
};

// Logits grouped by anchor: group g covers [group_starts[g], group_starts[g+1]).
SparsityResult loss_sparsity(std::span<const double> logits,
                             std::span<const int64_t> group_starts,
                             double lambda_group);

SparsityResult loss_sparsity_backward(std::span<const double> logits,
                                      std::span<const int64_t> group_starts,
                                      double lambda_group, double upstream,
                                      std::span<double> d_logits);

}  // namespace igs
