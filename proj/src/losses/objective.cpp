#include "igs/losses/objective.hpp"

#include <cmath>

#include "igs/core/errors.hpp"
#include "igs/losses/ssim.hpp"

namespace igs {

namespace {

void check_pair(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.width <= 0)
        throw ValidationError("loss_full: image dimensions mismatch");
}

}  // namespace

FullLossResult loss_full(const Image& render, const Image& gt,
                         std::span<const Vec3> scales, const LossWeights& w) {
    check_pair(render, gt);
    FullLossResult res;
    double n = static_cast<double>(render.data.size());
    for (size_t i = 0; i < render.data.size(); ++i)
        res.l1 += std::abs(render.data[i] - gt.data[i]);
    res.l1 /= n;
    res.dssim = 0.5 * (1.0 - ssim(render, gt));
    for (const Vec3& s : scales) res.vol += s.x * s.y * s.z;
    res.total = (1.0 - w.lambda_ssim) * res.l1 + w.lambda_ssim * res.dssim +
                w.lambda_vol * res.vol;
    return res;
}

FullLossResult loss_full_backward(const Image& render, const Image& gt,
                                  std::span<const Vec3> scales, const LossWeights& w,
                                  Image& d_render, std::span<Vec3> d_scales) {
    check_pair(render, gt);
    if (d_render.width != render.width || d_render.height != render.height)
        throw ValidationError("loss_full_backward: gradient image size mismatch");
    if (d_scales.size() != scales.size())
        throw ValidationError("loss_full_backward: scale gradient size mismatch");

    FullLossResult res = loss_full(render, gt, scales, w);

    double n = static_cast<double>(render.data.size());
    double wl1 = (1.0 - w.lambda_ssim) / n;
    for (size_t i = 0; i < render.data.size(); ++i) {
        double d = render.data[i] - gt.data[i];
        if (d > 0)
            d_render.data[i] += wl1;
        else if (d < 0)
            d_render.data[i] -= wl1;
    }
    // d(dssim)/d(render) = -1/2 * d(ssim)/d(render)
    ssim_backward(render, gt, -0.5 * w.lambda_ssim, &d_render, nullptr);

    for (size_t i = 0; i < scales.size(); ++i) {
        const Vec3& s = scales[i];
        d_scales[i].x += w.lambda_vol * s.y * s.z;
        d_scales[i].y += w.lambda_vol * s.x * s.z;
        d_scales[i].z += w.lambda_vol * s.x * s.y;
    }
    return res;
}

SparsityResult loss_sparsity(std::span<const double> logits,
                             std::span<const int64_t> group_starts,
                             double lambda_group) {
    SparsityResult res;
    if (group_starts.size() < 2 || group_starts.front() != 0 ||
        group_starts.back() != static_cast<int64_t>(logits.size()))
        throw ValidationError("loss_sparsity: bad group offsets");
    for (size_t g = 0; g + 1 < group_starts.size(); ++g) {
        double sq = 0.0;
        for (int64_t i = group_starts[g]; i < group_starts[g + 1]; ++i) {
            double m = sigmoid(logits[i]);
            res.single += m;
            sq += m * m;
        }
        res.group += std::sqrt(sq);
    }
    res.total = res.single + lambda_group * res.group;
    return res;
}

SparsityResult loss_sparsity_backward(std::span<const double> logits,
                                      std::span<const int64_t> group_starts,
                                      double lambda_group, double upstream,
                                      std::span<double> d_logits) {
    if (d_logits.size() != logits.size())
        throw ValidationError("loss_sparsity_backward: gradient size mismatch");
    SparsityResult res = loss_sparsity(logits, group_starts, lambda_group);
    for (size_t g = 0; g + 1 < group_starts.size(); ++g) {
        double sq = 0.0;
        for (int64_t i = group_starts[g]; i < group_starts[g + 1]; ++i) {
            double m = sigmoid(logits[i]);
            sq += m * m;
        }
        double norm = std::sqrt(sq);
        for (int64_t i = group_starts[g]; i < group_starts[g + 1]; ++i) {
            double m = sigmoid(logits[i]);
            double dm = m * (1.0 - m);
            double coeff = 1.0;
            if (norm > 0.0) coeff += lambda_group * m / norm;  // zero-norm subgradient
            d_logits[i] += upstream * coeff * dm;
        }
    }
    return res;
}

}  // namespace igs
