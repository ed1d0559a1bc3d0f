#include "igs/render/rasterizer.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <thread>

#include "igs/core/errors.hpp"

namespace igs {

namespace {

struct ScreenGrad {
    double d_mu_x = 0, d_mu_y = 0;
    double d_cov_xx = 0, d_cov_xy = 0, d_cov_yy = 0;
    double d_alpha = 0;
    Vec3 d_color;
};

void pixel_range(double center, double radius, int limit, int& lo, int& hi) {
    lo = static_cast<int>(std::ceil(center - radius - 0.5));
    hi = static_cast<int>(std::floor(center + radius - 0.5));
    lo = std::max(lo, 0);
    hi = std::min(hi, limit - 1);
}

void run_rows(int height, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1) {
        for (int r = 0; r < height; ++r) fn(r);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w]() {
            for (int r = w; r < height; r += threads) fn(r);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

Vec3 composite_pixel(std::span<const SplatSample> samples, const Vec3& background,
                     double term_transmittance) {
#ifndef NDEBUG
    for (size_t i = 1; i < samples.size(); ++i)
        assert(samples[i - 1].depth <= samples[i].depth && "samples must be depth-sorted");
#endif
    Vec3 out{0, 0, 0};
    double T = 1.0;
    for (const SplatSample& s : samples) {
        if (T < term_transmittance) break;
        out += s.color * (s.sigma * T);
        T *= (1.0 - s.sigma);
    }
    out += background * T;
    return out;
}

Image render_image(std::span<const GaussianPrim> prims, const Camera& cam,
                   const RenderOptions& opts, RenderContext* ctx) {
    RenderContext local;
    RenderContext& rc = ctx ? *ctx : local;
    rc.splats.clear();
    rc.caches.clear();
    rc.degenerate_count = 0;
    rc.width = cam.width;
    rc.height = cam.height;

    for (size_t i = 0; i < prims.size(); ++i) {
        ProjectionCache cache;
        auto sp = project_gaussian(prims[i], cam, &cache);
        if (!sp) continue;
        if (sp->cov.det() <= 1e-12) {
            ++rc.degenerate_count;
            continue;
        }
        sp->prim = static_cast<int>(i);
        rc.splats.push_back(*sp);
        rc.caches.push_back(cache);
    }

    size_t npix = static_cast<size_t>(cam.width) * cam.height;
    rc.pixel_splats.assign(npix, {});
    for (size_t s = 0; s < rc.splats.size(); ++s) {
        const Splat2D& sp = rc.splats[s];
        int c0, c1, r0, r1;
        if (opts.cover_full_frame) {
            c0 = 0; c1 = cam.width - 1; r0 = 0; r1 = cam.height - 1;
        } else {
            double radius = opts.cull_sigma * std::sqrt(sp.cov.max_eigenvalue());
            pixel_range(sp.mu.x, radius, cam.width, c0, c1);
            pixel_range(sp.mu.y, radius, cam.height, r0, r1);
        }
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c)
                rc.pixel_splats[static_cast<size_t>(r) * cam.width + c].push_back(
                    static_cast<int>(s));
    }
    for (auto& list : rc.pixel_splats) {
        std::sort(list.begin(), list.end(), [&](int a, int b) {
            if (rc.splats[a].depth != rc.splats[b].depth)
                return rc.splats[a].depth < rc.splats[b].depth;
            return a < b;
        });
    }

    Image img(cam.width, cam.height);
    run_rows(cam.height, opts.threads, [&](int row) {
        std::vector<SplatSample> samples;
        for (int col = 0; col < cam.width; ++col) {
            const auto& list = rc.pixel_splats[static_cast<size_t>(row) * cam.width + col];
            double px = col + 0.5, py = row + 0.5;
            samples.clear();
            samples.reserve(list.size());
            for (int s : list) {
                const Splat2D& sp = rc.splats[s];
                Sym2 A = sp.cov.inverse();
                double dx = px - sp.mu.x, dy = py - sp.mu.y;
                double q = A.xx * dx * dx + 2.0 * A.xy * dx * dy + A.yy * dy * dy;
                double sigma = sp.alpha * std::exp(-0.5 * q);
                sigma = std::clamp(sigma, 0.0, opts.sigma_clamp);
                samples.push_back({sp.depth, sigma, sp.color});
            }
            img.set(row, col, composite_pixel(samples, opts.background,
                                              opts.term_transmittance));
        }
    });
    return img;
}

std::vector<PrimGrad> render_image_backward(std::span<const GaussianPrim> prims,
                                            const Camera& cam, const RenderOptions& opts,
                                            const RenderContext& ctx,
                                            const Image& d_image) {
    if (d_image.width != ctx.width || d_image.height != ctx.height)
        throw ValidationError("render_image_backward: gradient image size mismatch");

    size_t nsplat = ctx.splats.size();
    int threads = std::max(1, opts.threads);

    std::vector<ScreenGrad> total(nsplat);
    std::vector<std::vector<ScreenGrad>> partial(threads,
                                                 std::vector<ScreenGrad>(nsplat));

    auto backward_row = [&](int row, std::vector<ScreenGrad>& acc) {
        std::vector<double> sig, T;
        for (int col = 0; col < ctx.width; ++col) {
            const auto& list = ctx.pixel_splats[static_cast<size_t>(row) * ctx.width + col];
            if (list.empty()) continue;
            double px = col + 0.5, py = row + 0.5;
            Vec3 dC = d_image.at(row, col);

            // Replay the forward traversal up to the termination point.
            sig.clear();
            T.clear();
            double t = 1.0;
            size_t n = 0;
            for (int s : list) {
                if (t < opts.term_transmittance) break;
                const Splat2D& sp = ctx.splats[s];
                Sym2 A = sp.cov.inverse();
                double dx = px - sp.mu.x, dy = py - sp.mu.y;
                double q = A.xx * dx * dx + 2.0 * A.xy * dx * dy + A.yy * dy * dy;
                double sigma = std::clamp(sp.alpha * std::exp(-0.5 * q), 0.0,
                                          opts.sigma_clamp);
                sig.push_back(sigma);
                T.push_back(t);
                t *= (1.0 - sigma);
                ++n;
            }

            Vec3 suffix = opts.background * t;  // color contributed after splat i
            for (size_t k = n; k-- > 0;) {
                int s = list[k];
                const Splat2D& sp = ctx.splats[s];
                ScreenGrad& g = acc[s];

                double sigma = sig[k], Ti = T[k];
                g.d_color += dC * (sigma * Ti);
                double d_sigma = dC.dot(sp.color * Ti - suffix / (1.0 - sigma));
                suffix += sp.color * (sigma * Ti);

                Sym2 A = sp.cov.inverse();
                double dx = px - sp.mu.x, dy = py - sp.mu.y;
                double q = A.xx * dx * dx + 2.0 * A.xy * dx * dy + A.yy * dy * dy;
                double G = std::exp(-0.5 * q);
                if (sp.alpha * G >= opts.sigma_clamp) continue;  // clamped: flat

                g.d_alpha += d_sigma * G;
                double dq = d_sigma * sp.alpha * G * (-0.5);
                double vx = A.xx * dx + A.xy * dy;
                double vy = A.xy * dx + A.yy * dy;
                g.d_mu_x += dq * (-2.0 * vx);
                g.d_mu_y += dq * (-2.0 * vy);
                g.d_cov_xx += dq * (-vx * vx);
                g.d_cov_xy += dq * (-2.0 * vx * vy);
                g.d_cov_yy += dq * (-vy * vy);
            }
        }
    };

    // Every row lands in its own scratch slot, and slots are always folded in
    // row order, so the sums are bit-identical for any thread count.
    for (int base = 0; base < ctx.height; base += threads) {
        int batch = std::min(threads, ctx.height - base);
        for (int b = 0; b < batch; ++b)
            for (auto& g : partial[b]) g = ScreenGrad{};
        if (batch == 1) {
            backward_row(base, partial[0]);
        } else {
            std::vector<std::thread> pool;
            for (int b = 0; b < batch; ++b)
                pool.emplace_back([&, b]() { backward_row(base + b, partial[b]); });
            for (auto& th : pool) th.join();
        }
        for (int b = 0; b < batch; ++b) {
            for (size_t s = 0; s < nsplat; ++s) {
                const ScreenGrad& p = partial[b][s];
                ScreenGrad& t = total[s];
                t.d_mu_x += p.d_mu_x;
                t.d_mu_y += p.d_mu_y;
                t.d_cov_xx += p.d_cov_xx;
                t.d_cov_xy += p.d_cov_xy;
                t.d_cov_yy += p.d_cov_yy;
                t.d_alpha += p.d_alpha;
                t.d_color += p.d_color;
            }
        }
    }

    std::vector<PrimGrad> grads(prims.size());
    for (size_t s = 0; s < nsplat; ++s) {
        const ScreenGrad& g = total[s];
        const Splat2D& sp = ctx.splats[s];
        PrimGrad pg = project_gaussian_backward(
            prims[sp.prim], cam, ctx.caches[s], Vec2{g.d_mu_x, g.d_mu_y},
            Sym2{g.d_cov_xx, g.d_cov_xy, g.d_cov_yy}, g.d_alpha, g.d_color);
        PrimGrad& out = grads[sp.prim];
        out.d_mu += pg.d_mu;
        out.d_scale += pg.d_scale;
        for (int i = 0; i < 4; ++i) out.d_rot[i] += pg.d_rot[i];
        out.d_alpha += pg.d_alpha;
        out.d_color += pg.d_color;
    }
    return grads;
}

}  // namespace igs
