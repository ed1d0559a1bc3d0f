#include "igs/losses/ssim.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "igs/core/errors.hpp"

namespace igs {

namespace {

constexpr int kRadius = 5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, 11>& gauss_taps() {
    static const std::array<double, 11> taps = [] {
        std::array<double, 11> t{};
        double sum = 0.0;
        for (int i = -kRadius; i <= kRadius; ++i) {
            double v = std::exp(-(i * i) / (2.0 * 1.5 * 1.5));
            t[i + kRadius] = v;
            sum += v;
        }
        for (auto& v : t) v /= sum;
        return t;
    }();
    return taps;
}

// Sum of taps that stay inside [0, n) around position p.
double axis_norm(int p, int n) {
    const auto& g = gauss_taps();
    double s = 0.0;
    for (int d = -kRadius; d <= kRadius; ++d) {
        int q = p + d;
        if (q >= 0 && q < n) s += g[d + kRadius];
    }
    return s;
}

struct CenterStats {
    double mu_a, mu_b, s_aa, s_bb, s_ab;  // means and central moments
};

void check_pair(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.width <= 0 || a.height <= 0)
        throw ValidationError("ssim: image dimensions mismatch");
}

}  // namespace

double ssim(const Image& a, const Image& b) {
    check_pair(a, b);
    const auto& g = gauss_taps();
    std::vector<double> nx(a.width), ny(a.height);
    for (int c = 0; c < a.width; ++c) nx[c] = axis_norm(c, a.width);
    for (int r = 0; r < a.height; ++r) ny[r] = axis_norm(r, a.height);

    double total = 0.0;
    for (int r = 0; r < a.height; ++r) {
        for (int c = 0; c < a.width; ++c) {
            double inv_norm = 1.0 / (nx[c] * ny[r]);
            for (int ch = 0; ch < 3; ++ch) {
                double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
                for (int dy = -kRadius; dy <= kRadius; ++dy) {
                    int rr = r + dy;
                    if (rr < 0 || rr >= a.height) continue;
                    double wy = g[dy + kRadius];
                    for (int dx = -kRadius; dx <= kRadius; ++dx) {
                        int cc = c + dx;
                        if (cc < 0 || cc >= a.width) continue;
                        double w = wy * g[dx + kRadius] * inv_norm;
                        double va = a.px(rr, cc)[ch];
                        double vb = b.px(rr, cc)[ch];
                        mu_a += w * va;
                        mu_b += w * vb;
                        aa += w * va * va;
                        bb += w * vb * vb;
                        ab += w * va * vb;
                    }
                }
                double var_a = aa - mu_a * mu_a;
                double var_b = bb - mu_b * mu_b;
                double cov = ab - mu_a * mu_b;
                double A = 2 * mu_a * mu_b + kC1;
                double B = 2 * cov + kC2;
                double D = mu_a * mu_a + mu_b * mu_b + kC1;
                double E = var_a + var_b + kC2;
                total += (A * B) / (D * E);
            }
        }
    }
    return total / (static_cast<double>(a.pixel_count()) * 3.0);
}

void ssim_backward(const Image& a, const Image& b, double upstream, Image* d_a,
                   Image* d_b) {
    check_pair(a, b);
    const auto& g = gauss_taps();
    std::vector<double> nx(a.width), ny(a.height);
    for (int c = 0; c < a.width; ++c) nx[c] = axis_norm(c, a.width);
    for (int r = 0; r < a.height; ++r) ny[r] = axis_norm(r, a.height);

    double scale = upstream / (static_cast<double>(a.pixel_count()) * 3.0);

    for (int r = 0; r < a.height; ++r) {
        for (int c = 0; c < a.width; ++c) {
            double inv_norm = 1.0 / (nx[c] * ny[r]);
            for (int ch = 0; ch < 3; ++ch) {
                double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
                for (int dy = -kRadius; dy <= kRadius; ++dy) {
                    int rr = r + dy;
                    if (rr < 0 || rr >= a.height) continue;
                    double wy = g[dy + kRadius];
                    for (int dx = -kRadius; dx <= kRadius; ++dx) {
                        int cc = c + dx;
                        if (cc < 0 || cc >= a.width) continue;
                        double w = wy * g[dx + kRadius] * inv_norm;
                        double va = a.px(rr, cc)[ch];
                        double vb = b.px(rr, cc)[ch];
                        mu_a += w * va;
                        mu_b += w * vb;
                        aa += w * va * va;
                        bb += w * vb * vb;
                        ab += w * va * vb;
                    }
                }
                double var_a = aa - mu_a * mu_a;
                double var_b = bb - mu_b * mu_b;
                double cov = ab - mu_a * mu_b;
                double A = 2 * mu_a * mu_b + kC1;
                double B = 2 * cov + kC2;
                double D = mu_a * mu_a + mu_b * mu_b + kC1;
                double E = var_a + var_b + kC2;
                double inv_de = 1.0 / (D * E);
                double s_val = A * B * inv_de;

                double d_mu_a = (2 * mu_b * B) * inv_de - s_val * (2 * mu_a) / D;
                double d_mu_b = (2 * mu_a * B) * inv_de - s_val * (2 * mu_b) / D;
                double d_var = -s_val / E;  // shared by var_a and var_b
                double d_cov = 2 * A * inv_de;

                for (int dy = -kRadius; dy <= kRadius; ++dy) {
                    int rr = r + dy;
                    if (rr < 0 || rr >= a.height) continue;
                    double wy = g[dy + kRadius];
                    for (int dx = -kRadius; dx <= kRadius; ++dx) {
                        int cc = c + dx;
                        if (cc < 0 || cc >= a.width) continue;
                        double w = wy * g[dx + kRadius] * inv_norm;
                        double va = a.px(rr, cc)[ch];
                        double vb = b.px(rr, cc)[ch];
                        if (d_a)
                            d_a->px(rr, cc)[ch] +=
                                scale * w *
                                (d_mu_a + 2.0 * (va - mu_a) * d_var + (vb - mu_b) * d_cov);
                        if (d_b)
                            d_b->px(rr, cc)[ch] +=
                                scale * w *
                                (d_mu_b + 2.0 * (vb - mu_b) * d_var + (va - mu_a) * d_cov);
                    }
                }
            }
        }
    }
}

}  // namespace igs
