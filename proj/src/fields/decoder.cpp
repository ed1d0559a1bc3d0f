#include "igs/fields/decoder.hpp"

#include <cmath>

#include "igs/core/errors.hpp"

namespace igs {

void mlp_forward(const MlpWeights& m, std::span<const double> x,
                 std::span<double> hidden, std::span<double> y) {
    const MlpDims& d = m.dims;
    if (static_cast<int>(x.size()) != d.in || static_cast<int>(hidden.size()) != d.hidden ||
        static_cast<int>(y.size()) != d.out)
        throw ValidationError("mlp_forward: size mismatch");
    for (int j = 0; j < d.hidden; ++j) {
        double acc = m.b0[j];
        const double* row = m.w0.data() + static_cast<size_t>(j) * d.in;
        for (int i = 0; i < d.in; ++i) acc += row[i] * x[i];
        hidden[j] = std::tanh(acc);
    }
    for (int k = 0; k < d.out; ++k) {
        double acc = m.b1[k];
        const double* row = m.w1.data() + static_cast<size_t>(k) * d.hidden;
        for (int j = 0; j < d.hidden; ++j) acc += row[j] * hidden[j];
        y[k] = acc;
    }
}

void mlp_backward(const MlpWeights& m, std::span<const double> x,
                  std::span<const double> hidden, std::span<const double> d_y,
                  const MlpGrads& g, std::span<double> d_x) {
    const MlpDims& d = m.dims;
    std::vector<double> d_pre(d.hidden, 0.0);
    for (int k = 0; k < d.out; ++k) {
        double dy = d_y[k];
        const double* row = m.w1.data() + static_cast<size_t>(k) * d.hidden;
        if (g.wanted()) {
            double* gw = g.w1.data() + static_cast<size_t>(k) * d.hidden;
            for (int j = 0; j < d.hidden; ++j) gw[j] += dy * hidden[j];
            g.b1[k] += dy;
        }
        for (int j = 0; j < d.hidden; ++j) d_pre[j] += row[j] * dy;
    }
    for (int j = 0; j < d.hidden; ++j) d_pre[j] *= (1.0 - hidden[j] * hidden[j]);
    for (int j = 0; j < d.hidden; ++j) {
        double dp = d_pre[j];
        const double* row = m.w0.data() + static_cast<size_t>(j) * d.in;
        if (g.wanted()) {
            double* gw = g.w0.data() + static_cast<size_t>(j) * d.in;
            for (int i = 0; i < d.in; ++i) gw[i] += dp * x[i];
            g.b0[j] += dp;
        }
        if (!d_x.empty())
            for (int i = 0; i < d.in; ++i) d_x[i] += row[i] * dp;
    }
}

AnchorAttrs predict_attributes(const DecoderWeights& dec, std::span<const double> fuse_in,
                               double sigma_c_norm, const Vec3& dir, const Vec3& l_a,
                               int K, AnchorAttrCache& cache) {
    cache.fuse_in.assign(fuse_in.begin(), fuse_in.end());
    cache.fuse_hidden.resize(dec.fuse.dims.hidden);
    int fused_dim = dec.fuse.dims.out;
    cache.head_in.resize(fused_dim + 4);
    mlp_forward(dec.fuse, fuse_in, cache.fuse_hidden,
                std::span<double>(cache.head_in.data(), fused_dim));
    cache.head_in[fused_dim] = sigma_c_norm;
    cache.head_in[fused_dim + 1] = dir.x;
    cache.head_in[fused_dim + 2] = dir.y;
    cache.head_in[fused_dim + 3] = dir.z;

    for (int h = 0; h < 4; ++h) {
        cache.head_hidden[h].resize(dec.heads[h].dims.hidden);
        cache.head_raw[h].resize(dec.heads[h].dims.out);
        mlp_forward(dec.heads[h], cache.head_in, cache.head_hidden[h],
                    cache.head_raw[h]);
    }

    AnchorAttrs out;
    out.alpha.resize(K);
    out.color.resize(K);
    out.scale.resize(K);
    out.rot.resize(K);
    for (int i = 0; i < K; ++i) {
        out.alpha[i] = sigmoid(cache.head_raw[kOpacity][i]);
        for (int c = 0; c < 3; ++c)
            out.color[i][c] = sigmoid(cache.head_raw[kColor][3 * i + c]);
        for (int c = 0; c < 3; ++c)
            out.scale[i][c] = softplus(cache.head_raw[kScale][3 * i + c]) * l_a[c];
        Vec4 q(cache.head_raw[kRotation][4 * i], cache.head_raw[kRotation][4 * i + 1],
               cache.head_raw[kRotation][4 * i + 2], cache.head_raw[kRotation][4 * i + 3]);
        double n = q.norm();
        out.rot[i] = n < 1e-12 ? Vec4{1, 0, 0, 0}
                               : Vec4{q.w / n, q.x / n, q.y / n, q.z / n};
    }
    return out;
}

void predict_attributes_backward(const DecoderWeights& dec, const AnchorAttrCache& cache,
                                 const AnchorAttrs& attrs, const Vec3& l_a, int K,
                                 const AnchorAttrGrads& upstream,
                                 const DecoderGrads& grads,
                                 std::span<double> d_fuse_in, double& d_sigma_c_norm,
                                 Vec3& d_dir, Vec3& d_l_a) {
    std::array<std::vector<double>, 4> d_raw;
    for (int h = 0; h < 4; ++h) d_raw[h].assign(dec.heads[h].dims.out, 0.0);

    for (int i = 0; i < K; ++i) {
        double a = attrs.alpha[i];
        d_raw[kOpacity][i] = upstream.d_alpha[i] * a * (1.0 - a);
        for (int c = 0; c < 3; ++c) {
            double col = attrs.color[i][c];
            d_raw[kColor][3 * i + c] = upstream.d_color[i][c] * col * (1.0 - col);
            double raw = cache.head_raw[kScale][3 * i + c];
            double sp = softplus(raw);
            d_raw[kScale][3 * i + c] = upstream.d_scale[i][c] * l_a[c] * sigmoid(raw);
            d_l_a[c] += upstream.d_scale[i][c] * sp;
        }
        Vec4 q(cache.head_raw[kRotation][4 * i], cache.head_raw[kRotation][4 * i + 1],
               cache.head_raw[kRotation][4 * i + 2], cache.head_raw[kRotation][4 * i + 3]);
        double n = q.norm();
        if (n >= 1e-12) {
            const Vec4& qn = attrs.rot[i];
            const Vec4& dq = upstream.d_rot[i];
            double proj = dq.w * qn.w + dq.x * qn.x + dq.y * qn.y + dq.z * qn.z;
            d_raw[kRotation][4 * i] = (dq.w - qn.w * proj) / n;
            d_raw[kRotation][4 * i + 1] = (dq.x - qn.x * proj) / n;
            d_raw[kRotation][4 * i + 2] = (dq.y - qn.y * proj) / n;
            d_raw[kRotation][4 * i + 3] = (dq.z - qn.z * proj) / n;
        }
    }

    int fused_dim = dec.fuse.dims.out;
    std::vector<double> d_head_in(fused_dim + 4, 0.0);
    for (int h = 0; h < 4; ++h)
        mlp_backward(dec.heads[h], cache.head_in, cache.head_hidden[h], d_raw[h],
                     grads.heads[h], d_head_in);

    d_sigma_c_norm += d_head_in[fused_dim];
    d_dir.x += d_head_in[fused_dim + 1];
    d_dir.y += d_head_in[fused_dim + 2];
    d_dir.z += d_head_in[fused_dim + 3];

    mlp_backward(dec.fuse, cache.fuse_in, cache.fuse_hidden,
                 std::span<const double>(d_head_in.data(), fused_dim), grads.fuse,
                 d_fuse_in);
}

}  // namespace igs
