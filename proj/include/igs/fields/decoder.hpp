#pragma once

#include <array>
#include <span>
#include <vector>

#include "igs/core/vecmath.hpp"

namespace igs {

// Two dense layers with tanh in between; weights row-major [out, in].
struct MlpDims {
    int in = 0, hidden = 0, out = 0;
    int64_t w0_size() const { return static_cast<int64_t>(hidden) * in; }
    int64_t w1_size() const { return static_cast<int64_t>(out) * hidden; }
    int64_t total() const { return w0_size() + hidden + w1_size() + out; }
};

struct MlpWeights {
    MlpDims dims;
    std::span<const double> w0, b0, w1, b1;
};

struct MlpGrads {
    std::span<double> w0, b0, w1, b1;  // all empty when the MLP is frozen
    bool wanted() const { return !w0.empty(); }
};

void mlp_forward(const MlpWeights& m, std::span<const double> x,
                 std::span<double> hidden, std::span<double> y);

// hidden is the cached post-tanh activation from the forward pass; d_x may be
// empty when input gradients are not needed.
void mlp_backward(const MlpWeights& m, std::span<const double> x,
                  std::span<const double> hidden, std::span<const double> d_y,
                  const MlpGrads& g, std::span<double> d_x);

enum HeadId { kOpacity = 0, kColor = 1, kScale = 2, kRotation = 3 };

// Fusion MLP plus the four attribute heads of one LOD.
struct DecoderWeights {
    MlpWeights fuse;
    std::array<MlpWeights, 4> heads;
};

struct DecoderGrads {
    MlpGrads fuse;
    std::array<MlpGrads, 4> heads;
};

// Per-slot attributes predicted for one anchor under one camera.
struct AnchorAttrs {
    std::vector<double> alpha;   // K, sigmoid
    std::vector<Vec3> color;     // K, sigmoid per channel
    std::vector<Vec3> scale;     // K, softplus(raw) * l_a (pre-mask)
    std::vector<Vec4> rot;       // K, unit quaternions
};

struct AnchorAttrCache {
    std::vector<double> fuse_in;    // decoder input (may include zero padding)
    std::vector<double> fuse_hidden;
    std::vector<double> head_in;    // fused | sigma_c_norm | dir (dims.out + 4)
    std::array<std::vector<double>, 4> head_hidden;
    std::array<std::vector<double>, 4> head_raw;
};

// fuse_in already contains the hierarchical and local features laid out for
// this decoder. sigma_c_norm is the camera distance divided by the scene
// bounding-sphere radius; dir the unit anchor-from-camera direction.
AnchorAttrs predict_attributes(const DecoderWeights& dec, std::span<const double> fuse_in,
                               double sigma_c_norm, const Vec3& dir, const Vec3& l_a,
                               int K, AnchorAttrCache& cache);

struct AnchorAttrGrads {
    std::span<const double> d_alpha;     // K
    std::span<const Vec3> d_color;       // K
    std::span<const Vec3> d_scale;       // K, w.r.t. pre-mask scale
    std::span<const Vec4> d_rot;         // K, w.r.t. the unit quaternion
};

// Returns gradients w.r.t. the decoder inputs; decoder weight gradients are
// accumulated through `grads` when wanted.
void predict_attributes_backward(const DecoderWeights& dec, const AnchorAttrCache& cache,
                                 const AnchorAttrs& attrs, const Vec3& l_a, int K,
                                 const AnchorAttrGrads& upstream,
                                 const DecoderGrads& grads,
                                 std::span<double> d_fuse_in, double& d_sigma_c_norm,
                                 Vec3& d_dir, Vec3& d_l_a);

}  // namespace igs
