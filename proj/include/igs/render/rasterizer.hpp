#pragma once

#include <span>
#include <vector>

#include "igs/render/camera.hpp"
#include "igs/render/image.hpp"
#include "igs/render/projection.hpp"

namespace igs {

struct RenderOptions {
    Vec3 background{0, 0, 0};
    double sigma_clamp = 0.999;
    double term_transmittance = 1e-4;  // stop once remaining T drops below
    double cull_sigma = 3.0;           // footprint radius in standard deviations
    bool cover_full_frame = false;     // bin every splat to every pixel
    int threads = 1;
};

struct SplatSample {
    double depth = 0.0;
    double sigma = 0.0;  // opacity * falloff, already in [0,1]
    Vec3 color;
};

// Front-to-back alpha compositing over depth-sorted samples.
Vec3 composite_pixel(std::span<const SplatSample> samples, const Vec3& background,
                     double term_transmittance = 1e-4);

// Everything the backward pass needs to replay the forward traversal.
struct RenderContext {
    std::vector<Splat2D> splats;             // surviving projections
    std::vector<ProjectionCache> caches;     // parallel to splats
    std::vector<std::vector<int>> pixel_splats;  // per pixel, depth-sorted splat ids
    int width = 0, height = 0;
    int degenerate_count = 0;  // non-invertible 2x2 covariances skipped
};

Image render_image(std::span<const GaussianPrim> prims, const Camera& cam,
                   const RenderOptions& opts, RenderContext* ctx = nullptr);

// dL/d(every primitive) given dL/d(every pixel). The reduction over pixels
// runs per row with row-ordered merging, so results do not depend on the
// thread count.
std::vector<PrimGrad> render_image_backward(std::span<const GaussianPrim> prims,
                                            const Camera& cam, const RenderOptions& opts,
                                            const RenderContext& ctx,
                                            const Image& d_image);

}  // namespace igs
