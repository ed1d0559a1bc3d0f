#pragma once

#include "igs/render/image.hpp"

namespace igs {

// Mean SSIM over pixels and channels, 11x11 Gaussian window (sigma 1.5),
// C1 = 0.01^2, C2 = 0.03^2. Near borders the window is cropped to the image
// and its weights renormalized, so images smaller than the window still work.
double ssim(const Image& a, const Image& b);

// Accumulates d(mean SSIM)/d(a) * upstream and likewise for b. Either sink may
// be null.
void ssim_backward(const Image& a, const Image& b, double upstream, Image* d_a,
                   Image* d_b);

}  // namespace igs
