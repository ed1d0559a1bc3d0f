#include "igs/render/image.hpp"

#include <algorithm>
#include <cmath>

#include "igs/core/errors.hpp"

namespace igs {

Image resize_bilinear(const Image& src, int width, int height) {
    if (width < 1 || height < 1)
        throw ValidationError("resize: target dimensions must be positive");
    if (src.width == width && src.height == height) return src;

    Image dst(width, height);
    double sx = static_cast<double>(src.width) / width;
    double sy = static_cast<double>(src.height) / height;
    for (int r = 0; r < height; ++r) {
        double y = (r + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(y));
        double fy = y - y0;
        int ya = std::clamp(y0, 0, src.height - 1);
        int yb = std::clamp(y0 + 1, 0, src.height - 1);
        for (int c = 0; c < width; ++c) {
            double x = (c + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(x));
            double fx = x - x0;
            int xa = std::clamp(x0, 0, src.width - 1);
            int xb = std::clamp(x0 + 1, 0, src.width - 1);
            const double* p00 = src.px(ya, xa);
            const double* p01 = src.px(ya, xb);
            const double* p10 = src.px(yb, xa);
            const double* p11 = src.px(yb, xb);
            double* out = dst.px(r, c);
            for (int k = 0; k < 3; ++k)
                out[k] = (1 - fy) * ((1 - fx) * p00[k] + fx * p01[k]) +
                         fy * ((1 - fx) * p10[k] + fx * p11[k]);
        }
    }
    return dst;
}

}  // namespace igs
