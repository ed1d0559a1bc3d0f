#pragma once

#include <vector>

#include "igs/core/vecmath.hpp"

namespace igs {

// Row-major RGB, doubles in [0,1] for renders and ground truth.
struct Image {
    int width = 0, height = 0;
    std::vector<double> data;  // 3 * width * height

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(static_cast<size_t>(3) * w * h, 0.0) {}

    double* px(int row, int col) { return data.data() + 3 * (static_cast<size_t>(row) * width + col); }
    const double* px(int row, int col) const {
        return data.data() + 3 * (static_cast<size_t>(row) * width + col);
    }
    Vec3 at(int row, int col) const {
        const double* p = px(row, col);
        return {p[0], p[1], p[2]};
    }
    void set(int row, int col, const Vec3& v) {
        double* p = px(row, col);
        p[0] = v.x; p[1] = v.y; p[2] = v.z;
    }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
};

// Bilinear resample with edge clamp; output pixel centers map to
// (i + 0.5) * in/out - 0.5 in input coordinates.
Image resize_bilinear(const Image& src, int width, int height);

}  // namespace igs
