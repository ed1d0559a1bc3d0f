#pragma once

#include <string>

#include "igs/core/vecmath.hpp"

namespace igs {

// Pinhole camera, world-to-camera convention: x_cam = R * x_world + t.
// Camera frame: x right, y down, z forward; pixels sampled at centers
// (col + 0.5, row + 0.5). Images are row-major, row 0 at the top.
struct Camera {
    Mat3 R = Mat3::identity();
    Vec3 t{0, 0, 0};
    double fx = 1.0, fy = 1.0;
    double cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    double znear = 0.1;
    std::string image_name;

    Vec3 position() const { return R.mul_transposed(t) * -1.0; }
    Vec3 to_camera(const Vec3& p) const { return R * p + t; }

    // Same view at resolution scaled by s (s = 1/2, 1/4, ...).
    Camera scaled(double s) const;

    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                          double fx, double fy, int width, int height);
};

}  // namespace igs
