#include "igs/render/camera.hpp"

#include <algorithm>
#include <cmath>

#include "igs/core/errors.hpp"

namespace igs {

Camera Camera::scaled(double s) const {
    Camera c = *this;
    c.width = std::max(1, static_cast<int>(std::llround(width * s)));
    c.height = std::max(1, static_cast<int>(std::llround(height * s)));
    double sx = static_cast<double>(c.width) / width;
    double sy = static_cast<double>(c.height) / height;
    c.fx = fx * sx;
    c.fy = fy * sy;
    c.cx = cx * sx;
    c.cy = cy * sy;
    return c;
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                       double fx, double fy, int width, int height) {
    Vec3 z = (target - eye);
    double n = z.norm();
    if (n < 1e-12) throw ValidationError("look_at: eye coincides with target");
    z = z / n;
    Vec3 x = z.cross(up);
    if (x.norm() < 1e-8) x = z.cross(Vec3{1, 0, 0});
    if (x.norm() < 1e-8) x = z.cross(Vec3{0, 1, 0});
    x = x.normalized();
    Vec3 y = z.cross(x);

    Camera cam;
    for (int i = 0; i < 3; ++i) {
        cam.R(0, i) = x[i];
        cam.R(1, i) = y[i];
        cam.R(2, i) = z[i];
    }
    cam.t = (cam.R * eye) * -1.0;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = width * 0.5;
    cam.cy = height * 0.5;
    cam.width = width;
    cam.height = height;
    return cam;
}

}  // namespace igs
