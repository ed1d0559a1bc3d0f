#pragma once

#include <optional>

#include "igs/core/vecmath.hpp"
#include "igs/render/camera.hpp"

namespace igs {

// One world-space Gaussian ready for rendering. r is a quaternion (w,x,y,z);
// it is normalized inside quat_to_rot, so callers may pass any nonzero vector.
struct GaussianPrim {
    Vec3 mu;
    Vec3 scale;
    Vec4 rot{1, 0, 0, 0};
    double alpha = 0.0;
    Vec3 color;
};

// Symmetric 3x3 stored as (xx, xy, xz, yy, yz, zz).
struct Sym3 {
    double m[6] = {0, 0, 0, 0, 0, 0};
    double xx() const { return m[0]; }
    double xy() const { return m[1]; }
    double xz() const { return m[2]; }
    double yy() const { return m[3]; }
    double yz() const { return m[4]; }
    double zz() const { return m[5]; }
    Mat3 full() const;
};

Mat3 quat_to_rot(const Vec4& q);

// dL/dq for the composition rot(normalize(q)) given dL/dR.
Vec4 quat_to_rot_backward(const Vec4& q, const Mat3& dR);

// Sigma = R S S^T R^T with S = diag(s).
Sym3 build_covariance(const Vec3& s, const Vec4& q);

void build_covariance_backward(const Vec3& s, const Vec4& q, const Sym3& dSigma,
                               Vec3& ds, Vec4& dq);

// Screen-space footprint after EWA projection.
struct Splat2D {
    Vec2 mu;        // pixel coordinates
    Sym2 cov;       // 2x2 covariance, low-pass floor included
    double depth = 0.0;
    double alpha = 0.0;
    Vec3 color;
    int prim = -1;  // index into the source primitive list
};

struct ProjectionCache {
    Vec3 t_cam;          // camera-space center
    Mat3 M;              // J * W
    Sym3 sigma3;         // world covariance
};

inline constexpr double kLowpassFloor = 0.3;  // px^2, added to Sigma' diagonal

// Returns nullopt when the center is at or behind the near plane.
std::optional<Splat2D> project_gaussian(const GaussianPrim& prim, const Camera& cam,
                                        ProjectionCache* cache = nullptr);

struct PrimGrad {
    Vec3 d_mu;
    Vec3 d_scale;
    Vec4 d_rot;
    double d_alpha = 0.0;
    Vec3 d_color;
};

// Chains screen-space gradients (d_mu2, d_cov as symmetric upper, d_alpha,
// d_color) back to the world-space primitive. Includes the dependence of the
// perspective Jacobian on the center.
PrimGrad project_gaussian_backward(const GaussianPrim& prim, const Camera& cam,
                                   const ProjectionCache& cache, const Vec2& d_mu2,
                                   const Sym2& d_cov, double d_alpha,
                                   const Vec3& d_color);

}  // namespace igs
