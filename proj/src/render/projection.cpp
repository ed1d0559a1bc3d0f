#include "igs/render/projection.hpp"

#include <cmath>

#include "igs/core/errors.hpp"

namespace igs {

Mat3 Sym3::full() const {
    Mat3 r;
    r(0, 0) = m[0]; r(0, 1) = m[1]; r(0, 2) = m[2];
    r(1, 0) = m[1]; r(1, 1) = m[3]; r(1, 2) = m[4];
    r(2, 0) = m[2]; r(2, 1) = m[4]; r(2, 2) = m[5];
    return r;
}

Mat3 quat_to_rot(const Vec4& q) {
    double n = q.norm();
    if (n < 1e-12) throw ValidationError("quat_to_rot: zero quaternion");
    double w = q.w / n, x = q.x / n, y = q.y / n, z = q.z / n;
    Mat3 R;
    R(0, 0) = 1 - 2 * (y * y + z * z);
    R(0, 1) = 2 * (x * y - w * z);
    R(0, 2) = 2 * (x * z + w * y);
    R(1, 0) = 2 * (x * y + w * z);
    R(1, 1) = 1 - 2 * (x * x + z * z);
    R(1, 2) = 2 * (y * z - w * x);
    R(2, 0) = 2 * (x * z - w * y);
    R(2, 1) = 2 * (y * z + w * x);
    R(2, 2) = 1 - 2 * (x * x + y * y);
    return R;
}

Vec4 quat_to_rot_backward(const Vec4& q, const Mat3& dR) {
    double n = q.norm();
    if (n < 1e-12) throw ValidationError("quat_to_rot_backward: zero quaternion");
    double w = q.w / n, x = q.x / n, y = q.y / n, z = q.z / n;

    auto contract = [&](const double p[9]) {
        double s = 0.0;
        for (int i = 0; i < 9; ++i) s += dR.m[i] * p[i];
        return s;
    };
    const double pw[9] = {0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0};
    const double px[9] = {0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x};
    const double py[9] = {-4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y};
    const double pz[9] = {-4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0};

    Vec4 dqn(contract(pw), contract(px), contract(py), contract(pz));
    // Through the normalization: dq = (I - qn qn^T) dqn / |q|.
    double proj = dqn.w * w + dqn.x * x + dqn.y * y + dqn.z * z;
    return {(dqn.w - w * proj) / n, (dqn.x - x * proj) / n,
            (dqn.y - y * proj) / n, (dqn.z - z * proj) / n};
}

Sym3 build_covariance(const Vec3& s, const Vec4& q) {
    Mat3 R = quat_to_rot(q);
    Mat3 M;  // R * diag(s)
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) M(r, c) = R(r, c) * s[c];
    Sym3 out;
    auto row_dot = [&](int a, int b) {
        return M(a, 0) * M(b, 0) + M(a, 1) * M(b, 1) + M(a, 2) * M(b, 2);
    };
    out.m[0] = row_dot(0, 0);
    out.m[1] = row_dot(0, 1);
    out.m[2] = row_dot(0, 2);
    out.m[3] = row_dot(1, 1);
    out.m[4] = row_dot(1, 2);
    out.m[5] = row_dot(2, 2);
    return out;
}

// Gradient convention: dSigma components refer to the 6 stored numbers, so
// off-diagonal entries carry the combined sensitivity of both matrix slots.
void build_covariance_backward(const Vec3& s, const Vec4& q, const Sym3& dSigma,
                               Vec3& ds, Vec4& dq) {
    Mat3 R = quat_to_rot(q);
    Mat3 M;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) M(r, c) = R(r, c) * s[c];

    Mat3 H;  // full-matrix gradient of Sigma
    H(0, 0) = dSigma.m[0];
    H(1, 1) = dSigma.m[3];
    H(2, 2) = dSigma.m[5];
    H(0, 1) = H(1, 0) = 0.5 * dSigma.m[1];
    H(0, 2) = H(2, 0) = 0.5 * dSigma.m[2];
    H(1, 2) = H(2, 1) = 0.5 * dSigma.m[4];

    Mat3 dM = (H * M) * 2.0;
    Mat3 dR;
    for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int r = 0; r < 3; ++r) {
            acc += dM(r, c) * R(r, c);
            dR(r, c) = dM(r, c) * s[c];
        }
        ds[c] = acc;
    }
    dq = quat_to_rot_backward(q, dR);
}

std::optional<Splat2D> project_gaussian(const GaussianPrim& prim, const Camera& cam,
                                        ProjectionCache* cache) {
    Vec3 p = cam.to_camera(prim.mu);
    if (p.z <= cam.znear) return std::nullopt;

    double invz = 1.0 / p.z;
    double invz2 = invz * invz;

    Splat2D sp;
    sp.mu = {cam.fx * p.x * invz + cam.cx, cam.fy * p.y * invz + cam.cy};
    sp.depth = p.z;
    sp.alpha = prim.alpha;
    sp.color = prim.color;

    // M = J * W with J the perspective Jacobian at the center.
    Mat3 J = Mat3::zero();
    J(0, 0) = cam.fx * invz;
    J(0, 2) = -cam.fx * p.x * invz2;
    J(1, 1) = cam.fy * invz;
    J(1, 2) = -cam.fy * p.y * invz2;
    Mat3 M = J * cam.R;

    Sym3 sigma3 = build_covariance(prim.scale, prim.rot);
    Mat3 S = sigma3.full();
    auto rmul = [&](int a, int b) {
        double acc = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) acc += M(a, i) * S(i, j) * M(b, j);
        return acc;
    };
    sp.cov.xx = rmul(0, 0) + kLowpassFloor;
    sp.cov.xy = rmul(0, 1);
    sp.cov.yy = rmul(1, 1) + kLowpassFloor;

    if (cache) {
        cache->t_cam = p;
        cache->M = M;
        cache->sigma3 = sigma3;
    }
    return sp;
}

PrimGrad project_gaussian_backward(const GaussianPrim& prim, const Camera& cam,
                                   const ProjectionCache& cache, const Vec2& d_mu2,
                                   const Sym2& d_cov, double d_alpha,
                                   const Vec3& d_color) {
    const Vec3& p = cache.t_cam;
    double invz = 1.0 / p.z;
    double invz2 = invz * invz;
    double invz3 = invz2 * invz;

    // Full-matrix gradient of the 2x2 covariance.
    double h00 = d_cov.xx, h11 = d_cov.yy, h01 = 0.5 * d_cov.xy;

    Mat3 S = cache.sigma3.full();
    const Mat3& M = cache.M;

    // dL/dM = 2 * H * M * Sigma (rows 0,1 only; row 2 of M is never used).
    double MS[2][3];
    for (int a = 0; a < 2; ++a)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int i = 0; i < 3; ++i) acc += M(a, i) * S(i, j);
            MS[a][j] = acc;
        }
    double dM[2][3];
    for (int j = 0; j < 3; ++j) {
        dM[0][j] = 2.0 * (h00 * MS[0][j] + h01 * MS[1][j]);
        dM[1][j] = 2.0 * (h01 * MS[0][j] + h11 * MS[1][j]);
    }

    // dL/dSigma3 (full) = M^T H M, folded back to 6-component storage.
    Sym3 dSigma3;
    auto dfull = [&](int i, int j) {
        return M(0, i) * (h00 * M(0, j) + h01 * M(1, j)) +
               M(1, i) * (h01 * M(0, j) + h11 * M(1, j));
    };
    dSigma3.m[0] = dfull(0, 0);
    dSigma3.m[1] = 2.0 * dfull(0, 1);
    dSigma3.m[2] = 2.0 * dfull(0, 2);
    dSigma3.m[3] = dfull(1, 1);
    dSigma3.m[4] = 2.0 * dfull(1, 2);
    dSigma3.m[5] = dfull(2, 2);

    PrimGrad g;
    build_covariance_backward(prim.scale, prim.rot, dSigma3, g.d_scale, g.d_rot);

    // dL/dJ = dL/dM * R^T; J has four nonzero entries.
    auto dJ = [&](int a, int jcol) {
        double acc = 0.0;
        for (int c = 0; c < 3; ++c) acc += dM[a][c] * cam.R(jcol, c);
        return acc;
    };
    double dJ00 = dJ(0, 0), dJ02 = dJ(0, 2);
    double dJ11 = dJ(1, 1), dJ12 = dJ(1, 2);

    Vec3 dp{0, 0, 0};
    dp.x += dJ02 * (-cam.fx * invz2);
    dp.y += dJ12 * (-cam.fy * invz2);
    dp.z += dJ00 * (-cam.fx * invz2) + dJ11 * (-cam.fy * invz2) +
            dJ02 * (2.0 * cam.fx * p.x * invz3) + dJ12 * (2.0 * cam.fy * p.y * invz3);

    dp.x += d_mu2.x * cam.fx * invz;
    dp.z += d_mu2.x * (-cam.fx * p.x * invz2);
    dp.y += d_mu2.y * cam.fy * invz;
    dp.z += d_mu2.y * (-cam.fy * p.y * invz2);

    g.d_mu = cam.R.mul_transposed(dp);
    g.d_alpha = d_alpha;
    g.d_color = d_color;
    return g;
}

}  // namespace igs
