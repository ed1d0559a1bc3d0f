#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "igs/core/errors.hpp"
#include "igs/core/rng.hpp"
#include "igs/render/projection.hpp"
#include "test_util.hpp"

using namespace igs;

namespace {

// Plain Jacobi eigenvalue iteration for a symmetric 3x3; the oracle the
// covariance construction is checked against.
std::vector<double> sym3_eigenvalues(Mat3 a) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a(0, 1)) + std::abs(a(0, 2)) + std::abs(a(1, 2));
        if (off < 1e-15) break;
        for (int p = 0; p < 3; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                if (std::abs(a(p, q)) < 1e-18) continue;
                double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1));
                double c = 1 / std::sqrt(t * t + 1), s = t * c;
                Mat3 r = Mat3::identity();
                r(p, p) = c;
                r(q, q) = c;
                r(p, q) = s;
                r(q, p) = -s;
                a = r.transposed() * (a * r);
            }
        }
    }
    std::vector<double> ev{a(0, 0), a(1, 1), a(2, 2)};
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace

TEST_CASE("identity quaternion gives identity rotation") {
    Mat3 r = quat_to_rot({1, 0, 0, 0});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(r(i, j) == doctest::Approx(i == j ? 1 : 0));
}

TEST_CASE("z-axis half-turn") {
    Mat3 r = quat_to_rot({0, 0, 0, 1});
    CHECK(r(0, 0) == doctest::Approx(-1));
    CHECK(r(1, 1) == doctest::Approx(-1));
    CHECK(r(2, 2) == doctest::Approx(1));
    CHECK(r(0, 1) == doctest::Approx(0));
}

TEST_CASE("quaternion scale invariance and orthonormality") {
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
        Vec4 q = rng.unit_quaternion();
        Mat3 r1 = quat_to_rot(q);
        Mat3 r2 = quat_to_rot({2 * q.w, 2 * q.x, 2 * q.y, 2 * q.z});
        Mat3 rrt = r1 * r1.transposed();
        double det = r1(0, 0) * (r1(1, 1) * r1(2, 2) - r1(1, 2) * r1(2, 1)) -
                     r1(0, 1) * (r1(1, 0) * r1(2, 2) - r1(1, 2) * r1(2, 0)) +
                     r1(0, 2) * (r1(1, 0) * r1(2, 1) - r1(1, 1) * r1(2, 0));
        CHECK(det == doctest::Approx(1.0).epsilon(1e-10));
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                CHECK(r1(a, b) == doctest::Approx(r2(a, b)).epsilon(1e-12));
                CHECK(rrt(a, b) == doctest::Approx(a == b ? 1 : 0).epsilon(1e-10));
            }
    }
}

TEST_CASE("zero quaternion rejected") {
    CHECK_THROWS_AS(quat_to_rot({0, 0, 0, 0}), ValidationError);
}

TEST_CASE("axis-aligned covariance is the squared scales") {
    Sym3 s = build_covariance({1, 2, 3}, {1, 0, 0, 0});
    CHECK(s.xx() == doctest::Approx(1));
    CHECK(s.yy() == doctest::Approx(4));
    CHECK(s.zz() == doctest::Approx(9));
    CHECK(s.xy() == doctest::Approx(0));

    Sym3 z = build_covariance({0, 0, 0}, {1, 0, 0, 0});
    for (double v : z.m) CHECK(v == 0.0);
}

TEST_CASE("covariance eigenvalues equal squared scales") {
    Rng rng(9);
    for (int i = 0; i < 10; ++i) {
        Vec3 s = rng.uniform_vec3(0.1, 2.0);
        Vec4 q = rng.unit_quaternion();
        Sym3 sig = build_covariance(s, q);
        std::vector<double> ev = sym3_eigenvalues(sig.full());
        std::vector<double> want{s.x * s.x, s.y * s.y, s.z * s.z};
        std::sort(want.begin(), want.end());
        for (int k = 0; k < 3; ++k) CHECK(std::abs(ev[k] - want[k]) < 1e-10);
    }
}

TEST_CASE("on-axis center projects to the principal point") {
    Camera cam;
    cam.fx = 100;
    cam.fy = 100;
    cam.cx = 32;
    cam.cy = 24;
    cam.width = 64;
    cam.height = 48;
    GaussianPrim g;
    g.mu = {0, 0, 2};
    g.scale = {0.1, 0.1, 0.1};
    g.alpha = 0.5;
    auto sp = project_gaussian(g, cam);
    REQUIRE(sp.has_value());
    CHECK(sp->mu.x == doctest::Approx(32));
    CHECK(sp->mu.y == doctest::Approx(24));
    CHECK(sp->depth == doctest::Approx(2));
}

TEST_CASE("isotropic on-axis covariance lands at (f*s/z)^2 plus the floor") {
    Camera cam;
    cam.fx = 120;
    cam.fy = 120;
    cam.cx = 16;
    cam.cy = 16;
    cam.width = 32;
    cam.height = 32;
    double s = 0.05, z = 2.5;
    GaussianPrim g;
    g.mu = {0, 0, z};
    g.scale = {s, s, s};
    auto sp = project_gaussian(g, cam);
    REQUIRE(sp.has_value());
    double want = (120 * s / z) * (120 * s / z);
    CHECK(sp->cov.xx == doctest::Approx(want + kLowpassFloor).epsilon(1e-10));
    CHECK(sp->cov.yy == doctest::Approx(want + kLowpassFloor).epsilon(1e-10));
    CHECK(sp->cov.xy == doctest::Approx(0).epsilon(1e-10));
}

TEST_CASE("centers at or behind the near plane are culled") {
    Camera cam;
    cam.fx = cam.fy = 50;
    cam.cx = cam.cy = 8;
    cam.width = cam.height = 16;
    cam.znear = 0.1;
    GaussianPrim g;
    g.mu = {0, 0, 0.05};
    g.scale = {0.1, 0.1, 0.1};
    CHECK_FALSE(project_gaussian(g, cam).has_value());
    g.mu = {0, 0, -1.0};
    CHECK_FALSE(project_gaussian(g, cam).has_value());
}

TEST_CASE("projected covariance stays positive definite") {
    Rng rng(13);
    Camera cam = test::test_camera(16, 16);
    for (int i = 0; i < 50; ++i) {
        GaussianPrim g;
        g.mu = rng.uniform_vec3(0, 1);
        g.scale = rng.uniform_vec3(0.001, 0.5);
        g.rot = rng.unit_quaternion();
        auto sp = project_gaussian(g, cam);
        if (!sp) continue;
        CHECK(sp->cov.xx > 0);
        CHECK(sp->cov.det() > 0);
        CHECK(sp->depth > cam.znear);
    }
}

TEST_CASE("covariance backward matches finite differences") {
    Rng rng(17);
    Vec3 s = rng.uniform_vec3(0.2, 1.0);
    Vec4 q = rng.unit_quaternion();
    // Scalar probe: weighted sum of the six symmetric components.
    double w[6] = {0.7, -0.3, 0.5, 1.1, -0.9, 0.4};
    auto value = [&](const Vec3& sv, const Vec4& qv) {
        Sym3 sig = build_covariance(sv, qv);
        double acc = 0;
        for (int k = 0; k < 6; ++k) acc += w[k] * sig.m[k];
        return acc;
    };
    Sym3 up;
    for (int k = 0; k < 6; ++k) up.m[k] = w[k];
    Vec3 ds;
    Vec4 dq;
    build_covariance_backward(s, q, up, ds, dq);

    double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
        Vec3 sp = s, sm = s;
        sp[k] += h;
        sm[k] -= h;
        double fd = (value(sp, q) - value(sm, q)) / (2 * h);
        CHECK(ds[k] == doctest::Approx(fd).epsilon(1e-5));
    }
    for (int k = 0; k < 4; ++k) {
        Vec4 qp = q, qm = q;
        qp[k] += h;
        qm[k] -= h;
        double fd = (value(s, qp) - value(s, qm)) / (2 * h);
        CHECK(dq[k] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("projection backward matches finite differences") {
    Rng rng(19);
    Camera cam = test::test_camera(16, 16);
    GaussianPrim g;
    g.mu = {0.43, 0.57, 0.61};
    g.scale = {0.2, 0.12, 0.3};
    g.rot = rng.unit_quaternion();
    g.alpha = 0.6;
    g.color = {0.2, 0.5, 0.8};

    Vec2 d_mu2{0.8, -0.4};
    Sym2 d_cov{0.3, -0.7, 0.5};
    double d_alpha = 1.3;
    Vec3 d_color{0.1, -0.2, 0.9};

    auto value = [&](const GaussianPrim& gp) {
        auto sp = project_gaussian(gp, cam);
        REQUIRE(sp.has_value());
        return d_mu2.x * sp->mu.x + d_mu2.y * sp->mu.y + d_cov.xx * sp->cov.xx +
               d_cov.xy * sp->cov.xy + d_cov.yy * sp->cov.yy + d_alpha * sp->alpha +
               d_color.dot(sp->color);
    };

    ProjectionCache cache;
    auto sp = project_gaussian(g, cam, &cache);
    REQUIRE(sp.has_value());
    PrimGrad pg = project_gaussian_backward(g, cam, cache, d_mu2, d_cov, d_alpha, d_color);

    double h = 1e-6;
    for (int k = 0; k < 3; ++k) {
        GaussianPrim gp = g, gm = g;
        gp.mu[k] += h;
        gm.mu[k] -= h;
        CHECK(pg.d_mu[k] ==
              doctest::Approx((value(gp) - value(gm)) / (2 * h)).epsilon(1e-4));
        gp = gm = g;
        gp.scale[k] += h;
        gm.scale[k] -= h;
        CHECK(pg.d_scale[k] ==
              doctest::Approx((value(gp) - value(gm)) / (2 * h)).epsilon(1e-4));
    }
    for (int k = 0; k < 4; ++k) {
        GaussianPrim gp = g, gm = g;
        gp.rot[k] += h;
        gm.rot[k] -= h;
        CHECK(pg.d_rot[k] ==
              doctest::Approx((value(gp) - value(gm)) / (2 * h)).epsilon(1e-4));
    }
    CHECK(pg.d_alpha == doctest::Approx(d_alpha));
    CHECK(pg.d_color.x == doctest::Approx(d_color.x));
}
