#include <doctest.h>

#include <cmath>
#include <vector>

#include "igs/core/errors.hpp"
#include "igs/core/rng.hpp"
#include "igs/diffcore/fd_check.hpp"
#include "igs/render/rasterizer.hpp"
#include "test_util.hpp"

using namespace igs;
using test::brute_force_render;
using test::max_abs_diff;
using test::random_prims;
using test::test_camera;

TEST_CASE("compositing basics") {
    Vec3 bg{0.1, 0.2, 0.3};
    CHECK(composite_pixel({}, bg).x == 0.1);

    std::vector<SplatSample> one{{1.0, 1.0, Vec3{0.6, 0.4, 0.2}}};
    Vec3 c = composite_pixel(one, {0, 0, 0});
    CHECK(c.x == doctest::Approx(0.6));
    CHECK(c.z == doctest::Approx(0.2));

    std::vector<SplatSample> two{{1.0, 0.5, Vec3{1, 0, 0}}, {2.0, 0.5, Vec3{0, 1, 0}}};
    Vec3 c2 = composite_pixel(two, {0, 0, 0});
    CHECK(c2.x == doctest::Approx(0.5));
    CHECK(c2.y == doctest::Approx(0.25));
    CHECK(c2.z == doctest::Approx(0.0));
}

TEST_CASE("transmittance weights background by the leftover") {
    std::vector<SplatSample> s{{1.0, 0.25, Vec3{0, 0, 0}}};
    Vec3 c = composite_pixel(s, {1, 1, 1});
    CHECK(c.x == doctest::Approx(0.75));
}

TEST_CASE("no gaussians yields the constant background") {
    RenderOptions opts;
    opts.background = {0.3, 0.6, 0.9};
    Image img = render_image({}, test_camera(), opts);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        CHECK(img.data[3 * i + 0] == 0.3);
        CHECK(img.data[3 * i + 2] == 0.9);
    }
}

TEST_CASE("zero opacity leaves the background untouched") {
    std::vector<GaussianPrim> prims = random_prims(4, 21);
    for (auto& g : prims) g.alpha = 0.0;
    RenderOptions opts;
    opts.background = {0.5, 0.5, 0.5};
    Image img = render_image(prims, test_camera(), opts);
    for (double v : img.data) CHECK(v == 0.5);
}

TEST_CASE("repeated renders are bit-identical") {
    std::vector<GaussianPrim> prims = random_prims(6, 33);
    Camera cam = test_camera(16, 16);
    RenderOptions opts;
    Image a = render_image(prims, cam, opts);
    Image b = render_image(prims, cam, opts);
    CHECK(a.data == b.data);
}

TEST_CASE("binned rasterizer matches the all-pairs oracle") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        int n = 2 + static_cast<int>(seed % 7);
        std::vector<GaussianPrim> prims = random_prims(n, 100 + seed, 0.2, 0.95);
        Camera cam = test_camera(12, 12);
        RenderOptions opts;
        opts.background = {0.2, 0.1, 0.4};
        opts.cover_full_frame = true;
        Image got = render_image(prims, cam, opts);
        Image want = brute_force_render(prims, cam, opts);
        CHECK(max_abs_diff(got, want) < 1e-6);
    }
}

TEST_CASE("rendered values stay inside the color range") {
    std::vector<GaussianPrim> prims = random_prims(8, 77, 0.5, 1.0);
    RenderOptions opts;
    opts.background = {1, 1, 1};
    Image img = render_image(prims, test_camera(16, 16), opts);
    for (double v : img.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("forward and backward invariant to thread count") {
    std::vector<GaussianPrim> prims = random_prims(6, 55);
    Camera cam = test_camera(16, 16);
    Image d_img(16, 16);
    Rng rng(4);
    for (double& v : d_img.data) v = rng.uniform(-1, 1);

    RenderOptions o1, o4;
    o1.threads = 1;
    o4.threads = 4;
    RenderContext c1, c4;
    Image i1 = render_image(prims, cam, o1, &c1);
    Image i4 = render_image(prims, cam, o4, &c4);
    CHECK(i1.data == i4.data);

    auto g1 = render_image_backward(prims, cam, o1, c1, d_img);
    auto g4 = render_image_backward(prims, cam, o4, c4, d_img);
    REQUIRE(g1.size() == g4.size());
    for (size_t i = 0; i < g1.size(); ++i) {
        CHECK(g1[i].d_mu.x == g4[i].d_mu.x);
        CHECK(g1[i].d_scale.y == g4[i].d_scale.y);
        CHECK(g1[i].d_alpha == g4[i].d_alpha);
        CHECK(g1[i].d_rot.w == g4[i].d_rot.w);
        CHECK(g1[i].d_color.z == g4[i].d_color.z);
    }
}

TEST_CASE("render gradients pass finite differences") {
    const int n = 4;
    Camera cam = test_camera(8, 8);
    RenderOptions opts;
    opts.background = {0.15, 0.25, 0.35};
    opts.cover_full_frame = true;  // culling boundaries would break smoothness

    std::vector<GaussianPrim> init = random_prims(n, 321);
    ParamStore p;
    p.add("mu", {n, 3});
    p.add("scale", {n, 3});
    p.add("rot", {n, 4});
    p.add("alpha", {n});
    p.add("color", {n, 3});
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) {
            p.values("mu")[3 * i + k] = init[i].mu[k];
            p.values("scale")[3 * i + k] = init[i].scale[k];
            p.values("color")[3 * i + k] = init[i].color[k];
        }
        for (int k = 0; k < 4; ++k) p.values("rot")[4 * i + k] = init[i].rot[k];
        p.values("alpha")[i] = init[i].alpha;
    }

    Image weights(8, 8);
    Rng rng(9);
    for (double& v : weights.data) v = rng.uniform(-1, 1);

    auto assemble = [&] {
        std::vector<GaussianPrim> prims(n);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < 3; ++k) {
                prims[i].mu[k] = p.values("mu")[3 * i + k];
                prims[i].scale[k] = p.values("scale")[3 * i + k];
                prims[i].color[k] = p.values("color")[3 * i + k];
            }
            for (int k = 0; k < 4; ++k) prims[i].rot[k] = p.values("rot")[4 * i + k];
            prims[i].alpha = p.values("alpha")[i];
        }
        return prims;
    };
    auto loss = [&] {
        Image img = render_image(assemble(), cam, opts);
        double acc = 0;
        for (size_t i = 0; i < img.data.size(); ++i) acc += weights.data[i] * img.data[i];
        return acc;
    };

    std::vector<GaussianPrim> prims = assemble();
    RenderContext ctx;
    render_image(prims, cam, opts, &ctx);
    auto grads = render_image_backward(prims, cam, opts, ctx, weights);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 3; ++k) {
            p.grads("mu")[3 * i + k] = grads[i].d_mu[k];
            p.grads("scale")[3 * i + k] = grads[i].d_scale[k];
            p.grads("color")[3 * i + k] = grads[i].d_color[k];
        }
        for (int k = 0; k < 4; ++k) p.grads("rot")[4 * i + k] = grads[i].d_rot[k];
        p.grads("alpha")[i] = grads[i].d_alpha;
    }

    FdOptions fd;
    fd.h = 1e-5;
    fd.samples = 64;
    fd.seed = 7;
    FdResult r = fd_check(p, loss, fd);
    INFO("worst block ", r.worst_block, "[", r.worst_index, "] analytic ", r.analytic,
         " numeric ", r.numeric);
    CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("bilinear resize identity and averaging") {
    Image src(2, 2);
    src.set(0, 0, {1, 1, 1});
    src.set(0, 1, {0, 0, 0});
    src.set(1, 0, {0, 0, 0});
    src.set(1, 1, {1, 1, 1});

    Image same = resize_bilinear(src, 2, 2);
    CHECK(same.data == src.data);

    Image one = resize_bilinear(src, 1, 1);
    CHECK(one.at(0, 0).x == doctest::Approx(0.5));

    CHECK_THROWS_AS(resize_bilinear(src, 0, 2), ValidationError);
}

TEST_CASE("downsample preserves a constant image") {
    Image src(16, 12);
    for (double& v : src.data) v = 0.42;
    Image half = resize_bilinear(src, 8, 6);
    for (double v : half.data) CHECK(v == doctest::Approx(0.42).epsilon(1e-12));
}
