#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "igs/core/errors.hpp"
#include "igs/core/rng.hpp"
#include "igs/datasets/metrics.hpp"
#include "igs/synopsis/decode.hpp"

using namespace igs;

namespace {

Image flat(int w, int h, double v) {
    Image img(w, h);
    std::fill(img.data.begin(), img.data.end(), v);
    return img;
}

ModelMeta eval_meta() {
    ModelMeta m;
    m.lmax = 4;
    m.K = 4;
    m.n_codes = 6;
    m.code_dim = 4;
    m.fused_dim = 6;
    m.mlp_hidden = 5;
    m.grid.levels = 4;
    m.grid.table_size = 1u << 7;
    m.grid.feature_dim = 2;
    m.grid.n_min = 4;
    m.grid.n_max = 16;
    m.active_schedule = {1, 2, 3, 4};
    return m;
}

// A dataset whose images are exactly what the model itself renders.
struct EvalFixture {
    Hierarchy h;
    Dataset ds;
    RenderOptions opts;

    EvalFixture() : h(init_hierarchy(eval_meta(), points(), 0.1, 19)) {
        for (int i = 0; i < 9; ++i) {
            double ang = 0.7 * i;
            Vec3 eye{0.5 + 2.0 * std::sin(ang), 0.55, 0.5 - 2.0 * std::cos(ang)};
            Camera cam = Camera::look_at(eye, {0.5, 0.5, 0.5}, {0, 1, 0},
                                         20.0, 20.0, 16, 16);
            ds.cameras.push_back(cam);
            DecodeResult dr = decode_level(h.view(3), cam.position(),
                                           DecodePhase::inference);
            ds.images.push_back(render_image(dr.prims, cam, opts));
            (i % 8 == 0 ? ds.test_views : ds.train_views).push_back(i);
        }
    }

    static std::vector<Vec3> points() {
        return {{0.25, 0.3, 0.45}, {0.62, 0.55, 0.38}, {0.47, 0.71, 0.66}};
    }
};

}  // namespace

TEST_CASE("identical images hit the sentinel instead of infinity") {
    Image a = flat(8, 6, 0.37);
    CHECK(psnr(a, a) == kPsnrSentinel);

    Image b = a;
    b.data[0] += 1e-7;  // even microscopic error stays below the cap
    CHECK(psnr(a, b) == kPsnrSentinel);
}

TEST_CASE("uniform error of a tenth is exactly twenty decibels") {
    Image a = flat(5, 5, 0.5);
    Image b = flat(5, 5, 0.6);
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(psnr(b, a) == psnr(a, b));
}

TEST_CASE("halving the error buys about six decibels") {
    Image a = flat(5, 5, 0.5);
    Image full = flat(5, 5, 0.7);
    Image half = flat(5, 5, 0.6);
    double gain = psnr(a, half) - psnr(a, full);
    CHECK(gain == doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("psnr refuses mismatched shapes") {
    CHECK_THROWS_AS(psnr(flat(4, 4, 0.1), flat(4, 5, 0.1)), ValidationError);
}

TEST_CASE("noisier images score lower") {
    Rng rng(14);
    Image ref(12, 12);
    for (double& v : ref.data) v = rng.uniform();
    std::vector<double> noise(ref.data.size());
    for (double& n : noise) n = rng.uniform() - 0.5;

    double prev = kPsnrSentinel + 1;
    for (double amp : {0.01, 0.05, 0.2}) {
        Image noisy = ref;
        for (size_t i = 0; i < noise.size(); ++i) noisy.data[i] += amp * noise[i];
        double cur = psnr(ref, noisy);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("evaluating a level against its own renders maxes both metrics") {
    EvalFixture fx;
    std::vector<EvalRow> rows = evaluate_level(fx.h.snapshot(3), fx.ds, fx.opts);
    REQUIRE(rows.size() == fx.ds.test_views.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].level == 3);
        CHECK(rows[i].view == fx.ds.test_views[i]);
        CHECK(rows[i].psnr == kPsnrSentinel);
        CHECK(rows[i].ssim == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(mean_psnr(rows) == kPsnrSentinel);
}

TEST_CASE("evaluation is pure and repeatable") {
    EvalFixture fx;
    int stride = fx.h.meta.bitmap_stride();
    fx.h.bitmaps[2] = fx.h.bitmaps[3];
    bitmap_set(fx.h.bitmaps[2], stride, 0, 1, false);
    fx.h.instantiate_level_params(2);
    fx.h.level_built[2] = true;

    LevelSnapshot snap = fx.h.snapshot(2);
    std::vector<EvalRow> a = evaluate_level(snap, fx.ds, fx.opts);
    std::vector<EvalRow> b = evaluate_level(snap, fx.ds, fx.opts);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].psnr == b[i].psnr);
        CHECK(a[i].ssim == b[i].ssim);
        CHECK(std::isfinite(a[i].psnr));
        CHECK(a[i].ssim <= 1.0 + 1e-12);
    }

    Dataset empty_split = fx.ds;
    empty_split.test_views.clear();
    CHECK_THROWS_AS(evaluate_level(snap, empty_split, fx.opts), ValidationError);
}

TEST_CASE("csv output lists one row per view under a header") {
    std::vector<EvalRow> rows = {{3, 0, 31.25, 0.5}, {3, 8, 28.0, 0.25}};
    std::string csv = eval_csv(rows);
    CHECK(csv.find("level,view,psnr,ssim\n") == 0);
    CHECK(csv.find("3,0,31.25,0.5\n") != std::string::npos);
    CHECK(csv.find("3,8,28,0.25\n") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);

    CHECK(mean_psnr(rows) == doctest::Approx(29.625).epsilon(1e-12));
    CHECK(mean_psnr({}) == 0.0);
}
