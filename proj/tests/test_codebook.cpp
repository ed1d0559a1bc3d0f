#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "igs/core/errors.hpp"
#include "igs/core/rng.hpp"
#include "igs/fields/codebook.hpp"

using namespace igs;

namespace {

std::vector<double> random_codebook(int n, int dim, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> c(static_cast<size_t>(n) * dim);
    for (double& v : c) v = rng.uniform(-1, 1);
    return c;
}

}  // namespace

TEST_CASE("argmax ties break to the lowest index") {
    std::vector<double> v{0.5, 0.7, 0.7, 0.1};
    CHECK(codebook_argmax(v) == 1);
    std::vector<double> flat{0.3, 0.3, 0.3};
    CHECK(codebook_argmax(flat) == 0);
    CHECK_THROWS_AS(codebook_argmax({}), ValidationError);
}

TEST_CASE("training lookup returns exactly the winning row") {
    const int n = 8, dim = 4;
    std::vector<double> cb = random_codebook(n, dim, 1);
    std::vector<double> v(n, 0.0);
    v[5] = 3.0;
    std::vector<double> out(dim);
    codebook_lookup_train(cb, n, dim, v, out, nullptr);
    for (int f = 0; f < dim; ++f) CHECK(out[f] == cb[5 * dim + f]);

    std::vector<double> equal(n, 0.2);
    codebook_lookup_train(cb, n, dim, equal, out, nullptr);
    for (int f = 0; f < dim; ++f) CHECK(out[f] == cb[f]);
}

TEST_CASE("training forward is bit-identical to inference at the argmax") {
    const int n = 16, dim = 6;
    std::vector<double> cb = random_codebook(n, dim, 2);
    Rng rng(3);
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-2, 2);

    std::vector<double> train_out(dim), infer_out(dim);
    SteCache cache;
    codebook_lookup_train(cb, n, dim, v, train_out, &cache);
    codebook_lookup_infer(cb, n, dim, static_cast<uint8_t>(codebook_argmax(v)),
                          infer_out);
    CHECK(train_out == infer_out);
    CHECK(cache.argmax == codebook_argmax(v));
}

TEST_CASE("inference rejects an out-of-range index") {
    const int n = 4, dim = 2;
    std::vector<double> cb = random_codebook(n, dim, 4);
    std::vector<double> out(dim);
    CHECK_THROWS_AS(codebook_lookup_infer(cb, n, dim, 4, out), ValidationError);
    CHECK_NOTHROW(codebook_lookup_infer(cb, n, dim, 3, out));
}

TEST_CASE("logit gradient equals finite differences of the relaxed path") {
    const int n = 10, dim = 5;
    std::vector<double> cb = random_codebook(n, dim, 5);
    Rng rng(6);
    std::vector<double> v(n), w(dim);
    for (double& x : v) x = rng.uniform(-1.5, 1.5);
    for (double& x : w) x = rng.uniform(-1, 1);

    // Relaxed value the straight-through gradient follows.
    auto relaxed = [&](const std::vector<double>& logits) {
        double mx = *std::max_element(logits.begin(), logits.end());
        std::vector<double> sm(n);
        double sum = 0;
        for (int i = 0; i < n; ++i) sum += sm[i] = std::exp(logits[i] - mx);
        double acc = 0;
        for (int i = 0; i < n; ++i)
            for (int f = 0; f < dim; ++f)
                acc += (sm[i] / sum) * cb[static_cast<size_t>(i) * dim + f] * w[f];
        return acc;
    };

    std::vector<double> out(dim);
    SteCache cache;
    codebook_lookup_train(cb, n, dim, v, out, &cache);
    std::vector<double> d_v(n, 0.0);
    codebook_lookup_train_backward(cb, n, dim, cache, w, {}, d_v);

    double h = 1e-6;
    for (int i = 0; i < n; ++i) {
        std::vector<double> vp = v, vm = v;
        vp[i] += h;
        vm[i] -= h;
        double fd = (relaxed(vp) - relaxed(vm)) / (2 * h);
        CHECK(d_v[i] == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("table gradient is the true derivative of the hard lookup") {
    const int n = 6, dim = 3;
    std::vector<double> cb = random_codebook(n, dim, 7);
    std::vector<double> v(n, 0.0);
    v[2] = 1.0;
    std::vector<double> w{0.3, -0.4, 0.9};

    std::vector<double> out(dim);
    SteCache cache;
    codebook_lookup_train(cb, n, dim, v, out, &cache);
    std::vector<double> d_cb(cb.size(), 0.0);
    codebook_lookup_train_backward(cb, n, dim, cache, w, d_cb, {});

    // The forward value reads only row argmax, so only that row carries grad.
    for (int r = 0; r < n; ++r)
        for (int f = 0; f < dim; ++f)
            CHECK(d_cb[static_cast<size_t>(r) * dim + f] == (r == 2 ? w[f] : 0.0));
}

TEST_CASE("frozen sinks accumulate nothing and crash nothing") {
    const int n = 4, dim = 2;
    std::vector<double> cb = random_codebook(n, dim, 8);
    std::vector<double> v{0.1, 0.9, -0.2, 0.0};
    std::vector<double> out(dim), w{1.0, 1.0};
    SteCache cache;
    codebook_lookup_train(cb, n, dim, v, out, &cache);
    CHECK_NOTHROW(codebook_lookup_train_backward(cb, n, dim, cache, w, {}, {}));
}

TEST_CASE("a fine-tuned row changes lookups only at that index") {
    const int n = 5, dim = 3;
    std::vector<double> base = random_codebook(n, dim, 9);
    std::vector<double> tuned = base;
    // One optimizer-style update on row 3.
    for (int f = 0; f < dim; ++f) tuned[static_cast<size_t>(3) * dim + f] -= 0.05;

    std::vector<double> a(dim), b(dim);
    for (int idx = 0; idx < n; ++idx) {
        codebook_lookup_infer(base, n, dim, static_cast<uint8_t>(idx), a);
        codebook_lookup_infer(tuned, n, dim, static_cast<uint8_t>(idx), b);
        if (idx == 3)
            CHECK(a != b);
        else
            CHECK(a == b);
    }
}
