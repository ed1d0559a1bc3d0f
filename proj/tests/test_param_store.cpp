#include <doctest.h>

#include <cmath>

#include "igs/core/errors.hpp"
#include "igs/diffcore/param_store.hpp"

using namespace igs;

TEST_CASE("blocks keep shape, gradient buffer matches") {
    ParamStore p;
    ParamBlock& b = p.add("w", {2, 3});
    CHECK(b.size() == 6);
    CHECK(b.grad.size() == 6);
    CHECK(b.trainable);
    CHECK(p.total_params() == 6);
}

TEST_CASE("duplicate names rejected") {
    ParamStore p;
    p.add("w", {2});
    CHECK_THROWS_AS(p.add("w", {3}), ValidationError);
}

TEST_CASE("insertion order preserved, remove works") {
    ParamStore p;
    p.add("b", {1});
    p.add("a", {1});
    p.add("c", {1});
    CHECK(p.order() == std::vector<std::string>{"b", "a", "c"});
    p.remove("a");
    CHECK(p.order() == std::vector<std::string>{"b", "c"});
    CHECK_FALSE(p.has("a"));
    CHECK_THROWS_AS(p.at("a"), ValidationError);
}

TEST_CASE("zero_grad clears every block") {
    ParamStore p;
    p.add("w", {4});
    p.grads("w")[2] = 7.0;
    p.zero_grad();
    for (double g : p.grads("w")) CHECK(g == 0.0);
}

TEST_CASE("non-finite detection names the block") {
    ParamStore p;
    p.add("fine", {2});
    p.add("broken", {2});
    p.grads("broken")[1] = std::nan("");
    try {
        p.check_finite_grads();
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("broken") != std::string::npos);
    }

    p.zero_grad();
    CHECK_NOTHROW(p.check_finite_grads());
    p.values("broken")[0] = INFINITY;
    CHECK_THROWS_AS(p.check_finite_values(), NumericalError);
}
