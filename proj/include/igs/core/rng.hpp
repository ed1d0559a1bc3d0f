#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "igs/core/vecmath.hpp"

namespace igs {

// mt19937_64 with hand-rolled distributions so streams are identical across
// standard libraries.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    int uniform_int(int n) {
        return static_cast<int>(uniform() * static_cast<double>(n)) % n;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    Vec3 uniform_vec3(double lo, double hi) {
        double a = uniform(lo, hi);
        double b = uniform(lo, hi);
        double c = uniform(lo, hi);
        return {a, b, c};
    }

    Vec4 unit_quaternion() {
        Vec4 q(normal(), normal(), normal(), normal());
        double n = q.norm();
        if (n < 1e-12) return {1, 0, 0, 0};
        return {q.w / n, q.x / n, q.y / n, q.z / n};
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(static_cast<int>(i)));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace igs
