#pragma once

#include "igs/core/vecmath.hpp"

namespace igs {

inline constexpr double kMaskThresholdDefault = 0.01;

// Binary straight-through mask. Forward value is the hard gate; the backward
// pass uses the sigmoid slope on both branches.
inline bool mask_bit(double logit, double threshold) {
    return sigmoid(logit) > threshold;
}

inline double mask_value(double logit, double threshold) {
    return mask_bit(logit, threshold) ? 1.0 : 0.0;
}

inline double mask_grad(double logit) {
    double s = sigmoid(logit);
    return s * (1.0 - s);
}

// Relaxed surrogate whose derivative the straight-through gradient copies;
// finite-difference oracles run against this path.
inline double mask_relaxed(double logit) { return sigmoid(logit); }

}  // namespace igs
