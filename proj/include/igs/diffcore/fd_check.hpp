#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "igs/diffcore/param_store.hpp"

namespace igs {

struct FdOptions {
    double h = 1e-5;
    int samples = 32;
    uint64_t seed = 0;
};

struct FdResult {
    double max_rel_err = 0.0;
    std::string worst_block;
    int64_t worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Compares the gradients already stored in `store` (caller ran the analytic
// backward pass) against central finite differences of loss_fn on sampled
// trainable coordinates. loss_fn must re-run the full forward from the
// current parameter values.
FdResult fd_check(ParamStore& store, const std::function<double()>& loss_fn,
                  const FdOptions& opts = {});

}  // namespace igs
