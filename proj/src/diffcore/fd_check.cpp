#include "igs/diffcore/fd_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "igs/core/errors.hpp"
#include "igs/core/rng.hpp"

namespace igs {

FdResult fd_check(ParamStore& store, const std::function<double()>& loss_fn,
                  const FdOptions& opts) {
    struct Coord {
        ParamBlock* block;
        int64_t index;
    };
    std::vector<Coord> coords;
    int64_t total = 0;
    for (const auto& name : store.order()) {
        ParamBlock& b = store.at(name);
        if (b.trainable) total += b.size();
    }
    if (total == 0) throw ValidationError("fd_check: no trainable coordinates");

    Rng rng(opts.seed);
    int samples = static_cast<int>(std::min<int64_t>(opts.samples, total));
    // Sample distinct global offsets, then resolve to (block, index).
    std::vector<int64_t> offsets;
    while (static_cast<int>(offsets.size()) < samples) {
        int64_t off = static_cast<int64_t>(rng.uniform() * static_cast<double>(total));
        off = std::min(off, total - 1);
        if (std::find(offsets.begin(), offsets.end(), off) == offsets.end())
            offsets.push_back(off);
    }
    for (int64_t off : offsets) {
        int64_t base = 0;
        for (const auto& name : store.order()) {
            ParamBlock& b = store.at(name);
            if (!b.trainable) continue;
            if (off < base + b.size()) {
                coords.push_back({&b, off - base});
                break;
            }
            base += b.size();
        }
    }

    FdResult res;
    for (const Coord& c : coords) {
        double saved = c.block->value[c.index];
        double analytic = c.block->grad[c.index];

        c.block->value[c.index] = saved + opts.h;
        double fp = loss_fn();
        c.block->value[c.index] = saved - opts.h;
        double fm = loss_fn();
        c.block->value[c.index] = saved;

        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericalError("fd_check: non-finite loss at " + c.block->name +
                                 "[" + std::to_string(c.index) + "]");

        double numeric = (fp - fm) / (2.0 * opts.h);
        double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
        double rel = std::abs(analytic - numeric) / denom;
        if (rel > res.max_rel_err) {
            res.max_rel_err = rel;
            res.worst_block = c.block->name;
            res.worst_index = c.index;
            res.analytic = analytic;
            res.numeric = numeric;
        }
    }
    return res;
}

}  // namespace igs
