#include "igs/diffcore/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "igs/core/errors.hpp"

namespace igs {

double LrSchedule::at(int64_t step) const {
    if (total_steps <= 0 || final_ratio == 1.0) return base;
    double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
    return base * std::pow(final_ratio, t);
}

double AdamState::block_lr(const std::string& name) const {
    auto it = block_lr_.find(name);
    return it == block_lr_.end() ? 1.0 : it->second;
}

void AdamState::step(ParamStore& store, double lr) {
    ++step_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (const auto& name : store.order()) {
        ParamBlock& b = store.at(name);
        if (!b.trainable) continue;
        Moments& mo = moments_[name];
        if (mo.m.empty()) {
            mo.m.assign(b.value.size(), 0.0);
            mo.v.assign(b.value.size(), 0.0);
        }
        double blr = lr * block_lr(name);
        for (size_t i = 0; i < b.value.size(); ++i) {
            double g = b.grad[i];
            if (!std::isfinite(g))
                throw NumericalError("non-finite gradient in block: " + name);
            mo.m[i] = cfg_.beta1 * mo.m[i] + (1.0 - cfg_.beta1) * g;
            mo.v[i] = cfg_.beta2 * mo.v[i] + (1.0 - cfg_.beta2) * g * g;
            double mhat = mo.m[i] / bc1;
            double vhat = mo.v[i] / bc2;
            b.value[i] -= blr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void adam_step(ParamStore& store, AdamState& state, double lr) {
    state.step(store, lr);
}

}  // namespace igs
