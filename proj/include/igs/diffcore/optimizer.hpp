#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "igs/diffcore/param_store.hpp"

namespace igs {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Exponential decay from base to base*final_ratio over total_steps.
struct LrSchedule {
    double base = 1e-2;
    double final_ratio = 1.0;
    int64_t total_steps = 1;

    double at(int64_t step) const;
};

// Adam with per-block learning-rate multipliers. Frozen blocks are skipped
// entirely: no parameter update, no moment update.
class AdamState {
  public:
    explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

    void set_block_lr(const std::string& name, double mult) { block_lr_[name] = mult; }
    double block_lr(const std::string& name) const;

    LrSchedule schedule;

    int64_t step_count() const { return step_; }

    // One update over every trainable block; lr is the schedule value for this
    // step, multiplied per block by its registered multiplier.
    void step(ParamStore& store, double lr);

  private:
    struct Moments {
        std::vector<double> m, v;
    };
    AdamConfig cfg_;
    std::map<std::string, Moments> moments_;
    std::map<std::string, double> block_lr_;
    int64_t step_ = 0;
};

void adam_step(ParamStore& store, AdamState& state, double lr);

}  // namespace igs
