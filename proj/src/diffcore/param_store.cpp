#include "igs/diffcore/param_store.hpp"

#include <algorithm>
#include <cmath>

#include "igs/core/errors.hpp"

namespace igs {

ParamBlock& ParamStore::add(const std::string& name, std::vector<int64_t> shape,
                            bool trainable) {
    if (blocks_.count(name))
        throw ValidationError("param block already exists: " + name);
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d <= 0) throw ValidationError("param block has non-positive dim: " + name);
        n *= d;
    }
    auto block = std::make_unique<ParamBlock>();
    block->name = name;
    block->shape = std::move(shape);
    block->value.assign(static_cast<size_t>(n), 0.0);
    block->grad.assign(static_cast<size_t>(n), 0.0);
    block->trainable = trainable;
    ParamBlock& ref = *block;
    blocks_[name] = std::move(block);
    order_.push_back(name);
    return ref;
}

ParamBlock& ParamStore::at(const std::string& name) {
    auto it = blocks_.find(name);
    if (it == blocks_.end()) throw ValidationError("no such param block: " + name);
    return *it->second;
}

const ParamBlock& ParamStore::at(const std::string& name) const {
    auto it = blocks_.find(name);
    if (it == blocks_.end()) throw ValidationError("no such param block: " + name);
    return *it->second;
}

bool ParamStore::has(const std::string& name) const { return blocks_.count(name) > 0; }

void ParamStore::remove(const std::string& name) {
    if (!blocks_.erase(name)) throw ValidationError("no such param block: " + name);
    order_.erase(std::find(order_.begin(), order_.end(), name));
}

void ParamStore::zero_grad() {
    for (auto& name : order_) {
        auto& g = blocks_[name]->grad;
        std::fill(g.begin(), g.end(), 0.0);
    }
}

int64_t ParamStore::total_params() const {
    int64_t n = 0;
    for (auto& name : order_) n += blocks_.at(name)->size();
    return n;
}

void ParamStore::check_finite_grads() const {
    for (auto& name : order_) {
        for (double g : blocks_.at(name)->grad)
            if (!std::isfinite(g))
                throw NumericalError("non-finite gradient in block: " + name);
    }
}

void ParamStore::check_finite_values() const {
    for (auto& name : order_) {
        for (double v : blocks_.at(name)->value)
            if (!std::isfinite(v))
                throw NumericalError("non-finite value in block: " + name);
    }
}

}  // namespace igs
