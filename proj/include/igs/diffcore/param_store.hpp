#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace igs {

// One named tensor of 64-bit parameters with its gradient buffer.
struct ParamBlock {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool trainable = true;

    int64_t size() const { return static_cast<int64_t>(value.size()); }
};

// Owns every trainable tensor of a model. Blocks keep insertion order so
// optimizer sweeps and serialization are deterministic.
class ParamStore {
  public:
    ParamBlock& add(const std::string& name, std::vector<int64_t> shape,
                    bool trainable = true);
    ParamBlock& at(const std::string& name);
    const ParamBlock& at(const std::string& name) const;
    bool has(const std::string& name) const;
    void remove(const std::string& name);

    void zero_grad();
    int64_t total_params() const;

    std::span<double> values(const std::string& name) { return at(name).value; }
    std::span<const double> values(const std::string& name) const { return at(name).value; }
    std::span<double> grads(const std::string& name) { return at(name).grad; }

    const std::vector<std::string>& order() const { return order_; }

    // Throws NumericalError naming the first block holding a non-finite value
    // or gradient.
    void check_finite_grads() const;
    void check_finite_values() const;

  private:
    std::map<std::string, std::unique_ptr<ParamBlock>> blocks_;
    std::vector<std::string> order_;
};

}  // namespace igs
