#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "spacefusion/rng.hpp"
#include "spacefusion/tensor.hpp"

namespace spacefusion {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;  // same shape as value, accumulated by Tape::backward
};

// Owns all trainable parameters. Registration order is the canonical order
// for checkpoints and optimizer state, so construction must be deterministic.
class ParameterSet {
public:
    Parameter& create(const std::string& name, std::size_t rows, std::size_t cols);
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;

    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
    std::size_t count() const { return params_.size(); }
    std::size_t scalar_count() const;

    void zero_grads();

    // Copy of every value tensor in registration order (early-stopping snapshots).
    std::vector<Tensor> snapshot_values() const;
    void restore_values(const std::vector<Tensor>& snap);

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

// Uniform[-0.08, 0.08] init for weights; call sites zero biases by skipping this.
void init_uniform(Parameter& p, Rng& rng, double half_range = 0.08);

class AdamOptimizer {
public:
    AdamOptimizer(ParameterSet& params, double lr, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8);

    // Applies one update from the accumulated grads, then clears them.
    void step();

    double lr() const { return lr_; }

private:
    ParameterSet& params_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace spacefusion
