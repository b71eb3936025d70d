#pragma once

#include <string>
#include <vector>

#include "spacefusion/params.hpp"
#include "spacefusion/tape.hpp"
#include "spacefusion/tensor.hpp"

namespace spacefusion {

// Gated recurrent unit, original formulation:
//   r  = sigmoid(x Wr + h Ur + br)
//   u  = sigmoid(x Wu + h Uu + bu)
//   c  = tanh(x Wc + (r . h) Uc + bc)
//   h' = u . h + (1 - u) . c
// Weights are per gate; biases start at zero, weights uniform [-0.08, 0.08].
struct GruLayer {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    Parameter* Wr = nullptr;
    Parameter* Wu = nullptr;
    Parameter* Wc = nullptr;
    Parameter* Ur = nullptr;
    Parameter* Uu = nullptr;
    Parameter* Uc = nullptr;
    Parameter* br = nullptr;
    Parameter* bu = nullptr;
    Parameter* bc = nullptr;

    void init(ParameterSet& ps, const std::string& prefix, std::size_t in_dim,
              std::size_t h_dim, Rng& rng);

    // Frozen step over a whole batch: x (n x in), h (n x H) -> n x H.
    Tensor step(const Tensor& x, const Tensor& h) const;

    // Same math recorded on a tape.
    Var step(Tape& t, Var x, Var h) const;
};

// Stack of GRU layers; layer l feeds its hidden state to layer l+1.
struct GruStack {
    std::vector<GruLayer> layers;
    std::size_t hidden_dim = 0;

    void init(ParameterSet& ps, const std::string& prefix, std::size_t in_dim,
              std::size_t h_dim, std::size_t n_layers, Rng& rng);

    // One time step through all layers. states[l] is layer l's hidden state
    // and is replaced in place.
    Tensor step(const Tensor& x, std::vector<Tensor>& states) const;
    Var step(Tape& t, Var x, std::vector<Var>& states) const;

    // Frozen full sequence: inputs (T x input_dim), one row per step.
    struct ForwardResult {
        Tensor top_states;  // T x H
        std::vector<Tensor> final_states;
    };
    ForwardResult forward(const Tensor& inputs,
                          std::vector<Tensor> init_states) const;
};

}  // namespace spacefusion
