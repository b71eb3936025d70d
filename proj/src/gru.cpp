#include "spacefusion/gru.hpp"

#include <cmath>

#include "spacefusion/errors.hpp"

namespace spacefusion {

void GruLayer::init(ParameterSet& ps, const std::string& prefix,
                    std::size_t in_dim, std::size_t h_dim, Rng& rng) {
    input_dim = in_dim;
    hidden_dim = h_dim;
    Wr = &ps.create(prefix + ".Wr", in_dim, h_dim);
    Wu = &ps.create(prefix + ".Wu", in_dim, h_dim);
    Wc = &ps.create(prefix + ".Wc", in_dim, h_dim);
    Ur = &ps.create(prefix + ".Ur", h_dim, h_dim);
    Uu = &ps.create(prefix + ".Uu", h_dim, h_dim);
    Uc = &ps.create(prefix + ".Uc", h_dim, h_dim);
    br = &ps.create(prefix + ".br", 1, h_dim);
    bu = &ps.create(prefix + ".bu", 1, h_dim);
    bc = &ps.create(prefix + ".bc", 1, h_dim);
    init_uniform(*Wr, rng);
    init_uniform(*Wu, rng);
    init_uniform(*Wc, rng);
    init_uniform(*Ur, rng);
    init_uniform(*Uu, rng);
    init_uniform(*Uc, rng);
}

static void sigmoid_inplace(Tensor& t) {
    for (double& x : t.vec()) x = 1.0 / (1.0 + std::exp(-x));
}

static void tanh_inplace(Tensor& t) {
    for (double& x : t.vec()) x = std::tanh(x);
}

Tensor GruLayer::step(const Tensor& x, const Tensor& h) const {
    Tensor r = add_row(add(matmul(x, Wr->value), matmul(h, Ur->value)), br->value);
    sigmoid_inplace(r);
    Tensor u = add_row(add(matmul(x, Wu->value), matmul(h, Uu->value)), bu->value);
    sigmoid_inplace(u);
    Tensor c = add_row(add(matmul(x, Wc->value), matmul(mul(r, h), Uc->value)),
                       bc->value);
    tanh_inplace(c);
    Tensor out(h.rows(), h.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double uu = u.vec()[i];
        out.vec()[i] = uu * h.vec()[i] + (1.0 - uu) * c.vec()[i];
    }
    return out;
}

Var GruLayer::step(Tape& t, Var x, Var h) const {
    Var r = t.sigmoid(t.add_row(
        t.add(t.matmul(x, t.leaf(*Wr)), t.matmul(h, t.leaf(*Ur))), t.leaf(*br)));
    Var u = t.sigmoid(t.add_row(
        t.add(t.matmul(x, t.leaf(*Wu)), t.matmul(h, t.leaf(*Uu))), t.leaf(*bu)));
    Var c = t.tanh(t.add_row(
        t.add(t.matmul(x, t.leaf(*Wc)), t.matmul(t.mul(r, h), t.leaf(*Uc))),
        t.leaf(*bc)));
    return t.add(t.mul(u, h), t.mul(t.affine(u, -1.0, 1.0), c));
}

void GruStack::init(ParameterSet& ps, const std::string& prefix,
                    std::size_t in_dim, std::size_t h_dim, std::size_t n_layers,
                    Rng& rng) {
    hidden_dim = h_dim;
    layers.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        layers[l].init(ps, prefix + ".l" + std::to_string(l),
                       l == 0 ? in_dim : h_dim, h_dim, rng);
    }
}

Tensor GruStack::step(const Tensor& x, std::vector<Tensor>& states) const {
    if (states.size() != layers.size())
        throw ConfigError("gru stack state count mismatch");
    Tensor inp = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        states[l] = layers[l].step(inp, states[l]);
        inp = states[l];
    }
    return inp;
}

GruStack::ForwardResult GruStack::forward(
    const Tensor& inputs, std::vector<Tensor> init_states) const {
    if (!layers.empty() && inputs.cols() != layers.front().input_dim)
        throw ConfigError("gru forward: input width mismatch");
    ForwardResult r;
    r.final_states = std::move(init_states);
    r.top_states = Tensor(inputs.rows(), hidden_dim);
    for (std::size_t t = 0; t < inputs.rows(); ++t) {
        Tensor x(1, inputs.cols());
        for (std::size_t j = 0; j < inputs.cols(); ++j)
            x.at(0, j) = inputs.at(t, j);
        const Tensor top = step(x, r.final_states);
        for (std::size_t j = 0; j < hidden_dim; ++j)
            r.top_states.at(t, j) = top.at(0, j);
    }
    return r;
}

Var GruStack::step(Tape& t, Var x, std::vector<Var>& states) const {
    if (states.size() != layers.size())
        throw ConfigError("gru stack state count mismatch");
    Var inp = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        states[l] = layers[l].step(t, inp, states[l]);
        inp = states[l];
    }
    return inp;
}

}  // namespace spacefusion
