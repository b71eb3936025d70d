#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "spacefusion/params.hpp"
#include "spacefusion/tensor.hpp"

namespace spacefusion {

class Tape;

// Handle into a tape. Values are computed eagerly at construction; backward
// replays the tape in reverse, which is a valid topological order because
// every op's inputs predate it.
struct Var {
    Tape* tape = nullptr;
    int id = -1;
    const Tensor& value() const;
};

namespace detail {
struct Node;
}

class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(const Tensor& v);
    // Leaf bound to a parameter: backward() accumulates into p.grad. Repeated
    // calls with the same parameter return the same node.
    Var leaf(Parameter& p);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    // Broadcast a 1 x n bias row over every row of a.
    Var add_row(Var a, Var row);
    Var sigmoid(Var a);
    Var tanh(Var a);
    // Elementwise k*a + c.
    Var affine(Var a, double k, double c);
    // Gather rows of an embedding table; backward scatter-adds.
    Var embed_rows(Var table, const std::vector<int>& ids);
    // Row i of a scaled by w[i].
    Var scale_rows(Var a, const std::vector<double>& w);
    // logits (n x V), targets (n): returns n x 1 of log softmax at the target.
    Var pick_log_softmax(Var logits, const std::vector<int>& targets);
    // Scalar sum_i w[i] * a[i] over all entries, row-major. Result 1 x 1.
    Var weighted_sum(Var a, const std::vector<double>& w);
    // Scalar combination sum_i c[i] * x[i] of 1 x 1 vars.
    Var lin_comb(const std::vector<Var>& xs, const std::vector<double>& cs);
    // Fusion regularizer over batches zs, za (n x H): mean clipped RMS
    // distance of matched pairs minus mean clipped RMS distance within each
    // batch (i != j pairs, n^2 - n of them). Clip passes gradient when the
    // distance is <= clip; a zero distance contributes zero gradient.
    Var fuse_loss(Var zs, Var za, double clip);

    // Seeds d(root)=1 (root must be 1 x 1) and sweeps the tape in reverse.
    // Parameter leaves flush their accumulated grad into Parameter::grad.
    void backward(Var root);

    const Tensor& value(int id) const;
    const Tensor& grad(int id) const;
    std::size_t size() const { return nodes_.size(); }

private:
    friend struct Var;
    int push(std::unique_ptr<detail::Node> n);
    std::vector<std::unique_ptr<detail::Node>> nodes_;
    std::unordered_map<Parameter*, int> leaf_cache_;
};

}  // namespace spacefusion
