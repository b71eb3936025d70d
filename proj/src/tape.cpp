#include "spacefusion/tape.hpp"

#include <cmath>

#include "spacefusion/errors.hpp"

namespace spacefusion {

namespace detail {

struct Node {
    Tensor value;
    Tensor grad;
    virtual void backward(std::vector<std::unique_ptr<Node>>& nodes) = 0;
    virtual Parameter* bound_param() { return nullptr; }
    virtual ~Node() = default;
};

namespace {

Tensor& gref(std::vector<std::unique_ptr<Node>>& nodes, int id) {
    return nodes[static_cast<std::size_t>(id)]->grad;
}
const Tensor& vref(std::vector<std::unique_ptr<Node>>& nodes, int id) {
    return nodes[static_cast<std::size_t>(id)]->value;
}

struct LeafNode : Node {
    Parameter* param = nullptr;  // null for constants
    void backward(std::vector<std::unique_ptr<Node>>&) override {}
    Parameter* bound_param() override { return param; }
};

struct MatMulNode : Node {
    int a, b;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        const Tensor& av = vref(nodes, a);
        const Tensor& bv = vref(nodes, b);
        Tensor& ag = gref(nodes, a);
        Tensor& bg = gref(nodes, b);
        // dA = dC * B^T, dB = A^T * dC; written as loops to avoid transposing.
        const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t kk = 0; kk < k; ++kk) {
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    s += grad.at(i, j) * bv.at(kk, j);
                ag.at(i, kk) += s;
            }
        for (std::size_t kk = 0; kk < k; ++kk)
            for (std::size_t i = 0; i < m; ++i) {
                const double av_ik = av.at(i, kk);
                if (av_ik == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j)
                    bg.at(kk, j) += av_ik * grad.at(i, j);
            }
    }
};

struct AddNode : Node {
    int a, b;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        axpy(gref(nodes, a), grad, 1.0);
        axpy(gref(nodes, b), grad, 1.0);
    }
};

struct SubNode : Node {
    int a, b;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        axpy(gref(nodes, a), grad, 1.0);
        axpy(gref(nodes, b), grad, -1.0);
    }
};

struct MulNode : Node {
    int a, b;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        const Tensor& av = vref(nodes, a);
        const Tensor& bv = vref(nodes, b);
        Tensor& ag = gref(nodes, a);
        Tensor& bg = gref(nodes, b);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            ag.vec()[i] += grad.vec()[i] * bv.vec()[i];
            bg.vec()[i] += grad.vec()[i] * av.vec()[i];
        }
    }
};

struct AddRowNode : Node {
    int a, row;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        axpy(gref(nodes, a), grad, 1.0);
        Tensor& rg = gref(nodes, row);
        for (std::size_t i = 0; i < grad.rows(); ++i)
            for (std::size_t j = 0; j < grad.cols(); ++j)
                rg.at(0, j) += grad.at(i, j);
    }
};

struct SigmoidNode : Node {
    int a;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        Tensor& ag = gref(nodes, a);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double y = value.vec()[i];
            ag.vec()[i] += grad.vec()[i] * y * (1.0 - y);
        }
    }
};

struct TanhNode : Node {
    int a;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        Tensor& ag = gref(nodes, a);
        for (std::size_t i = 0; i < grad.size(); ++i) {
            const double y = value.vec()[i];
            ag.vec()[i] += grad.vec()[i] * (1.0 - y * y);
        }
    }
};

struct AffineNode : Node {
    int a;
    double k;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        axpy(gref(nodes, a), grad, k);
    }
};

struct EmbedRowsNode : Node {
    int table;
    std::vector<int> ids;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        Tensor& tg = gref(nodes, table);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const std::size_t r = static_cast<std::size_t>(ids[i]);
            for (std::size_t j = 0; j < grad.cols(); ++j)
                tg.at(r, j) += grad.at(i, j);
        }
    }
};

struct ScaleRowsNode : Node {
    int a;
    std::vector<double> w;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        Tensor& ag = gref(nodes, a);
        for (std::size_t i = 0; i < grad.rows(); ++i)
            for (std::size_t j = 0; j < grad.cols(); ++j)
                ag.at(i, j) += grad.at(i, j) * w[i];
    }
};

struct PickLogSoftmaxNode : Node {
    int logits;
    std::vector<int> targets;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        const Tensor& lv = vref(nodes, logits);
        Tensor& lg = gref(nodes, logits);
        const std::size_t n = lv.rows(), v = lv.cols();
        for (std::size_t i = 0; i < n; ++i) {
            const double g = grad.at(i, 0);
            if (g == 0.0) continue;
            // value(i) = logit[t] - lse(row), so d/d logit[j] = 1{j==t} - p_j.
            const double lse = lv.at(i, static_cast<std::size_t>(targets[i])) -
                               value.at(i, 0);
            for (std::size_t j = 0; j < v; ++j)
                lg.at(i, j) -= g * std::exp(lv.at(i, j) - lse);
            lg.at(i, static_cast<std::size_t>(targets[i])) += g;
        }
    }
};

struct WeightedSumNode : Node {
    int a;
    std::vector<double> w;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        Tensor& ag = gref(nodes, a);
        const double g = grad.at(0, 0);
        for (std::size_t i = 0; i < ag.size(); ++i)
            ag.vec()[i] += g * w[i];
    }
};

struct LinCombNode : Node {
    std::vector<int> xs;
    std::vector<double> cs;
    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        const double g = grad.at(0, 0);
        for (std::size_t i = 0; i < xs.size(); ++i)
            gref(nodes, xs[i]).at(0, 0) += g * cs[i];
    }
};

// RMS distance between rows u and v of two n x H batches.
double rms_dist(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) {
        const double d = a.at(i, k) - b.at(j, k);
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.cols()));
}

struct FuseLossNode : Node {
    int zs, za;
    double clip;

    // Accumulates the gradient of min(rms(u_i, v_j), clip) scaled by coef into
    // the grads of both rows. Zero distance and clipped distance pass nothing.
    static void pair_grad(const Tensor& uv, Tensor& ug, std::size_t i,
                          const Tensor& vv, Tensor& vg, std::size_t j,
                          double d, double clip, double coef) {
        if (d > clip || d == 0.0) return;
        const double f = coef / (d * static_cast<double>(uv.cols()));
        for (std::size_t k = 0; k < uv.cols(); ++k) {
            const double diff = (uv.at(i, k) - vv.at(j, k)) * f;
            ug.at(i, k) += diff;
            vg.at(j, k) -= diff;
        }
    }

    void backward(std::vector<std::unique_ptr<Node>>& nodes) override {
        const Tensor& sv = vref(nodes, zs);
        const Tensor& av = vref(nodes, za);
        Tensor& sg = gref(nodes, zs);
        Tensor& ag = gref(nodes, za);
        const double g = grad.at(0, 0);
        const std::size_t n = sv.rows();
        const double cm = g / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            pair_grad(sv, sg, i, av, ag, i, rms_dist(sv, i, av, i), clip, cm);
        if (n >= 2) {
            // Each unordered pair appears twice in the i != j sum.
            const double cw = -2.0 * g / static_cast<double>(n * n - n);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) {
                    pair_grad(sv, sg, i, sv, sg, j, rms_dist(sv, i, sv, j),
                              clip, cw);
                    pair_grad(av, ag, i, av, ag, j, rms_dist(av, i, av, j),
                              clip, cw);
                }
        }
    }
};

}  // namespace

}  // namespace detail

using detail::Node;

const Tensor& Var::value() const { return tape->value(id); }

Tape::Tape() = default;
Tape::~Tape() = default;

int Tape::push(std::unique_ptr<Node> n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

const Tensor& Tape::value(int id) const {
    return nodes_[static_cast<std::size_t>(id)]->value;
}

const Tensor& Tape::grad(int id) const {
    return nodes_[static_cast<std::size_t>(id)]->grad;
}

Var Tape::constant(const Tensor& v) {
    auto n = std::make_unique<detail::LeafNode>();
    n->value = v;
    return {this, push(std::move(n))};
}

Var Tape::leaf(Parameter& p) {
    auto it = leaf_cache_.find(&p);
    if (it != leaf_cache_.end()) return {this, it->second};
    auto n = std::make_unique<detail::LeafNode>();
    n->value = p.value;
    n->param = &p;
    const int id = push(std::move(n));
    leaf_cache_.emplace(&p, id);
    return {this, id};
}

Var Tape::matmul(Var a, Var b) {
    auto n = std::make_unique<detail::MatMulNode>();
    n->a = a.id;
    n->b = b.id;
    matmul_into(value(a.id), value(b.id), n->value);
    return {this, push(std::move(n))};
}

Var Tape::add(Var a, Var b) {
    auto n = std::make_unique<detail::AddNode>();
    n->a = a.id;
    n->b = b.id;
    n->value = spacefusion::add(value(a.id), value(b.id));
    return {this, push(std::move(n))};
}

Var Tape::sub(Var a, Var b) {
    auto n = std::make_unique<detail::SubNode>();
    n->a = a.id;
    n->b = b.id;
    n->value = spacefusion::sub(value(a.id), value(b.id));
    return {this, push(std::move(n))};
}

Var Tape::mul(Var a, Var b) {
    auto n = std::make_unique<detail::MulNode>();
    n->a = a.id;
    n->b = b.id;
    n->value = spacefusion::mul(value(a.id), value(b.id));
    return {this, push(std::move(n))};
}

Var Tape::add_row(Var a, Var row) {
    auto n = std::make_unique<detail::AddRowNode>();
    n->a = a.id;
    n->row = row.id;
    n->value = spacefusion::add_row(value(a.id), value(row.id));
    return {this, push(std::move(n))};
}

Var Tape::sigmoid(Var a) {
    auto n = std::make_unique<detail::SigmoidNode>();
    n->a = a.id;
    n->value = value(a.id);
    for (double& x : n->value.vec()) x = 1.0 / (1.0 + std::exp(-x));
    return {this, push(std::move(n))};
}

Var Tape::tanh(Var a) {
    auto n = std::make_unique<detail::TanhNode>();
    n->a = a.id;
    n->value = value(a.id);
    for (double& x : n->value.vec()) x = std::tanh(x);
    return {this, push(std::move(n))};
}

Var Tape::affine(Var a, double k, double c) {
    auto n = std::make_unique<detail::AffineNode>();
    n->a = a.id;
    n->k = k;
    n->value = value(a.id);
    for (double& x : n->value.vec()) x = k * x + c;
    return {this, push(std::move(n))};
}

Var Tape::embed_rows(Var table, const std::vector<int>& ids) {
    const Tensor& tv = value(table.id);
    auto n = std::make_unique<detail::EmbedRowsNode>();
    n->table = table.id;
    n->ids = ids;
    n->value = Tensor(ids.size(), tv.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= tv.rows())
            throw DataError("embed_rows index out of range");
        for (std::size_t j = 0; j < tv.cols(); ++j)
            n->value.at(i, j) = tv.at(static_cast<std::size_t>(ids[i]), j);
    }
    return {this, push(std::move(n))};
}

Var Tape::scale_rows(Var a, const std::vector<double>& w) {
    const Tensor& av = value(a.id);
    if (w.size() != av.rows()) throw ConfigError("scale_rows weight count");
    auto n = std::make_unique<detail::ScaleRowsNode>();
    n->a = a.id;
    n->w = w;
    n->value = av;
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) n->value.at(i, j) *= w[i];
    return {this, push(std::move(n))};
}

Var Tape::pick_log_softmax(Var logits, const std::vector<int>& targets) {
    const Tensor& lv = value(logits.id);
    if (targets.size() != lv.rows())
        throw ConfigError("pick_log_softmax target count");
    auto n = std::make_unique<detail::PickLogSoftmaxNode>();
    n->logits = logits.id;
    n->targets = targets;
    n->value = Tensor(lv.rows(), 1);
    for (std::size_t i = 0; i < lv.rows(); ++i) {
        const int t = targets[i];
        if (t < 0 || static_cast<std::size_t>(t) >= lv.cols())
            throw DataError("pick_log_softmax target out of range");
        double mx = lv.at(i, 0);
        for (std::size_t j = 1; j < lv.cols(); ++j)
            mx = std::max(mx, lv.at(i, j));
        double se = 0.0;
        for (std::size_t j = 0; j < lv.cols(); ++j)
            se += std::exp(lv.at(i, j) - mx);
        n->value.at(i, 0) =
            lv.at(i, static_cast<std::size_t>(t)) - (mx + std::log(se));
    }
    return {this, push(std::move(n))};
}

Var Tape::weighted_sum(Var a, const std::vector<double>& w) {
    const Tensor& av = value(a.id);
    if (w.size() != av.size()) throw ConfigError("weighted_sum weight count");
    auto n = std::make_unique<detail::WeightedSumNode>();
    n->a = a.id;
    n->w = w;
    n->value = Tensor(1, 1);
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += av.vec()[i] * w[i];
    n->value.at(0, 0) = s;
    return {this, push(std::move(n))};
}

Var Tape::lin_comb(const std::vector<Var>& xs, const std::vector<double>& cs) {
    if (xs.size() != cs.size()) throw ConfigError("lin_comb arity mismatch");
    auto n = std::make_unique<detail::LinCombNode>();
    n->cs = cs;
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const Tensor& xv = value(xs[i].id);
        if (xv.rows() != 1 || xv.cols() != 1)
            throw ConfigError("lin_comb input must be scalar");
        n->xs.push_back(xs[i].id);
        s += cs[i] * xv.at(0, 0);
    }
    n->value = Tensor(1, 1);
    n->value.at(0, 0) = s;
    return {this, push(std::move(n))};
}

Var Tape::fuse_loss(Var zs, Var za, double clip) {
    const Tensor& sv = value(zs.id);
    const Tensor& av = value(za.id);
    if (!sv.same_shape(av)) throw ConfigError("fuse_loss shape mismatch");
    auto n = std::make_unique<detail::FuseLossNode>();
    n->zs = zs.id;
    n->za = za.id;
    n->clip = clip;
    const std::size_t nb = sv.rows();
    double matched = 0.0, within = 0.0;
    for (std::size_t i = 0; i < nb; ++i)
        matched += std::min(detail::rms_dist(sv, i, av, i), clip);
    matched /= static_cast<double>(nb);
    if (nb >= 2) {
        for (std::size_t i = 0; i < nb; ++i)
            for (std::size_t j = i + 1; j < nb; ++j) {
                within += 2.0 * std::min(detail::rms_dist(sv, i, sv, j), clip);
                within += 2.0 * std::min(detail::rms_dist(av, i, av, j), clip);
            }
        within /= static_cast<double>(nb * nb - nb);
    }
    n->value = Tensor(1, 1);
    n->value.at(0, 0) = matched - within;
    return {this, push(std::move(n))};
}

void Tape::backward(Var root) {
    const Tensor& rv = value(root.id);
    if (rv.rows() != 1 || rv.cols() != 1)
        throw ConfigError("backward root must be scalar");
    for (auto& n : nodes_) {
        n->grad = Tensor(n->value.rows(), n->value.cols());
    }
    nodes_[static_cast<std::size_t>(root.id)]->grad.at(0, 0) = 1.0;
    for (int i = root.id; i >= 0; --i)
        nodes_[static_cast<std::size_t>(i)]->backward(nodes_);
    for (auto& n : nodes_) {
        if (Parameter* p = n->bound_param())
            axpy(p->grad, n->grad, 1.0);
    }
}

}  // namespace spacefusion
