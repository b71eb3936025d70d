#include "spacefusion/params.hpp"

#include <cmath>

#include "spacefusion/errors.hpp"

namespace spacefusion {

Parameter& ParameterSet::create(const std::string& name, std::size_t rows,
                                std::size_t cols) {
    if (find(name)) throw ConfigError("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->value = Tensor(rows, cols);
    p->grad = Tensor(rows, cols);
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
    for (auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

const Parameter* ParameterSet::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

std::vector<Parameter*> ParameterSet::all() {
    std::vector<Parameter*> out;
    out.reserve(params_.size());
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
    std::vector<const Parameter*> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.get());
    return out;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

void ParameterSet::zero_grads() {
    for (auto& p : params_) p->grad.fill(0.0);
}

std::vector<Tensor> ParameterSet::snapshot_values() const {
    std::vector<Tensor> snap;
    snap.reserve(params_.size());
    for (const auto& p : params_) snap.push_back(p->value);
    return snap;
}

void ParameterSet::restore_values(const std::vector<Tensor>& snap) {
    if (snap.size() != params_.size())
        throw ConfigError("snapshot size mismatch");
    for (std::size_t i = 0; i < snap.size(); ++i) {
        if (!snap[i].same_shape(params_[i]->value))
            throw ConfigError("snapshot shape mismatch for " + params_[i]->name);
        params_[i]->value = snap[i];
    }
}

void init_uniform(Parameter& p, Rng& rng, double half_range) {
    for (double& v : p.value.vec())
        v = (rng.uniform01() * 2.0 - 1.0) * half_range;
}

AdamOptimizer::AdamOptimizer(ParameterSet& params, double lr, double beta1,
                             double beta2, double eps)
    : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const Parameter* p : params_.all()) {
        m_.emplace_back(p->value.rows(), p->value.cols());
        v_.emplace_back(p->value.rows(), p->value.cols());
    }
}

void AdamOptimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto params = params_.all();
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            const double g = p.grad.vec()[k];
            double& m = m_[i].vec()[k];
            double& v = v_[i].vec()[k];
            m = beta1_ * m + (1.0 - beta1_) * g;
            v = beta2_ * v + (1.0 - beta2_) * g * g;
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            p.value.vec()[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
    params_.zero_grads();
}

}  // namespace spacefusion
