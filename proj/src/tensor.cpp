#include "spacefusion/tensor.hpp"

#include <algorithm>

#include "spacefusion/errors.hpp"

namespace spacefusion {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ConfigError("tensor data size " + std::to_string(data_.size()) +
                          " does not match shape " + shape_str());
    }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Tensor::shape_str() const {
    return "(" + std::to_string(rows_) + " x " + std::to_string(cols_) + ")";
}

void matmul_into(const Tensor& a, const Tensor& b, Tensor& out) {
    if (a.cols() != b.rows()) {
        throw ConfigError("matmul shape mismatch " + a.shape_str() + " * " +
                          b.shape_str());
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (out.rows() != m || out.cols() != n) out = Tensor(m, n);
    out.fill(0.0);
    const double* ap = a.data();
    const double* bp = b.data();
    double* op = out.data();
    // ikj order keeps the inner loop contiguous in both b and out.
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = ap[i * k + kk];
            if (av == 0.0) continue;
            const double* brow = bp + kk * n;
            double* orow = op + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    Tensor out;
    matmul_into(a, b, out);
    return out;
}

static void check_same(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ConfigError(std::string(op) + " shape mismatch " + a.shape_str() +
                          " vs " + b.shape_str());
    }
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same(a, b, "add");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.vec()[i] += b.vec()[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.vec()[i] -= b.vec()[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same(a, b, "mul");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.vec()[i] *= b.vec()[i];
    return out;
}

Tensor add_row(const Tensor& a, const Tensor& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        throw ConfigError("add_row shape mismatch " + a.shape_str() + " + " +
                          row.shape_str());
    }
    Tensor out = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) += row.at(0, j);
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = a;
    for (double& v : out.vec()) v *= s;
    return out;
}

void axpy(Tensor& a, const Tensor& b, double s) {
    check_same(a, b, "axpy");
    for (std::size_t i = 0; i < a.size(); ++i) a.vec()[i] += b.vec()[i] * s;
}

}  // namespace spacefusion
