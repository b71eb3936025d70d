#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace spacefusion {

// Dense row-major matrix of doubles. Everything in the model is rank 1 or 2,
// so a (rows, cols) pair covers all shapes; vectors are 1 x n or n x 1.
class Tensor {
public:
    Tensor() : rows_(0), cols_(0) {}
    Tensor(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    void fill(double v);
    bool same_shape(const Tensor& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_;
    }
    std::string shape_str() const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

// out = a * b, shapes (m x k) (k x n). Throws ConfigError on mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);

// Elementwise; shapes must match.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// Broadcast a 1 x n row across every row of a.
Tensor add_row(const Tensor& a, const Tensor& row);

Tensor scale(const Tensor& a, double s);

void matmul_into(const Tensor& a, const Tensor& b, Tensor& out);

// a += b * s
void axpy(Tensor& a, const Tensor& b, double s);

}  // namespace spacefusion
