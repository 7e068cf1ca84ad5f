#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "medfuse/error.hpp"

namespace medfuse {

// Dense row-major 64-bit float tensor. The tape restricts itself to rank-2
// values (a vector is 1 x n, a scalar 1 x 1); the type itself allows any rank.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != data_.size()) {
            throw ShapeError("Tensor: shape/data size mismatch: shape " + shape_str() +
                             " vs " + std::to_string(data_.size()) + " values");
        }
    }

    static Tensor zeros(std::vector<std::size_t> shape) {
        std::size_t n = count(shape);
        return Tensor(std::move(shape), std::vector<double>(n, 0.0));
    }

    static Tensor full(std::vector<std::size_t> shape, double v) {
        std::size_t n = count(shape);
        return Tensor(std::move(shape), std::vector<double>(n, v));
    }

    static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }

    static Tensor row(std::vector<double> values) {
        std::size_t n = values.size();
        return Tensor({1, n}, std::move(values));
    }

    static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> values) {
        return Tensor({r, c}, std::move(values));
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t rank() const { return shape_.size(); }
    std::size_t rows() const { require_rank2(); return shape_[0]; }
    std::size_t cols() const { require_rank2(); return shape_[1]; }
    bool is_scalar() const { return rank() == 2 && shape_[0] == 1 && shape_[1] == 1; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    double item() const {
        if (size() != 1) throw ShapeError("Tensor::item on non-scalar of shape " + shape_str());
        return data_[0];
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

    bool all_finite() const;

private:
    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t d : shape) {
            if (d == 0) throw ShapeError("Tensor: zero dimension");
            n *= d;
        }
        return shape.empty() ? 0 : n;
    }

    void require_rank2() const {
        if (rank() != 2) throw ShapeError("expected rank-2 tensor, got " + shape_str());
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// out = a^T for row-major matrices. Pure data movement.
Tensor transposed(const Tensor& a);

}  // namespace medfuse
