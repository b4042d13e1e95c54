#include "scen/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "scen/errors.hpp"

namespace scen {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string describe(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    for (std::size_t d : shape_) {
        if (d == 0) throw ShapeError("Tensor: zero dimension in shape " + describe(shape_));
    }
    data_.assign(product(shape_), 0.0);
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    for (std::size_t d : shape_) {
        if (d == 0) throw ShapeError("Tensor: zero dimension in shape " + describe(shape_));
    }
    if (product(shape_) != data_.size()) {
        throw ShapeError("Tensor: shape " + describe(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
    }
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::vector(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

std::size_t Tensor::rows() const {
    if (ndim() != 2) throw ShapeError("Tensor::rows: tensor is not rank-2, shape " + shape_str());
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (ndim() != 2) throw ShapeError("Tensor::cols: tensor is not rank-2, shape " + shape_str());
    return shape_[1];
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Tensor::shape_str() const { return describe(shape_); }

}  // namespace scen
