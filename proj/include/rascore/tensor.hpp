#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "rascore/common.hpp"

namespace rascore {

/// Dense row-major tensor of doubles. Image batches are laid out NCHW,
/// feature matrices as (rows, cols).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(element_count(shape_), 0.0);
    }
    Tensor(std::vector<int> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (static_cast<std::int64_t>(data_.size()) != element_count(shape_)) {
            throw ValidationError("tensor data does not match shape");
        }
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static std::int64_t element_count(const std::vector<int>& shape) {
        std::int64_t n = 1;
        for (int d : shape) {
            if (d < 0) throw ValidationError("negative tensor dimension");
            n *= d;
        }
        return n;
    }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // NCHW accessors
    double& at4(int n, int c, int h, int w) {
        return data_[offset4(n, c, h, w)];
    }
    double at4(int n, int c, int h, int w) const {
        return data_[offset4(n, c, h, w)];
    }
    double& at2(int r, int c) {
        return data_[static_cast<std::size_t>(r) * shape_[1] + c];
    }
    double at2(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * shape_[1] + c];
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    std::size_t offset4(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
    }

    std::vector<int> shape_;
    std::vector<double> data_;
};

bool all_finite(const Tensor& t);

}  // namespace rascore
