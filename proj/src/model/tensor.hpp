#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace scafm {

// Minimal dense tensor: a shape plus contiguous row-major storage. All layer
// code indexes raw pointers; this type only carries shape bookkeeping.
template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape) { reshape(std::move(shape)); }

    void reshape(std::vector<int> shape) {
        int64_t n = 1;
        for (int d : shape) {
            require(d >= 1, ErrorCode::dimension, "tensor dims must be >= 1");
            n *= d;
        }
        shape_ = std::move(shape);
        v_.assign(static_cast<size_t>(n), T(0));
    }

    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int64_t numel() const { return static_cast<int64_t>(v_.size()); }

    T* data() { return v_.data(); }
    const T* data() const { return v_.data(); }
    T& operator[](int64_t i) { return v_[static_cast<size_t>(i)]; }
    T operator[](int64_t i) const { return v_[static_cast<size_t>(i)]; }

    void fill(T value) { std::fill(v_.begin(), v_.end(), value); }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

private:
    std::vector<int> shape_;
    std::vector<T> v_;
};

} // namespace scafm
