#ifndef VESSELGAN_CORE_TENSOR_HPP
#define VESSELGAN_CORE_TENSOR_HPP

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "vesselgan/core/common.hpp"

namespace vesselgan {

// Dense row-major tensor, rank <= 4. Network activations use NHWC order.
template <typename T>
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int64_t> dims) : dims_(std::move(dims)) {
        data_.assign(static_cast<size_t>(count(dims_)), T{0});
    }
    Tensor(std::vector<int64_t> dims, std::vector<T> data)
        : dims_(std::move(dims)), data_(std::move(data)) {
        if (static_cast<int64_t>(data_.size()) != count(dims_))
            throw config_error("tensor: data size does not match dims");
    }

    static int64_t count(const std::vector<int64_t>& dims) {
        int64_t n = 1;
        for (int64_t d : dims) {
            if (d < 0) throw config_error("tensor: negative dimension");
            n *= d;
        }
        return n;
    }

    const std::vector<int64_t>& dims() const { return dims_; }
    int64_t dim(size_t i) const { return dims_.at(i); }
    size_t rank() const { return dims_.size(); }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // Rank-4 NHWC accessor.
    T& at(int64_t n, int64_t h, int64_t w, int64_t c) {
        assert(rank() == 4);
        return data_[static_cast<size_t>(((n * dims_[1] + h) * dims_[2] + w) * dims_[3] + c)];
    }
    const T& at(int64_t n, int64_t h, int64_t w, int64_t c) const {
        return const_cast<Tensor*>(this)->at(n, h, w, c);
    }
    // Rank-2 accessor.
    T& at(int64_t r, int64_t c) {
        assert(rank() == 2);
        return data_[static_cast<size_t>(r * dims_[1] + c)];
    }
    const T& at(int64_t r, int64_t c) const { return const_cast<Tensor*>(this)->at(r, c); }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
    void zero() { fill(T{0}); }

    bool same_dims(const Tensor& o) const { return dims_ == o.dims_; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(dims_);
        for (int64_t i = 0; i < size(); ++i) out[i] = static_cast<U>(data_[static_cast<size_t>(i)]);
        return out;
    }

    bool all_finite() const {
        for (const T& v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

  private:
    std::vector<int64_t> dims_;
    std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace vesselgan

#endif
