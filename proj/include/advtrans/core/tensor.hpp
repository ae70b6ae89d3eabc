#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "advtrans/core/errors.hpp"
#include "advtrans/core/rng.hpp"

namespace advtrans {

/// Dense row-major tensor. Storage is shared between copies; ops never
/// mutate their inputs, so sharing is safe. Use clone() for a private copy.
template <class S>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(std::vector<int> shape)
        : shape_(std::move(shape)),
          data_(std::make_shared<std::vector<S>>(static_cast<size_t>(numel_of(shape_)), S(0))) {}

    TensorT(std::vector<int> shape, std::vector<S> values) : shape_(std::move(shape)) {
        if (static_cast<std::int64_t>(values.size()) != numel_of(shape_))
            throw ContractError("tensor init: value count does not match shape");
        data_ = std::make_shared<std::vector<S>>(std::move(values));
    }

    static TensorT zeros(std::vector<int> shape) { return TensorT(std::move(shape)); }

    static TensorT full(std::vector<int> shape, S v) {
        TensorT t(std::move(shape));
        std::fill(t.data_->begin(), t.data_->end(), v);
        return t;
    }

    static TensorT scalar(S v) { return full({1}, v); }

    static TensorT uniform(std::vector<int> shape, Rng& rng, S lo, S hi) {
        TensorT t(std::move(shape));
        for (auto& x : *t.data_) x = static_cast<S>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
        return t;
    }

    static TensorT normal(std::vector<int> shape, Rng& rng, S mean, S stddev) {
        TensorT t(std::move(shape));
        for (auto& x : *t.data_) x = static_cast<S>(rng.normal(static_cast<double>(mean), static_cast<double>(stddev)));
        return t;
    }

    bool defined() const { return static_cast<bool>(data_); }
    const std::vector<int>& shape() const { return shape_; }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape_.size()); }

    std::int64_t numel() const { return data_ ? static_cast<std::int64_t>(data_->size()) : 0; }

    S* data() { return data_->data(); }
    const S* data() const { return data_->data(); }

    S& operator[](std::int64_t i) { return (*data_)[static_cast<size_t>(i)]; }
    const S& operator[](std::int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }

    S item() const {
        if (numel() != 1) throw ContractError("item(): tensor is not a scalar");
        return (*data_)[0];
    }

    bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

    /// Deep copy with private storage.
    TensorT clone() const {
        TensorT t;
        t.shape_ = shape_;
        t.data_ = std::make_shared<std::vector<S>>(*data_);
        return t;
    }

    /// Same storage, new shape (element count must match).
    TensorT reshaped(std::vector<int> shape) const {
        if (numel_of(shape) != numel()) throw ContractError("reshape: element count mismatch");
        TensorT t;
        t.shape_ = std::move(shape);
        t.data_ = data_;
        return t;
    }

    void fill(S v) { std::fill(data_->begin(), data_->end(), v); }

    /// In-place copy of another tensor's contents (shapes must match).
    void copy_from(const TensorT& o) {
        if (!same_shape(o)) throw ContractError("copy_from: shape mismatch");
        *data_ = *o.data_;
    }

    template <class T>
    TensorT<T> cast() const {
        TensorT<T> t(shape_);
        for (std::int64_t i = 0; i < numel(); ++i) t[i] = static_cast<T>((*data_)[static_cast<size_t>(i)]);
        return t;
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << "[";
        for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
        os << "]";
        return os.str();
    }

    static std::int64_t numel_of(const std::vector<int>& shape) {
        std::int64_t n = 1;
        for (const int d : shape) {
            if (d < 0) throw ContractError("negative dimension");
            n *= d;
        }
        return n;
    }

private:
    std::vector<int> shape_;
    std::shared_ptr<std::vector<S>> data_;
};

using Tensor = TensorT<float>;

}  // namespace advtrans
