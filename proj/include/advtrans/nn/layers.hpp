#pragma once

#include <cmath>

#include "advtrans/core/conv.hpp"
#include "advtrans/core/ops.hpp"
#include "advtrans/core/rng.hpp"

namespace advtrans {

template <class S>
using ParamRefs = std::vector<VarT<S>*>;

namespace detail {
template <class S>
TensorT<S> fan_in_uniform(std::vector<int> shape, std::int64_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return TensorT<S>::uniform(std::move(shape), rng, static_cast<S>(-bound), static_cast<S>(bound));
}
}  // namespace detail

template <class S>
class Conv2dT {
public:
    Conv2dT() = default;
    Conv2dT(int c_in, int c_out, int k, int stride, int pad, bool bias, Rng& rng)
        : stride_(stride), pad_(pad), has_bias_(bias) {
        const std::int64_t fan_in = static_cast<std::int64_t>(c_in) * k * k;
        weight_ = VarT<S>(detail::fan_in_uniform<S>({c_out, c_in, k, k}, fan_in, rng), true);
        if (bias) bias_ = VarT<S>(detail::fan_in_uniform<S>({c_out}, fan_in, rng), true);
    }

    VarT<S> forward(const VarT<S>& x) const {
        VarT<S> y = conv2d(x, weight_, stride_, pad_);
        if (has_bias_) y = bias_add_channels(y, bias_);
        return y;
    }

    void collect(ParamRefs<S>& out) {
        out.push_back(&weight_);
        if (has_bias_) out.push_back(&bias_);
    }

private:
    VarT<S> weight_, bias_;
    int stride_ = 1, pad_ = 0;
    bool has_bias_ = false;
};

/// Stride-2 transposed convolution with k = 4, pad = 1: exact size doubling.
template <class S>
class ConvTranspose2dT {
public:
    ConvTranspose2dT() = default;
    ConvTranspose2dT(int c_in, int c_out, int k, int stride, int pad, Rng& rng) : stride_(stride), pad_(pad) {
        const std::int64_t fan_in = static_cast<std::int64_t>(c_in) * k * k;
        weight_ = VarT<S>(detail::fan_in_uniform<S>({c_in, c_out, k, k}, fan_in, rng), true);
    }

    VarT<S> forward(const VarT<S>& x) const {
        const int h = x.value().dim(2), w = x.value().dim(3);
        return conv_transpose2d(x, weight_, stride_, pad_, h * stride_, w * stride_);
    }

    void collect(ParamRefs<S>& out) { out.push_back(&weight_); }

private:
    VarT<S> weight_;
    int stride_ = 2, pad_ = 1;
};

template <class S>
class LinearT {
public:
    LinearT() = default;
    LinearT(int in, int out, Rng& rng) {
        weight_ = VarT<S>(detail::fan_in_uniform<S>({out, in}, in, rng), true);
        bias_ = VarT<S>(detail::fan_in_uniform<S>({out}, in, rng), true);
    }

    VarT<S> forward(const VarT<S>& x) const { return bias_add_cols(matmul(x, transpose2d(weight_)), bias_); }

    void collect(ParamRefs<S>& out) {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

private:
    VarT<S> weight_, bias_;
};

/// Instance normalization with per-channel affine parameters. Statistics are
/// per (image, channel), so there is no cross-image coupling.
template <class S>
class InstanceNorm2dT {
public:
    InstanceNorm2dT() = default;
    explicit InstanceNorm2dT(int channels)
        : gamma_(TensorT<S>::full({channels}, S(1)), true), beta_(TensorT<S>::zeros({channels}), true) {}

    VarT<S> forward(const VarT<S>& x) const {
        const int n = x.value().dim(0), h = x.value().dim(2), w = x.value().dim(3);
        const S inv_hw = S(1) / static_cast<S>(h * w);
        VarT<S> mean = mul_scalar(sum_hw(x), inv_hw);
        VarT<S> centered = sub_nc(x, mean);
        VarT<S> var = mul_scalar(sum_hw(vsquare(centered)), inv_hw);
        VarT<S> inv_std = recip(vsqrt(add_scalar(var, kEps)));
        VarT<S> normed = mul_nc(centered, inv_std);
        return bias_add_channels(mul(normed, broadcast_channels(gamma_, n, h, w)), beta_);
    }

    void collect(ParamRefs<S>& out) {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }

    static constexpr S kEps = S(1e-5);

private:
    VarT<S> gamma_, beta_;
};

template <class S>
std::int64_t parameter_count(const ParamRefs<S>& params) {
    std::int64_t n = 0;
    for (const auto* p : params) n += p->value().numel();
    return n;
}

template <class S>
void set_trainable(const ParamRefs<S>& params, bool trainable) {
    for (auto* p : params) p->node()->requires_grad = trainable;
}

}  // namespace advtrans
