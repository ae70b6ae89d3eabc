#pragma once

#include <cmath>

#include "advtrans/nn/layers.hpp"

namespace advtrans {

template <class S>
class AdamT {
public:
    AdamT(ParamRefs<S> params, S beta1, S beta2, S eps = S(1e-8))
        : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (auto* p : params_) slots_.push_back({TensorT<S>::zeros(p->value().shape()), TensorT<S>::zeros(p->value().shape())});
    }

    void zero_grad() {
        for (auto* p : params_) p->zero_grad();
    }

    void step(S lr) {
        ++t_;
        const S bc1 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta1_), static_cast<double>(t_)));
        const S bc2 = S(1) - static_cast<S>(std::pow(static_cast<double>(beta2_), static_cast<double>(t_)));
        for (size_t i = 0; i < params_.size(); ++i) {
            VarT<S>& p = *params_[i];
            if (!p.grad().defined()) continue;
            const TensorT<S>& g = p.grad();
            TensorT<S>& m = slots_[i].m;
            TensorT<S>& v = slots_[i].v;
            TensorT<S>& w = p.value();
            for (std::int64_t k = 0; k < w.numel(); ++k) {
                m[k] = beta1_ * m[k] + (S(1) - beta1_) * g[k];
                v[k] = beta2_ * v[k] + (S(1) - beta2_) * g[k] * g[k];
                const S mhat = m[k] / bc1;
                const S vhat = v[k] / bc2;
                w[k] -= lr * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

private:
    struct Slot {
        TensorT<S> m, v;
    };
    ParamRefs<S> params_;
    std::vector<Slot> slots_;
    S beta1_, beta2_, eps_;
    long t_ = 0;
};

template <class S>
class SgdMomentumT {
public:
    SgdMomentumT(ParamRefs<S> params, S momentum) : params_(std::move(params)), momentum_(momentum) {
        for (auto* p : params_) velocity_.push_back(TensorT<S>::zeros(p->value().shape()));
    }

    void zero_grad() {
        for (auto* p : params_) p->zero_grad();
    }

    void step(S lr) {
        for (size_t i = 0; i < params_.size(); ++i) {
            VarT<S>& p = *params_[i];
            if (!p.grad().defined()) continue;
            const TensorT<S>& g = p.grad();
            TensorT<S>& v = velocity_[i];
            TensorT<S>& w = p.value();
            for (std::int64_t k = 0; k < w.numel(); ++k) {
                v[k] = momentum_ * v[k] + g[k];
                w[k] -= lr * v[k];
            }
        }
    }

private:
    ParamRefs<S> params_;
    std::vector<TensorT<S>> velocity_;
    S momentum_;
};

using Adam = AdamT<float>;
using SgdMomentum = SgdMomentumT<float>;

}  // namespace advtrans
