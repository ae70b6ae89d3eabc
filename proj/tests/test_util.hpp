#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "advtrans/core/ops.hpp"

namespace advtest {

using advtrans::TensorT;
using advtrans::VarT;

/// Central finite-difference check of d(loss)/d(leaf) for every element of
/// every leaf. `loss_fn` must rebuild the loss from the current leaf values.
/// Returns the worst relative error over all coordinates whose analytic or
/// numeric derivative is above `floor` in magnitude.
inline double gradient_check(const std::function<VarT<double>()>& loss_fn, std::vector<VarT<double>> leaves,
                             double h = 1e-5, double floor = 1e-7) {
    for (auto& l : leaves) l.zero_grad();
    VarT<double> loss = loss_fn();
    advtrans::backward(loss);

    double worst = 0.0;
    for (auto& leaf : leaves) {
        TensorT<double>& v = leaf.value();
        const TensorT<double>& g = leaf.grad();
        for (std::int64_t i = 0; i < v.numel(); ++i) {
            const double ana = g.defined() ? g[i] : 0.0;
            const double orig = v[i];
            // Central differences at several step sizes; a coordinate passes
            // if any step agrees (piecewise-linear kinks spoil single steps).
            double best = std::numeric_limits<double>::infinity();
            for (const double step : {h, h / 8, h * 8}) {
                v[i] = orig + step;
                const double fp = loss_fn().value().item();
                v[i] = orig - step;
                const double fm = loss_fn().value().item();
                v[i] = orig;
                const double num = (fp - fm) / (2 * step);
                if (std::abs(num) < floor && std::abs(ana) < floor) {
                    best = 0.0;
                    break;
                }
                const double denom = std::max(std::max(std::abs(num), std::abs(ana)), floor);
                best = std::min(best, std::abs(num - ana) / denom);
                if (best < 1e-6) break;
            }
            worst = std::max(worst, best);
        }
    }
    return worst;
}

/// Naive 7-loop convolution used as an independent oracle for the GEMM path.
inline TensorT<double> conv2d_oracle(const TensorT<double>& x, const TensorT<double>& w, int stride, int pad) {
    const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (wd + 2 * pad - kw) / stride + 1;
    TensorT<double> y({n, co, ho, wo});
    for (int b = 0; b < n; ++b)
        for (int o = 0; o < co; ++o)
            for (int oi = 0; oi < ho; ++oi)
                for (int oj = 0; oj < wo; ++oj) {
                    double acc = 0;
                    for (int c = 0; c < ci; ++c)
                        for (int ki = 0; ki < kh; ++ki)
                            for (int kj = 0; kj < kw; ++kj) {
                                const int ii = oi * stride - pad + ki;
                                const int jj = oj * stride - pad + kj;
                                if (ii < 0 || ii >= h || jj < 0 || jj >= wd) continue;
                                acc += x[((static_cast<std::int64_t>(b) * ci + c) * h + ii) * wd + jj] *
                                       w[((static_cast<std::int64_t>(o) * ci + c) * kh + ki) * kw + kj];
                            }
                    y[((static_cast<std::int64_t>(b) * co + o) * ho + oi) * wo + oj] = acc;
                }
    return y;
}

inline double max_abs_diff(const TensorT<double>& a, const TensorT<double>& b) {
    double m = 0;
    for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace advtest
