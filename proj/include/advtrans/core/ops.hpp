#pragma once

#include <cmath>
#include <cstring>
#include <vector>

#include "advtrans/core/blas.hpp"
#include "advtrans/core/var.hpp"

namespace advtrans {

namespace detail {
inline void check(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}

/// Guards ops whose backward is computed with plain tensor math and cannot
/// participate in a create_graph backward pass.
inline void no_second_order(const char* op) {
    if (GradMode::enabled())
        throw ContractError(std::string("second-order gradients are not supported through ") + op);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise binary
// ---------------------------------------------------------------------------

template <class S>
VarT<S> add(const VarT<S>& a, const VarT<S>& b) {
    detail::check(a.value().same_shape(b.value()), "add: shape mismatch " + a.value().shape_str() + " vs " + b.value().shape_str());
    TensorT<S> out(a.shape());
    const S* pa = a.value().data();
    const S* pb = b.value().data();
    S* po = out.data();
    for (std::int64_t i = 0; i < out.numel(); ++i) po[i] = pa[i] + pb[i];
    return make_op<S>(std::move(out), {a, b}, [](const VarT<S>& g) { return std::vector<VarT<S>>{g, g}; });
}

template <class S>
VarT<S> detail::add_grads(const VarT<S>& a, const VarT<S>& b) {
    return add(a, b);
}

template <class S>
VarT<S> neg(const VarT<S>& a) {
    TensorT<S> out(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = -a.value()[i];
    return make_op<S>(std::move(out), {a}, [](const VarT<S>& g) { return std::vector<VarT<S>>{neg(g)}; });
}

template <class S>
VarT<S> sub(const VarT<S>& a, const VarT<S>& b) {
    detail::check(a.value().same_shape(b.value()), "sub: shape mismatch " + a.value().shape_str() + " vs " + b.value().shape_str());
    TensorT<S> out(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
    return make_op<S>(std::move(out), {a, b},
                      [](const VarT<S>& g) { return std::vector<VarT<S>>{g, neg(g)}; });
}

template <class S>
VarT<S> mul(const VarT<S>& a, const VarT<S>& b) {
    detail::check(a.value().same_shape(b.value()), "mul: shape mismatch");
    TensorT<S> out(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
    return make_op<S>(std::move(out), {a, b},
                      [a, b](const VarT<S>& g) { return std::vector<VarT<S>>{mul(g, b), mul(g, a)}; });
}

template <class S>
VarT<S> add_scalar(const VarT<S>& a, S c) {
    TensorT<S> out(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + c;
    return make_op<S>(std::move(out), {a}, [](const VarT<S>& g) { return std::vector<VarT<S>>{g}; });
}

template <class S>
VarT<S> mul_scalar(const VarT<S>& a, S c) {
    TensorT<S> out(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * c;
    return make_op<S>(std::move(out), {a},
                      [c](const VarT<S>& g) { return std::vector<VarT<S>>{mul_scalar(g, c)}; });
}

// ---------------------------------------------------------------------------
// elementwise unary
// ---------------------------------------------------------------------------

template <class S>
VarT<S> recip(const VarT<S>& a) {
    TensorT<S> out(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = S(1) / a.value()[i];
    return make_op<S>(std::move(out), {a}, [a](const VarT<S>& g) {
        VarT<S> r = recip(a);
        return std::vector<VarT<S>>{neg(mul(g, mul(r, r)))};
    });
}

template <class S>
VarT<S> vexp(const VarT<S>& a) {
    TensorT<S> out(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::exp(a.value()[i]);
    return make_op<S>(std::move(out), {a},
                      [a](const VarT<S>& g) { return std::vector<VarT<S>>{mul(g, vexp(a))}; });
}

template <class S>
VarT<S> vlog(const VarT<S>& a) {
    TensorT<S> out(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::log(a.value()[i]);
    return make_op<S>(std::move(out), {a},
                      [a](const VarT<S>& g) { return std::vector<VarT<S>>{mul(g, recip(a))}; });
}

template <class S>
VarT<S> vsqrt(const VarT<S>& a) {
    TensorT<S> out(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::sqrt(a.value()[i]);
    return make_op<S>(std::move(out), {a}, [a](const VarT<S>& g) {
        return std::vector<VarT<S>>{mul_scalar(mul(g, recip(vsqrt(a))), S(0.5))};
    });
}

template <class S>
VarT<S> vsquare(const VarT<S>& a) {
    TensorT<S> out(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * a.value()[i];
    return make_op<S>(std::move(out), {a}, [a](const VarT<S>& g) {
        return std::vector<VarT<S>>{mul_scalar(mul(g, a), S(2))};
    });
}

template <class S>
VarT<S> vtanh(const VarT<S>& a) {
    TensorT<S> out(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(a.value()[i]);
    return make_op<S>(std::move(out), {a}, [a](const VarT<S>& g) {
        VarT<S> t = vtanh(a);
        return std::vector<VarT<S>>{mul(g, add_scalar(neg(mul(t, t)), S(1)))};
    });
}

template <class S>
VarT<S> vsigmoid(const VarT<S>& a) {
    TensorT<S> out(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        const S x = a.value()[i];
        out[i] = x >= S(0) ? S(1) / (S(1) + std::exp(-x)) : std::exp(x) / (S(1) + std::exp(x));
    }
    return make_op<S>(std::move(out), {a}, [a](const VarT<S>& g) {
        VarT<S> s = vsigmoid(a);
        return std::vector<VarT<S>>{mul(g, mul(s, add_scalar(neg(s), S(1))))};
    });
}

template <class S>
VarT<S> vabs(const VarT<S>& a) {
    TensorT<S> out(a.shape());
    TensorT<S> sign(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        const S x = a.value()[i];
        out[i] = std::abs(x);
        sign[i] = x > S(0) ? S(1) : (x < S(0) ? S(-1) : S(0));
    }
    return make_op<S>(std::move(out), {a}, [sign](const VarT<S>& g) {
        return std::vector<VarT<S>>{mul(g, VarT<S>(sign, false))};
    });
}

namespace detail {
template <class S>
VarT<S> masked(const VarT<S>& g, TensorT<S> mask) {
    return mul(g, VarT<S>(std::move(mask), false));
}
}  // namespace detail

template <class S>
VarT<S> relu(const VarT<S>& a) {
    TensorT<S> out(a.shape());
    TensorT<S> mask(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        const bool pos = a.value()[i] > S(0);
        out[i] = pos ? a.value()[i] : S(0);
        mask[i] = pos ? S(1) : S(0);
    }
    return make_op<S>(std::move(out), {a},
                      [mask](const VarT<S>& g) { return std::vector<VarT<S>>{detail::masked(g, mask)}; });
}

template <class S>
VarT<S> leaky_relu(const VarT<S>& a, S slope) {
    TensorT<S> out(a.shape());
    TensorT<S> mask(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        const bool pos = a.value()[i] > S(0);
        out[i] = pos ? a.value()[i] : slope * a.value()[i];
        mask[i] = pos ? S(1) : slope;
    }
    return make_op<S>(std::move(out), {a},
                      [mask](const VarT<S>& g) { return std::vector<VarT<S>>{detail::masked(g, mask)}; });
}

template <class S>
VarT<S> clamp(const VarT<S>& a, S lo, S hi) {
    TensorT<S> out(a.shape());
    TensorT<S> mask(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        const S x = a.value()[i];
        const bool inside = x > lo && x < hi;
        out[i] = x < lo ? lo : (x > hi ? hi : x);
        mask[i] = inside ? S(1) : S(0);
    }
    return make_op<S>(std::move(out), {a},
                      [mask](const VarT<S>& g) { return std::vector<VarT<S>>{detail::masked(g, mask)}; });
}

/// max(a, c) elementwise against a constant floor.
template <class S>
VarT<S> maximum_scalar(const VarT<S>& a, S c) {
    TensorT<S> out(a.shape());
    TensorT<S> mask(a.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        const bool above = a.value()[i] > c;
        out[i] = above ? a.value()[i] : c;
        mask[i] = above ? S(1) : S(0);
    }
    return make_op<S>(std::move(out), {a},
                      [mask](const VarT<S>& g) { return std::vector<VarT<S>>{detail::masked(g, mask)}; });
}

// ---------------------------------------------------------------------------
// reductions and broadcasts (each reduction pairs with a broadcast op so the
// pair stays differentiable to any order)
// ---------------------------------------------------------------------------

template <class S>
VarT<S> broadcast_scalar(const VarT<S>& s, std::vector<int> shape);

template <class S>
VarT<S> sum_all(const VarT<S>& a) {
    S acc = 0;
    for (std::int64_t i = 0; i < a.value().numel(); ++i) acc += a.value()[i];
    const std::vector<int> shape = a.shape();
    return make_op<S>(TensorT<S>::scalar(acc), {a}, [shape](const VarT<S>& g) {
        return std::vector<VarT<S>>{broadcast_scalar(g, shape)};
    });
}

template <class S>
VarT<S> broadcast_scalar(const VarT<S>& s, std::vector<int> shape) {
    detail::check(s.value().numel() == 1, "broadcast_scalar: source must be scalar");
    TensorT<S> out = TensorT<S>::full(shape, s.value()[0]);
    return make_op<S>(std::move(out), {s},
                      [](const VarT<S>& g) { return std::vector<VarT<S>>{sum_all(g)}; });
}

template <class S>
VarT<S> mean_all(const VarT<S>& a) {
    return mul_scalar(sum_all(a), S(1) / static_cast<S>(a.value().numel()));
}

template <class S>
VarT<S> broadcast_per_image(const VarT<S>& v, std::vector<int> shape);

/// [N, ...] -> [N] summing everything but the leading axis.
template <class S>
VarT<S> sum_per_image(const VarT<S>& a) {
    detail::check(a.value().rank() >= 1, "sum_per_image: rank must be >= 1");
    const int n = a.value().dim(0);
    const std::int64_t per = a.value().numel() / n;
    TensorT<S> out({n});
    for (int i = 0; i < n; ++i) {
        S acc = 0;
        const S* p = a.value().data() + static_cast<std::int64_t>(i) * per;
        for (std::int64_t k = 0; k < per; ++k) acc += p[k];
        out[i] = acc;
    }
    const std::vector<int> shape = a.shape();
    return make_op<S>(std::move(out), {a}, [shape](const VarT<S>& g) {
        return std::vector<VarT<S>>{broadcast_per_image(g, shape)};
    });
}

template <class S>
VarT<S> broadcast_per_image(const VarT<S>& v, std::vector<int> shape) {
    const int n = shape[0];
    detail::check(v.value().rank() == 1 && v.value().dim(0) == n, "broadcast_per_image: shape mismatch");
    TensorT<S> out(shape);
    const std::int64_t per = out.numel() / n;
    for (int i = 0; i < n; ++i) {
        S* p = out.data() + static_cast<std::int64_t>(i) * per;
        for (std::int64_t k = 0; k < per; ++k) p[k] = v.value()[i];
    }
    return make_op<S>(std::move(out), {v},
                      [](const VarT<S>& g) { return std::vector<VarT<S>>{sum_per_image(g)}; });
}

template <class S>
VarT<S> mean_per_image(const VarT<S>& a) {
    const S per = static_cast<S>(a.value().numel() / a.value().dim(0));
    return mul_scalar(sum_per_image(a), S(1) / per);
}

template <class S>
VarT<S> tile_to_channels(const VarT<S>& v, int h, int w);

/// [N,C,H,W] -> [N,C] summing the spatial axes.
template <class S>
VarT<S> sum_hw(const VarT<S>& a) {
    detail::check(a.value().rank() == 4, "sum_hw: expected NCHW");
    const int n = a.value().dim(0), c = a.value().dim(1), h = a.value().dim(2), w = a.value().dim(3);
    TensorT<S> out({n, c});
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (int i = 0; i < n * c; ++i) {
        S acc = 0;
        const S* p = a.value().data() + i * hw;
        for (std::int64_t k = 0; k < hw; ++k) acc += p[k];
        out[i] = acc;
    }
    return make_op<S>(std::move(out), {a}, [h, w](const VarT<S>& g) {
        return std::vector<VarT<S>>{tile_to_channels(g, h, w)};
    });
}

/// [N,C] -> [N,C,H,W] replicating each entry over the spatial grid.
template <class S>
VarT<S> tile_to_channels(const VarT<S>& v, int h, int w) {
    detail::check(v.value().rank() == 2, "tile_to_channels: expected [N,C]");
    const int n = v.value().dim(0), c = v.value().dim(1);
    TensorT<S> out({n, c, h, w});
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (int i = 0; i < n * c; ++i) {
        S* p = out.data() + i * hw;
        for (std::int64_t k = 0; k < hw; ++k) p[k] = v.value()[i];
    }
    return make_op<S>(std::move(out), {v},
                      [](const VarT<S>& g) { return std::vector<VarT<S>>{sum_hw(g)}; });
}

template <class S>
VarT<S> broadcast_channels(const VarT<S>& b, int n, int h, int w);

/// [N,C,H,W] -> [C] summing batch and spatial axes.
template <class S>
VarT<S> sum_nhw(const VarT<S>& a) {
    detail::check(a.value().rank() == 4, "sum_nhw: expected NCHW");
    const int n = a.value().dim(0), c = a.value().dim(1), h = a.value().dim(2), w = a.value().dim(3);
    TensorT<S> out({c});
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) {
            S acc = 0;
            const S* p = a.value().data() + (static_cast<std::int64_t>(i) * c + j) * hw;
            for (std::int64_t k = 0; k < hw; ++k) acc += p[k];
            out[j] += acc;
        }
    return make_op<S>(std::move(out), {a}, [n, h, w](const VarT<S>& g) {
        return std::vector<VarT<S>>{broadcast_channels(g, n, h, w)};
    });
}

template <class S>
VarT<S> broadcast_channels(const VarT<S>& b, int n, int h, int w) {
    detail::check(b.value().rank() == 1, "broadcast_channels: expected [C]");
    const int c = b.value().dim(0);
    TensorT<S> out({n, c, h, w});
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) {
            S* p = out.data() + (static_cast<std::int64_t>(i) * c + j) * hw;
            for (std::int64_t k = 0; k < hw; ++k) p[k] = b.value()[j];
        }
    return make_op<S>(std::move(out), {b},
                      [](const VarT<S>& g) { return std::vector<VarT<S>>{sum_nhw(g)}; });
}

template <class S>
VarT<S> broadcast_rows(const VarT<S>& b, int n);

/// [N,F] -> [F].
template <class S>
VarT<S> sum_rows(const VarT<S>& a) {
    detail::check(a.value().rank() == 2, "sum_rows: expected [N,F]");
    const int n = a.value().dim(0), f = a.value().dim(1);
    TensorT<S> out({f});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j) out[j] += a.value()[static_cast<std::int64_t>(i) * f + j];
    return make_op<S>(std::move(out), {a}, [n](const VarT<S>& g) {
        return std::vector<VarT<S>>{broadcast_rows(g, n)};
    });
}

template <class S>
VarT<S> broadcast_rows(const VarT<S>& b, int n) {
    detail::check(b.value().rank() == 1, "broadcast_rows: expected [F]");
    const int f = b.value().dim(0);
    TensorT<S> out({n, f});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j) out[static_cast<std::int64_t>(i) * f + j] = b.value()[j];
    return make_op<S>(std::move(out), {b},
                      [](const VarT<S>& g) { return std::vector<VarT<S>>{sum_rows(g)}; });
}

// ---------------------------------------------------------------------------
// broadcast arithmetic used by normalization and interpolation
// ---------------------------------------------------------------------------

/// x[N,C,H,W] - m[N,C] broadcast over spatial axes.
template <class S>
VarT<S> sub_nc(const VarT<S>& x, const VarT<S>& m) {
    const int n = x.value().dim(0), c = x.value().dim(1), h = x.value().dim(2), w = x.value().dim(3);
    detail::check(m.value().rank() == 2 && m.value().dim(0) == n && m.value().dim(1) == c, "sub_nc: shape mismatch");
    TensorT<S> out(x.shape());
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (int i = 0; i < n * c; ++i) {
        const S mv = m.value()[i];
        const S* px = x.value().data() + i * hw;
        S* po = out.data() + i * hw;
        for (std::int64_t k = 0; k < hw; ++k) po[k] = px[k] - mv;
    }
    return make_op<S>(std::move(out), {x, m}, [](const VarT<S>& g) {
        return std::vector<VarT<S>>{g, neg(sum_hw(g))};
    });
}

/// x[N,C,H,W] * s[N,C] broadcast over spatial axes.
template <class S>
VarT<S> mul_nc(const VarT<S>& x, const VarT<S>& s) {
    const int n = x.value().dim(0), c = x.value().dim(1), h = x.value().dim(2), w = x.value().dim(3);
    detail::check(s.value().rank() == 2 && s.value().dim(0) == n && s.value().dim(1) == c, "mul_nc: shape mismatch");
    TensorT<S> out(x.shape());
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (int i = 0; i < n * c; ++i) {
        const S sv = s.value()[i];
        const S* px = x.value().data() + i * hw;
        S* po = out.data() + i * hw;
        for (std::int64_t k = 0; k < hw; ++k) po[k] = px[k] * sv;
    }
    return make_op<S>(std::move(out), {x, s}, [x, s](const VarT<S>& g) {
        return std::vector<VarT<S>>{mul_nc(g, s), sum_hw(mul(g, x))};
    });
}

/// x[N,...] * u[N] broadcast per image.
template <class S>
VarT<S> mul_per_image(const VarT<S>& x, const VarT<S>& u) {
    const int n = x.value().dim(0);
    detail::check(u.value().rank() == 1 && u.value().dim(0) == n, "mul_per_image: shape mismatch");
    TensorT<S> out(x.shape());
    const std::int64_t per = x.value().numel() / n;
    for (int i = 0; i < n; ++i) {
        const S uv = u.value()[i];
        const S* px = x.value().data() + i * per;
        S* po = out.data() + i * per;
        for (std::int64_t k = 0; k < per; ++k) po[k] = px[k] * uv;
    }
    return make_op<S>(std::move(out), {x, u}, [x, u](const VarT<S>& g) {
        return std::vector<VarT<S>>{mul_per_image(g, u), sum_per_image(mul(g, x))};
    });
}

/// x[N,C,H,W] + b[C].
template <class S>
VarT<S> bias_add_channels(const VarT<S>& x, const VarT<S>& b) {
    const int n = x.value().dim(0), c = x.value().dim(1), h = x.value().dim(2), w = x.value().dim(3);
    detail::check(b.value().rank() == 1 && b.value().dim(0) == c, "bias_add_channels: shape mismatch");
    TensorT<S> out(x.shape());
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) {
            const S bv = b.value()[j];
            const S* px = x.value().data() + (static_cast<std::int64_t>(i) * c + j) * hw;
            S* po = out.data() + (static_cast<std::int64_t>(i) * c + j) * hw;
            for (std::int64_t k = 0; k < hw; ++k) po[k] = px[k] + bv;
        }
    return make_op<S>(std::move(out), {x, b}, [](const VarT<S>& g) {
        return std::vector<VarT<S>>{g, sum_nhw(g)};
    });
}

/// x[N,F] + b[F].
template <class S>
VarT<S> bias_add_cols(const VarT<S>& x, const VarT<S>& b) {
    const int n = x.value().dim(0), f = x.value().dim(1);
    detail::check(b.value().rank() == 1 && b.value().dim(0) == f, "bias_add_cols: shape mismatch");
    TensorT<S> out(x.shape());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < f; ++j)
            out[static_cast<std::int64_t>(i) * f + j] = x.value()[static_cast<std::int64_t>(i) * f + j] + b.value()[j];
    return make_op<S>(std::move(out), {x, b}, [](const VarT<S>& g) {
        return std::vector<VarT<S>>{g, sum_rows(g)};
    });
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

template <class S>
VarT<S> reshape(const VarT<S>& a, std::vector<int> shape) {
    const std::vector<int> orig = a.shape();
    TensorT<S> out = a.value().clone().reshaped(std::move(shape));
    return make_op<S>(std::move(out), {a}, [orig](const VarT<S>& g) {
        return std::vector<VarT<S>>{reshape(g, orig)};
    });
}

template <class S>
VarT<S> channel_pad(const VarT<S>& a, int c_total, int offset);

/// Channels [c0, c1) of an NCHW tensor.
template <class S>
VarT<S> slice_channels(const VarT<S>& a, int c0, int c1) {
    const int n = a.value().dim(0), c = a.value().dim(1), h = a.value().dim(2), w = a.value().dim(3);
    detail::check(0 <= c0 && c0 < c1 && c1 <= c, "slice_channels: bad range");
    TensorT<S> out({n, c1 - c0, h, w});
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (int i = 0; i < n; ++i)
        std::memcpy(out.data() + static_cast<std::int64_t>(i) * (c1 - c0) * hw,
                    a.value().data() + (static_cast<std::int64_t>(i) * c + c0) * hw,
                    sizeof(S) * static_cast<size_t>((c1 - c0) * hw));
    return make_op<S>(std::move(out), {a}, [c, c0](const VarT<S>& g) {
        return std::vector<VarT<S>>{channel_pad(g, c, c0)};
    });
}

/// Embeds an NCHW tensor into a zero tensor with c_total channels at offset.
template <class S>
VarT<S> channel_pad(const VarT<S>& a, int c_total, int offset) {
    const int n = a.value().dim(0), c = a.value().dim(1), h = a.value().dim(2), w = a.value().dim(3);
    detail::check(offset >= 0 && offset + c <= c_total, "channel_pad: bad offset");
    TensorT<S> out({n, c_total, h, w});
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (int i = 0; i < n; ++i)
        std::memcpy(out.data() + (static_cast<std::int64_t>(i) * c_total + offset) * hw,
                    a.value().data() + static_cast<std::int64_t>(i) * c * hw,
                    sizeof(S) * static_cast<size_t>(c * hw));
    return make_op<S>(std::move(out), {a}, [offset, c](const VarT<S>& g) {
        return std::vector<VarT<S>>{slice_channels(g, offset, offset + c)};
    });
}

template <class S>
VarT<S> concat_channels(const VarT<S>& a, const VarT<S>& b) {
    const int n = a.value().dim(0), ca = a.value().dim(1), h = a.value().dim(2), w = a.value().dim(3);
    const int cb = b.value().dim(1);
    detail::check(b.value().dim(0) == n && b.value().dim(2) == h && b.value().dim(3) == w,
                  "concat_channels: shape mismatch");
    TensorT<S> out({n, ca + cb, h, w});
    const std::int64_t hw = static_cast<std::int64_t>(h) * w;
    for (int i = 0; i < n; ++i) {
        std::memcpy(out.data() + static_cast<std::int64_t>(i) * (ca + cb) * hw,
                    a.value().data() + static_cast<std::int64_t>(i) * ca * hw, sizeof(S) * static_cast<size_t>(ca * hw));
        std::memcpy(out.data() + (static_cast<std::int64_t>(i) * (ca + cb) + ca) * hw,
                    b.value().data() + static_cast<std::int64_t>(i) * cb * hw, sizeof(S) * static_cast<size_t>(cb * hw));
    }
    return make_op<S>(std::move(out), {a, b}, [ca, cb](const VarT<S>& g) {
        return std::vector<VarT<S>>{slice_channels(g, 0, ca), slice_channels(g, ca, ca + cb)};
    });
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

template <class S>
VarT<S> transpose2d(const VarT<S>& a) {
    detail::check(a.value().rank() == 2, "transpose2d: expected rank 2");
    const int m = a.value().dim(0), n = a.value().dim(1);
    TensorT<S> out({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out[static_cast<std::int64_t>(j) * m + i] = a.value()[static_cast<std::int64_t>(i) * n + j];
    return make_op<S>(std::move(out), {a},
                      [](const VarT<S>& g) { return std::vector<VarT<S>>{transpose2d(g)}; });
}

template <class S>
VarT<S> matmul(const VarT<S>& a, const VarT<S>& b) {
    detail::check(a.value().rank() == 2 && b.value().rank() == 2 && a.value().dim(1) == b.value().dim(0),
                  "matmul: shape mismatch");
    const int m = a.value().dim(0), k = a.value().dim(1), n = b.value().dim(1);
    TensorT<S> out({m, n});
    gemm(false, false, m, n, k, S(1), a.value().data(), b.value().data(), S(0), out.data());
    return make_op<S>(std::move(out), {a, b}, [a, b](const VarT<S>& g) {
        return std::vector<VarT<S>>{matmul(g, transpose2d(b)), matmul(transpose2d(a), g)};
    });
}

// ---------------------------------------------------------------------------
// row selection / row max
// ---------------------------------------------------------------------------

template <class S>
VarT<S> scatter_column(const VarT<S>& v, int k_total, int col);

/// X[N,K] -> [N], column `col`.
template <class S>
VarT<S> take_column(const VarT<S>& x, int col) {
    const int n = x.value().dim(0), k = x.value().dim(1);
    detail::check(0 <= col && col < k, "take_column: column out of range");
    TensorT<S> out({n});
    for (int i = 0; i < n; ++i) out[i] = x.value()[static_cast<std::int64_t>(i) * k + col];
    return make_op<S>(std::move(out), {x}, [k, col](const VarT<S>& g) {
        return std::vector<VarT<S>>{scatter_column(g, k, col)};
    });
}

template <class S>
VarT<S> scatter_column(const VarT<S>& v, int k_total, int col) {
    const int n = v.value().dim(0);
    TensorT<S> out({n, k_total});
    for (int i = 0; i < n; ++i) out[static_cast<std::int64_t>(i) * k_total + col] = v.value()[i];
    return make_op<S>(std::move(out), {v}, [col](const VarT<S>& g) {
        return std::vector<VarT<S>>{take_column(g, col)};
    });
}

template <class S>
VarT<S> gather_rows(const VarT<S>& x, std::vector<int> idx);

template <class S>
VarT<S> scatter_rows_onehot(const VarT<S>& v, std::vector<int> idx, int k_total) {
    const int n = v.value().dim(0);
    TensorT<S> out({n, k_total});
    for (int i = 0; i < n; ++i) out[static_cast<std::int64_t>(i) * k_total + idx[static_cast<size_t>(i)]] = v.value()[i];
    return make_op<S>(std::move(out), {v}, [idx](const VarT<S>& g) {
        return std::vector<VarT<S>>{gather_rows(g, idx)};
    });
}

/// [N] taking x[i, idx[i]].
template <class S>
VarT<S> gather_rows(const VarT<S>& x, std::vector<int> idx) {
    const int n = x.value().dim(0), k = x.value().dim(1);
    TensorT<S> out({n});
    for (int i = 0; i < n; ++i) out[i] = x.value()[static_cast<std::int64_t>(i) * k + idx[static_cast<size_t>(i)]];
    return make_op<S>(std::move(out), {x}, [idx, k](const VarT<S>& g) {
        return std::vector<VarT<S>>{scatter_rows_onehot(g, idx, k)};
    });
}

/// Rowwise max over all columns except `excluded` (pass -1 to include all).
/// Ties resolve to the lowest column index.
template <class S>
VarT<S> masked_row_max(const VarT<S>& x, int excluded) {
    const int n = x.value().dim(0), k = x.value().dim(1);
    detail::check(excluded < k, "masked_row_max: excluded column out of range");
    detail::check(k >= 2 || excluded < 0, "masked_row_max: no admissible column");
    TensorT<S> out({n});
    std::vector<int> arg(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        S best = 0;
        int bi = -1;
        for (int j = 0; j < k; ++j) {
            if (j == excluded) continue;
            const S v = x.value()[static_cast<std::int64_t>(i) * k + j];
            if (bi < 0 || v > best) {
                best = v;
                bi = j;
            }
        }
        out[i] = best;
        arg[static_cast<size_t>(i)] = bi;
    }
    return make_op<S>(std::move(out), {x}, [arg, k](const VarT<S>& g) {
        return std::vector<VarT<S>>{scatter_rows_onehot(g, arg, k)};
    });
}

// ---------------------------------------------------------------------------
// classification losses (first-order only; backward uses fused tensor math)
// ---------------------------------------------------------------------------

namespace detail {
template <class S>
void softmax_rows(const TensorT<S>& logits, TensorT<S>& probs) {
    const int n = logits.dim(0), k = logits.dim(1);
    for (int i = 0; i < n; ++i) {
        const S* row = logits.data() + static_cast<std::int64_t>(i) * k;
        S* prow = probs.data() + static_cast<std::int64_t>(i) * k;
        S mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        S z = 0;
        for (int j = 0; j < k; ++j) {
            prow[j] = std::exp(row[j] - mx);
            z += prow[j];
        }
        for (int j = 0; j < k; ++j) prow[j] /= z;
    }
}
}  // namespace detail

/// Mean categorical cross-entropy against integer labels.
template <class S>
VarT<S> softmax_cross_entropy(const VarT<S>& logits, const std::vector<int>& labels) {
    const int n = logits.value().dim(0), k = logits.value().dim(1);
    detail::check(static_cast<int>(labels.size()) == n, "softmax_cross_entropy: label count mismatch");
    TensorT<S> probs({n, k});
    detail::softmax_rows(logits.value(), probs);
    S loss = 0;
    for (int i = 0; i < n; ++i) {
        const S p = probs[static_cast<std::int64_t>(i) * k + labels[static_cast<size_t>(i)]];
        loss -= std::log(std::max(p, std::numeric_limits<S>::min()));
    }
    loss /= static_cast<S>(n);
    return make_op<S>(TensorT<S>::scalar(loss), {logits}, [probs, labels, n, k](const VarT<S>& g) {
        detail::no_second_order("softmax_cross_entropy");
        TensorT<S> gx = probs.clone();
        for (int i = 0; i < n; ++i) gx[static_cast<std::int64_t>(i) * k + labels[static_cast<size_t>(i)]] -= S(1);
        const S scale = g.value().item() / static_cast<S>(n);
        for (std::int64_t t = 0; t < gx.numel(); ++t) gx[t] *= scale;
        return std::vector<VarT<S>>{VarT<S>(std::move(gx), false)};
    });
}

/// Mean cross-entropy H(target, softmax(logits)) against soft targets.
template <class S>
VarT<S> soft_cross_entropy(const VarT<S>& logits, const TensorT<S>& target_probs) {
    const int n = logits.value().dim(0), k = logits.value().dim(1);
    detail::check(target_probs.same_shape(logits.value()), "soft_cross_entropy: shape mismatch");
    TensorT<S> probs({n, k});
    detail::softmax_rows(logits.value(), probs);
    S loss = 0;
    for (std::int64_t i = 0; i < probs.numel(); ++i)
        loss -= target_probs[i] * std::log(std::max(probs[i], std::numeric_limits<S>::min()));
    loss /= static_cast<S>(n);
    return make_op<S>(TensorT<S>::scalar(loss), {logits}, [probs, target_probs, n](const VarT<S>& g) {
        detail::no_second_order("soft_cross_entropy");
        TensorT<S> gx = probs.clone();
        for (std::int64_t t = 0; t < gx.numel(); ++t) gx[t] = (gx[t] - target_probs[t]) * g.value().item() / static_cast<S>(n);
        return std::vector<VarT<S>>{VarT<S>(std::move(gx), false)};
    });
}

/// Elementwise binary cross-entropy on logits, numerically stable form.
template <class S>
VarT<S> bce_with_logits(const VarT<S>& logits, const VarT<S>& targets) {
    detail::check(logits.value().same_shape(targets.value()), "bce_with_logits: shape mismatch");
    TensorT<S> out(logits.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        const S l = logits.value()[i];
        const S c = targets.value()[i];
        out[i] = std::max(l, S(0)) - l * c + std::log1p(std::exp(-std::abs(l)));
    }
    return make_op<S>(std::move(out), {logits, targets}, [logits, targets](const VarT<S>& g) {
        VarT<S> dlogit = mul(g, sub(vsigmoid(logits), targets.detach()));
        return std::vector<VarT<S>>{dlogit, VarT<S>()};  // targets treated as constants
    });
}

// ---------------------------------------------------------------------------
// non-differentiable helpers
// ---------------------------------------------------------------------------

/// Argmax of row `i` of a [N,K] tensor; ties break to the lowest index.
template <class S>
int argmax_row(const TensorT<S>& x, int i) {
    const int k = x.dim(1);
    int best = 0;
    for (int j = 1; j < k; ++j)
        if (x[static_cast<std::int64_t>(i) * k + j] > x[static_cast<std::int64_t>(i) * k + best]) best = j;
    return best;
}

template <class S>
TensorT<S> softmax_tensor(const TensorT<S>& logits) {
    TensorT<S> probs(logits.shape());
    detail::softmax_rows(logits, probs);
    return probs;
}

}  // namespace advtrans
