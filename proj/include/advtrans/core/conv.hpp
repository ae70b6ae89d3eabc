#pragma once

#include <vector>

#include "advtrans/core/ops.hpp"

namespace advtrans {

namespace detail {

inline int conv_out_dim(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

/// im2col for one image: x[C,H,W] -> cols[C*kh*kw, Ho*Wo] written at column
/// offset `col0` of a batch-wide buffer with `cols_ld` columns per row.
template <class S>
void im2col(const S* x, int c, int h, int w, int kh, int kw, int stride, int pad, int ho, int wo, S* cols,
            std::int64_t cols_ld, std::int64_t col0) {
    for (int ci = 0; ci < c; ++ci)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                const std::int64_t row = (static_cast<std::int64_t>(ci) * kh + ki) * kw + kj;
                S* dst = cols + row * cols_ld + col0;
                for (int oi = 0; oi < ho; ++oi) {
                    const int ii = oi * stride - pad + ki;
                    if (ii < 0 || ii >= h) {
                        for (int oj = 0; oj < wo; ++oj) dst[static_cast<std::int64_t>(oi) * wo + oj] = S(0);
                        continue;
                    }
                    const S* src = x + (static_cast<std::int64_t>(ci) * h + ii) * w;
                    for (int oj = 0; oj < wo; ++oj) {
                        const int jj = oj * stride - pad + kj;
                        dst[static_cast<std::int64_t>(oi) * wo + oj] = (jj >= 0 && jj < w) ? src[jj] : S(0);
                    }
                }
            }
}

/// Adjoint of im2col for one image: scatter-adds cols back into x[C,H,W].
template <class S>
void col2im(const S* cols, std::int64_t cols_ld, std::int64_t col0, int c, int h, int w, int kh, int kw, int stride,
            int pad, int ho, int wo, S* x) {
    for (int ci = 0; ci < c; ++ci)
        for (int ki = 0; ki < kh; ++ki)
            for (int kj = 0; kj < kw; ++kj) {
                const std::int64_t row = (static_cast<std::int64_t>(ci) * kh + ki) * kw + kj;
                const S* src = cols + row * cols_ld + col0;
                for (int oi = 0; oi < ho; ++oi) {
                    const int ii = oi * stride - pad + ki;
                    if (ii < 0 || ii >= h) continue;
                    S* dst = x + (static_cast<std::int64_t>(ci) * h + ii) * w;
                    for (int oj = 0; oj < wo; ++oj) {
                        const int jj = oj * stride - pad + kj;
                        if (jj >= 0 && jj < w) dst[jj] += src[static_cast<std::int64_t>(oi) * wo + oj];
                    }
                }
            }
}

/// NCHW -> [C, N*HW] gather (rows contiguous per channel).
template <class S>
void nchw_to_cn(const TensorT<S>& x, std::vector<S>& out) {
    const int n = x.dim(0), c = x.dim(1);
    const std::int64_t hw = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    out.resize(static_cast<size_t>(x.numel()));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
            std::memcpy(out.data() + (static_cast<std::int64_t>(j) * n + i) * hw,
                        x.data() + (static_cast<std::int64_t>(i) * c + j) * hw, sizeof(S) * static_cast<size_t>(hw));
}

/// [C, N*HW] -> NCHW scatter.
template <class S>
void cn_to_nchw(const S* cn, TensorT<S>& x) {
    const int n = x.dim(0), c = x.dim(1);
    const std::int64_t hw = static_cast<std::int64_t>(x.dim(2)) * x.dim(3);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j)
            std::memcpy(x.data() + (static_cast<std::int64_t>(i) * c + j) * hw,
                        cn + (static_cast<std::int64_t>(j) * n + i) * hw, sizeof(S) * static_cast<size_t>(hw));
}

template <class S>
void batch_im2col(const TensorT<S>& x, int kh, int kw, int stride, int pad, int ho, int wo, std::vector<S>& cols) {
    const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::int64_t ld = static_cast<std::int64_t>(n) * ho * wo;
    cols.assign(static_cast<size_t>(static_cast<std::int64_t>(c) * kh * kw * ld), S(0));
    const std::int64_t img = static_cast<std::int64_t>(c) * h * w;
    for (int i = 0; i < n; ++i)
        im2col(x.data() + i * img, c, h, w, kh, kw, stride, pad, ho, wo, cols.data(), ld,
               static_cast<std::int64_t>(i) * ho * wo);
}

}  // namespace detail

template <class S>
VarT<S> conv2d_dx(const VarT<S>& gy, const VarT<S>& weight, int stride, int pad, int hx, int wx);
template <class S>
VarT<S> conv2d_dw(const VarT<S>& gy, const VarT<S>& x, int stride, int pad, int kh, int kw);

/// 2-D convolution (cross-correlation), zero padding. x[N,Ci,H,W],
/// weight[Co,Ci,kh,kw] -> [N,Co,Ho,Wo]. Bias is a separate op.
template <class S>
VarT<S> conv2d(const VarT<S>& x, const VarT<S>& weight, int stride, int pad) {
    detail::check(x.value().rank() == 4 && weight.value().rank() == 4, "conv2d: expected 4-D tensors");
    const int n = x.value().dim(0), ci = x.value().dim(1), h = x.value().dim(2), w = x.value().dim(3);
    const int co = weight.value().dim(0), kh = weight.value().dim(2), kw = weight.value().dim(3);
    detail::check(weight.value().dim(1) == ci, "conv2d: channel mismatch (input " + std::to_string(ci) + ", weight " +
                                                   std::to_string(weight.value().dim(1)) + ")");
    const int ho = detail::conv_out_dim(h, kh, stride, pad);
    const int wo = detail::conv_out_dim(w, kw, stride, pad);
    detail::check(ho >= 1 && wo >= 1, "conv2d: output collapses below 1x1");

    std::vector<S> cols;
    detail::batch_im2col(x.value(), kh, kw, stride, pad, ho, wo, cols);
    const std::int64_t ld = static_cast<std::int64_t>(n) * ho * wo;
    std::vector<S> out_cn(static_cast<size_t>(static_cast<std::int64_t>(co) * ld));
    gemm(false, false, co, static_cast<int>(ld), ci * kh * kw, S(1), weight.value().data(), cols.data(), S(0),
         out_cn.data());
    TensorT<S> out({n, co, ho, wo});
    detail::cn_to_nchw(out_cn.data(), out);

    return make_op<S>(std::move(out), {x, weight}, [x, weight, stride, pad, h, w, kh, kw](const VarT<S>& g) {
        return std::vector<VarT<S>>{conv2d_dx(g, weight, stride, pad, h, w),
                                    conv2d_dw(g, x, stride, pad, kh, kw)};
    });
}

/// Adjoint of conv2d in its input: maps a y-space tensor back to x-space.
/// Also serves as the forward pass of a stride-`stride` transposed
/// convolution with output size (hx, wx).
template <class S>
VarT<S> conv2d_dx(const VarT<S>& gy, const VarT<S>& weight, int stride, int pad, int hx, int wx) {
    detail::check(gy.value().rank() == 4 && weight.value().rank() == 4, "conv2d_dx: expected 4-D tensors");
    const int n = gy.value().dim(0), co = gy.value().dim(1), ho = gy.value().dim(2), wo = gy.value().dim(3);
    const int ci = weight.value().dim(1), kh = weight.value().dim(2), kw = weight.value().dim(3);
    detail::check(weight.value().dim(0) == co, "conv2d_dx: channel mismatch");
    detail::check(detail::conv_out_dim(hx, kh, stride, pad) == ho && detail::conv_out_dim(wx, kw, stride, pad) == wo,
                  "conv2d_dx: geometry mismatch");

    std::vector<S> gy_cn;
    detail::nchw_to_cn(gy.value(), gy_cn);
    const std::int64_t ld = static_cast<std::int64_t>(n) * ho * wo;
    std::vector<S> gcols(static_cast<size_t>(static_cast<std::int64_t>(ci) * kh * kw * ld));
    // gcols[CiK, N*HoWo] = W^T[CiK, Co] * gy[Co, N*HoWo]
    gemm(true, false, ci * kh * kw, static_cast<int>(ld), co, S(1), weight.value().data(), gy_cn.data(), S(0),
         gcols.data());
    TensorT<S> gx({n, ci, hx, wx});
    const std::int64_t img = static_cast<std::int64_t>(ci) * hx * wx;
    for (int i = 0; i < n; ++i)
        detail::col2im(gcols.data(), ld, static_cast<std::int64_t>(i) * ho * wo, ci, hx, wx, kh, kw, stride, pad, ho,
                       wo, gx.data() + i * img);

    return make_op<S>(std::move(gx), {gy, weight}, [gy, weight, stride, pad, kh, kw](const VarT<S>& u) {
        return std::vector<VarT<S>>{conv2d(u, weight, stride, pad),
                                    conv2d_dw(gy, u, stride, pad, kh, kw)};
    });
}

/// Adjoint of conv2d in its weight: correlates gy with x.
template <class S>
VarT<S> conv2d_dw(const VarT<S>& gy, const VarT<S>& x, int stride, int pad, int kh, int kw) {
    const int n = gy.value().dim(0), co = gy.value().dim(1), ho = gy.value().dim(2), wo = gy.value().dim(3);
    const int ci = x.value().dim(1), h = x.value().dim(2), w = x.value().dim(3);
    detail::check(x.value().dim(0) == n, "conv2d_dw: batch mismatch");
    detail::check(detail::conv_out_dim(h, kh, stride, pad) == ho && detail::conv_out_dim(w, kw, stride, pad) == wo,
                  "conv2d_dw: geometry mismatch");

    std::vector<S> cols;
    detail::batch_im2col(x.value(), kh, kw, stride, pad, ho, wo, cols);
    std::vector<S> gy_cn;
    detail::nchw_to_cn(gy.value(), gy_cn);
    const std::int64_t ld = static_cast<std::int64_t>(n) * ho * wo;
    TensorT<S> gw({co, ci, kh, kw});
    // gw[Co, CiK] = gy[Co, N*HoWo] * cols^T[N*HoWo, CiK]
    gemm(false, true, co, ci * kh * kw, static_cast<int>(ld), S(1), gy_cn.data(), cols.data(), S(0), gw.data());

    return make_op<S>(std::move(gw), {gy, x}, [gy, x, stride, pad, h, w](const VarT<S>& u) {
        return std::vector<VarT<S>>{conv2d_dx(gy, u, stride, pad, h, w),
                                    conv2d(x, u, stride, pad)};
    });
}

/// Transposed convolution: weight[Ci,Co?] follows the adjoint convention
/// weight[C_small, C_large...]: here weight is [C_in, C_out, kh, kw] mapping
/// x[N,C_in,h,w] to [N,C_out,h*stride,w*stride] for k=2*stride, pad=stride/2.
template <class S>
VarT<S> conv_transpose2d(const VarT<S>& x, const VarT<S>& weight, int stride, int pad, int h_out, int w_out) {
    return conv2d_dx(x, weight, stride, pad, h_out, w_out);
}

// ---------------------------------------------------------------------------
// bilinear resize (linear map; adjoint pair keeps it differentiable)
// ---------------------------------------------------------------------------

namespace detail {
struct LerpWeight {
    int i0, i1;
    double w0, w1;
};

inline std::vector<LerpWeight> bilinear_axis(int in, int out) {
    std::vector<LerpWeight> ws(static_cast<size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        double src = (o + 0.5) * scale - 0.5;
        if (src < 0) src = 0;
        const int i0 = std::min(static_cast<int>(src), in - 1);
        const int i1 = std::min(i0 + 1, in - 1);
        const double f = src - i0;
        ws[static_cast<size_t>(o)] = {i0, i1, 1.0 - f, f};
    }
    return ws;
}
}  // namespace detail

template <class S>
VarT<S> resize_bilinear_adjoint(const VarT<S>& g, int h_in, int w_in);

/// Differentiable bilinear resize of an NCHW tensor (half-pixel centers).
/// Returns the input unchanged when the size already matches.
template <class S>
VarT<S> resize_bilinear(const VarT<S>& x, int h_out, int w_out) {
    const int n = x.value().dim(0), c = x.value().dim(1), h = x.value().dim(2), w = x.value().dim(3);
    if (h == h_out && w == w_out) return x;
    const auto wy = detail::bilinear_axis(h, h_out);
    const auto wx = detail::bilinear_axis(w, w_out);
    TensorT<S> out({n, c, h_out, w_out});
    for (int i = 0; i < n * c; ++i) {
        const S* src = x.value().data() + static_cast<std::int64_t>(i) * h * w;
        S* dst = out.data() + static_cast<std::int64_t>(i) * h_out * w_out;
        for (int oi = 0; oi < h_out; ++oi)
            for (int oj = 0; oj < w_out; ++oj) {
                const auto& ay = wy[static_cast<size_t>(oi)];
                const auto& ax = wx[static_cast<size_t>(oj)];
                const double v = ay.w0 * (ax.w0 * src[ay.i0 * w + ax.i0] + ax.w1 * src[ay.i0 * w + ax.i1]) +
                                 ay.w1 * (ax.w0 * src[ay.i1 * w + ax.i0] + ax.w1 * src[ay.i1 * w + ax.i1]);
                dst[static_cast<std::int64_t>(oi) * w_out + oj] = static_cast<S>(v);
            }
    }
    return make_op<S>(std::move(out), {x}, [h, w](const VarT<S>& g) {
        return std::vector<VarT<S>>{resize_bilinear_adjoint(g, h, w)};
    });
}

/// Adjoint of resize_bilinear: scatters output-space gradients back to the
/// (h_in, w_in) grid.
template <class S>
VarT<S> resize_bilinear_adjoint(const VarT<S>& g, int h_in, int w_in) {
    const int n = g.value().dim(0), c = g.value().dim(1), h_out = g.value().dim(2), w_out = g.value().dim(3);
    if (h_in == h_out && w_in == w_out) return g;
    const auto wy = detail::bilinear_axis(h_in, h_out);
    const auto wx = detail::bilinear_axis(w_in, w_out);
    TensorT<S> out({n, c, h_in, w_in});
    for (int i = 0; i < n * c; ++i) {
        const S* src = g.value().data() + static_cast<std::int64_t>(i) * h_out * w_out;
        S* dst = out.data() + static_cast<std::int64_t>(i) * h_in * w_in;
        for (int oi = 0; oi < h_out; ++oi)
            for (int oj = 0; oj < w_out; ++oj) {
                const auto& ay = wy[static_cast<size_t>(oi)];
                const auto& ax = wx[static_cast<size_t>(oj)];
                const S v = src[static_cast<std::int64_t>(oi) * w_out + oj];
                dst[ay.i0 * w_in + ax.i0] += static_cast<S>(ay.w0 * ax.w0) * v;
                dst[ay.i0 * w_in + ax.i1] += static_cast<S>(ay.w0 * ax.w1) * v;
                dst[ay.i1 * w_in + ax.i0] += static_cast<S>(ay.w1 * ax.w0) * v;
                dst[ay.i1 * w_in + ax.i1] += static_cast<S>(ay.w1 * ax.w1) * v;
            }
    }
    const int ho = h_out, wo = w_out;
    return make_op<S>(std::move(out), {g}, [ho, wo](const VarT<S>& u) {
        return std::vector<VarT<S>>{resize_bilinear(u, ho, wo)};
    });
}

}  // namespace advtrans
