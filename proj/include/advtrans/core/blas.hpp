#pragma once

#include <cblas.h>

namespace advtrans {

/// C[M,N] (+)= A[M,K] * B[K,N], row-major. `trans_a`/`trans_b` transpose the
/// logical operand (dimensions M,N,K refer to the post-transpose shapes).
inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, const float* b,
                 float beta, float* c) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans, m, n, k,
                alpha, a, trans_a ? m : k, b, trans_b ? k : n, beta, c, n);
}

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a, const double* b,
                 double beta, double* c) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans, m, n, k,
                alpha, a, trans_a ? m : k, b, trans_b ? k : n, beta, c, n);
}

}  // namespace advtrans
