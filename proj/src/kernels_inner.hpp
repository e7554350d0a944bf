#pragma once

#include <cmath>
#include <cstddef>

// Inner loops shared by the serial reference and the OpenMP drivers. Keeping
// one definition guarantees identical instruction sequences, hence identical
// floating-point results, on both paths.

namespace fedmlc::kernels::inner {

// out_row[h] = Σ_k x_row[k] · w[k,:]  (w row-major d×h), k ascending.
inline void row_times_matrix(const double* x_row, const double* w, std::size_t d,
                             std::size_t h, double* out_row) {
    for (std::size_t j = 0; j < h; ++j) out_row[j] = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        const double a = x_row[k];
        const double* w_row = w + k * h;
        for (std::size_t j = 0; j < h; ++j) out_row[j] += a * w_row[j];
    }
}

inline double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
}

// dw_row[h] = Σ_i x[i,k] · dy[i,:] for the fixed column k, i ascending.
inline void xt_column_times_matrix(const double* x, const double* dy, std::size_t n,
                                   std::size_t d, std::size_t h, std::size_t k,
                                   double* dw_row) {
    for (std::size_t j = 0; j < h; ++j) dw_row[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = x[i * d + k];
        const double* dy_row = dy + i * h;
        for (std::size_t j = 0; j < h; ++j) dw_row[j] += a * dy_row[j];
    }
}

inline double column_sum(const double* m, std::size_t n, std::size_t cols, std::size_t j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += m[i * cols + j];
    return s;
}

inline double relu1(double v) { return v > 0.0 ? v : 0.0; }

// Clamped to the open interval: 1/(1+e^-x) rounds to exactly 1.0 for
// x >~ 36.7 and to 0.0 below -745, which would poison downstream logs.
inline double sigmoid1(double v) {
    const double s = 1.0 / (1.0 + std::exp(-v));
    if (s >= 1.0) return 0x1.fffffffffffffp-1;  // largest double below 1
    if (s <= 0.0) return 0x1p-1074;             // smallest positive double
    return s;
}

}  // namespace fedmlc::kernels::inner
