#pragma once

#include "fedmlc/matrix.hpp"

// Dense kernels behind every layer forward/backward pass. Each kernel exists
// twice: an OpenMP-parallel driver (namespace kernels) and a serial reference
// (namespace kernels::serial) kept for testing and benchmarking. Both drivers
// call the same per-row inner loops and partition only the output space, so
// each output element is accumulated in one fixed order: the parallel result
// is bitwise-identical to the serial one for any thread count.

namespace fedmlc::kernels {

// out[n×h] = x[n×d] · w[d×h]
Matrix matmul(const Matrix& x, const Matrix& w);

// out[n×h] = x[n×d] · w[d×h] + b (b broadcast over rows; b has h entries)
Matrix matmul_bias(const Matrix& x, const Matrix& w, const std::vector<double>& b);

// dw[d×h] = xᵀ[d×n] · dy[n×h]
Matrix matmul_at_b(const Matrix& x, const Matrix& dy);

// dx[n×d] = dy[n×h] · wᵀ[h×d]
Matrix matmul_a_bt(const Matrix& dy, const Matrix& w);

// out[j] = Σ_i m[i,j]
std::vector<double> col_sum(const Matrix& m);

// Per-column mean and population variance (÷n).
void col_mean_var(const Matrix& m, std::vector<double>& mean, std::vector<double>& var);

Matrix relu(const Matrix& x);
Matrix sigmoid(const Matrix& x);

namespace serial {

Matrix matmul(const Matrix& x, const Matrix& w);
Matrix matmul_bias(const Matrix& x, const Matrix& w, const std::vector<double>& b);
Matrix matmul_at_b(const Matrix& x, const Matrix& dy);
Matrix matmul_a_bt(const Matrix& dy, const Matrix& w);
std::vector<double> col_sum(const Matrix& m);
void col_mean_var(const Matrix& m, std::vector<double>& mean, std::vector<double>& var);
Matrix relu(const Matrix& x);
Matrix sigmoid(const Matrix& x);

}  // namespace serial

}  // namespace fedmlc::kernels
