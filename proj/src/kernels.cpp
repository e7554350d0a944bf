#include "fedmlc/kernels.hpp"

#include <cstdint>

#include "kernels_inner.hpp"

// OpenMP drivers. Parallelism always partitions the output space; every
// output element keeps the serial accumulation order, so these match the
// serial reference bitwise. Small problems fall through to plain loops to
// dodge the fork/join overhead.

namespace fedmlc::kernels {

namespace {

constexpr std::size_t kParallelFlops = 1u << 16;

void check_matmul(const Matrix& x, const Matrix& w) {
    if (x.cols != w.rows) {
        throw DimensionError("matmul: inner dimensions differ, " + x.shape_str() +
                             " vs " + w.shape_str());
    }
}

}  // namespace

Matrix matmul(const Matrix& x, const Matrix& w) {
    check_matmul(x, w);
    Matrix out(x.rows, w.cols);
    const std::int64_t n = static_cast<std::int64_t>(x.rows);
    const bool par = x.rows * x.cols * w.cols >= kParallelFlops;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        inner::row_times_matrix(x.row(static_cast<std::size_t>(i)), w.data.data(),
                                x.cols, w.cols, out.row(static_cast<std::size_t>(i)));
    }
    return out;
}

Matrix matmul_bias(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
    check_matmul(x, w);
    if (b.size() != w.cols) {
        throw DimensionError("matmul_bias: bias length " + std::to_string(b.size()) +
                             " vs " + std::to_string(w.cols) + " output columns");
    }
    Matrix out(x.rows, w.cols);
    const std::int64_t n = static_cast<std::int64_t>(x.rows);
    const bool par = x.rows * x.cols * w.cols >= kParallelFlops;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        double* o = out.row(static_cast<std::size_t>(i));
        inner::row_times_matrix(x.row(static_cast<std::size_t>(i)), w.data.data(),
                                x.cols, w.cols, o);
        for (std::size_t j = 0; j < w.cols; ++j) o[j] += b[j];
    }
    return out;
}

Matrix matmul_at_b(const Matrix& x, const Matrix& dy) {
    if (x.rows != dy.rows) {
        throw DimensionError("matmul_at_b: row counts differ, " + x.shape_str() +
                             " vs " + dy.shape_str());
    }
    Matrix dw(x.cols, dy.cols);
    const std::int64_t d = static_cast<std::int64_t>(x.cols);
    const bool par = x.rows * x.cols * dy.cols >= kParallelFlops;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t k = 0; k < d; ++k) {
        inner::xt_column_times_matrix(x.data.data(), dy.data.data(), x.rows, x.cols,
                                      dy.cols, static_cast<std::size_t>(k),
                                      dw.row(static_cast<std::size_t>(k)));
    }
    return dw;
}

Matrix matmul_a_bt(const Matrix& dy, const Matrix& w) {
    if (dy.cols != w.cols) {
        throw DimensionError("matmul_a_bt: column counts differ, " + dy.shape_str() +
                             " vs " + w.shape_str());
    }
    Matrix dx(dy.rows, w.rows);
    const std::int64_t n = static_cast<std::int64_t>(dy.rows);
    const bool par = dy.rows * dy.cols * w.rows >= kParallelFlops;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const double* dy_row = dy.row(static_cast<std::size_t>(i));
        double* o = dx.row(static_cast<std::size_t>(i));
        for (std::size_t k = 0; k < w.rows; ++k) {
            o[k] = inner::dot(dy_row, w.row(k), dy.cols);
        }
    }
    return dx;
}

std::vector<double> col_sum(const Matrix& m) {
    std::vector<double> s(m.cols);
    const std::int64_t c = static_cast<std::int64_t>(m.cols);
    const bool par = m.rows * m.cols >= kParallelFlops;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t j = 0; j < c; ++j) {
        s[static_cast<std::size_t>(j)] =
            inner::column_sum(m.data.data(), m.rows, m.cols, static_cast<std::size_t>(j));
    }
    return s;
}

void col_mean_var(const Matrix& m, std::vector<double>& mean, std::vector<double>& var) {
    mean.assign(m.cols, 0.0);
    var.assign(m.cols, 0.0);
    const double inv_n = 1.0 / static_cast<double>(m.rows);
    const std::int64_t c = static_cast<std::int64_t>(m.cols);
    const bool par = m.rows * m.cols >= kParallelFlops;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t j = 0; j < c; ++j) {
        const std::size_t col = static_cast<std::size_t>(j);
        const double mu = inner::column_sum(m.data.data(), m.rows, m.cols, col) * inv_n;
        double acc = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) {
            const double d = m.at(i, col) - mu;
            acc += d * d;
        }
        mean[col] = mu;
        var[col] = acc * inv_n;
    }
}

Matrix relu(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    const bool par = x.size() >= kParallelFlops;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        out.data[static_cast<std::size_t>(i)] =
            inner::relu1(x.data[static_cast<std::size_t>(i)]);
    }
    return out;
}

Matrix sigmoid(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    const std::int64_t n = static_cast<std::int64_t>(x.size());
    const bool par = x.size() >= kParallelFlops;
#pragma omp parallel for if (par) schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        out.data[static_cast<std::size_t>(i)] =
            inner::sigmoid1(x.data[static_cast<std::size_t>(i)]);
    }
    return out;
}

}  // namespace fedmlc::kernels
