#include "fedmlc/kernels.hpp"

#include "kernels_inner.hpp"

// Serial reference kernels. These are the ground truth the OpenMP drivers are
// tested against (bitwise) and benchmarked against.

namespace fedmlc::kernels::serial {

namespace {

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
    for (std::size_t i = 0; i < x.rows; ++i) {
        inner::row_times_matrix(x.row(i), w.data.data(), x.cols, w.cols, out.row(i));
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
    for (std::size_t i = 0; i < x.rows; ++i) {
        double* o = out.row(i);
        inner::row_times_matrix(x.row(i), w.data.data(), x.cols, w.cols, o);
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
    for (std::size_t k = 0; k < x.cols; ++k) {
        inner::xt_column_times_matrix(x.data.data(), dy.data.data(), x.rows, x.cols,
                                      dy.cols, k, dw.row(k));
    }
    return dw;
}

Matrix matmul_a_bt(const Matrix& dy, const Matrix& w) {
    if (dy.cols != w.cols) {
        throw DimensionError("matmul_a_bt: column counts differ, " + dy.shape_str() +
                             " vs " + w.shape_str());
    }
    Matrix dx(dy.rows, w.rows);
    for (std::size_t i = 0; i < dy.rows; ++i) {
        const double* dy_row = dy.row(i);
        double* o = dx.row(i);
        for (std::size_t k = 0; k < w.rows; ++k) {
            o[k] = inner::dot(dy_row, w.row(k), dy.cols);
        }
    }
    return dx;
}

std::vector<double> col_sum(const Matrix& m) {
    std::vector<double> s(m.cols);
    for (std::size_t j = 0; j < m.cols; ++j) {
        s[j] = inner::column_sum(m.data.data(), m.rows, m.cols, j);
    }
    return s;
}

void col_mean_var(const Matrix& m, std::vector<double>& mean, std::vector<double>& var) {
    mean.assign(m.cols, 0.0);
    var.assign(m.cols, 0.0);
    const double inv_n = 1.0 / static_cast<double>(m.rows);
    for (std::size_t j = 0; j < m.cols; ++j) {
        const double mu = inner::column_sum(m.data.data(), m.rows, m.cols, j) * inv_n;
        double acc = 0.0;
        for (std::size_t i = 0; i < m.rows; ++i) {
            const double d = m.at(i, j) - mu;
            acc += d * d;
        }
        mean[j] = mu;
        var[j] = acc * inv_n;
    }
}

Matrix relu(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = inner::relu1(x.data[i]);
    return out;
}

Matrix sigmoid(const Matrix& x) {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = inner::sigmoid1(x.data[i]);
    return out;
}

}  // namespace fedmlc::kernels::serial
