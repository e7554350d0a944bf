#include "fedmlc/layers.hpp"

#include <cmath>

#include "fedmlc/kernels.hpp"

namespace fedmlc {

// ---------------------------------------------------------------- affine

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
    if (b.rows != 1 || b.cols != w.cols) {
        throw DimensionError("affine: bias must be 1x" + std::to_string(w.cols) +
                             ", got " + b.shape_str());
    }
    return kernels::matmul_bias(x, w, b.data);
}

AffineGrads affine_backward(const Matrix& x, const Matrix& w, const Matrix& dout) {
    if (dout.rows != x.rows || dout.cols != w.cols) {
        throw DimensionError("affine_backward: dout " + dout.shape_str() +
                             " does not match x " + x.shape_str() + " and w " +
                             w.shape_str());
    }
    AffineGrads g;
    g.dx = kernels::matmul_a_bt(dout, w);
    g.dw = kernels::matmul_at_b(x, dout);
    g.db = Matrix(1, dout.cols);
    g.db.data = kernels::col_sum(dout);
    return g;
}

// ------------------------------------------------------------ activation

Matrix activation(const Matrix& x, Activation kind) {
    return kind == Activation::relu ? kernels::relu(x) : kernels::sigmoid(x);
}

Matrix activation_backward(const Matrix& out, Activation kind, const Matrix& dout) {
    require_same_shape(out, dout, "activation_backward");
    Matrix dx(out.rows, out.cols);
    if (kind == Activation::relu) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            dx.data[i] = out.data[i] > 0.0 ? dout.data[i] : 0.0;
        }
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double s = out.data[i];
            dx.data[i] = dout.data[i] * s * (1.0 - s);
        }
    }
    return dx;
}

// --------------------------------------------------------------- dropout

DropoutResult dropout(const Matrix& x, double p, Mode mode, RngStream& rng) {
    if (p < 0.0 || p >= 1.0) {
        throw ConfigError("dropout: probability must lie in [0, 1), got " +
                          std::to_string(p));
    }
    DropoutResult r;
    if (mode == Mode::eval || p == 0.0) {
        r.out = x;
        r.mask = Matrix(x.rows, x.cols, 1.0);
        return r;
    }
    const double keep_scale = 1.0 / (1.0 - p);
    r.out = Matrix(x.rows, x.cols);
    r.mask = Matrix(x.rows, x.cols);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m = rng.bernoulli(p) ? 0.0 : keep_scale;
        r.mask.data[i] = m;
        r.out.data[i] = x.data[i] * m;
    }
    return r;
}

Matrix dropout_backward(const Matrix& mask, const Matrix& dout) {
    require_same_shape(mask, dout, "dropout_backward");
    Matrix dx(mask.rows, mask.cols);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        dx.data[i] = dout.data[i] * mask.data[i];
    }
    return dx;
}

// ------------------------------------------------------------- batchnorm

Matrix batchnorm(const Matrix& x, const Matrix& scale, const Matrix& shift,
                 BatchNormRunningStats& state, Mode mode, BatchNormCache* cache) {
    const std::size_t h = x.cols;
    if (scale.rows != 1 || scale.cols != h || shift.rows != 1 || shift.cols != h) {
        throw DimensionError("batchnorm: scale/shift must be 1x" + std::to_string(h));
    }
    if (state.mean.size() != h || state.var.size() != h) {
        throw DimensionError("batchnorm: running stats length " +
                             std::to_string(state.mean.size()) + " vs " +
                             std::to_string(h) + " columns");
    }
    Matrix out(x.rows, x.cols);
    if (mode == Mode::train) {
        if (x.rows < 2) {
            throw DimensionError("batchnorm: train mode requires batch size >= 2, got " +
                                 std::to_string(x.rows));
        }
        std::vector<double> mean, var;
        kernels::col_mean_var(x, mean, var);
        std::vector<double> inv_std(h);
        for (std::size_t j = 0; j < h; ++j) {
            inv_std[j] = 1.0 / std::sqrt(var[j] + kBatchNormEps);
        }
        Matrix x_hat(x.rows, x.cols);
        for (std::size_t i = 0; i < x.rows; ++i) {
            for (std::size_t j = 0; j < h; ++j) {
                const double xh = (x.at(i, j) - mean[j]) * inv_std[j];
                x_hat.at(i, j) = xh;
                out.at(i, j) = scale.data[j] * xh + shift.data[j];
            }
        }
        for (std::size_t j = 0; j < h; ++j) {
            state.mean[j] = (1.0 - kBatchNormMomentum) * state.mean[j] +
                            kBatchNormMomentum * mean[j];
            state.var[j] = (1.0 - kBatchNormMomentum) * state.var[j] +
                           kBatchNormMomentum * var[j];
        }
        if (cache != nullptr) {
            cache->x_hat = std::move(x_hat);
            cache->inv_std = std::move(inv_std);
        }
    } else {
        for (std::size_t j = 0; j < h; ++j) {
            const double inv = 1.0 / std::sqrt(state.var[j] + kBatchNormEps);
            const double mu = state.mean[j];
            for (std::size_t i = 0; i < x.rows; ++i) {
                out.at(i, j) = scale.data[j] * (x.at(i, j) - mu) * inv + shift.data[j];
            }
        }
    }
    return out;
}

BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const Matrix& scale,
                                  const Matrix& dout) {
    const Matrix& x_hat = cache.x_hat;
    require_same_shape(x_hat, dout, "batchnorm_backward");
    const std::size_t n = dout.rows;
    const std::size_t h = dout.cols;
    BatchNormGrads g;
    g.dx = Matrix(n, h);
    g.dscale = Matrix(1, h);
    g.dshift = Matrix(1, h);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < h; ++j) {
        double sum_dout = 0.0;
        double sum_dout_xhat = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum_dout += dout.at(i, j);
            sum_dout_xhat += dout.at(i, j) * x_hat.at(i, j);
        }
        g.dscale.data[j] = sum_dout_xhat;
        g.dshift.data[j] = sum_dout;
        const double coeff = scale.data[j] * cache.inv_std[j] * inv_n;
        for (std::size_t i = 0; i < n; ++i) {
            g.dx.at(i, j) = coeff * (static_cast<double>(n) * dout.at(i, j) - sum_dout -
                                     x_hat.at(i, j) * sum_dout_xhat);
        }
    }
    return g;
}

// ----------------------------------------------------------------- adamw

void adamw_step(Matrix& param, const Matrix& grad, AdamWState& state, double lr,
                double weight_decay) {
    require_same_shape(param, grad, "adamw_step");
    require_same_shape(param, state.first_moment, "adamw_step: first moment");
    require_same_shape(param, state.second_moment, "adamw_step: second moment");
    if (!grad.all_finite()) {
        throw NumericError("adamw_step: gradient contains non-finite entries");
    }
    const double decay = 1.0 - lr * weight_decay;
    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad.data[i];
        double m = state.first_moment.data[i];
        double v = state.second_moment.data[i];
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g * g;
        state.first_moment.data[i] = m;
        state.second_moment.data[i] = v;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        param.data[i] = param.data[i] * decay - lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

// ------------------------------------------------------------- schedules

double cosine_lr(std::size_t t, std::size_t total, double lr_max, double lr_min) {
    if (total < 1) throw ConfigError("cosine_lr: total epochs must be >= 1");
    if (t > total) {
        throw ConfigError("cosine_lr: epoch index " + std::to_string(t) +
                          " exceeds total " + std::to_string(total));
    }
    const double frac = static_cast<double>(t) / static_cast<double>(total);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(M_PI * frac));
}

// -------------------------------------------------------------- gradcheck

double grad_check(const std::function<double(const Matrix&)>& f, const Matrix& point,
                  const Matrix& analytic, double step) {
    require_same_shape(point, analytic, "grad_check");
    double worst = 0.0;
    Matrix probe = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double orig = probe.data[i];
        probe.data[i] = orig + step;
        const double fp = f(probe);
        probe.data[i] = orig - step;
        const double fm = f(probe);
        probe.data[i] = orig;
        const double numeric = (fp - fm) / (2.0 * step);
        const double ana = analytic.data[i];
        const double denom = std::max({std::fabs(ana), std::fabs(numeric), 1e-8});
        worst = std::max(worst, std::fabs(numeric - ana) / denom);
    }
    return worst;
}

}  // namespace fedmlc
