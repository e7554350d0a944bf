#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fedmlc/matrix.hpp"
#include "fedmlc/rng.hpp"

// Layer primitives with exact analytic backward passes. Forward results cache
// whatever the matching backward needs; no general autograd graph exists, the
// model module wires these by hand.

namespace fedmlc {

enum class Mode { train, eval };

// ---------------------------------------------------------------- affine

// out[i,j] = Σ_k x[i,k]·w[k,j] + b[j]
Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b);

struct AffineGrads {
    Matrix dx;
    Matrix dw;
    Matrix db;  // 1×h
};

AffineGrads affine_backward(const Matrix& x, const Matrix& w, const Matrix& dout);

// ------------------------------------------------------------ activation

enum class Activation { relu, sigmoid };

Matrix activation(const Matrix& x, Activation kind);

// Backward from the cached forward output: relu needs only the sign of the
// output, sigmoid only s·(1−s).
Matrix activation_backward(const Matrix& out, Activation kind, const Matrix& dout);

// --------------------------------------------------------------- dropout

struct DropoutResult {
    Matrix out;
    Matrix mask;  // entries 0 or 1/(1−p); backward is dout ⊙ mask
};

// Inverted dropout: eval mode is the identity; train mode zeroes entries with
// probability p and scales survivors by 1/(1−p).
DropoutResult dropout(const Matrix& x, double p, Mode mode, RngStream& rng);

Matrix dropout_backward(const Matrix& mask, const Matrix& dout);

// ------------------------------------------------------------- batchnorm

constexpr double kBatchNormEps = 1e-5;
constexpr double kBatchNormMomentum = 0.1;

struct BatchNormRunningStats {
    std::vector<double> mean;
    std::vector<double> var;
};

struct BatchNormCache {
    Matrix x_hat;
    std::vector<double> inv_std;
};

// Train mode normalizes by batch mean/population variance, applies
// scale/shift, and folds the batch statistics into the running stats with
// momentum 0.1. Eval mode normalizes with the running stats. scale and shift
// are 1×h. Train mode requires n ≥ 2.
Matrix batchnorm(const Matrix& x, const Matrix& scale, const Matrix& shift,
                 BatchNormRunningStats& state, Mode mode,
                 BatchNormCache* cache = nullptr);

struct BatchNormGrads {
    Matrix dx;
    Matrix dscale;  // 1×h
    Matrix dshift;  // 1×h
};

BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const Matrix& scale,
                                  const Matrix& dout);

// ----------------------------------------------------------------- adamw

struct AdamWState {
    std::uint64_t step_count = 0;
    Matrix first_moment;
    Matrix second_moment;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamWState like(const Matrix& param) {
        AdamWState s;
        s.first_moment = Matrix(param.rows, param.cols);
        s.second_moment = Matrix(param.rows, param.cols);
        return s;
    }
};

// Decoupled weight decay (param ← param·(1 − lr·wd)) followed by the
// bias-corrected Adam update. Throws NumericError on non-finite gradients.
void adamw_step(Matrix& param, const Matrix& grad, AdamWState& state, double lr,
                double weight_decay);

// ------------------------------------------------------------- schedules

// lr_min + ½(lr_max − lr_min)(1 + cos(πt/T)) for 0 ≤ t ≤ T.
double cosine_lr(std::size_t t, std::size_t total, double lr_max, double lr_min = 0.0);

// -------------------------------------------------------------- gradcheck

// Central-difference gradient of f at `point`, compared entrywise against
// `analytic`. Returns the worst relative error with denominator
// max(|analytic|, |numeric|, 1e−8).
double grad_check(const std::function<double(const Matrix&)>& f, const Matrix& point,
                  const Matrix& analytic, double step);

}  // namespace fedmlc
