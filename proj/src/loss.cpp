#include "fedmlc/loss.hpp"

#include <algorithm>
#include <cmath>

#include "fedmlc/errors.hpp"

namespace fedmlc {

void HybridLossConfig::validate() const {
    if (alpha < 0.0 || alpha > 1.0) {
        throw ConfigError("hybrid loss: alpha must lie in [0, 1], got " +
                          std::to_string(alpha));
    }
    if (gamma < 0.0) {
        throw ConfigError("hybrid loss: gamma must be >= 0, got " + std::to_string(gamma));
    }
    if (lambda_bce < 0.0 || lambda_bce > 1.0) {
        throw ConfigError("hybrid loss: lambda_bce must lie in [0, 1], got " +
                          std::to_string(lambda_bce));
    }
    if (clip_eps <= 0.0 || clip_eps > 0.01) {
        throw ConfigError("hybrid loss: clip_eps must lie in (0, 0.01], got " +
                          std::to_string(clip_eps));
    }
}

namespace {

void check_inputs(const Matrix& probs, const Matrix& targets,
                  const HybridLossConfig& cfg) {
    cfg.validate();
    require_same_shape(probs, targets, "hybrid_loss");
    if (probs.rows == 0) {
        throw DimensionError("hybrid_loss: empty batch");
    }
    for (double y : targets.data) {
        if (y != 0.0 && y != 1.0) {
            throw ConfigError("hybrid_loss: targets must be exactly 0 or 1, got " +
                              std::to_string(y));
        }
    }
}

}  // namespace

double hybrid_loss(const Matrix& probs, const Matrix& targets,
                   const HybridLossConfig& cfg) {
    check_inputs(probs, targets, cfg);
    const double lo = cfg.clip_eps;
    const double hi = 1.0 - cfg.clip_eps;
    double total = 0.0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        double bce = 0.0;
        double focal = 0.0;
        for (std::size_t j = 0; j < probs.cols; ++j) {
            const double p = std::clamp(probs.at(i, j), lo, hi);
            const double y = targets.at(i, j);
            const double log_p = std::log(p);
            const double log_1p = std::log(1.0 - p);
            bce -= y * log_p + (1.0 - y) * log_1p;
            focal -= cfg.alpha * std::pow(1.0 - p, cfg.gamma) * y * log_p +
                     (1.0 - cfg.alpha) * std::pow(p, cfg.gamma) * (1.0 - y) * log_1p;
        }
        total += cfg.lambda_bce * bce + (1.0 - cfg.lambda_bce) * focal;
    }
    return total / static_cast<double>(probs.rows);
}

Matrix hybrid_loss_grad(const Matrix& probs, const Matrix& targets,
                        const HybridLossConfig& cfg) {
    check_inputs(probs, targets, cfg);
    const double lo = cfg.clip_eps;
    const double hi = 1.0 - cfg.clip_eps;
    const double inv_n = 1.0 / static_cast<double>(probs.rows);
    const double lam = cfg.lambda_bce;
    const double a = cfg.alpha;
    const double g = cfg.gamma;
    Matrix grad(probs.rows, probs.cols);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double raw = probs.data[i];
        if (raw < lo || raw > hi) {
            grad.data[i] = 0.0;  // clamp active: stop-gradient
            continue;
        }
        const double p = raw;
        const double y = targets.data[i];
        double d;
        if (y == 1.0) {
            // d/dp [ −λ·ln p − (1−λ)·α·(1−p)^γ·ln p ]
            const double focal = g * std::pow(1.0 - p, g - 1.0) * std::log(p) -
                                 std::pow(1.0 - p, g) / p;
            d = lam * (-1.0 / p) + (1.0 - lam) * a * focal;
        } else {
            // d/dp [ −λ·ln(1−p) − (1−λ)·(1−α)·p^γ·ln(1−p) ]
            const double focal = -g * std::pow(p, g - 1.0) * std::log(1.0 - p) +
                                 std::pow(p, g) / (1.0 - p);
            d = lam / (1.0 - p) + (1.0 - lam) * (1.0 - a) * focal;
        }
        grad.data[i] = d * inv_n;
    }
    return grad;
}

}  // namespace fedmlc
