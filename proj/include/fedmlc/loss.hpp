#pragma once

#include "fedmlc/matrix.hpp"

namespace fedmlc {

// Weighted mix of multi-label binary cross-entropy and focal loss. Both terms
// sum over labels; the batch reduction is the mean over samples.
struct HybridLossConfig {
    double alpha = 0.35;       // focal class-balance weight
    double gamma = 2.0;        // focusing exponent
    double lambda_bce = 0.5;   // BCE share of the mix
    double clip_eps = 1e-7;    // probability clamp before logs

    void validate() const;
};

// probs in (0,1) are clamped to [clip_eps, 1−clip_eps] before logs; targets
// must be exactly 0 or 1.
double hybrid_loss(const Matrix& probs, const Matrix& targets,
                   const HybridLossConfig& cfg);

// ∂L/∂probs entrywise, including the 1/n batch-mean factor. The clamp acts as
// a stop-gradient: entries where clamping is active get gradient zero.
Matrix hybrid_loss_grad(const Matrix& probs, const Matrix& targets,
                        const HybridLossConfig& cfg);

}  // namespace fedmlc
