#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "phgnn/autodiff.hpp"

namespace phgnn {

struct AdamWState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t step = 0;
    std::vector<Matrix> first_moment;   // one per parameter, same shape as value
    std::vector<Matrix> second_moment;
};

/// One AdamW update with decoupled weight decay: each trainable value is first
/// scaled by (1 - lr * weight_decay), then moved by the bias-corrected Adam
/// direction. Non-trainable parameters are left untouched. The parameter list
/// must be the same, in the same order, on every call with a given state.
void adamw_step(std::span<Parameter* const> params, AdamWState& state, double lr, double weight_decay);

}  // namespace phgnn
