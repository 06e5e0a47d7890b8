#include "phgnn/optim.hpp"

#include <cmath>

#include "phgnn/error.hpp"

namespace phgnn {

void adamw_step(std::span<Parameter* const> params, AdamWState& state, double lr, double weight_decay) {
    require(lr > 0.0, "adamw: learning rate must be positive");
    require(weight_decay >= 0.0, "adamw: weight decay must be non-negative");
    if (state.step == 0 && state.first_moment.empty()) {
        for (const Parameter* p : params) {
            state.first_moment.emplace_back(p->value.rows(), p->value.cols());
            state.second_moment.emplace_back(p->value.rows(), p->value.cols());
        }
    }
    if (state.first_moment.size() != params.size())
        fail(ErrorKind::InvalidArgument, "adamw: parameter list changed between steps");
    for (const Parameter* p : params)
        if (p->trainable && !p->grad_ready) fail(ErrorKind::InvalidArgument, "adamw: gradient of '" + p->name + "' is unset");

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    const double decay = 1.0 - lr * weight_decay;

    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = *params[k];
        if (!p.trainable) continue;
        auto value = p.value.values();
        auto grad = p.grad.values();
        auto m = state.first_moment[k].values();
        auto v = state.second_moment[k].values();
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            value[i] = value[i] * decay - lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace phgnn
