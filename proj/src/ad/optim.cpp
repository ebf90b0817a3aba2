#include "vmtu/ad/optim.hpp"

#include "vmtu/error.hpp"

#include <cmath>

namespace vmtu::ad {

void adam_step(const std::vector<Param*>& params, AdamState& state, const AdamConfig& cfg)
{
    if (state.m.empty()) {
        state.m.reserve(params.size());
        state.v.reserve(params.size());
        for (const Param* p : params) {
            state.m.emplace_back(p->value.shape());
            state.v.emplace_back(p->value.shape());
        }
    }
    if (state.m.size() != params.size())
        throw ShapeMismatch("adam_step: optimizer state does not match the parameter list");

    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Param& p = *params[k];
        if (!p.trainable)
            continue;
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        if (p.grad.shape() != p.value.shape())
            p.grad = Tensor(p.value.shape());
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p.value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace vmtu::ad
