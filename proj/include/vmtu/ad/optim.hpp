#pragma once

#include "vmtu/ad/tensor.hpp"

#include <vector>

namespace vmtu::ad {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First and second moments, one pair per parameter, plus the step count.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long t = 0;
};

/// One bias-corrected Adam update. Increments state.t before use, so the
/// first call runs with t = 1. Non-trainable parameters are skipped.
void adam_step(const std::vector<Param*>& params, AdamState& state, const AdamConfig& cfg);

}  // namespace vmtu::ad
