#pragma once

#include "tempogs/gaussian_model.hpp"
#include "tempogs/renderer.hpp"

namespace tempogs {

struct AdamParams {
    double lr_position = 1.6e-4;  // absolute (caller folds in extent and schedule)
    double lr_rotation = 1e-3;
    double lr_scale = 5e-3;
    double lr_opacity = 5e-2;
    double lr_color = 2.5e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
};

// One Adam step from activated-space renderer gradients. Converts to the
// stored parameterization (log scales, logit opacities), renormalizes
// quaternions and projects colors back into [0,1]. Frozen splats are left
// untouched.
void adam_step(GaussianModel& model, const RenderGradients& grads, const AdamParams& params);

}  // namespace tempogs
