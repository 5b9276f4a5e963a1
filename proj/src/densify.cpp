#include "tempogs/densify.hpp"

namespace tempogs {

void DensifyStats::accumulate(const RenderGradients& grads, double scale) {
    if (grad_accum_.size() != grads.screen.size()) reset(grads.screen.size());
    for (size_t i = 0; i < grads.screen.size(); ++i) {
        if (!grads.visible[i]) continue;
        grad_accum_[i] += grads.screen[i].norm() * scale;
        count_[i] += 1;
    }
}

void DensifyStats::reset(size_t n) {
    grad_accum_.assign(n, 0.0);
    count_.assign(n, 0);
}

void densify_and_prune(GaussianModel& model, DensifyStats& stats, const DensifyParams& params,
                       Rng& rng) {
    const size_t n = model.size();
    if (stats.size() == n && model.size() < params.max_gaussians) {
        for (size_t i = 0; i < n; ++i) {
            if (stats.mean_grad(i) <= params.grad_threshold) continue;
            const Gaussian3D g = model.gaussian(i);
            const double max_scale = g.scale.maxCoeff();
            if (max_scale <= params.percent_dense * params.scene_extent) {
                model.append(g);  // clone
            } else {
                // Split: children sampled from the parent's distribution.
                const Mat3 r = quat_to_rotation(g.rotation);
                for (int c = 0; c < params.split_children; ++c) {
                    Gaussian3D child = g;
                    const Vec3 local(rng.normal() * g.scale.x(), rng.normal() * g.scale.y(),
                                     rng.normal() * g.scale.z());
                    child.position = g.position + r * local;
                    child.scale = g.scale / params.split_scale_shrink;
                    model.append(child);
                }
                // Parent is removed below via the opacity pass.
                model.opacity_logits[i] = logit(1e-6);
            }
            if (model.size() >= params.max_gaussians) break;
        }
    }

    std::vector<size_t> prune;
    for (size_t i = 0; i < model.size(); ++i) {
        if (sigmoid(model.opacity_logits[i]) < params.prune_opacity) prune.push_back(i);
    }
    model.remove_indices(prune);
    model.check_consistent();
    stats.reset(model.size());
}

}  // namespace tempogs
