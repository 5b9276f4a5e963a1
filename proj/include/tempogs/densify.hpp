#pragma once

#include "tempogs/gaussian_model.hpp"
#include "tempogs/random.hpp"
#include "tempogs/renderer.hpp"

namespace tempogs {

struct DensifyParams {
    double grad_threshold = 2e-4;  // mean screen gradient norm, NDC-calibrated
    double percent_dense = 0.01;   // split above this fraction of the scene extent
    double prune_opacity = 0.005;
    double split_scale_shrink = 1.6;
    int split_children = 2;
    double scene_extent = 1.0;
    size_t max_gaussians = 200000;
};

// Accumulated positional-gradient statistics between densification rounds.
class DensifyStats {
public:
    void accumulate(const RenderGradients& grads, double scale);
    void reset(size_t n);
    size_t size() const { return grad_accum_.size(); }
    double mean_grad(size_t i) const {
        return count_[i] > 0 ? grad_accum_[i] / count_[i] : 0.0;
    }

private:
    std::vector<double> grad_accum_;
    std::vector<int> count_;
};

// Clones small high-gradient splats, splits large ones (children sampled from
// the parent), prunes low-opacity splats. Moment arrays stay consistent; new
// splats start with zero moments.
void densify_and_prune(GaussianModel& model, DensifyStats& stats, const DensifyParams& params,
                       Rng& rng);

}  // namespace tempogs
