#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tempogs/confidence.hpp"
#include "tempogs/densify.hpp"
#include "tempogs/gaussian_model.hpp"
#include "tempogs/toml.hpp"
#include "tempogs/view.hpp"

namespace tempogs {

struct TrainConfig {
    int max_iterations = 7000;
    int adaptation_steps = 500;
    int refine_interval_epochs = 108;
    double tau = 0.8;
    double tau_iter = 0.92;
    int initial_grid_rows = 16, initial_grid_cols = 16;
    int fine_grid_rows = 32, fine_grid_cols = 32;
    double coverage_convergence = 0.02;
    double ssim_weight = 0.2;
    double t0_supervision_weight = 1.0;
    int t0_view_stride = 4;

    double lr_position = 1.6e-4;        // x scene extent
    double lr_position_final = 1.6e-6;  // x scene extent, exponential decay target
    double lr_rotation = 1e-3;
    double lr_scale = 5e-3;
    double lr_opacity = 5e-2;
    double lr_color = 2.5e-3;
    double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-15;

    int densify_from = 500;
    int densify_until = 3500;
    int densify_interval = 100;
    double densify_grad_threshold = 2e-4;
    double prune_opacity = 0.005;
    double percent_dense = 0.01;
    int max_gaussians = 200000;

    double init_opacity = 0.1;
    uint64_t seed = 0;
    bool literal_eq2 = false;
    bool enable_refinement = true;
    bool static_freeze = false;
    double static_freeze_ratio = 0.8;
    int threads = 1;

    void validate() const;
    void apply_overrides(const TomlTable& table);
    static TrainConfig from_toml(const TomlTable& table);
};

struct TrainReport {
    std::vector<double> coverage_per_round;  // round 0 = initial confidence maps
    std::vector<double> loss_curve;          // mean loss per epoch
    int iterations = 0;
    double wall_seconds = 0;
    std::string termination;  // "max_iterations" or "coverage_converged"
    size_t final_gaussians = 0;
    std::vector<double> test_psnr, test_ssim;  // filled by callers with test views
};

// One splat per point; grey when the cloud has no colors; isotropic scale from
// the mean distance to the 3 nearest neighbors, clamped to
// [1e-4, 0.1] * scene extent.
GaussianModel init_model_from_cloud(const PointCloud& p_fused, const TrainConfig& config);

struct ProgressiveResult {
    GaussianModel model;
    TrainReport report;
    std::vector<ConfidenceMap> confidence_maps;  // state after the last refinement
};

// Stage 3: adaptation + confidence initialization from g0, Gn initialized from
// the fused cloud, confidence-weighted training interleaving tn and t0 views,
// periodic confidence refinement, early termination on coverage convergence.
// Precomputed initial confidence maps (e.g. from the confidence stage) can be
// passed to skip the adaptation phase.
ProgressiveResult progressive_optimize(
    const GaussianModel& g0, const PointCloud& p_fused, const std::vector<View>& t0_views,
    const std::vector<View>& tn_train_views, const TrainConfig& config, const Vec3& background,
    const std::optional<std::vector<ConfidenceMap>>& initial_maps = std::nullopt);

// The paper's baseline: same renderer and schedule, tn views only with uniform
// confidence, fused-cloud initialization, no adaptation or refinement.
ProgressiveResult baseline_optimize(const PointCloud& p_fused,
                                    const std::vector<View>& tn_train_views,
                                    const TrainConfig& config, const Vec3& background);

// Direct fine-tune of g0 on the tn views (confidence machinery disabled).
ProgressiveResult finetune_direct(const GaussianModel& g0,
                                  const std::vector<View>& tn_train_views,
                                  const TrainConfig& config, const Vec3& background);

}  // namespace tempogs
