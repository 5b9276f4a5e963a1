#pragma once

#include <vector>

#include "tempogs/gaussian_model.hpp"
#include "tempogs/renderer.hpp"
#include "tempogs/ssim.hpp"
#include "tempogs/view.hpp"

namespace tempogs {

// Balanced partition of an image into a rows x cols patch grid: boundaries at
// floor(k * size / n), sizes differing by at most one pixel. A grid whose
// dimensions are integer multiples of a coarser grid nests exactly inside it.
struct PatchLayout {
    int rows = 0, cols = 0;
    int width = 0, height = 0;
    std::vector<int> row_patch;   // image row -> patch row
    std::vector<int> col_patch;   // image col -> patch col
    std::vector<int> pixel_count; // per patch

    PatchLayout() = default;
    PatchLayout(int grid_rows, int grid_cols, int image_width, int image_height);

    int patch_of(int row, int col) const { return row_patch[row] * cols + col_patch[col]; }
    size_t patch_count() const { return static_cast<size_t>(rows) * cols; }
};

// Per-view patch grid of confidences in [0,1] (binary after thresholding).
struct ConfidenceMap {
    int view_id = 0;
    int grid_rows = 0, grid_cols = 0;
    std::vector<double> values;
    std::vector<double> scores;  // raw patch-mean mssim, kept for diagnostics

    double coverage() const {
        if (values.empty()) return 0.0;
        double s = 0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }

    static ConfidenceMap uniform(int view_id, int rows, int cols, double value = 1.0);
};

double mean_coverage(const std::vector<ConfidenceMap>& maps);

// Binary confidence from raw scores; the comparison is inclusive (a score
// exactly at tau counts as confident).
std::vector<double> apply_threshold(const std::vector<double>& scores, double tau);

struct AdaptationSettings {
    Vec3 background = Vec3::Zero();
    RenderSettings render;
    double lr_position = 1.6e-4;  // absolute
    double lr_rotation = 1e-3;
    double lr_scale = 5e-3;
    double lr_opacity = 5e-2;
    double lr_color = 2.5e-3;
    double ssim_weight = 0.2;
    SsimSettings ssim;
};

// Brief optimization of a copy of g0 against the tn views with the standard
// photometric loss (no confidence weighting, no densification). Splats in
// conflict with the new observations get perturbed; stable regions survive.
GaussianModel adaptation_phase(const GaussianModel& g0, const std::vector<View>& tn_views,
                               int steps, const AdaptationSettings& settings = {});

// Renders each t0 view with the adapted model, computes the patch-mean mssim
// against the ground truth and thresholds at tau (inclusive).
std::vector<ConfidenceMap> build_confidence_maps(const GaussianModel& adapted,
                                                 const std::vector<View>& t0_views, int grid_rows,
                                                 int grid_cols, double tau,
                                                 const SsimSettings& ssim_settings = {},
                                                 const RenderSettings& render_settings = {},
                                                 const Vec3& background = Vec3::Zero());

// Fine-grid re-evaluation with the current model under a stricter threshold;
// the result is the element-wise max with the (resampled) previous map, so
// per-view coverage never decreases. The fine grid must be an integer
// multiple of the current grid.
std::vector<ConfidenceMap> refine_confidence_maps(const std::vector<ConfidenceMap>& current,
                                                  const GaussianModel& gn,
                                                  const std::vector<View>& t0_views,
                                                  int fine_rows, int fine_cols, double tau_iter,
                                                  const SsimSettings& ssim_settings = {},
                                                  const RenderSettings& render_settings = {},
                                                  const Vec3& background = Vec3::Zero());

}  // namespace tempogs
