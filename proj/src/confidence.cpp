#include "tempogs/confidence.hpp"

#include <stdexcept>

#include "tempogs/adam.hpp"
#include "tempogs/loss.hpp"

namespace tempogs {

PatchLayout::PatchLayout(int grid_rows, int grid_cols, int image_width, int image_height)
    : rows(grid_rows), cols(grid_cols), width(image_width), height(image_height) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("patch grid must be at least 1x1");
    if (rows > height || cols > width) {
        throw std::invalid_argument("patch grid finer than the image: " + std::to_string(rows) +
                                    "x" + std::to_string(cols) + " on " + std::to_string(width) +
                                    "x" + std::to_string(height));
    }
    row_patch.resize(height);
    col_patch.resize(width);
    for (int p = 0; p < rows; ++p) {
        const int r0 = p * height / rows, r1 = (p + 1) * height / rows;
        for (int r = r0; r < r1; ++r) row_patch[r] = p;
    }
    for (int p = 0; p < cols; ++p) {
        const int c0 = p * width / cols, c1 = (p + 1) * width / cols;
        for (int c = c0; c < c1; ++c) col_patch[c] = p;
    }
    pixel_count.assign(patch_count(), 0);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) pixel_count[patch_of(r, c)] += 1;
    }
}

ConfidenceMap ConfidenceMap::uniform(int view_id, int rows, int cols, double value) {
    ConfidenceMap map;
    map.view_id = view_id;
    map.grid_rows = rows;
    map.grid_cols = cols;
    map.values.assign(static_cast<size_t>(rows) * cols, value);
    map.scores = map.values;
    return map;
}

std::vector<double> apply_threshold(const std::vector<double>& scores, double tau) {
    std::vector<double> out(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= tau ? 1.0 : 0.0;
    return out;
}

double mean_coverage(const std::vector<ConfidenceMap>& maps) {
    if (maps.empty()) return 0.0;
    double s = 0;
    for (const auto& m : maps) s += m.coverage();
    return s / static_cast<double>(maps.size());
}

GaussianModel adaptation_phase(const GaussianModel& g0, const std::vector<View>& tn_views,
                               int steps, const AdaptationSettings& st) {
    if (g0.empty()) throw std::invalid_argument("adaptation requires a non-empty model");
    if (tn_views.empty()) throw std::invalid_argument("adaptation requires at least one view");
    if (steps < 1) throw std::invalid_argument("adaptation steps must be >= 1");

    GaussianModel model = g0;  // g0 itself is never mutated
    model.step = 0;

    AdamParams adam;
    adam.lr_position = st.lr_position;
    adam.lr_rotation = st.lr_rotation;
    adam.lr_scale = st.lr_scale;
    adam.lr_opacity = st.lr_opacity;
    adam.lr_color = st.lr_color;

    LossSettings loss_settings;
    loss_settings.ssim_weight = st.ssim_weight;
    loss_settings.ssim = st.ssim;

    for (int step = 0; step < steps; ++step) {
        const View& view = tn_views[step % tn_views.size()];
        // Whole image as one fully-confident patch: plain L1 + lambda (1-SSIM).
        const ConfidenceMap whole = ConfidenceMap::uniform(view.camera.id, 1, 1);
        const Image rendered = render(model, view.camera, st.background, st.render);
        const LossResult loss = loss_init(rendered, view.image, whole, loss_settings);
        const RenderGradients grads =
            render_backward(model, view.camera, st.background, loss.gradient, st.render);
        adam_step(model, grads, adam);
    }
    return model;
}

namespace {

std::vector<double> patch_mean_map(const SsimMap& map, const PatchLayout& layout) {
    std::vector<double> sums(layout.patch_count(), 0.0);
    for (int r = 0; r < layout.height; ++r) {
        for (int c = 0; c < layout.width; ++c) {
            sums[layout.patch_of(r, c)] += map.map[static_cast<size_t>(r) * layout.width + c];
        }
    }
    for (size_t p = 0; p < sums.size(); ++p) sums[p] /= layout.pixel_count[p];
    return sums;
}

}  // namespace

std::vector<ConfidenceMap> build_confidence_maps(const GaussianModel& adapted,
                                                 const std::vector<View>& t0_views, int grid_rows,
                                                 int grid_cols, double tau,
                                                 const SsimSettings& ssim_settings,
                                                 const RenderSettings& render_settings,
                                                 const Vec3& background) {
    if (!(tau > 0.0) || !(tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
    std::vector<ConfidenceMap> maps;
    maps.reserve(t0_views.size());
    for (const View& view : t0_views) {
        const PatchLayout layout(grid_rows, grid_cols, view.camera.width, view.camera.height);
        const Image rendered = render(adapted, view.camera, background, render_settings);
        const SsimMap score_map = mssim(rendered, view.image, ssim_settings);
        ConfidenceMap map;
        map.view_id = view.camera.id;
        map.grid_rows = grid_rows;
        map.grid_cols = grid_cols;
        map.scores = patch_mean_map(score_map, layout);
        map.values = apply_threshold(map.scores, tau);
        maps.push_back(std::move(map));
    }
    return maps;
}

std::vector<ConfidenceMap> refine_confidence_maps(const std::vector<ConfidenceMap>& current,
                                                  const GaussianModel& gn,
                                                  const std::vector<View>& t0_views,
                                                  int fine_rows, int fine_cols, double tau_iter,
                                                  const SsimSettings& ssim_settings,
                                                  const RenderSettings& render_settings,
                                                  const Vec3& background) {
    if (current.size() != t0_views.size()) {
        throw std::invalid_argument("confidence maps and views differ in count");
    }
    std::vector<ConfidenceMap> out;
    out.reserve(current.size());
    for (size_t v = 0; v < t0_views.size(); ++v) {
        const View& view = t0_views[v];
        const ConfidenceMap& prev = current[v];
        if (fine_rows < prev.grid_rows || fine_cols < prev.grid_cols ||
            fine_rows % prev.grid_rows != 0 || fine_cols % prev.grid_cols != 0) {
            throw std::invalid_argument(
                "fine grid must be an integer multiple of the current grid");
        }
        const PatchLayout fine(fine_rows, fine_cols, view.camera.width, view.camera.height);
        const Image rendered = render(gn, view.camera, background, render_settings);
        const SsimMap score_map = mssim(rendered, view.image, ssim_settings);

        ConfidenceMap map;
        map.view_id = prev.view_id;
        map.grid_rows = fine_rows;
        map.grid_cols = fine_cols;
        map.scores = patch_mean_map(score_map, fine);
        const std::vector<double> fresh_values = apply_threshold(map.scores, tau_iter);
        map.values.resize(map.scores.size());

        // Balanced partitions nest when the fine grid is a multiple of the
        // coarse one, so resampling by the subdivision factor is exact.
        const int rfac = fine_rows / prev.grid_rows;
        const int cfac = fine_cols / prev.grid_cols;
        for (int fr = 0; fr < fine_rows; ++fr) {
            for (int fc = 0; fc < fine_cols; ++fc) {
                const size_t fi = static_cast<size_t>(fr) * fine_cols + fc;
                const size_t ci =
                    static_cast<size_t>(fr / rfac) * prev.grid_cols + (fc / cfac);
                map.values[fi] = std::max(prev.values[ci], fresh_values[fi]);
            }
        }
        out.push_back(std::move(map));
    }
    return out;
}

}  // namespace tempogs
