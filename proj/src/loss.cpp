#include "tempogs/loss.hpp"

#include <cmath>

namespace tempogs {

LossResult loss_init(const Image& rendered, const Image& target, const ConfidenceMap& conf,
                     const LossSettings& st) {
    require_same_size(rendered, target);
    const PatchLayout layout(conf.grid_rows, conf.grid_cols, rendered.width, rendered.height);
    if (conf.values.size() != layout.patch_count()) {
        throw std::invalid_argument("confidence grid does not match its declared dimensions");
    }

    LossResult result;
    result.gradient = Image(rendered.width, rendered.height, 0.0);
    const double lambda = st.literal_eq2 ? 1.0 : st.ssim_weight;

    bool any_confidence = false;
    for (double v : conf.values) any_confidence |= (v != 0.0);

    // L1 term.
    for (int r = 0; r < rendered.height; ++r) {
        for (int c = 0; c < rendered.width; ++c) {
            const int p = layout.patch_of(r, c);
            const double cp = conf.values[p];
            if (cp == 0.0) continue;
            const double w = st.literal_eq2 ? cp : cp / (3.0 * layout.pixel_count[p]);
            for (int ch = 0; ch < 3; ++ch) {
                const double diff = rendered.at(r, c, ch) - target.at(r, c, ch);
                result.value += w * std::abs(diff);
                result.gradient.at(r, c, ch) = w * (diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0));
            }
        }
    }

    // Patch SSIM term from the windowed map. Skipped entirely when no patch
    // carries confidence, so zero-confidence views cost nothing.
    if (any_confidence && lambda != 0.0) {
        const SsimMap smap = ssim(rendered, target, st.ssim);
        std::vector<double> patch_sums(layout.patch_count(), 0.0);
        for (int r = 0; r < rendered.height; ++r) {
            for (int c = 0; c < rendered.width; ++c) {
                patch_sums[layout.patch_of(r, c)] +=
                    smap.map[static_cast<size_t>(r) * rendered.width + c];
            }
        }
        std::vector<double> upstream(rendered.pixel_count());
        for (size_t p = 0; p < patch_sums.size(); ++p) {
            const double ssim_p = patch_sums[p] / layout.pixel_count[p];
            result.value += lambda * conf.values[p] * (1.0 - ssim_p);
        }
        for (int r = 0; r < rendered.height; ++r) {
            for (int c = 0; c < rendered.width; ++c) {
                const int p = layout.patch_of(r, c);
                upstream[static_cast<size_t>(r) * rendered.width + c] =
                    -lambda * conf.values[p] / layout.pixel_count[p];
            }
        }
        const Image ssim_grad = ssim_backward(rendered, target, upstream, st.ssim);
        for (size_t i = 0; i < result.gradient.pixels.size(); ++i) {
            result.gradient.pixels[i] += ssim_grad.pixels[i];
        }
    }
    // An exactly-zero loss is a global minimum; report the exact zero gradient
    // instead of the cancellation residue, so optimizers sit still on it.
    if (result.value == 0.0) {
        result.gradient = Image(rendered.width, rendered.height, 0.0);
    }
    return result;
}

}  // namespace tempogs
