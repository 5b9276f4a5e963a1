#pragma once

#include <vector>

#include "tempogs/image.hpp"

namespace tempogs {

struct SsimSettings {
    int window = 11;
    double window_sigma = 1.5;
    double c1 = 1e-4;  // (0.01 * dynamic_range)^2
    double c2 = 9e-4;  // (0.03 * dynamic_range)^2
    double contrast_exponent = 0.5;  // beta, applied to the contrast term of mssim
    double dynamic_range = 1.0;

    void validate() const;
};

struct SsimMap {
    double mean = 0.0;
    int width = 0, height = 0;
    std::vector<double> map;  // per pixel center
};

// Standard SSIM on luma with Gaussian-windowed local statistics. Windows are
// truncated and renormalized at the borders, so constant images stay exact.
SsimMap ssim(const Image& x, const Image& y, const SsimSettings& settings = {});

// Modified SSIM: luminance term dropped, contrast term attenuated by
// contrast_exponent, structure term clamped to [0,1]. Values lie in [0,1] and
// are invariant to constant intensity offsets.
SsimMap mssim(const Image& x, const Image& y, const SsimSettings& settings = {});

// Gradient with respect to x of sum_u upstream[u] * ssim_map(x,y)[u], returned
// as an RGB image (the luma weights are folded in). Matches ssim(), not mssim().
Image ssim_backward(const Image& x, const Image& y, const std::vector<double>& upstream,
                    const SsimSettings& settings = {});

}  // namespace tempogs
