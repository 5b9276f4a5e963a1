#pragma once

#include <limits>
#include <vector>

#include "tempogs/gaussian_model.hpp"
#include "tempogs/renderer.hpp"
#include "tempogs/ssim.hpp"
#include "tempogs/view.hpp"

namespace tempogs {

struct EvalResult {
    std::vector<double> per_view_psnr;
    std::vector<double> per_view_ssim;
    double mean_psnr = 0;
    double mean_ssim = 0;
    bool any_infinite = false;  // some view matched its target exactly
    double seconds = 0;
};

// PSNR in dB on [0,1] RGB; +inf for identical images.
double psnr(const Image& a, const Image& b);

// Renders each test view, quantizes to the 8-bit grid the dataset images live
// on, and reports PSNR/SSIM per view and on average.
EvalResult evaluate(const GaussianModel& model, const std::vector<View>& test_views,
                    const Vec3& background, const RenderSettings& settings = {});

}  // namespace tempogs
