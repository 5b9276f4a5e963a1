#include "tempogs/evaluate.hpp"

#include <chrono>
#include <cmath>

namespace tempogs {

double psnr(const Image& a, const Image& b) {
    require_same_size(a, b);
    double mse = 0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.pixels.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

EvalResult evaluate(const GaussianModel& model, const std::vector<View>& test_views,
                    const Vec3& background, const RenderSettings& settings) {
    if (test_views.empty()) throw std::invalid_argument("evaluate needs at least one view");
    const auto t0 = std::chrono::steady_clock::now();
    EvalResult result;
    const std::vector<Gaussian3D> activated = model.activated();
    for (const View& view : test_views) {
        const Image rendered = render(activated, view.camera, background, settings).quantized();
        const double p = psnr(rendered, view.image);
        result.per_view_psnr.push_back(p);
        result.per_view_ssim.push_back(ssim(rendered, view.image).mean);
        if (std::isinf(p)) result.any_infinite = true;
    }
    for (double p : result.per_view_psnr) result.mean_psnr += p;
    for (double s : result.per_view_ssim) result.mean_ssim += s;
    result.mean_psnr /= static_cast<double>(test_views.size());
    result.mean_ssim /= static_cast<double>(test_views.size());
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace tempogs
