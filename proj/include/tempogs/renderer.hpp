#pragma once

#include <vector>

#include "tempogs/gaussian_model.hpp"
#include "tempogs/geometry.hpp"
#include "tempogs/image.hpp"

namespace tempogs {

struct RenderSettings {
    double near_clip = 0.01;        // camera-space z cull
    double low_pass = 0.3;          // px^2 added to the screen covariance diagonal
    double power_cutoff = 18.0;     // skip contributions with 0.5*d'*Sigma^-1*d above this
    double min_transmittance = 1e-4;
    int tile_size = 16;
    int threads = 1;
};

// Gradients of a scalar loss with respect to the activated splat parameters.
// `screen` is the gradient w.r.t. the projected mean in pixels, kept for the
// densification statistics.
struct RenderGradients {
    std::vector<Vec3> position;
    std::vector<Vec4> rotation;
    std::vector<Vec3> scale;
    std::vector<double> opacity;
    std::vector<Vec3> color;
    std::vector<Vec2> screen;
    std::vector<uint8_t> visible;

    void resize(size_t n) {
        position.assign(n, Vec3::Zero());
        rotation.assign(n, Vec4::Zero());
        scale.assign(n, Vec3::Zero());
        opacity.assign(n, 0.0);
        color.assign(n, Vec3::Zero());
        screen.assign(n, Vec2::Zero());
        visible.assign(n, 0);
    }
};

// Front-to-back alpha compositing of depth-sorted projected Gaussians.
// Deterministic for fixed inputs; pixel values are independent of the thread
// count (each pixel is owned by one worker).
Image render(const std::vector<Gaussian3D>& gaussians, const Camera& camera,
             const Vec3& background, const RenderSettings& settings = {});

inline Image render(const GaussianModel& model, const Camera& camera, const Vec3& background,
                    const RenderSettings& settings = {}) {
    return render(model.activated(), camera, background, settings);
}

// Analytic gradients of L = sum_pixels loss_gradient ⊙ rendered. The same
// depth ordering, power cutoff and transmittance stop as the forward pass are
// applied, so gradients are exact for the truncated compositing model.
RenderGradients render_backward(const std::vector<Gaussian3D>& gaussians, const Camera& camera,
                                const Vec3& background, const Image& loss_gradient,
                                const RenderSettings& settings = {});

inline RenderGradients render_backward(const GaussianModel& model, const Camera& camera,
                                       const Vec3& background, const Image& loss_gradient,
                                       const RenderSettings& settings = {}) {
    return render_backward(model.activated(), camera, background, loss_gradient, settings);
}

}  // namespace tempogs
