#include "tempogs/adam.hpp"

namespace tempogs {

namespace {

inline double adam_update(double grad, double& m, double& v, double lr, const AdamParams& p,
                          double bias1, double bias2) {
    m = p.beta1 * m + (1 - p.beta1) * grad;
    v = p.beta2 * v + (1 - p.beta2) * grad * grad;
    const double mhat = m / bias1;
    const double vhat = v / bias2;
    return lr * mhat / (std::sqrt(vhat) + p.eps);
}

}  // namespace

void adam_step(GaussianModel& model, const RenderGradients& grads, const AdamParams& p) {
    model.check_consistent();
    if (grads.position.size() != model.size()) {
        throw std::invalid_argument("gradient arrays do not match model size");
    }
    model.step += 1;
    const double bias1 = 1.0 - std::pow(p.beta1, model.step);
    const double bias2 = 1.0 - std::pow(p.beta2, model.step);

    for (size_t i = 0; i < model.size(); ++i) {
        if (!model.frozen.empty() && model.frozen[i]) continue;

        for (int k = 0; k < 3; ++k) {
            model.positions[i][k] -= adam_update(grads.position[i][k], model.m_position[i][k],
                                                 model.v_position[i][k], p.lr_position, p, bias1,
                                                 bias2);
        }
        for (int k = 0; k < 4; ++k) {
            model.rotations[i][k] -= adam_update(grads.rotation[i][k], model.m_rotation[i][k],
                                                 model.v_rotation[i][k], p.lr_rotation, p, bias1,
                                                 bias2);
        }
        // d/d(log s) = d/ds * s with s = exp(log s).
        for (int k = 0; k < 3; ++k) {
            const double g = grads.scale[i][k] * std::exp(model.log_scales[i][k]);
            model.log_scales[i][k] -= adam_update(g, model.m_log_scale[i][k],
                                                  model.v_log_scale[i][k], p.lr_scale, p, bias1,
                                                  bias2);
        }
        {
            const double o = sigmoid(model.opacity_logits[i]);
            const double g = grads.opacity[i] * o * (1 - o);
            model.opacity_logits[i] -=
                adam_update(g, model.m_opacity[i], model.v_opacity[i], p.lr_opacity, p, bias1,
                            bias2);
        }
        for (int k = 0; k < 3; ++k) {
            model.colors[i][k] -= adam_update(grads.color[i][k], model.m_color[i][k],
                                              model.v_color[i][k], p.lr_color, p, bias1, bias2);
            model.colors[i][k] = std::clamp(model.colors[i][k], 0.0, 1.0);
        }
        model.rotations[i].normalize();
    }
}

}  // namespace tempogs
