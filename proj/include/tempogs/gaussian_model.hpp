#pragma once

#include <cmath>
#include <filesystem>
#include <vector>

#include "tempogs/geometry.hpp"

namespace tempogs {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// One splat in activated form: actual scales, opacity in (0,1).
struct Gaussian3D {
    Vec3 position = Vec3::Zero();
    Vec4 rotation = Vec4(1, 0, 0, 0);  // quaternion (w,x,y,z), unit norm
    Vec3 scale = Vec3::Ones();
    double opacity = 0.5;
    Vec3 color = Vec3::Constant(0.5);
};

// The optimizable splat set. Parameters are stored in optimization space
// (log scales, logit opacities) together with Adam moments, following the
// reference 3DGS layout; the PLY file holds the same raw values.
class GaussianModel {
public:
    std::vector<Vec3> positions;
    std::vector<Vec4> rotations;
    std::vector<Vec3> log_scales;
    std::vector<double> opacity_logits;
    std::vector<Vec3> colors;  // kept in [0,1] by the optimizer step

    // Adam moments, one pair per parameter array.
    std::vector<Vec3> m_position, v_position;
    std::vector<Vec4> m_rotation, v_rotation;
    std::vector<Vec3> m_log_scale, v_log_scale;
    std::vector<double> m_opacity, v_opacity;
    std::vector<Vec3> m_color, v_color;

    std::vector<uint8_t> frozen;  // 1 = gradients zeroed (static-region freeze)

    int step = 0;

    size_t size() const { return positions.size(); }
    bool empty() const { return positions.empty(); }

    void resize(size_t n);
    void append(const Gaussian3D& g);
    void remove_indices(const std::vector<size_t>& sorted_indices);
    void check_consistent() const;

    Gaussian3D gaussian(size_t i) const {
        Gaussian3D g;
        g.position = positions[i];
        g.rotation = rotations[i].normalized();
        g.scale = log_scales[i].array().exp();
        g.opacity = sigmoid(opacity_logits[i]);
        g.color = colors[i];
        return g;
    }

    std::vector<Gaussian3D> activated() const {
        std::vector<Gaussian3D> out(size());
        for (size_t i = 0; i < size(); ++i) out[i] = gaussian(i);
        return out;
    }

    double total_parameter_norm() const;
};

void save_gaussian_model(const std::filesystem::path& path, const GaussianModel& model);
GaussianModel load_gaussian_model(const std::filesystem::path& path);

Mat3 quat_to_rotation(const Vec4& q);

}  // namespace tempogs
