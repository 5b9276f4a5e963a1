#include "tempogs/gaussian_model.hpp"

#include <stdexcept>

#include "tempogs/ply_io.hpp"

namespace tempogs {

void GaussianModel::resize(size_t n) {
    positions.resize(n, Vec3::Zero());
    rotations.resize(n, Vec4(1, 0, 0, 0));
    log_scales.resize(n, Vec3::Zero());
    opacity_logits.resize(n, 0.0);
    colors.resize(n, Vec3::Constant(0.5));
    m_position.resize(n, Vec3::Zero());
    v_position.resize(n, Vec3::Zero());
    m_rotation.resize(n, Vec4::Zero());
    v_rotation.resize(n, Vec4::Zero());
    m_log_scale.resize(n, Vec3::Zero());
    v_log_scale.resize(n, Vec3::Zero());
    m_opacity.resize(n, 0.0);
    v_opacity.resize(n, 0.0);
    m_color.resize(n, Vec3::Zero());
    v_color.resize(n, Vec3::Zero());
    if (!frozen.empty()) frozen.resize(n, 0);
}

void GaussianModel::append(const Gaussian3D& g) {
    const size_t n = size();
    resize(n + 1);
    positions[n] = g.position;
    rotations[n] = g.rotation;
    log_scales[n] = g.scale.array().log();
    opacity_logits[n] = logit(g.opacity);
    colors[n] = g.color;
}

void GaussianModel::remove_indices(const std::vector<size_t>& sorted_indices) {
    if (sorted_indices.empty()) return;
    std::vector<uint8_t> drop(size(), 0);
    for (size_t i : sorted_indices) drop[i] = 1;
    size_t w = 0;
    for (size_t r = 0; r < size(); ++r) {
        if (drop[r]) continue;
        if (w != r) {
            positions[w] = positions[r];
            rotations[w] = rotations[r];
            log_scales[w] = log_scales[r];
            opacity_logits[w] = opacity_logits[r];
            colors[w] = colors[r];
            m_position[w] = m_position[r];
            v_position[w] = v_position[r];
            m_rotation[w] = m_rotation[r];
            v_rotation[w] = v_rotation[r];
            m_log_scale[w] = m_log_scale[r];
            v_log_scale[w] = v_log_scale[r];
            m_opacity[w] = m_opacity[r];
            v_opacity[w] = v_opacity[r];
            m_color[w] = m_color[r];
            v_color[w] = v_color[r];
            if (!frozen.empty()) frozen[w] = frozen[r];
        }
        ++w;
    }
    resize(w);
}

void GaussianModel::check_consistent() const {
    const size_t n = size();
    const bool ok = rotations.size() == n && log_scales.size() == n &&
                    opacity_logits.size() == n && colors.size() == n &&
                    m_position.size() == n && v_position.size() == n &&
                    m_rotation.size() == n && v_rotation.size() == n &&
                    m_log_scale.size() == n && v_log_scale.size() == n &&
                    m_opacity.size() == n && v_opacity.size() == n &&
                    m_color.size() == n && v_color.size() == n &&
                    (frozen.empty() || frozen.size() == n) && step >= 0;
    if (!ok) throw std::logic_error("gaussian model arrays out of sync");
}

double GaussianModel::total_parameter_norm() const {
    double s = 0.0;
    for (size_t i = 0; i < size(); ++i) {
        s += positions[i].squaredNorm() + rotations[i].squaredNorm() +
             log_scales[i].squaredNorm() + opacity_logits[i] * opacity_logits[i] +
             colors[i].squaredNorm();
    }
    return std::sqrt(s);
}

void save_gaussian_model(const std::filesystem::path& path, const GaussianModel& model) {
    PlyTable table;
    table.properties = {"x",     "y",     "z",     "scale_0", "scale_1", "scale_2", "rot_0",
                        "rot_1", "rot_2", "rot_3", "opacity", "red",     "green",   "blue"};
    table.rows.reserve(model.size());
    for (size_t i = 0; i < model.size(); ++i) {
        table.rows.push_back({model.positions[i].x(), model.positions[i].y(),
                              model.positions[i].z(), model.log_scales[i].x(),
                              model.log_scales[i].y(), model.log_scales[i].z(),
                              model.rotations[i][0], model.rotations[i][1],
                              model.rotations[i][2], model.rotations[i][3],
                              model.opacity_logits[i], model.colors[i].x(),
                              model.colors[i].y(), model.colors[i].z()});
    }
    write_ply(path, table);
}

GaussianModel load_gaussian_model(const std::filesystem::path& path) {
    const PlyTable table = read_ply(path);
    const char* needed[] = {"x",     "y",     "z",     "scale_0", "scale_1", "scale_2", "rot_0",
                            "rot_1", "rot_2", "rot_3", "opacity", "red",     "green",   "blue"};
    int idx[14];
    for (int i = 0; i < 14; ++i) {
        idx[i] = table.find(needed[i]);
        if (idx[i] < 0) {
            throw std::runtime_error(std::string("gaussian PLY missing property ") + needed[i] +
                                     ": " + path.string());
        }
    }
    GaussianModel model;
    model.resize(table.rows.size());
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const auto& r = table.rows[i];
        model.positions[i] = Vec3(r[idx[0]], r[idx[1]], r[idx[2]]);
        model.log_scales[i] = Vec3(r[idx[3]], r[idx[4]], r[idx[5]]);
        model.rotations[i] = Vec4(r[idx[6]], r[idx[7]], r[idx[8]], r[idx[9]]);
        model.opacity_logits[i] = r[idx[10]];
        model.colors[i] = Vec3(r[idx[11]], r[idx[12]], r[idx[13]]);
    }
    return model;
}

Mat3 quat_to_rotation(const Vec4& q) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

}  // namespace tempogs
