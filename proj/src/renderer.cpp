#include "tempogs/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tempogs/threading.hpp"

namespace tempogs {

namespace {

struct Splat {
    bool valid = false;
    Vec2 mu = Vec2::Zero();
    double conic_a = 0, conic_b = 0, conic_c = 0;  // inverse screen covariance
    double depth = 0;
    int x0 = 0, x1 = 0, y0 = 0, y1 = 0;  // pixel bbox, half-open
    double opacity = 0;
    Vec3 color = Vec3::Zero();
};

struct Prepared {
    std::vector<Splat> splats;
    std::vector<int> order;                      // valid splats, front to back
    std::vector<std::vector<int>> tile_lists;    // per tile, in depth order
    int tiles_x = 0, tiles_y = 0;
};

// Projects one Gaussian; fills the screen-space footprint. The ±1 px margin on
// the bbox keeps the power cutoff (not the bbox rasterization) the sole
// inclusion criterion, which the finite-difference tests rely on.
Splat project_splat(const Gaussian3D& g, const Camera& cam, const RenderSettings& st) {
    Splat s;
    const Vec3 q = cam.rotation * g.position + cam.translation;
    if (q.z() < st.near_clip) return s;
    const double z = q.z();
    s.mu = Vec2(cam.fx * q.x() / z + cam.cx, cam.fy * q.y() / z + cam.cy);
    s.depth = z;

    const Mat3 r = quat_to_rotation(g.rotation.normalized());
    const Mat3 l = r * g.scale.asDiagonal();
    const Mat3 sigma3 = l * l.transpose();

    Eigen::Matrix<double, 2, 3> jac;
    jac << cam.fx / z, 0, -cam.fx * q.x() / (z * z), 0, cam.fy / z, -cam.fy * q.y() / (z * z);
    const Eigen::Matrix<double, 2, 3> v = jac * cam.rotation;
    const Eigen::Matrix2d cov2 = v * sigma3 * v.transpose();

    const double a = cov2(0, 0) + st.low_pass;
    const double b = cov2(0, 1);
    const double c = cov2(1, 1) + st.low_pass;
    const double det = a * c - b * b;
    if (!(det > 0.0) || !std::isfinite(det)) return s;
    s.conic_a = c / det;
    s.conic_b = -b / det;
    s.conic_c = a / det;

    const double lambda_max = 0.5 * (a + c) + std::sqrt(std::max(0.0, 0.25 * (a - c) * (a - c) + b * b));
    const double radius = std::sqrt(2.0 * st.power_cutoff * lambda_max) + 1.0;
    s.x0 = std::max(0, static_cast<int>(std::floor(s.mu.x() - radius)));
    s.x1 = std::min(cam.width, static_cast<int>(std::ceil(s.mu.x() + radius)) + 1);
    s.y0 = std::max(0, static_cast<int>(std::floor(s.mu.y() - radius)));
    s.y1 = std::min(cam.height, static_cast<int>(std::ceil(s.mu.y() + radius)) + 1);
    if (s.x0 >= s.x1 || s.y0 >= s.y1) return s;

    s.opacity = g.opacity;
    s.color = g.color;
    s.valid = true;
    return s;
}

Prepared prepare(const std::vector<Gaussian3D>& gaussians, const Camera& cam,
                 const RenderSettings& st) {
    Prepared prep;
    prep.splats.resize(gaussians.size());
    for (size_t i = 0; i < gaussians.size(); ++i) {
        prep.splats[i] = project_splat(gaussians[i], cam, st);
        if (prep.splats[i].valid) prep.order.push_back(static_cast<int>(i));
    }
    std::sort(prep.order.begin(), prep.order.end(), [&](int a, int b) {
        if (prep.splats[a].depth != prep.splats[b].depth) {
            return prep.splats[a].depth < prep.splats[b].depth;
        }
        return a < b;
    });

    prep.tiles_x = (cam.width + st.tile_size - 1) / st.tile_size;
    prep.tiles_y = (cam.height + st.tile_size - 1) / st.tile_size;
    prep.tile_lists.resize(static_cast<size_t>(prep.tiles_x) * prep.tiles_y);
    for (int idx : prep.order) {
        const Splat& s = prep.splats[idx];
        const int tx0 = s.x0 / st.tile_size, tx1 = (s.x1 - 1) / st.tile_size;
        const int ty0 = s.y0 / st.tile_size, ty1 = (s.y1 - 1) / st.tile_size;
        for (int ty = ty0; ty <= ty1; ++ty) {
            for (int tx = tx0; tx <= tx1; ++tx) {
                prep.tile_lists[static_cast<size_t>(ty) * prep.tiles_x + tx].push_back(idx);
            }
        }
    }
    return prep;
}

struct Contribution {
    int splat = 0;
    double alpha = 0;
    double gexp = 0;  // exp(-power)
    double dx = 0, dy = 0;
    double t_before = 0;
};

}  // namespace

Image render(const std::vector<Gaussian3D>& gaussians, const Camera& cam, const Vec3& background,
             const RenderSettings& st) {
    cam.validate();
    Image img(cam.width, cam.height);
    const Prepared prep = prepare(gaussians, cam, st);

    parallel_for(st.threads, static_cast<size_t>(cam.height), [&](size_t r0, size_t r1, int) {
        for (size_t row = r0; row < r1; ++row) {
            const int ty = static_cast<int>(row) / st.tile_size;
            for (int tx = 0; tx < prep.tiles_x; ++tx) {
                const auto& list = prep.tile_lists[static_cast<size_t>(ty) * prep.tiles_x + tx];
                const int col0 = tx * st.tile_size;
                const int col1 = std::min(cam.width, col0 + st.tile_size);
                for (int col = col0; col < col1; ++col) {
                    const double px = col, py = static_cast<double>(row);
                    double t = 1.0;
                    Vec3 acc = Vec3::Zero();
                    for (int idx : list) {
                        const Splat& s = prep.splats[idx];
                        if (col < s.x0 || col >= s.x1 || static_cast<int>(row) < s.y0 ||
                            static_cast<int>(row) >= s.y1) {
                            continue;
                        }
                        const double dx = px - s.mu.x();
                        const double dy = py - s.mu.y();
                        const double power = 0.5 * (s.conic_a * dx * dx + s.conic_c * dy * dy) +
                                             s.conic_b * dx * dy;
                        if (power > st.power_cutoff) continue;
                        if (t < st.min_transmittance) break;
                        const double alpha = std::min(s.opacity * std::exp(-power), 1.0 - 1e-12);
                        acc += s.color * (alpha * t);
                        t *= (1.0 - alpha);
                    }
                    acc += background * t;
                    for (int ch = 0; ch < 3; ++ch) {
                        img.at(static_cast<int>(row), col, ch) = std::clamp(acc[ch], 0.0, 1.0);
                    }
                }
            }
        }
    });
    return img;
}

RenderGradients render_backward(const std::vector<Gaussian3D>& gaussians, const Camera& cam,
                                const Vec3& background, const Image& loss_gradient,
                                const RenderSettings& st) {
    cam.validate();
    if (loss_gradient.width != cam.width || loss_gradient.height != cam.height) {
        throw std::invalid_argument("loss gradient image does not match camera dimensions");
    }
    const size_t n = gaussians.size();
    RenderGradients grads;
    grads.resize(n);
    const Prepared prep = prepare(gaussians, cam, st);

    // Per-worker accumulators for the pixel-level sums; the expensive chain
    // through the covariance runs once per splat afterwards.
    const int workers = std::max(1, st.threads);
    struct Accum {
        std::vector<Vec2> mu;
        std::vector<Vec3> cov;  // dL/d full-matrix inverse covariance (p00, p01, p11)
        std::vector<double> opacity;
        std::vector<Vec3> color;
        std::vector<uint8_t> touched;
    };
    std::vector<Accum> acc(workers);
    for (auto& a : acc) {
        a.mu.assign(n, Vec2::Zero());
        a.cov.assign(n, Vec3::Zero());
        a.opacity.assign(n, 0.0);
        a.color.assign(n, Vec3::Zero());
        a.touched.assign(n, 0);
    }

    parallel_for(st.threads, static_cast<size_t>(cam.height), [&](size_t r0, size_t r1, int worker) {
        Accum& a = acc[worker];
        std::vector<Contribution> contribs;
        contribs.reserve(256);
        for (size_t row = r0; row < r1; ++row) {
            const int ty = static_cast<int>(row) / st.tile_size;
            for (int tx = 0; tx < prep.tiles_x; ++tx) {
                const auto& list = prep.tile_lists[static_cast<size_t>(ty) * prep.tiles_x + tx];
                const int col0 = tx * st.tile_size;
                const int col1 = std::min(cam.width, col0 + st.tile_size);
                for (int col = col0; col < col1; ++col) {
                    const Vec3 dl_dc(loss_gradient.at(static_cast<int>(row), col, 0),
                                     loss_gradient.at(static_cast<int>(row), col, 1),
                                     loss_gradient.at(static_cast<int>(row), col, 2));
                    if (dl_dc.isZero(0.0)) continue;

                    // Forward replay for this pixel.
                    contribs.clear();
                    const double px = col, py = static_cast<double>(row);
                    double t = 1.0;
                    for (int idx : list) {
                        const Splat& s = prep.splats[idx];
                        if (col < s.x0 || col >= s.x1 || static_cast<int>(row) < s.y0 ||
                            static_cast<int>(row) >= s.y1) {
                            continue;
                        }
                        const double dx = px - s.mu.x();
                        const double dy = py - s.mu.y();
                        const double power = 0.5 * (s.conic_a * dx * dx + s.conic_c * dy * dy) +
                                             s.conic_b * dx * dy;
                        if (power > st.power_cutoff) continue;
                        if (t < st.min_transmittance) break;
                        const double gexp = std::exp(-power);
                        const double alpha = std::min(s.opacity * gexp, 1.0 - 1e-12);
                        contribs.push_back({idx, alpha, gexp, dx, dy, t});
                        t *= (1.0 - alpha);
                    }
                    if (contribs.empty()) continue;

                    // Reverse sweep with the suffix color behind each splat.
                    Vec3 suffix = background * t;
                    for (size_t k = contribs.size(); k-- > 0;) {
                        const Contribution& c = contribs[k];
                        const Splat& s = prep.splats[c.splat];
                        a.touched[c.splat] = 1;

                        const double weight = c.alpha * c.t_before;
                        a.color[c.splat] += dl_dc * weight;

                        const Vec3 dc_dalpha = s.color * c.t_before - suffix / (1.0 - c.alpha);
                        const double dl_dalpha = dl_dc.dot(dc_dalpha);
                        a.opacity[c.splat] += c.gexp * dl_dalpha;

                        const double w = c.alpha * dl_dalpha;  // dL/dG * G
                        a.mu[c.splat].x() += w * (s.conic_a * c.dx + s.conic_b * c.dy);
                        a.mu[c.splat].y() += w * (s.conic_b * c.dx + s.conic_c * c.dy);
                        a.cov[c.splat] += Vec3(-w * 0.5 * c.dx * c.dx, -w * 0.5 * c.dx * c.dy,
                                               -w * 0.5 * c.dy * c.dy);

                        suffix += s.color * (c.alpha * c.t_before);
                    }
                }
            }
        }
    });

    // Deterministic reduction in worker order.
    Accum& total = acc[0];
    for (int wkr = 1; wkr < workers; ++wkr) {
        for (size_t i = 0; i < n; ++i) {
            total.mu[i] += acc[wkr].mu[i];
            total.cov[i] += acc[wkr].cov[i];
            total.opacity[i] += acc[wkr].opacity[i];
            total.color[i] += acc[wkr].color[i];
            total.touched[i] |= acc[wkr].touched[i];
        }
    }

    // Chain from screen-space sums to the activated parameters.
    for (size_t i = 0; i < n; ++i) {
        if (!prep.splats[i].valid) continue;
        grads.visible[i] = 1;
        if (!total.touched[i]) continue;

        const Gaussian3D& g = gaussians[i];
        const Splat& s = prep.splats[i];
        grads.color[i] = total.color[i];
        grads.opacity[i] = total.opacity[i];
        grads.screen[i] = total.mu[i];

        const Vec3 q = cam.rotation * g.position + cam.translation;
        const double z = q.z();
        const Vec4 qn = g.rotation.normalized();
        const Mat3 r = quat_to_rotation(qn);
        const Mat3 l = r * g.scale.asDiagonal();
        const Mat3 sigma3 = l * l.transpose();
        Eigen::Matrix<double, 2, 3> jac;
        jac << cam.fx / z, 0, -cam.fx * q.x() / (z * z), 0, cam.fy / z, -cam.fy * q.y() / (z * z);
        const Eigen::Matrix<double, 2, 3> v = jac * cam.rotation;

        Eigen::Matrix2d conic;
        conic << s.conic_a, s.conic_b, s.conic_b, s.conic_c;
        Eigen::Matrix2d dl_dconic;
        dl_dconic << total.cov[i][0], total.cov[i][1], total.cov[i][1], total.cov[i][2];

        // P = M^-1  =>  dL/dM = -P dL/dP P.
        const Eigen::Matrix2d dl_dcov2 = -conic * dl_dconic * conic;
        const Mat3 dl_dsigma3 = v.transpose() * dl_dcov2 * v;
        const Eigen::Matrix<double, 2, 3> dl_dv = 2.0 * dl_dcov2 * v * sigma3;
        const Eigen::Matrix<double, 2, 3> dl_djac = dl_dv * cam.rotation.transpose();

        // Sigma3 = L L^T with L = R diag(scale).
        const Mat3 dl_dl = 2.0 * dl_dsigma3 * l;
        const Mat3 dl_dr = dl_dl * g.scale.asDiagonal();
        for (int k = 0; k < 3; ++k) {
            grads.scale[i][k] = r.col(k).dot(dl_dl.col(k));
        }

        // Quaternion chain, through the normalization.
        const double w = qn[0], x = qn[1], y = qn[2], zz = qn[3];
        Mat3 dr_dq[4];
        dr_dq[0] << 0, -2 * zz, 2 * y, 2 * zz, 0, -2 * x, -2 * y, 2 * x, 0;
        dr_dq[1] << 0, 2 * y, 2 * zz, 2 * y, -4 * x, -2 * w, 2 * zz, 2 * w, -4 * x;
        dr_dq[2] << -4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * zz, -2 * w, 2 * zz, -4 * y;
        dr_dq[3] << -4 * zz, -2 * w, 2 * x, 2 * w, -4 * zz, 2 * y, 2 * x, 2 * y, 0;
        Vec4 dl_dqn;
        for (int k = 0; k < 4; ++k) dl_dqn[k] = (dl_dr.array() * dr_dq[k].array()).sum();
        const double norm = g.rotation.norm();
        grads.rotation[i] = (dl_dqn - qn * qn.dot(dl_dqn)) / norm;

        // Camera-space position gradient: through the projected mean and the
        // q-dependence of the projection Jacobian.
        Vec3 dl_dq = jac.transpose() * total.mu[i];
        const double z2 = z * z, z3 = z2 * z;
        dl_dq.x() += dl_djac(0, 2) * (-cam.fx / z2);
        dl_dq.y() += dl_djac(1, 2) * (-cam.fy / z2);
        dl_dq.z() += dl_djac(0, 0) * (-cam.fx / z2) + dl_djac(1, 1) * (-cam.fy / z2) +
                     dl_djac(0, 2) * (2.0 * cam.fx * q.x() / z3) +
                     dl_djac(1, 2) * (2.0 * cam.fy * q.y() / z3);
        grads.position[i] = cam.rotation.transpose() * dl_dq;
    }
    return grads;
}

}  // namespace tempogs
