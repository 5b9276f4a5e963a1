#include "tempogs/registration.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "tempogs/gaussian_model.hpp"
#include "tempogs/kd_tree.hpp"
#include "tempogs/random.hpp"

namespace tempogs {

namespace {

struct QuatState {
    Vec4 q = Vec4(1, 0, 0, 0);  // unit
    double log_scale = 0.0;
    Vec3 t = Vec3::Zero();

    SimilarityTransform to_transform() const {
        SimilarityTransform s;
        s.scale = std::exp(log_scale);
        s.rotation = quat_to_rotation(q.normalized());
        s.translation = t;
        return s;
    }

    static QuatState from_transform(const SimilarityTransform& s) {
        QuatState st;
        const Eigen::Quaterniond eq(s.rotation);
        st.q = Vec4(eq.w(), eq.x(), eq.y(), eq.z()).normalized();
        st.log_scale = std::log(s.scale);
        st.t = s.translation;
        return st;
    }
};

void quat_jacobians(const Vec4& q, Mat3 dr_dq[4]) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    dr_dq[0] << 0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0;
    dr_dq[1] << 0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x;
    dr_dq[2] << -4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y;
    dr_dq[3] << -4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0;
}

double trimmed_rms(const std::vector<Vec3>& transformed_source, const KdTree& target_tree,
                   double trim_fraction) {
    std::vector<double> d2;
    d2.reserve(transformed_source.size());
    for (const Vec3& p : transformed_source) d2.push_back(target_tree.nearest(p).second);
    std::sort(d2.begin(), d2.end());
    const size_t keep =
        std::max<size_t>(3, static_cast<size_t>(std::ceil((1.0 - trim_fraction) * d2.size())));
    double sum = 0;
    const size_t n = std::min(keep, d2.size());
    for (size_t i = 0; i < n; ++i) sum += d2[i];
    return std::sqrt(sum / static_cast<double>(n));
}

}  // namespace

SimilarityTransform estimate_similarity_closed_form(const std::vector<Vec3>& source,
                                                    const std::vector<Vec3>& target,
                                                    bool with_scale) {
    if (source.size() != target.size()) {
        throw std::invalid_argument("correspondence length mismatch: " +
                                    std::to_string(source.size()) + " vs " +
                                    std::to_string(target.size()));
    }
    const size_t n = source.size();
    if (n < 3) {
        throw std::runtime_error("degenerate configuration: need at least 3 correspondences");
    }
    Vec3 mu_s = Vec3::Zero(), mu_t = Vec3::Zero();
    for (size_t i = 0; i < n; ++i) {
        mu_s += source[i];
        mu_t += target[i];
    }
    mu_s /= static_cast<double>(n);
    mu_t /= static_cast<double>(n);

    Mat3 cov = Mat3::Zero();
    double var_s = 0;
    for (size_t i = 0; i < n; ++i) {
        const Vec3 xs = source[i] - mu_s;
        const Vec3 xt = target[i] - mu_t;
        cov += xt * xs.transpose();
        var_s += xs.squaredNorm();
    }
    cov /= static_cast<double>(n);
    var_s /= static_cast<double>(n);

    Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    if (!(sv(0) > 0) || sv(1) <= 1e-9 * sv(0)) {
        throw std::runtime_error("degenerate configuration: covariance rank < 2");
    }
    const double d = (svd.matrixU().determinant() * svd.matrixV().determinant()) < 0 ? -1.0 : 1.0;
    const Vec3 s_diag(1, 1, d);

    SimilarityTransform out;
    out.rotation = svd.matrixU() * s_diag.asDiagonal() * svd.matrixV().transpose();
    out.scale = with_scale ? (sv.dot(s_diag) / var_s) : 1.0;
    if (!(out.scale > 0)) {
        throw std::runtime_error("degenerate configuration: non-positive recovered scale");
    }
    out.translation = mu_t - out.scale * (out.rotation * mu_s);
    return out;
}

double reprojection_rms_px(const SimilarityTransform& s, const PointCloud& cloud,
                           const std::vector<Match2D3D>& matches,
                           const std::vector<Camera>& cameras) {
    std::map<int, const Camera*> by_id;
    for (const Camera& c : cameras) by_id[c.id] = &c;
    double sum = 0;
    size_t count = 0;
    for (const Match2D3D& m : matches) {
        auto it = by_id.find(m.view_id);
        if (it == by_id.end() || m.point_index >= cloud.size()) continue;
        const auto px = project(*it->second, s.apply(cloud.points[m.point_index]));
        if (!px) continue;
        sum += (*px - m.pixel).squaredNorm();
        ++count;
    }
    return count == 0 ? std::numeric_limits<double>::quiet_NaN()
                      : std::sqrt(sum / static_cast<double>(count));
}

SimilarityTransform refine_similarity_lm(const SimilarityTransform& initial,
                                         const PointCloud& dense_cloud,
                                         const std::vector<Match2D3D>& matches,
                                         const std::vector<Camera>& cameras_t0,
                                         const LmSettings& st, ResidualReport* report) {
    if (matches.empty()) throw std::invalid_argument("no matches supplied to LM refinement");
    initial.validate();
    std::map<int, const Camera*> by_id;
    for (const Camera& c : cameras_t0) by_id[c.id] = &c;
    for (const Match2D3D& m : matches) {
        if (by_id.find(m.view_id) == by_id.end()) {
            throw std::invalid_argument("match references unknown view id " +
                                        std::to_string(m.view_id));
        }
        if (m.point_index >= dense_cloud.size()) {
            throw std::invalid_argument("match point index out of range");
        }
    }

    // Cost (and optional residual weights) at a parameter state.
    auto evaluate = [&](const QuatState& state, size_t* valid_out) {
        const SimilarityTransform s = state.to_transform();
        double cost = 0;
        size_t valid = 0;
        for (const Match2D3D& m : matches) {
            const Camera& cam = *by_id[m.view_id];
            const auto px = project(cam, s.apply(dense_cloud.points[m.point_index]));
            if (!px) continue;
            double e2 = (*px - m.pixel).squaredNorm();
            if (st.huber) {
                const double e = std::sqrt(e2);
                if (e > st.huber_delta) e2 = st.huber_delta * (2 * e - st.huber_delta);
            }
            cost += e2;
            ++valid;
        }
        if (valid_out) *valid_out = valid;
        return cost;
    };

    QuatState state = QuatState::from_transform(initial);
    size_t valid = 0;
    double cost = evaluate(state, &valid);
    if (valid == 0) throw std::runtime_error("non-finite residuals: all matches behind camera");

    if (report) {
        report->reprojection_before_px = reprojection_rms_px(initial, dense_cloud, matches, cameras_t0);
    }

    double lambda = st.initial_lambda;
    int iterations = 0;
    bool converged = false;
    using Vec8 = Eigen::Matrix<double, 8, 1>;
    using Mat8 = Eigen::Matrix<double, 8, 8>;

    for (; iterations < st.max_iterations && !converged; ++iterations) {
        const Vec4 qn = state.q;  // kept unit-norm
        const Mat3 r = quat_to_rotation(qn);
        const double scale = std::exp(state.log_scale);
        Mat3 dr_dq[4];
        quat_jacobians(qn, dr_dq);
        // Project the raw-quaternion direction onto the unit sphere tangent.
        const Eigen::Matrix4d qproj = Eigen::Matrix4d::Identity() - qn * qn.transpose();

        Mat8 jtj = Mat8::Zero();
        Vec8 jtr = Vec8::Zero();
        for (const Match2D3D& m : matches) {
            const Camera& cam = *by_id[m.view_id];
            const Vec3 p = dense_cloud.points[m.point_index];
            const Vec3 y = scale * (r * p) + state.t;
            const Vec3 qc = cam.rotation * y + cam.translation;
            if (qc.z() <= kBehindCameraZ) continue;
            const double z = qc.z();
            const Vec2 px(cam.fx * qc.x() / z + cam.cx, cam.fy * qc.y() / z + cam.cy);
            Vec2 res = px - m.pixel;

            Eigen::Matrix<double, 2, 3> jproj;
            jproj << cam.fx / z, 0, -cam.fx * qc.x() / (z * z), 0, cam.fy / z,
                -cam.fy * qc.y() / (z * z);
            const Eigen::Matrix<double, 2, 3> dr_dy = jproj * cam.rotation;

            Eigen::Matrix<double, 2, 8> jac;
            Eigen::Matrix<double, 3, 4> dy_dq;
            for (int k = 0; k < 4; ++k) dy_dq.col(k) = scale * (dr_dq[k] * p);
            jac.block<2, 4>(0, 0) = dr_dy * dy_dq * qproj;
            jac.block<2, 1>(0, 4) = dr_dy * (scale * (r * p));
            jac.block<2, 3>(0, 5) = dr_dy;

            double w = 1.0;
            if (st.huber) {
                const double e = res.norm();
                if (e > st.huber_delta) w = st.huber_delta / e;
            }
            jtj += w * jac.transpose() * jac;
            jtr += w * jac.transpose() * res;
        }
        if (jtr.lpNorm<Eigen::Infinity>() < st.gradient_tolerance) break;

        bool accepted = false;
        while (!accepted && lambda < 1e12) {
            Mat8 damped = jtj;
            for (int k = 0; k < 8; ++k) {
                damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
            }
            const Vec8 delta = damped.ldlt().solve(-jtr);
            QuatState candidate = state;
            candidate.q = (state.q + delta.head<4>()).normalized();
            candidate.log_scale = state.log_scale + delta(4);
            candidate.t = state.t + delta.tail<3>();
            size_t cand_valid = 0;
            const double cand_cost = evaluate(candidate, &cand_valid);
            if (cand_valid > 0 && cand_cost < cost) {
                const double decrease = cost - cand_cost;
                state = candidate;
                lambda /= st.lambda_down;
                accepted = true;
                if (decrease < st.cost_tolerance * std::max(cost, 1e-300)) converged = true;
                cost = cand_cost;
            } else {
                lambda *= st.lambda_up;
                ++iterations;
                if (iterations >= st.max_iterations) break;
            }
        }
        if (!accepted) break;
    }

    const SimilarityTransform result = state.to_transform();
    if (report) {
        report->reprojection_after_px = reprojection_rms_px(result, dense_cloud, matches, cameras_t0);
        report->lm_iterations = std::min(iterations, st.max_iterations);
    }
    return result;
}

SimilarityTransform icp(const PointCloud& source, const PointCloud& target,
                        const SimilarityTransform& initial, const IcpSettings& st,
                        ResidualReport* report) {
    if (source.points.empty() || target.points.empty()) {
        throw std::invalid_argument("icp requires non-empty clouds");
    }
    initial.validate();
    const KdTree tree(target.points);
    SimilarityTransform current = initial;

    double prev_rms = std::numeric_limits<double>::infinity();
    int iterations = 0;
    std::vector<Vec3> transformed(source.points.size());
    for (; iterations < st.max_iterations; ++iterations) {
        for (size_t i = 0; i < source.points.size(); ++i) {
            transformed[i] = current.apply(source.points[i]);
        }
        // Correspondences, trimmed to the best pairs.
        std::vector<std::pair<double, size_t>> pairs(source.points.size());
        std::vector<size_t> nn(source.points.size());
        for (size_t i = 0; i < transformed.size(); ++i) {
            const auto [idx, d2] = tree.nearest(transformed[i]);
            pairs[i] = {d2, i};
            nn[i] = idx;
        }
        std::sort(pairs.begin(), pairs.end());
        const size_t keep = std::max<size_t>(
            3, static_cast<size_t>(std::ceil((1.0 - st.trim_fraction) * pairs.size())));
        double sum = 0;
        std::vector<Vec3> src_kept, tgt_kept;
        src_kept.reserve(keep);
        tgt_kept.reserve(keep);
        for (size_t i = 0; i < std::min(keep, pairs.size()); ++i) {
            sum += pairs[i].first;
            src_kept.push_back(transformed[pairs[i].second]);
            tgt_kept.push_back(target.points[nn[pairs[i].second]]);
        }
        const double rms = std::sqrt(sum / static_cast<double>(src_kept.size()));
        if (report && iterations == 0) report->icp_rms_before = rms;
        if (report) report->icp_rms_after = rms;
        if (std::abs(prev_rms - rms) < st.rms_tolerance) break;
        prev_rms = rms;

        const SimilarityTransform delta =
            estimate_similarity_closed_form(src_kept, tgt_kept, st.estimate_scale);
        current = delta.compose(current);
    }
    if (report) report->icp_iterations = iterations;
    return current;
}

PointCloud fuse_clouds(const PointCloud& p_c, const PointCloud& p_n_aligned,
                       std::optional<double> dedup_voxel) {
    PointCloud fused;
    const bool colors = p_c.has_colors() || p_n_aligned.has_colors();
    auto push = [&](const PointCloud& cloud, size_t i) {
        fused.points.push_back(cloud.points[i]);
        if (colors) {
            fused.colors.push_back(cloud.has_colors() ? cloud.colors[i] : Vec3::Constant(0.5));
        }
    };
    for (size_t i = 0; i < p_c.size(); ++i) push(p_c, i);

    if (!dedup_voxel) {
        for (size_t i = 0; i < p_n_aligned.size(); ++i) push(p_n_aligned, i);
        return fused;
    }
    const double v = *dedup_voxel;
    if (!(v > 0)) throw std::invalid_argument("dedup voxel size must be positive");
    auto key = [v](const Vec3& p) {
        auto cell = [v](double x) { return static_cast<int64_t>(std::floor(x / v)); };
        // 21 bits per axis packed into one key; plenty for desk-scale scenes.
        const uint64_t mask = (1ull << 21) - 1;
        return ((static_cast<uint64_t>(cell(p.x())) & mask) << 42) |
               ((static_cast<uint64_t>(cell(p.y())) & mask) << 21) |
               (static_cast<uint64_t>(cell(p.z())) & mask);
    };
    std::unordered_set<uint64_t> occupied;
    occupied.reserve(p_c.size() * 2);
    for (const Vec3& p : p_c.points) occupied.insert(key(p));
    for (size_t i = 0; i < p_n_aligned.size(); ++i) {
        if (occupied.count(key(p_n_aligned.points[i])) == 0) push(p_n_aligned, i);
    }
    return fused;
}

PointCloud downsample(const PointCloud& cloud, double fraction, uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw std::invalid_argument("downsample fraction must be in (0, 1]");
    }
    const size_t k = static_cast<size_t>(std::ceil(fraction * static_cast<double>(cloud.size())));
    Rng rng(seed);
    const std::vector<size_t> idx = rng.sample_indices(cloud.size(), k);
    PointCloud out;
    out.points.reserve(idx.size());
    if (cloud.has_colors()) out.colors.reserve(idx.size());
    for (size_t i : idx) {
        out.points.push_back(cloud.points[i]);
        if (cloud.has_colors()) out.colors.push_back(cloud.colors[i]);
    }
    return out;
}

AlignmentResult align_captures(const PointCloud& dense_tn, const PointCloud& p_c,
                               const std::vector<std::pair<size_t, size_t>>& seed_correspondences,
                               const std::vector<Match2D3D>& matches,
                               const std::vector<Camera>& cameras_t0,
                               const std::vector<Camera>& cameras_tn, const AlignOptions& opt) {
    AlignmentResult result;

    std::vector<Vec3> seed_src, seed_tgt;
    for (const auto& [si, ti] : seed_correspondences) {
        if (si >= dense_tn.size() || ti >= p_c.size()) {
            throw std::invalid_argument("seed correspondence index out of range");
        }
        seed_src.push_back(dense_tn.points[si]);
        seed_tgt.push_back(p_c.points[ti]);
    }
    const SimilarityTransform coarse = estimate_similarity_closed_form(seed_src, seed_tgt);
    result.similarity =
        refine_similarity_lm(coarse, dense_tn, matches, cameras_t0, opt.lm, &result.residuals);

    if (opt.inject_misalignment_deg != 0.0) {
        // Residual error composed after the coarse stage, rotated about the
        // t0 cloud centroid (ablation harness hook).
        Vec3 centroid = Vec3::Zero();
        for (const Vec3& p : p_c.points) centroid += p;
        if (!p_c.points.empty()) centroid /= static_cast<double>(p_c.size());
        SimilarityTransform err;
        err.rotation =
            rotation_about_axis(Vec3(1, 2, 3), opt.inject_misalignment_deg * EIGEN_PI / 180.0);
        err.translation = centroid - err.rotation * centroid;
        result.similarity = err.compose(result.similarity);
    }

    const PointCloud dense_down =
        downsample(dense_tn, opt.downsample_fraction, opt.downsample_seed);

    SimilarityTransform total = result.similarity;
    if (opt.skip_icp) {
        result.icp_refinement = SimilarityTransform::identity();
        std::vector<Vec3> transformed(dense_down.size());
        for (size_t i = 0; i < dense_down.size(); ++i) {
            transformed[i] = total.apply(dense_down.points[i]);
        }
        const KdTree tree(p_c.points);
        const double rms = trimmed_rms(transformed, tree, opt.icp.trim_fraction);
        result.residuals.icp_rms_before = result.residuals.icp_rms_after = rms;
    } else {
        total = icp(dense_down, p_c, result.similarity, opt.icp, &result.residuals);
        result.icp_refinement = total.compose(result.similarity.inverse());
        if (!opt.icp.estimate_scale) result.icp_refinement.scale = 1.0;
    }

    result.aligned_cloud = apply_similarity(total, dense_down);
    result.aligned_cameras.reserve(cameras_tn.size());
    for (const Camera& cam : cameras_tn) {
        result.aligned_cameras.push_back(apply_similarity_to_camera(total, cam));
    }
    return result;
}

}  // namespace tempogs
