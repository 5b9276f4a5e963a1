#pragma once

#include <optional>
#include <vector>

#include "tempogs/geometry.hpp"

namespace tempogs {

struct LmSettings {
    double initial_lambda = 1e-3;
    double lambda_up = 10.0;
    double lambda_down = 10.0;
    double cost_tolerance = 1e-10;     // relative decrease on an accepted step
    double gradient_tolerance = 1e-12;
    int max_iterations = 100;
    bool huber = false;                // optional robust loss, off by default
    double huber_delta = 2.0;          // pixels
};

struct IcpSettings {
    double trim_fraction = 0.1;   // worst pairs discarded per iteration
    double rms_tolerance = 1e-8;
    int max_iterations = 50;
    bool estimate_scale = false;  // rigid updates by default
};

struct ResidualReport {
    double reprojection_before_px = 0;
    double reprojection_after_px = 0;
    double icp_rms_before = 0;
    double icp_rms_after = 0;
    int lm_iterations = 0;
    int icp_iterations = 0;
};

struct AlignmentResult {
    SimilarityTransform similarity;        // closed form + LM
    SimilarityTransform icp_refinement;    // rigid, applied after `similarity`
    PointCloud aligned_cloud;
    std::vector<Camera> aligned_cameras;
    ResidualReport residuals;

    SimilarityTransform total() const { return icp_refinement.compose(similarity); }
};

// Least-squares similarity (Umeyama) mapping source onto target. Throws
// std::invalid_argument on length mismatch and a degenerate-configuration
// error when fewer than 3 points or a rank-deficient covariance is given.
SimilarityTransform estimate_similarity_closed_form(const std::vector<Vec3>& source,
                                                    const std::vector<Vec3>& target,
                                                    bool with_scale = true);

// Levenberg-Marquardt refinement of the 7-DoF similarity minimizing squared
// pixel reprojection error of dense-cloud points against their 2D matches.
// Matches behind a camera are skipped; it is an error if all of them are.
SimilarityTransform refine_similarity_lm(const SimilarityTransform& initial,
                                         const PointCloud& dense_cloud,
                                         const std::vector<Match2D3D>& matches,
                                         const std::vector<Camera>& cameras_t0,
                                         const LmSettings& settings = {},
                                         ResidualReport* report = nullptr);

// Point-to-point trimmed ICP from `initial`; returns the complete transform
// mapping source onto target. Updates are rigid unless estimate_scale is set.
SimilarityTransform icp(const PointCloud& source, const PointCloud& target,
                        const SimilarityTransform& initial, const IcpSettings& settings = {},
                        ResidualReport* report = nullptr);

// P_fused = p_c ∪ p_n_aligned. With dedup_voxel set, aligned points falling
// into a voxel already occupied by p_c are dropped (p_c takes precedence).
PointCloud fuse_clouds(const PointCloud& p_c, const PointCloud& p_n_aligned,
                       std::optional<double> dedup_voxel = std::nullopt);

// Deterministic uniform subsample of ceil(fraction * N) points.
PointCloud downsample(const PointCloud& cloud, double fraction, uint64_t seed = 0);

struct AlignOptions {
    double downsample_fraction = 0.25;
    uint64_t downsample_seed = 0;
    std::optional<double> dedup_voxel;
    bool skip_icp = false;
    double inject_misalignment_deg = 0.0;  // residual error composed after LM (ablations)
    LmSettings lm;
    IcpSettings icp;
};

// Full stage-1 driver: closed form on seed correspondences, LM on matches,
// ICP against p_c, then transforms cameras and the dense cloud.
AlignmentResult align_captures(const PointCloud& dense_tn, const PointCloud& p_c,
                               const std::vector<std::pair<size_t, size_t>>& seed_correspondences,
                               const std::vector<Match2D3D>& matches,
                               const std::vector<Camera>& cameras_t0,
                               const std::vector<Camera>& cameras_tn,
                               const AlignOptions& options = {});

double reprojection_rms_px(const SimilarityTransform& s, const PointCloud& cloud,
                           const std::vector<Match2D3D>& matches,
                           const std::vector<Camera>& cameras);

}  // namespace tempogs
