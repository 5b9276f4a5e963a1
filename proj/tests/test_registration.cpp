#include <doctest.h>

#include <cmath>

#include "support/registration_fixtures.hpp"
#include "tempogs/registration.hpp"

using namespace tempogs;
using namespace tempogs::testsupport;

namespace {

std::vector<Vec3> cube_corners() {
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i) {
        pts.emplace_back(i & 1 ? 1 : -1, i & 2 ? 1 : -1, i & 4 ? 1 : -1);
    }
    return pts;
}

}  // namespace

TEST_SUITE("registration") {

TEST_CASE("umeyama identity on identical point sets") {
    const auto pts = cube_corners();
    const SimilarityTransform s = estimate_similarity_closed_form(pts, pts);
    CHECK(std::abs(s.scale - 1.0) < 1e-9);
    CHECK((s.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(s.translation.norm() < 1e-9);
}

TEST_CASE("umeyama recovers a constructed similarity exactly") {
    SimilarityTransform gt;
    gt.scale = 2.0;
    gt.rotation = rotation_about_axis(Vec3(0, 0, 1), EIGEN_PI / 2);
    gt.translation = Vec3(1, 0, 0);
    const auto src = cube_corners();
    std::vector<Vec3> dst;
    for (const Vec3& p : src) dst.push_back(gt.apply(p));
    const SimilarityTransform s = estimate_similarity_closed_form(src, dst);
    CHECK(std::abs(s.scale - gt.scale) < 1e-9);
    CHECK((s.rotation - gt.rotation).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((s.translation - gt.translation).norm() < 1e-9);
}

TEST_CASE("umeyama error paths") {
    const std::vector<Vec3> two = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    CHECK_THROWS_WITH_AS(estimate_similarity_closed_form(two, two),
                         doctest::Contains("degenerate"), std::runtime_error);

    std::vector<Vec3> collinear;
    for (int i = 0; i < 6; ++i) collinear.emplace_back(i, 0, 0);
    CHECK_THROWS_WITH_AS(estimate_similarity_closed_form(collinear, collinear),
                         doctest::Contains("degenerate"), std::runtime_error);

    const std::vector<Vec3> three = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    CHECK_THROWS_AS(estimate_similarity_closed_form(two, three), std::invalid_argument);
}

TEST_CASE("lm returns the optimum unchanged when starting at it") {
    const auto prob = make_alignment_problem(7);
    ResidualReport report;
    const SimilarityTransform out = refine_similarity_lm(prob.gt, prob.dense_est, prob.matches,
                                                         prob.cameras_t0, {}, &report);
    CHECK(std::abs(out.scale - prob.gt.scale) < 1e-9);
    CHECK((out.rotation - prob.gt.rotation).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((out.translation - prob.gt.translation).norm() < 1e-9);
    CHECK(report.reprojection_after_px < 1e-9);
}

TEST_CASE("lm recovers from a perturbed initial guess on noise-free matches") {
    for (uint64_t seed : {11u, 12u, 13u}) {
        const auto prob = make_alignment_problem(seed, 0.0, 0.0, 600, 50);
        Rng rng(seed * 100);
        SimilarityTransform init = prob.gt;
        init.rotation = random_rotation(rng, 5.0) * init.rotation;
        init.scale *= 1.05;
        ResidualReport report;
        const SimilarityTransform out =
            refine_similarity_lm(init, prob.dense_est, prob.matches, prob.cameras_t0, {}, &report);
        CHECK(rotation_angle_deg(out.rotation, prob.gt.rotation) < 1e-5);
        CHECK(std::abs(out.scale / prob.gt.scale - 1.0) < 1e-6);
        CHECK((out.translation - prob.gt.translation).norm() < 1e-5 * prob.extent);
        CHECK(report.reprojection_after_px <= report.reprojection_before_px);
    }
}

TEST_CASE("lm with 0.5 px pixel noise lands below 1 px mean error") {
    int ok = 0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const auto prob = make_alignment_problem(200 + seed, 0.5, 0.0, 600, 80);
        Rng rng(seed);
        SimilarityTransform init = prob.gt;
        init.rotation = random_rotation(rng, 3.0) * init.rotation;
        ResidualReport report;
        refine_similarity_lm(init, prob.dense_est, prob.matches, prob.cameras_t0, {}, &report);
        if (report.reprojection_after_px <= 1.0) ++ok;
    }
    CHECK(ok == 10);
}

TEST_CASE("lm error paths") {
    const auto prob = make_alignment_problem(5);
    CHECK_THROWS_AS(refine_similarity_lm(prob.gt, prob.dense_est, {}, prob.cameras_t0),
                    std::invalid_argument);

    // All matches behind the cameras: flip the cloud far behind every view.
    PointCloud behind = prob.dense_est;
    SimilarityTransform push_behind = prob.gt;
    push_behind.translation += Vec3(0, 0, 1e5);
    CHECK_THROWS_WITH_AS(refine_similarity_lm(push_behind, behind, prob.matches, prob.cameras_t0),
                         doctest::Contains("behind"), std::runtime_error);
}

TEST_CASE("icp identity when target equals source") {
    PointCloud cloud;
    Rng rng(31);
    for (int i = 0; i < 300; ++i) cloud.points.emplace_back(rng.normal(), rng.normal(), rng.normal());
    const SimilarityTransform out = icp(cloud, cloud, SimilarityTransform::identity());
    CHECK(std::abs(out.scale - 1.0) < 1e-9);
    CHECK((out.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(out.translation.norm() < 1e-9);
}

TEST_CASE("icp recovers a small translation") {
    PointCloud src;
    Rng rng(32);
    for (int i = 0; i < 2000; ++i) {
        src.points.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    }
    PointCloud dst = src;
    for (Vec3& p : dst.points) p += Vec3(0.1, 0, 0);
    ResidualReport report;
    const SimilarityTransform out = icp(src, dst, SimilarityTransform::identity(), {}, &report);
    CHECK((out.translation - Vec3(0.1, 0, 0)).norm() < 1e-6);
    CHECK((out.rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(report.icp_rms_after <= report.icp_rms_before);
}

TEST_CASE("icp handles rotation with noise") {
    Rng rng(33);
    PointCloud src;
    for (int i = 0; i < 1500; ++i) {
        src.points.emplace_back(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                                rng.uniform(-0.5, 0.5));
    }
    const Mat3 gt_rot = rotation_about_axis(Vec3(0, 0, 1), 10.0 * EIGEN_PI / 180.0);
    PointCloud dst;
    for (const Vec3& p : src.points) {
        dst.points.push_back(gt_rot * p + 0.01 * Vec3(rng.normal(), rng.normal(), rng.normal()));
    }
    const SimilarityTransform out = icp(src, dst, SimilarityTransform::identity());
    CHECK(rotation_angle_deg(out.rotation, gt_rot) < 1.0);
    CHECK(out.translation.norm() < 0.02);
}

TEST_CASE("icp rejects empty clouds") {
    PointCloud empty, one;
    one.points.emplace_back(0, 0, 0);
    CHECK_THROWS_AS(icp(empty, one, SimilarityTransform::identity()), std::invalid_argument);
    CHECK_THROWS_AS(icp(one, empty, SimilarityTransform::identity()), std::invalid_argument);
}

TEST_CASE("fuse_clouds basic unions") {
    PointCloud a, b;
    Rng rng(41);
    for (int i = 0; i < 100; ++i) a.points.emplace_back(rng.normal(), rng.normal(), rng.normal());
    for (int i = 0; i < 60; ++i) b.points.emplace_back(rng.normal() + 10, rng.normal(), rng.normal());

    CHECK(fuse_clouds(a, b).size() == 160);
    CHECK(fuse_clouds(PointCloud{}, b).size() == 60);

    // Identical clouds with dedup collapse back to one copy: every b-point
    // shares its voxel with the matching a-point (brute-force voxel oracle).
    const PointCloud fused = fuse_clouds(a, a, 0.1);
    CHECK(fused.size() == 100);
}

TEST_CASE("downsample determinism and membership") {
    PointCloud cloud;
    Rng rng(51);
    for (int i = 0; i < 1000; ++i) cloud.points.emplace_back(rng.normal(), rng.normal(), rng.normal());

    const PointCloud same = downsample(cloud, 1.0, 9);
    REQUIRE(same.size() == cloud.size());
    for (size_t i = 0; i < same.size(); ++i) CHECK(same.points[i] == cloud.points[i]);

    const PointCloud quarter = downsample(cloud, 0.25, 9);
    CHECK(quarter.size() == 250);
    for (const Vec3& p : quarter.points) {
        bool member = false;
        for (const Vec3& q : cloud.points) member |= (p == q);
        CHECK(member);
    }

    const PointCloud again = downsample(cloud, 0.25, 9);
    REQUIRE(again.size() == quarter.size());
    for (size_t i = 0; i < again.size(); ++i) CHECK(again.points[i] == quarter.points[i]);

    CHECK_THROWS_AS(downsample(cloud, 0.0, 9), std::invalid_argument);
    CHECK_THROWS_AS(downsample(cloud, 1.5, 9), std::invalid_argument);
}

TEST_CASE("full alignment round trip recovers the ground truth") {
    // Noise-free: closed form -> LM -> ICP within 0.5 deg / 1e-3 extent.
    int hits = 0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        const auto prob = make_alignment_problem(900 + seed);
        const AlignmentResult res =
            align_captures(prob.dense_est, prob.cloud_t0, prob.seeds, prob.matches,
                           prob.cameras_t0, {});
        const SimilarityTransform total = res.total();
        const double rot_err = rotation_angle_deg(total.rotation, prob.gt.rotation);
        const double trans_err = (total.translation - prob.gt.translation).norm();
        const double scale_err = std::abs(total.scale / prob.gt.scale - 1.0);
        if (rot_err < 0.5 && trans_err < 1e-3 * prob.extent && scale_err < 1e-3) ++hits;
        CHECK(res.residuals.reprojection_after_px <= res.residuals.reprojection_before_px + 1e-12);
        CHECK(res.residuals.icp_rms_after <= res.residuals.icp_rms_before + 1e-12);
        for (const Camera& cam : res.aligned_cameras) CHECK_NOTHROW(cam.validate());
        CHECK(std::abs(res.icp_refinement.scale - 1.0) == 0.0);
    }
    CHECK(hits == 5);
}

}  // TEST_SUITE
