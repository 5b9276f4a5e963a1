#include <doctest.h>

#include <cmath>

#include "tempogs/adam.hpp"
#include "tempogs/densify.hpp"
#include "tempogs/random.hpp"
#include "tempogs/scene.hpp"
#include "tempogs/train.hpp"

using namespace tempogs;

namespace {

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.max_iterations = 40;
    cfg.adaptation_steps = 10;
    cfg.refine_interval_epochs = 2;
    cfg.initial_grid_rows = cfg.initial_grid_cols = 4;
    cfg.fine_grid_rows = cfg.fine_grid_cols = 8;
    cfg.densify_from = 10;
    cfg.densify_until = 30;
    cfg.densify_interval = 10;
    cfg.t0_view_stride = 2;
    cfg.seed = 77;
    return cfg;
}

SceneSpec tiny_spec() {
    SceneSpec s;
    s.seed = 21;
    s.image_width = 32;
    s.image_height = 24;
    s.t0_view_count = 6;
    s.tn_train_view_count = 3;
    s.tn_test_view_count = 1;
    s.objects = {
        {"ground", "plane-blob", Vec3(0, 0, 0), Vec3(2.0, 2.0, 0), Vec3(0.45, 0.42, 0.38), 100},
        {"box", "box-blob", Vec3(0.2, 0.1, 0.2), Vec3(0.5, 0.5, 0.4), Vec3(0.7, 0.2, 0.2), 100},
    };
    s.edits = {{"recolor", "box", {}, Vec3(0.2, 0.6, 0.7), Vec3::Zero()}};
    return s;
}

std::vector<View> render_views(const GaussianModel& model, const std::vector<Camera>& cams,
                               const Vec3& bg) {
    std::vector<View> views;
    for (const Camera& cam : cams) views.push_back({cam, render(model, cam, bg)});
    return views;
}

}  // namespace

TEST_SUITE("optimizer") {

TEST_CASE("init_model_from_cloud basic properties") {
    TrainConfig cfg;
    PointCloud cloud;
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        cloud.points.emplace_back(rng.normal(), rng.normal(), rng.normal());
        cloud.colors.emplace_back(rng.uniform(), rng.uniform(), rng.uniform());
    }
    const GaussianModel model = init_model_from_cloud(cloud, cfg);
    CHECK(model.size() == cloud.size());
    CHECK_NOTHROW(model.check_consistent());
    for (size_t i = 0; i < model.size(); ++i) {
        CHECK(model.positions[i] == cloud.points[i]);
        CHECK(model.colors[i] == cloud.colors[i]);
        CHECK(sigmoid(model.opacity_logits[i]) == doctest::Approx(cfg.init_opacity));
    }
    CHECK_THROWS(init_model_from_cloud(PointCloud{}, cfg));
}

TEST_CASE("init scale clamps for a single point and tracks grid spacing") {
    TrainConfig cfg;
    PointCloud single;
    single.points.emplace_back(1, 2, 3);
    const GaussianModel m1 = init_model_from_cloud(single, cfg);
    // No neighbors: clamped to the lower bound of the (degenerate) extent.
    CHECK(std::exp(m1.log_scales[0].x()) == doctest::Approx(1e-4 * 1e-12));

    // Regular 10x10x10 grid with spacing d: nearest neighbors sit at d.
    PointCloud grid;
    const double d = 0.1;
    for (int x = 0; x < 10; ++x) {
        for (int y = 0; y < 10; ++y) {
            for (int z = 0; z < 10; ++z) grid.points.emplace_back(x * d, y * d, z * d);
        }
    }
    const GaussianModel mg = init_model_from_cloud(grid, cfg);
    for (size_t i = 0; i < mg.size(); i += 97) {
        const double s = std::exp(mg.log_scales[i].x());
        CHECK(std::abs(s - d) / d < 0.2);
    }
    CHECK(mg.colors[0] == Vec3::Constant(0.5));  // grey fallback for colorless clouds
}

TEST_CASE("adam moves parameters against the gradient and respects freeze") {
    GaussianModel model;
    Gaussian3D g;
    g.position = Vec3(0, 0, 2);
    g.scale = Vec3::Constant(0.1);
    g.opacity = 0.5;
    model.append(g);
    model.append(g);
    model.frozen = {0, 1};  // second splat frozen

    RenderGradients grads;
    grads.resize(2);
    grads.position[0] = Vec3(1, 0, 0);
    grads.position[1] = Vec3(1, 0, 0);
    AdamParams params;
    params.lr_position = 1e-2;
    adam_step(model, grads, params);

    CHECK(model.positions[0].x() < 0.0);  // moved against the gradient
    CHECK(model.positions[1].x() == 0.0);
    CHECK(model.step == 1);
    CHECK(std::abs(model.rotations[0].norm() - 1.0) < 1e-12);
}

TEST_CASE("densify prunes low opacity and keeps arrays consistent") {
    GaussianModel model;
    Gaussian3D g;
    g.position = Vec3(0, 0, 2);
    g.scale = Vec3::Constant(0.05);
    g.opacity = 0.5;
    model.append(g);
    g.opacity = 0.001;  // below the prune threshold
    model.append(g);

    DensifyStats stats;
    stats.reset(2);
    DensifyParams params;
    params.scene_extent = 1.0;
    Rng rng(3);
    densify_and_prune(model, stats, params, rng);
    CHECK(model.size() == 1);
    CHECK_NOTHROW(model.check_consistent());
}

TEST_CASE("densify clones small and splits large high-gradient splats") {
    GaussianModel model;
    Gaussian3D small;
    small.position = Vec3(0, 0, 2);
    small.scale = Vec3::Constant(0.001);
    small.opacity = 0.6;
    Gaussian3D large = small;
    large.scale = Vec3::Constant(0.2);
    model.append(small);
    model.append(large);

    RenderGradients grads;
    grads.resize(2);
    grads.visible = {1, 1};
    grads.screen[0] = Vec2(1.0, 0);
    grads.screen[1] = Vec2(1.0, 0);
    DensifyStats stats;
    stats.reset(2);
    stats.accumulate(grads, 1.0);

    DensifyParams params;
    params.scene_extent = 1.0;
    params.grad_threshold = 0.5;
    Rng rng(4);
    densify_and_prune(model, stats, params, rng);
    // Small one cloned (2 copies stay), large one split into 2 children and
    // the parent pruned: 1 + 1 clone + 2 children = 4.
    CHECK(model.size() == 4);
    CHECK_NOTHROW(model.check_consistent());
}

TEST_CASE("progressive_optimize respects max_iterations=1") {
    const SceneSpec spec = tiny_spec();
    const GroundTruthScene gt = build_ground_truth(spec);
    Rng rng(5);
    const auto t0_views = render_views(gt.model_t0, make_t0_cameras(spec, rng), spec.background);
    const auto tn_views = render_views(gt.model_tn, make_tn_cameras(spec, rng), spec.background);

    PointCloud fused;
    fused.points = gt.model_tn.positions;
    TrainConfig cfg = tiny_config();
    cfg.max_iterations = 1;
    const auto res =
        progressive_optimize(gt.model_t0, fused, t0_views, tn_views, cfg, spec.background);
    CHECK(res.report.iterations == 1);
    CHECK(res.report.termination == "max_iterations");
    CHECK(res.model.size() > 0);
}

TEST_CASE("zero-confidence t0 views reproduce the baseline exactly") {
    const SceneSpec spec = tiny_spec();
    const GroundTruthScene gt = build_ground_truth(spec);
    Rng rng(6);
    const auto t0_views = render_views(gt.model_t0, make_t0_cameras(spec, rng), spec.background);
    const auto tn_views = render_views(gt.model_tn, make_tn_cameras(spec, rng), spec.background);

    PointCloud fused;
    fused.points = gt.model_tn.positions;
    fused.colors = gt.model_tn.colors;

    TrainConfig cfg = tiny_config();
    cfg.enable_refinement = false;

    std::vector<ConfidenceMap> zero_maps;
    for (const auto& v : t0_views) {
        zero_maps.push_back(ConfidenceMap::uniform(v.camera.id, cfg.initial_grid_rows,
                                                   cfg.initial_grid_cols, 0.0));
    }
    const auto progressive = progressive_optimize(gt.model_t0, fused, t0_views, tn_views, cfg,
                                                  spec.background, zero_maps);
    const auto baseline = baseline_optimize(fused, tn_views, cfg, spec.background);

    REQUIRE(progressive.model.size() == baseline.model.size());
    for (size_t i = 0; i < progressive.model.size(); ++i) {
        CHECK(progressive.model.positions[i] == baseline.model.positions[i]);
        CHECK(progressive.model.colors[i] == baseline.model.colors[i]);
        CHECK(progressive.model.opacity_logits[i] == baseline.model.opacity_logits[i]);
    }
}

TEST_CASE("baseline determinism and error paths") {
    const SceneSpec spec = tiny_spec();
    const GroundTruthScene gt = build_ground_truth(spec);
    Rng rng(7);
    const auto tn_views = render_views(gt.model_tn, make_tn_cameras(spec, rng), spec.background);
    PointCloud fused;
    fused.points = gt.model_tn.positions;

    const TrainConfig cfg = tiny_config();
    const auto a = baseline_optimize(fused, tn_views, cfg, spec.background);
    const auto b = baseline_optimize(fused, tn_views, cfg, spec.background);
    REQUIRE(a.model.size() == b.model.size());
    for (size_t i = 0; i < a.model.size(); ++i) {
        CHECK(a.model.positions[i] == b.model.positions[i]);
    }

    CHECK_THROWS(baseline_optimize(fused, {}, cfg, spec.background));
    CHECK_THROWS(baseline_optimize(PointCloud{}, tn_views, cfg, spec.background));
}

TEST_CASE("progressive training produces monotone coverage and a valid termination reason") {
    const SceneSpec spec = tiny_spec();
    const GroundTruthScene gt = build_ground_truth(spec);
    Rng rng(8);
    const auto t0_views = render_views(gt.model_t0, make_t0_cameras(spec, rng), spec.background);
    const auto tn_views = render_views(gt.model_tn, make_tn_cameras(spec, rng), spec.background);
    PointCloud fused;
    fused.points = gt.model_tn.positions;
    fused.colors = gt.model_tn.colors;

    TrainConfig cfg = tiny_config();
    cfg.max_iterations = 60;
    const auto res =
        progressive_optimize(gt.model_t0, fused, t0_views, tn_views, cfg, spec.background);
    REQUIRE(!res.report.coverage_per_round.empty());
    for (size_t k = 1; k < res.report.coverage_per_round.size(); ++k) {
        CHECK(res.report.coverage_per_round[k] >= res.report.coverage_per_round[k - 1] - 1e-12);
    }
    CHECK((res.report.termination == "max_iterations" ||
           res.report.termination == "coverage_converged"));
    CHECK(res.report.iterations <= cfg.max_iterations);
}

TEST_CASE("static freeze pins frozen splats") {
    const SceneSpec spec = tiny_spec();
    const GroundTruthScene gt = build_ground_truth(spec);
    Rng rng(9);
    const auto t0_views = render_views(gt.model_t0, make_t0_cameras(spec, rng), spec.background);
    const auto tn_views = render_views(gt.model_t0, make_tn_cameras(spec, rng), spec.background);
    PointCloud fused;
    fused.points = gt.model_t0.positions;
    fused.colors = gt.model_t0.colors;

    // tn == t0: refinement converges immediately, so the freeze fires and
    // training continues to the budget with frozen statics.
    TrainConfig cfg = tiny_config();
    cfg.max_iterations = 50;
    cfg.static_freeze = true;
    cfg.densify_from = 1000;  // keep indices stable for the check
    const auto res =
        progressive_optimize(gt.model_t0, fused, t0_views, tn_views, cfg, spec.background);
    CHECK(res.model.frozen.size() == res.model.size());
    size_t frozen = 0;
    for (uint8_t f : res.model.frozen) frozen += f;
    CHECK(frozen > 0);
}

TEST_CASE("train config validation and toml overrides") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.tau_iter = 0.5;  // below tau
    CHECK_THROWS(cfg.validate());

    const TomlTable t = TomlTable::parse(
        "max_iterations = 123\ntau = 0.7\ntau_iter = 0.95\nfine_grid = [32, 32]\nthreads = 2\n");
    const TrainConfig loaded = TrainConfig::from_toml(t);
    CHECK(loaded.max_iterations == 123);
    CHECK(loaded.tau == doctest::Approx(0.7));
    CHECK(loaded.tau_iter == doctest::Approx(0.95));
    CHECK(loaded.threads == 2);
}

}  // TEST_SUITE
