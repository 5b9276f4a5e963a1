#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tempogs/bench.hpp"
#include "tempogs/dataset.hpp"
#include "tempogs/evaluate.hpp"

using namespace tempogs;
namespace fs = std::filesystem;

namespace {

SceneSpec bench_test_spec(uint64_t seed, bool with_edits = true) {
    SceneSpec s;
    s.seed = seed;
    s.image_width = 32;
    s.image_height = 24;
    s.t0_view_count = 5;
    s.tn_train_view_count = 3;
    s.tn_test_view_count = 2;
    s.pc_points = 200;
    s.dense_points = 400;
    s.match_count = 40;
    s.seed_correspondence_count = 10;
    s.pretrain_steps = 25;
    s.cloud_noise = 0.0;
    s.pc_noise = 0.0;
    s.match_noise_px = 0.0;
    s.objects = {
        {"ground", "plane-blob", Vec3(0, 0, 0), Vec3(2.0, 2.0, 0), Vec3(0.45, 0.42, 0.38), 80},
        {"box", "box-blob", Vec3(0.2, 0.1, 0.2), Vec3(0.5, 0.5, 0.4), Vec3(0.7, 0.2, 0.2), 80},
        {"ball", "sphere-blob", Vec3(-0.4, -0.2, 0.25), Vec3(0.4, 0.4, 0.4), Vec3(0.2, 0.4, 0.8), 60},
    };
    if (with_edits) {
        s.edits = {{"remove", "ball", {}, Vec3::Zero(), Vec3::Zero()}};
    }
    return s;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "tempogs_bench_test" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("psnr closed forms") {
    Image a(16, 16, 0.0);
    Image b(16, 16, 0.1);
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));  // MSE 0.01
    Image c(16, 16, 0.01);
    CHECK(psnr(a, c) == doctest::Approx(40.0).epsilon(1e-9));  // MSE 1e-4
    CHECK(std::isinf(psnr(a, a)));
}

TEST_CASE("evaluate flags infinite psnr on exact matches") {
    GaussianModel model;
    Gaussian3D g;
    g.position = Vec3(0, 0, 2);
    g.scale = Vec3::Constant(0.1);
    g.opacity = 0.8;
    g.color = Vec3(0.9, 0.4, 0.2);
    model.append(g);

    Camera cam;
    cam.width = 32;
    cam.height = 32;
    cam.fx = cam.fy = 40;
    cam.cx = cam.cy = 16;
    const Image target = render(model, cam, Vec3(0.1, 0.1, 0.1)).quantized();
    const EvalResult res = evaluate(model, {{cam, target}}, Vec3(0.1, 0.1, 0.1));
    CHECK(res.any_infinite);
    CHECK(res.per_view_ssim[0] == doctest::Approx(1.0));
    CHECK_THROWS(evaluate(model, {}, Vec3(0, 0, 0)));
}

TEST_CASE("no-edit specs give identical tn geometry and empty masks") {
    const SceneSpec spec = bench_test_spec(3, false);
    const GroundTruthScene gt = build_ground_truth(spec);
    REQUIRE(gt.model_t0.size() == gt.model_tn.size());
    for (size_t i = 0; i < gt.model_t0.size(); ++i) {
        CHECK(gt.model_t0.positions[i] == gt.model_tn.positions[i]);
        CHECK(gt.model_t0.colors[i] == gt.model_tn.colors[i]);
    }
    const fs::path dir = fresh_dir("noedit");
    const SceneDataset ds = generate_dataset(spec, dir);
    for (const Image& mask : ds.change_masks) {
        for (double v : mask.pixels) CHECK(v == 0.0);
    }
}

TEST_CASE("removal specs mark exactly the differenced region") {
    const SceneSpec spec = bench_test_spec(4, true);
    const fs::path dir = fresh_dir("removal");
    const SceneDataset ds = generate_dataset(spec, dir);

    // Oracle: recompute masks by render differencing in the true frame.
    const GroundTruthScene gt = build_ground_truth(spec);
    Rng rng_cam(spec.seed * 31 + 2);
    (void)make_t0_cameras(spec, rng_cam);
    const auto tn_true = make_tn_cameras(spec, rng_cam);
    bool any_nonempty = false;
    for (size_t k = 0; k < tn_true.size(); ++k) {
        const Image before = render(gt.model_t0, tn_true[k], spec.background);
        const Image after = render(gt.model_tn, tn_true[k], spec.background);
        for (int r = 0; r < spec.image_height; ++r) {
            for (int c = 0; c < spec.image_width; ++c) {
                bool changed = false;
                for (int ch = 0; ch < 3; ++ch) {
                    changed |= std::abs(before.at(r, c, ch) - after.at(r, c, ch)) > 1e-12;
                }
                CHECK(ds.change_masks[k].at(r, c, 0) == (changed ? 1.0 : 0.0));
                any_nonempty |= changed;
            }
        }
    }
    CHECK(any_nonempty);
}

TEST_CASE("dataset round trip is exact for cameras and clouds") {
    const SceneSpec spec = bench_test_spec(5);
    const fs::path dir = fresh_dir("roundtrip");
    const SceneDataset written = generate_dataset(spec, dir);
    const SceneDataset loaded = load_dataset(dir);

    REQUIRE(loaded.t0_views.size() == written.t0_views.size());
    for (size_t k = 0; k < loaded.t0_views.size(); ++k) {
        CHECK(loaded.t0_views[k].camera.rotation == written.t0_views[k].camera.rotation);
        CHECK(loaded.t0_views[k].camera.translation == written.t0_views[k].camera.translation);
        CHECK(loaded.t0_views[k].camera.fx == written.t0_views[k].camera.fx);
    }
    REQUIRE(loaded.p_c.size() == written.p_c.size());
    for (size_t i = 0; i < loaded.p_c.size(); ++i) {
        CHECK(loaded.p_c.points[i] == written.p_c.points[i]);
    }
    REQUIRE(loaded.dense_tn.size() == written.dense_tn.size());
    for (size_t i = 0; i < loaded.dense_tn.size(); ++i) {
        CHECK(loaded.dense_tn.points[i] == written.dense_tn.points[i]);
    }
    CHECK(loaded.gt_est_to_t0.scale == written.gt_est_to_t0.scale);
    CHECK(loaded.matches.size() == written.matches.size());
    CHECK(loaded.seed_correspondences == written.seed_correspondences);
    CHECK(loaded.model_t0.size() == written.model_t0.size());
}

TEST_CASE("ground-truth transform maps landmarks onto the t0 cloud") {
    // Noise-free spec: est-frame landmark points must land exactly on their
    // t0 twins under the stored transform.
    const SceneSpec spec = bench_test_spec(6);
    const fs::path dir = fresh_dir("gt_transform");
    const SceneDataset ds = generate_dataset(spec, dir);
    for (const auto& [src, tgt] : ds.seed_correspondences) {
        const Vec3 mapped = ds.gt_est_to_t0.apply(ds.dense_tn.points[src]);
        CHECK((mapped - ds.p_c.points[tgt]).norm() < 1e-9);
    }
}

TEST_CASE("same seed twice gives byte-identical datasets") {
    const SceneSpec spec = bench_test_spec(7);
    const fs::path a = fresh_dir("det_a");
    const fs::path b = fresh_dir("det_b");
    GenerateOptions opt;
    opt.reuse_cached_pretrain = false;
    generate_dataset(spec, a, opt);
    generate_dataset(spec, b, opt);

    for (const char* rel :
         {"spec.json", "t0/cameras.json", "t0/points.ply", "t0/model_t0.ply",
          "tn/cameras_est.json", "tn/points_dense.ply", "matches.json",
          "seed_correspondences.json", "ground_truth/transform.json", "t0/images/view_0000.png",
          "tn/images/view_0002.png", "ground_truth/masks/mask_0001.png"}) {
        CHECK_MESSAGE(file_bytes(a / rel) == file_bytes(b / rel), rel);
    }
}

TEST_CASE("experiment matrix handles empty variants and records failures") {
    const auto cells = run_experiment_matrix({}, {}, fresh_dir("matrix_empty"), TrainConfig{});
    CHECK(cells.empty());

    // A failing cell is recorded, the matrix continues.
    SceneSpec bad = bench_test_spec(8);
    bad.tn_layout = "uniform";
    TrainConfig cfg;
    cfg.max_iterations = 5;
    cfg.adaptation_steps = 2;
    std::vector<MatrixSpec> specs = {{"cell", bench_test_spec(8)}};
    std::vector<VariantRun> runs = {{Variant::kBaseline, 0.0}};
    const fs::path out = fresh_dir("matrix_run");
    const auto result = run_experiment_matrix(specs, runs, out, cfg);
    REQUIRE(result.size() == 1);
    CHECK(result[0].error.empty());
    CHECK(result[0].mean_psnr > 0.0);
    CHECK(fs::exists(out / "matrix.csv"));
    CHECK(fs::exists(out / "matrix.json"));
    CHECK(fs::exists(out / "summary.txt"));
}

TEST_CASE("variant names round trip") {
    for (Variant v : {Variant::kFull, Variant::kBaseline, Variant::kNoAlign, Variant::kNoIcp,
                      Variant::kNoConfidenceFinetune, Variant::kFixedConfidence}) {
        CHECK(variant_from_name(variant_name(v)) == v);
    }
    CHECK_THROWS(variant_from_name("bogus"));
}

}  // TEST_SUITE
