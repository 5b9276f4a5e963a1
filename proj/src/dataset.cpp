#include "tempogs/dataset.hpp"

#include <cstdio>

#include "tempogs/png_io.hpp"
#include "tempogs/ply_io.hpp"
#include "tempogs/registration.hpp"
#include "tempogs/renderer.hpp"
#include "tempogs/train.hpp"

namespace tempogs {

namespace fs = std::filesystem;

namespace {

std::string view_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%04d.png", index);
    return buf;
}

std::string mask_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "mask_%04d.png", index);
    return buf;
}

// Colored surface samples of the listed objects; colors carry the same jitter
// statistics as the splats.
PointCloud sample_cloud(const std::vector<SceneObject>& objects, int total, Rng& rng) {
    PointCloud cloud;
    double area_total = 0;
    std::vector<double> areas;
    for (const auto& o : objects) {
        const double a = o.type == "sphere-blob"
                             ? 4.0 * EIGEN_PI * 0.25 * o.size.x() * o.size.x()
                             : (o.type == "plane-blob"
                                    ? o.size.x() * o.size.y()
                                    : 2.0 * (o.size.y() * o.size.z() + o.size.x() * o.size.z() +
                                             o.size.x() * o.size.y()));
        areas.push_back(a);
        area_total += a;
    }
    for (size_t k = 0; k < objects.size(); ++k) {
        const int n = std::max(1, static_cast<int>(std::round(total * areas[k] / area_total)));
        const auto pts = sample_object_surface(objects[k], n, rng);
        for (const Vec3& p : pts) {
            cloud.points.push_back(p);
            Vec3 c;
            for (int ch = 0; ch < 3; ++ch) {
                c[ch] = std::clamp(objects[k].color[ch] * (1.0 + 0.18 * rng.uniform(-1, 1)), 0.02,
                                   0.98);
            }
            cloud.colors.push_back(c);
        }
    }
    return cloud;
}

SimilarityTransform sample_perturbation(const SceneSpec& spec, Rng& rng) {
    SimilarityTransform f;
    const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    const double angle = spec.perturb_rotation_deg * rng.uniform(0.6, 1.0) * EIGEN_PI / 180.0;
    f.rotation = rotation_about_axis(axis, angle);
    f.scale = rng.uniform(spec.perturb_scale_min, spec.perturb_scale_max);
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    if (dir.norm() < 1e-9) dir = Vec3(1, 0, 0);
    f.translation =
        spec.perturb_translation_frac * spec.extent * rng.uniform(0.6, 1.0) * dir.normalized();
    return f;
}

}  // namespace

std::vector<Camera> SceneDataset::tn_cameras_est() const {
    std::vector<Camera> cams;
    for (const auto& v : tn_train_views) cams.push_back(v.camera);
    for (const auto& v : tn_test_views) cams.push_back(v.camera);
    return cams;
}

SceneDataset generate_dataset(const SceneSpec& spec, const fs::path& out, const GenerateOptions& opt) {
    spec.validate();
    fs::create_directories(out / "t0" / "images");
    fs::create_directories(out / "tn" / "images");
    fs::create_directories(out / "ground_truth" / "masks");

    SceneDataset ds;
    ds.spec = spec;

    const GroundTruthScene gt = build_ground_truth(spec);
    RenderSettings rs;
    rs.threads = opt.threads;

    // Cameras. Separate streams keep the draws independent of each other.
    Rng rng_cam(spec.seed * 31 + 2);
    const std::vector<Camera> t0_cams = make_t0_cameras(spec, rng_cam);
    const std::vector<Camera> tn_cams_true = make_tn_cameras(spec, rng_cam);

    // t0 views rendered from the ground-truth t0 model.
    for (size_t k = 0; k < t0_cams.size(); ++k) {
        Camera cam = t0_cams[k];
        cam.image_path = "images/" + view_name(static_cast<int>(k));
        const Image img = render(gt.model_t0, cam, spec.background, rs);
        save_png(out / "t0" / cam.image_path, img);
        ds.t0_views.push_back({cam, img.quantized()});
    }
    {
        std::vector<Camera> cams;
        for (const auto& v : ds.t0_views) cams.push_back(v.camera);
        save_cameras(out / "t0" / "cameras.json", cams);
    }

    // tn views: rendered in the true frame, published in the perturbed frame.
    Rng rng_frame(spec.seed * 31 + 3);
    const SimilarityTransform f = sample_perturbation(spec, rng_frame);
    ds.gt_est_to_t0 = f.inverse();

    std::vector<Camera> tn_cams_est;
    std::vector<Image> tn_images;
    for (size_t k = 0; k < tn_cams_true.size(); ++k) {
        const Image img = render(gt.model_tn, tn_cams_true[k], spec.background, rs);
        tn_images.push_back(img);
        Camera est = apply_similarity_to_camera(f, tn_cams_true[k]);
        if (spec.pose_noise_deg > 0) {
            const Vec3 axis(rng_frame.normal(), rng_frame.normal(), rng_frame.normal());
            est.rotation = rotation_about_axis(axis, spec.pose_noise_deg * rng_frame.normal() *
                                                         EIGEN_PI / 180.0) *
                           est.rotation;
        }
        est.image_path = "images/" + view_name(static_cast<int>(k));
        save_png(out / "tn" / est.image_path, img);
        tn_cams_est.push_back(est);
        View view{est, img.quantized()};
        if (static_cast<int>(k) < spec.tn_train_view_count) {
            ds.tn_train_views.push_back(view);
        } else {
            ds.tn_test_views.push_back(view);
        }
    }
    save_cameras(out / "tn" / "cameras_est.json", tn_cams_est);

    // Ground-truth change masks by render differencing in the true frame.
    for (size_t k = 0; k < tn_cams_true.size(); ++k) {
        const Image before = render(gt.model_t0, tn_cams_true[k], spec.background, rs);
        Image mask(spec.image_width, spec.image_height, 0.0);
        for (size_t i = 0; i < mask.pixels.size(); ++i) {
            if (std::abs(before.pixels[i] - tn_images[k].pixels[i]) > 1e-12) {
                const size_t px = i / 3;
                mask.pixels[3 * px] = mask.pixels[3 * px + 1] = mask.pixels[3 * px + 2] = 1.0;
            }
        }
        save_png(out / "ground_truth" / "masks" / mask_name(static_cast<int>(k)), mask);
        ds.change_masks.push_back(std::move(mask));
    }

    // Clouds. P_c samples the t0 geometry, the dense cloud samples tn geometry
    // expressed in the perturbed frame.
    Rng rng_cloud(spec.seed * 31 + 4);
    ds.p_c = sample_cloud(spec.objects, spec.pc_points, rng_cloud);
    for (Vec3& p : ds.p_c.points) {
        p += spec.pc_noise * Vec3(rng_cloud.normal(), rng_cloud.normal(), rng_cloud.normal());
    }

    std::vector<SceneObject> tn_objects;
    for (const SceneObject& o : spec.objects) {
        bool removed = false;
        Vec3 shift = Vec3::Zero();
        for (const SceneEdit& e : spec.edits) {
            if (e.object == o.name && e.op == "remove") removed = true;
            if (e.object == o.name && e.op == "move") shift += e.delta;
        }
        if (removed) continue;
        SceneObject moved = o;
        moved.center += shift;
        tn_objects.push_back(moved);
    }
    for (const SceneEdit& e : spec.edits) {
        if (e.op == "add") tn_objects.push_back(e.added);
    }
    PointCloud dense_true = sample_cloud(tn_objects, spec.dense_points, rng_cloud);
    ds.dense_tn.colors = dense_true.colors;
    for (const Vec3& p : dense_true.points) {
        ds.dense_tn.points.push_back(
            f.apply(p) +
            spec.cloud_noise * Vec3(rng_cloud.normal(), rng_cloud.normal(), rng_cloud.normal()));
    }

    // Landmarks shared by both captures: appended to both clouds so seed
    // correspondences reference the same physical points.
    Rng rng_marks(spec.seed * 31 + 5);
    const std::vector<SceneObject> stable = geometry_stable_objects(spec);
    if (stable.empty()) throw std::runtime_error("spec leaves no geometry-stable objects");
    for (int k = 0; k < spec.seed_correspondence_count; ++k) {
        const SceneObject& obj = stable[rng_marks.uniform_index(stable.size())];
        const Vec3 p = sample_object_surface(obj, 1, rng_marks)[0];
        ds.p_c.points.push_back(p + spec.pc_noise * Vec3(rng_marks.normal(), rng_marks.normal(),
                                                         rng_marks.normal()));
        ds.p_c.colors.push_back(Vec3::Constant(0.5));
        ds.dense_tn.points.push_back(
            f.apply(p) +
            spec.cloud_noise * Vec3(rng_marks.normal(), rng_marks.normal(), rng_marks.normal()));
        ds.dense_tn.colors.push_back(Vec3::Constant(0.5));
        ds.seed_correspondences.emplace_back(ds.dense_tn.size() - 1, ds.p_c.size() - 1);
    }

    // 2D matches: tracked points with known t0 pixels, appended to the dense
    // cloud like any other tracked landmark.
    int made = 0;
    while (made < spec.match_count) {
        const SceneObject& obj = stable[rng_marks.uniform_index(stable.size())];
        const Vec3 p = sample_object_surface(obj, 1, rng_marks)[0];
        const size_t view_idx = rng_marks.uniform_index(t0_cams.size());
        const auto px = project(t0_cams[view_idx], p);
        if (!px || px->x() < 1 || px->x() >= spec.image_width - 1 || px->y() < 1 ||
            px->y() >= spec.image_height - 1) {
            continue;
        }
        ds.dense_tn.points.push_back(
            f.apply(p) +
            spec.cloud_noise * Vec3(rng_marks.normal(), rng_marks.normal(), rng_marks.normal()));
        ds.dense_tn.colors.push_back(Vec3::Constant(0.5));
        Match2D3D m;
        m.view_id = t0_cams[view_idx].id;
        m.point_index = ds.dense_tn.size() - 1;
        m.pixel = *px + spec.match_noise_px * Vec2(rng_marks.normal(), rng_marks.normal());
        ds.matches.push_back(m);
        ++made;
    }

    save_point_cloud(out / "t0" / "points.ply", ds.p_c);
    save_point_cloud(out / "tn" / "points_dense.ply", ds.dense_tn);
    save_matches(out / "matches.json", ds.matches);
    save_seed_correspondences(out / "seed_correspondences.json", ds.seed_correspondences);
    write_json_atomic(out / "ground_truth" / "transform.json",
                      similarity_to_json(ds.gt_est_to_t0));

    // Pretrained t0 model, cached per spec.
    const fs::path model_path = out / "t0" / "model_t0.ply";
    const fs::path spec_path = out / "spec.json";
    const Json spec_json = spec.to_json();
    bool reuse = false;
    if (opt.reuse_cached_pretrain && fs::exists(model_path) && fs::exists(spec_path)) {
        try {
            reuse = (load_json(spec_path) == spec_json);
        } catch (const std::exception&) {
            reuse = false;
        }
    }
    if (reuse) {
        ds.model_t0 = load_gaussian_model(model_path);
    } else {
        TrainConfig pretrain;
        pretrain.max_iterations = spec.pretrain_steps;
        pretrain.seed = spec.seed;
        pretrain.threads = opt.threads;
        ds.model_t0 =
            baseline_optimize(ds.p_c, ds.t0_views, pretrain, spec.background).model;
        save_gaussian_model(model_path, ds.model_t0);
    }
    write_json_atomic(spec_path, spec_json);
    return ds;
}

SceneDataset load_dataset(const fs::path& dir) {
    SceneDataset ds;
    ds.spec = SceneSpec::from_json(load_json(dir / "spec.json"));

    const std::vector<Camera> t0_cams = load_cameras(dir / "t0" / "cameras.json");
    for (const Camera& cam : t0_cams) {
        ds.t0_views.push_back({cam, load_png(dir / "t0" / cam.image_path)});
    }
    const std::vector<Camera> tn_cams = load_cameras(dir / "tn" / "cameras_est.json");
    for (size_t k = 0; k < tn_cams.size(); ++k) {
        View v{tn_cams[k], load_png(dir / "tn" / tn_cams[k].image_path)};
        if (static_cast<int>(k) < ds.spec.tn_train_view_count) {
            ds.tn_train_views.push_back(std::move(v));
        } else {
            ds.tn_test_views.push_back(std::move(v));
        }
    }
    ds.p_c = load_point_cloud(dir / "t0" / "points.ply");
    ds.dense_tn = load_point_cloud(dir / "tn" / "points_dense.ply");
    ds.model_t0 = load_gaussian_model(dir / "t0" / "model_t0.ply");
    ds.matches = load_matches(dir / "matches.json");
    ds.seed_correspondences = load_seed_correspondences(dir / "seed_correspondences.json");
    ds.gt_est_to_t0 = similarity_from_json(load_json(dir / "ground_truth" / "transform.json"));
    for (size_t k = 0; k < tn_cams.size(); ++k) {
        ds.change_masks.push_back(
            load_png(dir / "ground_truth" / "masks" / mask_name(static_cast<int>(k))));
    }
    return ds;
}

}  // namespace tempogs
