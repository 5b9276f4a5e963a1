#pragma once

#include <string>
#include <vector>

#include "tempogs/gaussian_model.hpp"
#include "tempogs/geometry.hpp"
#include "tempogs/io_json.hpp"
#include "tempogs/random.hpp"

namespace tempogs {

// Blob primitives: clusters of splats sampled on the primitive surface, so the
// ground-truth scene renders natively.
struct SceneObject {
    std::string name;
    std::string type;  // "box-blob" | "sphere-blob" | "plane-blob"
    Vec3 center = Vec3::Zero();
    Vec3 size = Vec3::Ones();  // box extents / sphere diameter / plane extents
    Vec3 color = Vec3::Constant(0.5);
    int count = 200;
};

struct SceneEdit {
    std::string op;  // "add" | "remove" | "recolor" | "move"
    std::string object;
    SceneObject added;              // for add
    Vec3 new_color = Vec3::Zero();  // for recolor
    Vec3 delta = Vec3::Zero();      // for move
};

struct SceneSpec {
    uint64_t seed = 0;
    double extent = 2.0;
    Vec3 background = Vec3(0.09, 0.10, 0.12);
    int image_width = 128, image_height = 96;
    int t0_view_count = 40;
    int tn_train_view_count = 8;
    int tn_test_view_count = 4;
    std::string tn_layout = "uniform";  // or "concentrated"

    std::vector<SceneObject> objects;
    std::vector<SceneEdit> edits;

    // Frame perturbation of the tn capture (simulated independent estimation).
    double perturb_rotation_deg = 12.0;
    double perturb_scale_min = 0.9, perturb_scale_max = 1.15;
    double perturb_translation_frac = 0.15;  // of extent

    // Noise levels.
    double pose_noise_deg = 0.0;
    double cloud_noise = 0.008;
    double pc_noise = 0.003;
    double match_noise_px = 0.25;

    int pc_points = 2500;
    int dense_points = 6000;
    int match_count = 120;
    int seed_correspondence_count = 16;
    int pretrain_steps = 7000;

    double camera_focal_px = 128.0;  // scaled with image_width when loading presets
    double camera_radius_frac = 0.95;

    void validate() const;
    Json to_json() const;
    static SceneSpec from_json(const Json& j);
};

// The default benchmark spec: ground plane plus four objects; one removal,
// one addition, one recolor, one move at tn.
SceneSpec make_default_spec(uint64_t seed);

Camera look_at_camera(int id, const Vec3& eye, const Vec3& target, int width, int height,
                      double focal);

// Ground-truth splat models for both timestamps, built deterministically from
// the spec (the tn model shares unchanged splats with the t0 model).
struct GroundTruthScene {
    GaussianModel model_t0;
    GaussianModel model_tn;
};
GroundTruthScene build_ground_truth(const SceneSpec& spec);

// Surface sampler used for clouds and ground truth.
std::vector<Vec3> sample_object_surface(const SceneObject& obj, int count, Rng& rng);

// Objects whose geometry is unchanged by the edits (recolor keeps geometry).
std::vector<SceneObject> geometry_stable_objects(const SceneSpec& spec);

std::vector<Camera> make_t0_cameras(const SceneSpec& spec, Rng& rng);
std::vector<Camera> make_tn_cameras(const SceneSpec& spec, Rng& rng);  // train then test

}  // namespace tempogs
