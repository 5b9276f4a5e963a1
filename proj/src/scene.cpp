#include "tempogs/scene.hpp"

#include <cmath>
#include <stdexcept>

namespace tempogs {

void SceneSpec::validate() const {
    if (t0_view_count < 1 || tn_train_view_count < 1 || tn_test_view_count < 1) {
        throw std::invalid_argument("view counts must be >= 1");
    }
    if (tn_layout != "uniform" && tn_layout != "concentrated") {
        throw std::invalid_argument("unknown tn layout: " + tn_layout);
    }
    if (image_width < 16 || image_height < 16) {
        throw std::invalid_argument("image size must be at least 16x16");
    }
    if (objects.empty()) throw std::invalid_argument("spec needs at least one object");
    for (const SceneEdit& e : edits) {
        if (e.op == "add") continue;
        if (e.op != "remove" && e.op != "recolor" && e.op != "move") {
            throw std::invalid_argument("unknown edit op: " + e.op);
        }
        bool found = false;
        for (const SceneObject& o : objects) found |= (o.name == e.object);
        if (!found) throw std::invalid_argument("edit references unknown object: " + e.object);
    }
}

namespace {

Json vec3_to_json(const Vec3& v) { return Json{v.x(), v.y(), v.z()}; }
Vec3 vec3_from_json(const Json& j) { return Vec3(j.at(0), j.at(1), j.at(2)); }

Json object_to_json(const SceneObject& o) {
    return Json{{"name", o.name},       {"type", o.type},   {"center", vec3_to_json(o.center)},
                {"size", vec3_to_json(o.size)}, {"color", vec3_to_json(o.color)},
                {"count", o.count}};
}

SceneObject object_from_json(const Json& j) {
    SceneObject o;
    o.name = j.at("name").get<std::string>();
    o.type = j.at("type").get<std::string>();
    o.center = vec3_from_json(j.at("center"));
    o.size = vec3_from_json(j.at("size"));
    o.color = vec3_from_json(j.at("color"));
    o.count = j.at("count").get<int>();
    return o;
}

}  // namespace

Json SceneSpec::to_json() const {
    Json objs = Json::array();
    for (const auto& o : objects) objs.push_back(object_to_json(o));
    Json eds = Json::array();
    for (const auto& e : edits) {
        Json je{{"op", e.op}, {"object", e.object}};
        if (e.op == "add") je["added"] = object_to_json(e.added);
        if (e.op == "recolor") je["new_color"] = vec3_to_json(e.new_color);
        if (e.op == "move") je["delta"] = vec3_to_json(e.delta);
        eds.push_back(je);
    }
    return Json{{"seed", seed},
                {"extent", extent},
                {"background", vec3_to_json(background)},
                {"image_width", image_width},
                {"image_height", image_height},
                {"t0_view_count", t0_view_count},
                {"tn_train_view_count", tn_train_view_count},
                {"tn_test_view_count", tn_test_view_count},
                {"tn_layout", tn_layout},
                {"objects", objs},
                {"edits", eds},
                {"perturb_rotation_deg", perturb_rotation_deg},
                {"perturb_scale_min", perturb_scale_min},
                {"perturb_scale_max", perturb_scale_max},
                {"perturb_translation_frac", perturb_translation_frac},
                {"pose_noise_deg", pose_noise_deg},
                {"cloud_noise", cloud_noise},
                {"pc_noise", pc_noise},
                {"match_noise_px", match_noise_px},
                {"pc_points", pc_points},
                {"dense_points", dense_points},
                {"match_count", match_count},
                {"seed_correspondence_count", seed_correspondence_count},
                {"pretrain_steps", pretrain_steps},
                {"camera_focal_px", camera_focal_px},
                {"camera_radius_frac", camera_radius_frac}};
}

SceneSpec SceneSpec::from_json(const Json& j) {
    SceneSpec s;
    s.seed = j.at("seed").get<uint64_t>();
    s.extent = j.at("extent").get<double>();
    s.background = vec3_from_json(j.at("background"));
    s.image_width = j.at("image_width").get<int>();
    s.image_height = j.at("image_height").get<int>();
    s.t0_view_count = j.at("t0_view_count").get<int>();
    s.tn_train_view_count = j.at("tn_train_view_count").get<int>();
    s.tn_test_view_count = j.at("tn_test_view_count").get<int>();
    s.tn_layout = j.at("tn_layout").get<std::string>();
    for (const auto& jo : j.at("objects")) s.objects.push_back(object_from_json(jo));
    for (const auto& je : j.at("edits")) {
        SceneEdit e;
        e.op = je.at("op").get<std::string>();
        e.object = je.value("object", "");
        if (e.op == "add") e.added = object_from_json(je.at("added"));
        if (e.op == "recolor") e.new_color = vec3_from_json(je.at("new_color"));
        if (e.op == "move") e.delta = vec3_from_json(je.at("delta"));
        s.edits.push_back(e);
    }
    s.perturb_rotation_deg = j.at("perturb_rotation_deg").get<double>();
    s.perturb_scale_min = j.at("perturb_scale_min").get<double>();
    s.perturb_scale_max = j.at("perturb_scale_max").get<double>();
    s.perturb_translation_frac = j.at("perturb_translation_frac").get<double>();
    s.pose_noise_deg = j.at("pose_noise_deg").get<double>();
    s.cloud_noise = j.at("cloud_noise").get<double>();
    s.pc_noise = j.at("pc_noise").get<double>();
    s.match_noise_px = j.at("match_noise_px").get<double>();
    s.pc_points = j.at("pc_points").get<int>();
    s.dense_points = j.at("dense_points").get<int>();
    s.match_count = j.at("match_count").get<int>();
    s.seed_correspondence_count = j.at("seed_correspondence_count").get<int>();
    s.pretrain_steps = j.at("pretrain_steps").get<int>();
    s.camera_focal_px = j.at("camera_focal_px").get<double>();
    s.camera_radius_frac = j.at("camera_radius_frac").get<double>();
    s.validate();
    return s;
}

SceneSpec make_default_spec(uint64_t seed) {
    SceneSpec s;
    s.seed = seed;
    s.objects = {
        {"ground", "plane-blob", Vec3(0, 0, 0), Vec3(2.2, 2.2, 0), Vec3(0.45, 0.42, 0.38), 500},
        {"crate", "box-blob", Vec3(0.35, 0.2, 0.22), Vec3(0.45, 0.45, 0.45), Vec3(0.75, 0.20, 0.15), 340},
        {"ball", "sphere-blob", Vec3(-0.40, 0.35, 0.20), Vec3(0.40, 0.40, 0.40), Vec3(0.20, 0.35, 0.80), 300},
        {"slab", "box-blob", Vec3(-0.15, -0.45, 0.10), Vec3(0.60, 0.30, 0.20), Vec3(0.25, 0.65, 0.30), 300},
        {"post", "box-blob", Vec3(0.55, -0.35, 0.30), Vec3(0.12, 0.12, 0.60), Vec3(0.80, 0.75, 0.30), 200},
    };
    SceneEdit remove{"remove", "ball", {}, Vec3::Zero(), Vec3::Zero()};
    SceneEdit add{"add", "", {"wedge", "box-blob", Vec3(-0.45, 0.30, 0.15), Vec3(0.35, 0.35, 0.30),
                              Vec3(0.90, 0.50, 0.10), 260},
                  Vec3::Zero(), Vec3::Zero()};
    SceneEdit recolor{"recolor", "crate", {}, Vec3(0.20, 0.70, 0.70), Vec3::Zero()};
    SceneEdit move{"move", "slab", {}, Vec3::Zero(), Vec3(0.25, 0.10, 0.0)};
    s.edits = {remove, add, recolor, move};
    return s;
}

Camera look_at_camera(int id, const Vec3& eye, const Vec3& target, int width, int height,
                      double focal) {
    Camera cam;
    cam.id = id;
    cam.width = width;
    cam.height = height;
    cam.fx = cam.fy = focal;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    const Vec3 forward = (target - eye).normalized();
    Vec3 up(0, 0, 1);
    if (std::abs(forward.dot(up)) > 0.999) up = Vec3(0, 1, 0);
    const Vec3 right = forward.cross(up).normalized();
    const Vec3 down = forward.cross(right).normalized();
    Mat3 r;
    r.row(0) = right.transpose();
    r.row(1) = down.transpose();
    r.row(2) = forward.transpose();
    cam.rotation = r;
    cam.translation = -(r * eye);
    return cam;
}

std::vector<Vec3> sample_object_surface(const SceneObject& obj, int count, Rng& rng) {
    std::vector<Vec3> pts;
    pts.reserve(count);
    if (obj.type == "plane-blob") {
        for (int i = 0; i < count; ++i) {
            pts.push_back(obj.center + Vec3(0.5 * obj.size.x() * rng.uniform(-1, 1),
                                            0.5 * obj.size.y() * rng.uniform(-1, 1), 0.0));
        }
    } else if (obj.type == "sphere-blob") {
        const double r = 0.5 * obj.size.x();
        for (int i = 0; i < count; ++i) {
            Vec3 dir(rng.normal(), rng.normal(), rng.normal());
            while (dir.norm() < 1e-9) dir = Vec3(rng.normal(), rng.normal(), rng.normal());
            pts.push_back(obj.center + r * dir.normalized());
        }
    } else if (obj.type == "box-blob") {
        const Vec3 h = 0.5 * obj.size;
        // Face areas for proportional sampling: +-x, +-y, +-z.
        const double ax = obj.size.y() * obj.size.z();
        const double ay = obj.size.x() * obj.size.z();
        const double az = obj.size.x() * obj.size.y();
        const double total = 2 * (ax + ay + az);
        for (int i = 0; i < count; ++i) {
            const double pick = rng.uniform(0.0, total);
            const double u = rng.uniform(-1, 1), v = rng.uniform(-1, 1);
            Vec3 p;
            if (pick < 2 * ax) {
                p = Vec3(pick < ax ? h.x() : -h.x(), u * h.y(), v * h.z());
            } else if (pick < 2 * ax + 2 * ay) {
                p = Vec3(u * h.x(), pick < 2 * ax + ay ? h.y() : -h.y(), v * h.z());
            } else {
                p = Vec3(u * h.x(), v * h.y(), pick < 2 * (ax + ay) + az ? h.z() : -h.z());
            }
            pts.push_back(obj.center + p);
        }
    } else {
        throw std::invalid_argument("unknown object type: " + obj.type);
    }
    return pts;
}

namespace {

double surface_area(const SceneObject& obj) {
    if (obj.type == "plane-blob") return obj.size.x() * obj.size.y();
    if (obj.type == "sphere-blob") {
        const double r = 0.5 * obj.size.x();
        return 4.0 * EIGEN_PI * r * r;
    }
    return 2.0 * (obj.size.y() * obj.size.z() + obj.size.x() * obj.size.z() +
                  obj.size.x() * obj.size.y());
}

// Splats for one object; scale follows the sampling density.
void append_object_splats(GaussianModel& model, const SceneObject& obj, Rng& rng,
                          std::vector<std::string>* owner, const std::string& name) {
    const auto positions = sample_object_surface(obj, obj.count, rng);
    const double spacing = std::sqrt(surface_area(obj) / std::max(1, obj.count));
    for (const Vec3& p : positions) {
        Gaussian3D g;
        g.position = p;
        g.rotation = Vec4(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
        g.scale = Vec3::Constant(std::max(1e-4, 0.65 * spacing));
        g.opacity = rng.uniform(0.78, 0.95);
        for (int ch = 0; ch < 3; ++ch) {
            g.color[ch] = std::clamp(obj.color[ch] * (1.0 + 0.18 * rng.uniform(-1, 1)) +
                                         0.03 * rng.uniform(-1, 1),
                                     0.02, 0.98);
        }
        model.append(g);
        if (owner) owner->push_back(name);
    }
}

}  // namespace

GroundTruthScene build_ground_truth(const SceneSpec& spec) {
    spec.validate();
    Rng rng(spec.seed * 7919 + 1);
    GroundTruthScene scene;
    std::vector<std::string> owner;
    for (const SceneObject& obj : spec.objects) {
        append_object_splats(scene.model_t0, obj, rng, &owner, obj.name);
    }

    // tn model: apply edits on a copy; splat order is preserved for unchanged
    // objects so unchanged regions render bit-identically.
    scene.model_tn = scene.model_t0;
    std::vector<size_t> to_remove;
    for (const SceneEdit& e : spec.edits) {
        if (e.op == "remove") {
            for (size_t i = 0; i < owner.size(); ++i) {
                if (owner[i] == e.object) to_remove.push_back(i);
            }
        } else if (e.op == "recolor") {
            const SceneObject* obj = nullptr;
            for (const auto& o : spec.objects) {
                if (o.name == e.object) obj = &o;
            }
            for (size_t i = 0; i < owner.size(); ++i) {
                if (owner[i] != e.object) continue;
                const Vec3 shift = e.new_color - obj->color;
                for (int ch = 0; ch < 3; ++ch) {
                    scene.model_tn.colors[i][ch] =
                        std::clamp(scene.model_tn.colors[i][ch] + shift[ch], 0.02, 0.98);
                }
            }
        } else if (e.op == "move") {
            for (size_t i = 0; i < owner.size(); ++i) {
                if (owner[i] == e.object) scene.model_tn.positions[i] += e.delta;
            }
        } else if (e.op == "add") {
            append_object_splats(scene.model_tn, e.added, rng, nullptr, e.added.name);
        }
    }
    std::sort(to_remove.begin(), to_remove.end());
    scene.model_tn.remove_indices(to_remove);
    return scene;
}

std::vector<SceneObject> geometry_stable_objects(const SceneSpec& spec) {
    std::vector<SceneObject> out;
    for (const SceneObject& o : spec.objects) {
        bool stable = true;
        for (const SceneEdit& e : spec.edits) {
            if (e.object == o.name && (e.op == "remove" || e.op == "move")) stable = false;
        }
        if (stable) out.push_back(o);
    }
    return out;
}

std::vector<Camera> make_t0_cameras(const SceneSpec& spec, Rng& rng) {
    std::vector<Camera> cams;
    const double radius = spec.camera_radius_frac * spec.extent;
    const Vec3 target(0, 0, 0.12 * spec.extent);
    const double focal = spec.camera_focal_px * spec.image_width / 128.0;
    for (int k = 0; k < spec.t0_view_count; ++k) {
        const double angle = 2.0 * EIGEN_PI * k / spec.t0_view_count;
        const double height = spec.extent * (0.25 + 0.20 * rng.uniform());
        const Vec3 eye(radius * std::cos(angle), radius * std::sin(angle), height);
        cams.push_back(look_at_camera(k, eye, target, spec.image_width, spec.image_height, focal));
    }
    return cams;
}

std::vector<Camera> make_tn_cameras(const SceneSpec& spec, Rng& rng) {
    std::vector<Camera> cams;
    const double radius = 0.90 * spec.camera_radius_frac * spec.extent;
    const Vec3 target(0, 0, 0.12 * spec.extent);
    const double focal = spec.camera_focal_px * spec.image_width / 128.0;
    const int n = spec.tn_train_view_count;
    for (int k = 0; k < n; ++k) {
        double angle;
        if (spec.tn_layout == "concentrated") {
            angle = 0.2 + (EIGEN_PI / 3.0) * (n > 1 ? static_cast<double>(k) / (n - 1) : 0.5);
        } else {
            angle = 0.12 + 2.0 * EIGEN_PI * k / n;
        }
        const double height = spec.extent * (0.28 + 0.12 * rng.uniform());
        const Vec3 eye(radius * std::cos(angle), radius * std::sin(angle), height);
        cams.push_back(
            look_at_camera(1000 + k, eye, target, spec.image_width, spec.image_height, focal));
    }
    // Test views are fixed and layout-independent so layout sweeps compare on
    // the same targets.
    for (int k = 0; k < spec.tn_test_view_count; ++k) {
        const double angle = EIGEN_PI / 4.0 + 2.0 * EIGEN_PI * k / spec.tn_test_view_count;
        const Vec3 eye(0.95 * radius * std::cos(angle), 0.95 * radius * std::sin(angle),
                       0.40 * spec.extent);
        cams.push_back(
            look_at_camera(2000 + k, eye, target, spec.image_width, spec.image_height, focal));
    }
    return cams;
}

}  // namespace tempogs
