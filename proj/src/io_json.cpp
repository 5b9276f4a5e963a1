#include "tempogs/io_json.hpp"

#include <fstream>

namespace tempogs {

Json camera_to_json(const Camera& cam) {
    std::vector<double> rot(9);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) rot[r * 3 + c] = cam.rotation(r, c);
    }
    return Json{{"id", cam.id},
                {"width", cam.width},
                {"height", cam.height},
                {"fx", cam.fx},
                {"fy", cam.fy},
                {"cx", cam.cx},
                {"cy", cam.cy},
                {"rotation", rot},
                {"translation", {cam.translation.x(), cam.translation.y(), cam.translation.z()}},
                {"image", cam.image_path}};
}

Camera camera_from_json(const Json& j) {
    Camera cam;
    cam.id = j.at("id").get<int>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    const auto rot = j.at("rotation").get<std::vector<double>>();
    if (rot.size() != 9) throw std::runtime_error("camera rotation must have 9 entries");
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) cam.rotation(r, c) = rot[r * 3 + c];
    }
    const auto t = j.at("translation").get<std::vector<double>>();
    if (t.size() != 3) throw std::runtime_error("camera translation must have 3 entries");
    cam.translation = Vec3(t[0], t[1], t[2]);
    cam.image_path = j.value("image", "");
    cam.validate();
    return cam;
}

void save_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras) {
    Json arr = Json::array();
    for (const Camera& cam : cameras) arr.push_back(camera_to_json(cam));
    write_json_atomic(path, arr);
}

std::vector<Camera> load_cameras(const std::filesystem::path& path) {
    const Json arr = load_json(path);
    std::vector<Camera> cams;
    for (const auto& j : arr) cams.push_back(camera_from_json(j));
    return cams;
}

Json similarity_to_json(const SimilarityTransform& s) {
    std::vector<double> rot(9);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) rot[r * 3 + c] = s.rotation(r, c);
    }
    return Json{{"scale", s.scale},
                {"rotation", rot},
                {"translation", {s.translation.x(), s.translation.y(), s.translation.z()}}};
}

SimilarityTransform similarity_from_json(const Json& j) {
    SimilarityTransform s;
    s.scale = j.at("scale").get<double>();
    const auto rot = j.at("rotation").get<std::vector<double>>();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) s.rotation(r, c) = rot[r * 3 + c];
    }
    const auto t = j.at("translation").get<std::vector<double>>();
    s.translation = Vec3(t[0], t[1], t[2]);
    s.validate();
    return s;
}

Json alignment_to_json(const AlignmentResult& result) {
    return Json{{"similarity", similarity_to_json(result.similarity)},
                {"icp_refinement", similarity_to_json(result.icp_refinement)},
                {"total", similarity_to_json(result.total())},
                {"residuals",
                 {{"reprojection_before_px", result.residuals.reprojection_before_px},
                  {"reprojection_after_px", result.residuals.reprojection_after_px},
                  {"icp_rms_before", result.residuals.icp_rms_before},
                  {"icp_rms_after", result.residuals.icp_rms_after},
                  {"lm_iterations", result.residuals.lm_iterations},
                  {"icp_iterations", result.residuals.icp_iterations}}}};
}

Json confidence_map_to_json(const ConfidenceMap& map) {
    return Json{{"view_id", map.view_id},
                {"grid", {map.grid_rows, map.grid_cols}},
                {"values", map.values},
                {"scores", map.scores}};
}

ConfidenceMap confidence_map_from_json(const Json& j) {
    ConfidenceMap map;
    map.view_id = j.at("view_id").get<int>();
    map.grid_rows = j.at("grid").at(0).get<int>();
    map.grid_cols = j.at("grid").at(1).get<int>();
    map.values = j.at("values").get<std::vector<double>>();
    map.scores = j.at("scores").get<std::vector<double>>();
    const size_t n = static_cast<size_t>(map.grid_rows) * map.grid_cols;
    if (map.values.size() != n || map.scores.size() != n) {
        throw std::runtime_error("confidence map grid/value size mismatch");
    }
    return map;
}

void save_confidence_maps(const std::filesystem::path& path,
                          const std::vector<ConfidenceMap>& maps) {
    Json arr = Json::array();
    for (const auto& m : maps) arr.push_back(confidence_map_to_json(m));
    write_json_atomic(path, arr);
}

std::vector<ConfidenceMap> load_confidence_maps(const std::filesystem::path& path) {
    const Json arr = load_json(path);
    std::vector<ConfidenceMap> maps;
    for (const auto& j : arr) maps.push_back(confidence_map_from_json(j));
    return maps;
}

Json report_to_json(const TrainReport& report) {
    return Json{{"coverage_per_round", report.coverage_per_round},
                {"loss_curve", report.loss_curve},
                {"iterations", report.iterations},
                {"wall_seconds", report.wall_seconds},
                {"termination", report.termination},
                {"final_gaussians", report.final_gaussians},
                {"test_psnr", report.test_psnr},
                {"test_ssim", report.test_ssim}};
}

void save_matches(const std::filesystem::path& path, const std::vector<Match2D3D>& matches) {
    Json arr = Json::array();
    for (const auto& m : matches) {
        arr.push_back(Json{{"view_id", m.view_id},
                           {"pixel", {m.pixel.x(), m.pixel.y()}},
                           {"point_index", m.point_index}});
    }
    write_json_atomic(path, arr);
}

std::vector<Match2D3D> load_matches(const std::filesystem::path& path) {
    const Json arr = load_json(path);
    std::vector<Match2D3D> out;
    for (const auto& j : arr) {
        Match2D3D m;
        m.view_id = j.at("view_id").get<int>();
        m.pixel = Vec2(j.at("pixel").at(0).get<double>(), j.at("pixel").at(1).get<double>());
        m.point_index = j.at("point_index").get<size_t>();
        out.push_back(m);
    }
    return out;
}

void save_seed_correspondences(const std::filesystem::path& path,
                               const std::vector<std::pair<size_t, size_t>>& pairs) {
    Json arr = Json::array();
    for (const auto& [s, t] : pairs) {
        arr.push_back(Json{{"source_index", s}, {"target_index", t}});
    }
    write_json_atomic(path, arr);
}

std::vector<std::pair<size_t, size_t>> load_seed_correspondences(
    const std::filesystem::path& path) {
    const Json arr = load_json(path);
    std::vector<std::pair<size_t, size_t>> out;
    for (const auto& j : arr) {
        out.emplace_back(j.at("source_index").get<size_t>(), j.at("target_index").get<size_t>());
    }
    return out;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out << text;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_json_atomic(const std::filesystem::path& path, const Json& j) {
    write_text_atomic(path, j.dump(2) + "\n");
}

Json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    Json j;
    in >> j;
    return j;
}

}  // namespace tempogs
