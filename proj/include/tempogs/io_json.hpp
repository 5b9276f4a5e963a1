#pragma once

#include <filesystem>
#include <json.hpp>
#include <vector>

#include "tempogs/confidence.hpp"
#include "tempogs/geometry.hpp"
#include "tempogs/registration.hpp"
#include "tempogs/train.hpp"

namespace tempogs {

using Json = nlohmann::json;

Json camera_to_json(const Camera& cam);
Camera camera_from_json(const Json& j);
void save_cameras(const std::filesystem::path& path, const std::vector<Camera>& cameras);
std::vector<Camera> load_cameras(const std::filesystem::path& path);

Json similarity_to_json(const SimilarityTransform& s);
SimilarityTransform similarity_from_json(const Json& j);

Json alignment_to_json(const AlignmentResult& result);

Json confidence_map_to_json(const ConfidenceMap& map);
ConfidenceMap confidence_map_from_json(const Json& j);
void save_confidence_maps(const std::filesystem::path& path,
                          const std::vector<ConfidenceMap>& maps);
std::vector<ConfidenceMap> load_confidence_maps(const std::filesystem::path& path);

Json report_to_json(const TrainReport& report);

void save_matches(const std::filesystem::path& path, const std::vector<Match2D3D>& matches);
std::vector<Match2D3D> load_matches(const std::filesystem::path& path);

void save_seed_correspondences(const std::filesystem::path& path,
                               const std::vector<std::pair<size_t, size_t>>& pairs);
std::vector<std::pair<size_t, size_t>> load_seed_correspondences(
    const std::filesystem::path& path);

// Atomic write: temp file in the same directory, then rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_json_atomic(const std::filesystem::path& path, const Json& j);
Json load_json(const std::filesystem::path& path);

}  // namespace tempogs
