#pragma once

#include <filesystem>

#include "tempogs/scene.hpp"
#include "tempogs/view.hpp"

namespace tempogs {

// Paired t0/tn capture on disk:
//   t0/images/view_%04d.png, t0/cameras.json, t0/points.ply, t0/model_t0.ply
//   tn/images/view_%04d.png, tn/cameras_est.json, tn/points_dense.ply
//   matches.json, seed_correspondences.json
//   ground_truth/transform.json, ground_truth/masks/mask_%04d.png
//   spec.json
struct SceneDataset {
    SceneSpec spec;
    std::vector<View> t0_views;
    std::vector<View> tn_train_views;  // cameras in the estimated (perturbed) frame
    std::vector<View> tn_test_views;   // likewise
    PointCloud p_c;
    PointCloud dense_tn;  // estimated frame
    GaussianModel model_t0;
    std::vector<Match2D3D> matches;
    std::vector<std::pair<size_t, size_t>> seed_correspondences;
    SimilarityTransform gt_est_to_t0;
    std::vector<Image> change_masks;  // one per tn view, train then test

    Vec3 background() const { return spec.background; }
    std::vector<Camera> tn_cameras_est() const;
};

struct GenerateOptions {
    bool reuse_cached_pretrain = true;  // skip the 7000-step t0 training if the
                                        // directory already holds it for this spec
    int threads = 1;
};

SceneDataset generate_dataset(const SceneSpec& spec, const std::filesystem::path& out_dir,
                              const GenerateOptions& options = {});

SceneDataset load_dataset(const std::filesystem::path& dir);

}  // namespace tempogs
