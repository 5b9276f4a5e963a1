#include "tempogs/bench.hpp"

#include <sstream>

#include "tempogs/io_json.hpp"

namespace tempogs {

namespace fs = std::filesystem;

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::kFull: return "full";
        case Variant::kBaseline: return "baseline";
        case Variant::kNoAlign: return "no-align";
        case Variant::kNoIcp: return "no-icp";
        case Variant::kNoConfidenceFinetune: return "no-confidence-finetune";
        case Variant::kFixedConfidence: return "fixed-confidence";
    }
    return "unknown";
}

Variant variant_from_name(const std::string& name) {
    if (name == "full") return Variant::kFull;
    if (name == "baseline") return Variant::kBaseline;
    if (name == "no-align") return Variant::kNoAlign;
    if (name == "no-icp") return Variant::kNoIcp;
    if (name == "no-confidence-finetune") return Variant::kNoConfidenceFinetune;
    if (name == "fixed-confidence") return Variant::kFixedConfidence;
    throw std::invalid_argument("unknown variant: " + name);
}

namespace {

// Alignment for a variant; kNoAlign keeps the estimated frame as-is.
AlignmentResult variant_alignment(const SceneDataset& ds, const VariantRun& run,
                                  const TrainConfig& config) {
    AlignmentResult alignment;
    if (run.variant == Variant::kNoAlign) {
        alignment.similarity = SimilarityTransform::identity();
        alignment.icp_refinement = SimilarityTransform::identity();
        alignment.aligned_cloud = downsample(ds.dense_tn, 0.25, ds.spec.seed);
        alignment.aligned_cameras = ds.tn_cameras_est();
        return alignment;
    }
    AlignOptions opt;
    opt.downsample_seed = ds.spec.seed;
    opt.skip_icp = (run.variant == Variant::kNoIcp);
    opt.inject_misalignment_deg = run.inject_misalignment_deg;
    opt.lm.huber = false;
    opt.icp.max_iterations = 50;
    (void)config;
    return align_captures(ds.dense_tn, ds.p_c, ds.seed_correspondences, ds.matches,
                          [&] {
                              std::vector<Camera> cams;
                              for (const auto& v : ds.t0_views) cams.push_back(v.camera);
                              return cams;
                          }(),
                          ds.tn_cameras_est(), opt);
}

}  // namespace

VariantResult run_variant(const SceneDataset& ds, const VariantRun& run,
                          const TrainConfig& config) {
    VariantResult result;
    result.alignment = variant_alignment(ds, run, config);

    // Aligned training and test views (cameras moved into the t0 frame).
    std::vector<View> tn_train, tn_test;
    for (size_t k = 0; k < result.alignment.aligned_cameras.size(); ++k) {
        const Camera& cam = result.alignment.aligned_cameras[k];
        if (static_cast<int>(k) < ds.spec.tn_train_view_count) {
            tn_train.push_back({cam, ds.tn_train_views[k].image});
        } else {
            tn_test.push_back({cam, ds.tn_test_views[k - ds.spec.tn_train_view_count].image});
        }
    }

    const PointCloud fused = fuse_clouds(ds.p_c, result.alignment.aligned_cloud);

    ProgressiveResult trained;
    switch (run.variant) {
        case Variant::kBaseline:
            trained = baseline_optimize(fused, tn_train, config, ds.background());
            break;
        case Variant::kNoConfidenceFinetune:
            trained = finetune_direct(ds.model_t0, tn_train, config, ds.background());
            break;
        case Variant::kFixedConfidence: {
            TrainConfig cfg = config;
            cfg.enable_refinement = false;
            trained = progressive_optimize(ds.model_t0, fused, ds.t0_views, tn_train, cfg,
                                           ds.background());
            break;
        }
        case Variant::kFull:
        case Variant::kNoAlign:
        case Variant::kNoIcp:
        default:
            trained = progressive_optimize(ds.model_t0, fused, ds.t0_views, tn_train, config,
                                           ds.background());
            break;
    }

    RenderSettings rs;
    rs.threads = config.threads;
    result.eval = evaluate(trained.model, tn_test, ds.background(), rs);
    trained.report.test_psnr = result.eval.per_view_psnr;
    trained.report.test_ssim = result.eval.per_view_ssim;
    result.report = std::move(trained.report);
    result.model = std::move(trained.model);
    return result;
}

std::string matrix_to_csv(const std::vector<MatrixCell>& cells) {
    std::ostringstream out;
    out << "spec,variant,inject_misalignment_deg,mean_psnr,mean_ssim,train_seconds,iterations,error\n";
    for (const auto& c : cells) {
        out << c.spec_name << ',' << c.variant << ',' << c.inject_misalignment_deg << ','
            << c.mean_psnr << ',' << c.mean_ssim << ',' << c.train_seconds << ',' << c.iterations
            << ',' << (c.error.empty() ? "" : "\"" + c.error + "\"") << '\n';
    }
    return out.str();
}

std::vector<MatrixCell> run_experiment_matrix(const std::vector<MatrixSpec>& specs,
                                              const std::vector<VariantRun>& variants,
                                              const fs::path& out_dir, const TrainConfig& config) {
    fs::create_directories(out_dir);
    std::vector<MatrixCell> cells;
    for (const MatrixSpec& ms : specs) {
        SceneDataset ds;
        bool have_dataset = false;
        for (const VariantRun& run : variants) {
            MatrixCell cell;
            cell.spec_name = ms.name;
            cell.variant = variant_name(run.variant);
            cell.inject_misalignment_deg = run.inject_misalignment_deg;
            try {
                if (!have_dataset) {
                    GenerateOptions gen;
                    gen.threads = config.threads;
                    ds = generate_dataset(ms.spec, out_dir / "datasets" / ms.name, gen);
                    have_dataset = true;
                }
                const VariantResult res = run_variant(ds, run, config);
                cell.mean_psnr = res.eval.mean_psnr;
                cell.mean_ssim = res.eval.mean_ssim;
                cell.train_seconds = res.report.wall_seconds;
                cell.iterations = res.report.iterations;
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            cells.push_back(cell);
        }
    }

    write_text_atomic(out_dir / "matrix.csv", matrix_to_csv(cells));
    Json table = Json::array();
    for (const auto& c : cells) {
        table.push_back(Json{{"spec", c.spec_name},
                             {"variant", c.variant},
                             {"inject_misalignment_deg", c.inject_misalignment_deg},
                             {"mean_psnr", c.mean_psnr},
                             {"mean_ssim", c.mean_ssim},
                             {"train_seconds", c.train_seconds},
                             {"iterations", c.iterations},
                             {"error", c.error}});
    }
    write_json_atomic(out_dir / "matrix.json", table);

    std::ostringstream summary;
    summary << "spec                 variant                  PSNR     SSIM     time(s)\n";
    for (const auto& c : cells) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-20s %-24s %7.2f  %6.4f  %8.1f %s\n",
                      c.spec_name.c_str(), c.variant.c_str(), c.mean_psnr, c.mean_ssim,
                      c.train_seconds, c.error.empty() ? "" : ("ERROR: " + c.error).c_str());
        summary << line;
    }
    write_text_atomic(out_dir / "summary.txt", summary.str());
    return cells;
}

}  // namespace tempogs
