#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tempogs/dataset.hpp"
#include "tempogs/evaluate.hpp"
#include "tempogs/registration.hpp"
#include "tempogs/train.hpp"

namespace tempogs {

// Experiment variants mirroring the ablation lineup: the full method, the
// from-scratch baseline, coarse-only / no alignment, direct fine-tune without
// confidence, and frozen initial confidence.
enum class Variant {
    kFull,
    kBaseline,
    kNoAlign,
    kNoIcp,
    kNoConfidenceFinetune,
    kFixedConfidence,
};

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct VariantRun {
    Variant variant = Variant::kFull;
    double inject_misalignment_deg = 0.0;  // residual error surviving the coarse stage
};

struct VariantResult {
    EvalResult eval;
    TrainReport report;
    AlignmentResult alignment;
    GaussianModel model;
};

// Runs one pipeline variant against an in-memory dataset.
VariantResult run_variant(const SceneDataset& dataset, const VariantRun& run,
                          const TrainConfig& config);

struct MatrixCell {
    std::string spec_name;
    std::string variant;
    double inject_misalignment_deg = 0.0;
    double mean_psnr = 0;
    double mean_ssim = 0;
    double train_seconds = 0;
    int iterations = 0;
    std::string error;  // empty on success
};

struct MatrixSpec {
    std::string name;
    SceneSpec spec;
};

// Runs every (spec, variant) cell, continuing past per-cell failures, and
// writes machine-readable (CSV + JSON) tables plus a readable summary.
std::vector<MatrixCell> run_experiment_matrix(const std::vector<MatrixSpec>& specs,
                                              const std::vector<VariantRun>& variants,
                                              const std::filesystem::path& out_dir,
                                              const TrainConfig& config);

std::string matrix_to_csv(const std::vector<MatrixCell>& cells);

}  // namespace tempogs
