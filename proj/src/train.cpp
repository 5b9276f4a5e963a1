#include "tempogs/train.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>

#include "tempogs/adam.hpp"
#include "tempogs/kd_tree.hpp"
#include "tempogs/loss.hpp"

namespace tempogs {

void TrainConfig::validate() const {
    if (!(tau > 0) || !(tau < tau_iter) || !(tau_iter < 1)) {
        throw std::invalid_argument("need 0 < tau < tau_iter < 1");
    }
    if (refine_interval_epochs < 1) throw std::invalid_argument("refine interval must be >= 1");
    if (!(coverage_convergence > 0) || !(coverage_convergence < 1)) {
        throw std::invalid_argument("coverage convergence must lie in (0, 1)");
    }
    if (max_iterations < 1) throw std::invalid_argument("max iterations must be >= 1");
    if (adaptation_steps < 1) throw std::invalid_argument("adaptation steps must be >= 1");
    if (t0_view_stride < 1) throw std::invalid_argument("t0 view stride must be >= 1");
    if (fine_grid_rows % initial_grid_rows != 0 || fine_grid_cols % initial_grid_cols != 0 ||
        fine_grid_rows <= initial_grid_rows || fine_grid_cols <= initial_grid_cols) {
        throw std::invalid_argument("fine grid must strictly refine the initial grid");
    }
}

void TrainConfig::apply_overrides(const TomlTable& t) {
    max_iterations = static_cast<int>(t.get_int("max_iterations", max_iterations));
    adaptation_steps = static_cast<int>(t.get_int("adaptation_steps", adaptation_steps));
    refine_interval_epochs =
        static_cast<int>(t.get_int("refine_interval_epochs", refine_interval_epochs));
    tau = t.get_double("tau", tau);
    tau_iter = t.get_double("tau_iter", tau_iter);
    const auto ig = t.get_array("initial_grid", {static_cast<double>(initial_grid_rows),
                                                 static_cast<double>(initial_grid_cols)});
    const auto fg = t.get_array("fine_grid", {static_cast<double>(fine_grid_rows),
                                              static_cast<double>(fine_grid_cols)});
    if (ig.size() == 2) {
        initial_grid_rows = static_cast<int>(ig[0]);
        initial_grid_cols = static_cast<int>(ig[1]);
    }
    if (fg.size() == 2) {
        fine_grid_rows = static_cast<int>(fg[0]);
        fine_grid_cols = static_cast<int>(fg[1]);
    }
    coverage_convergence = t.get_double("coverage_convergence", coverage_convergence);
    ssim_weight = t.get_double("ssim_weight", ssim_weight);
    t0_supervision_weight = t.get_double("t0_supervision_weight", t0_supervision_weight);
    t0_view_stride = static_cast<int>(t.get_int("t0_view_stride", t0_view_stride));
    lr_position = t.get_double("lr_position", lr_position);
    lr_position_final = t.get_double("lr_position_final", lr_position_final);
    lr_rotation = t.get_double("lr_rotation", lr_rotation);
    lr_scale = t.get_double("lr_scale", lr_scale);
    lr_opacity = t.get_double("lr_opacity", lr_opacity);
    lr_color = t.get_double("lr_color", lr_color);
    adam_beta1 = t.get_double("adam_beta1", adam_beta1);
    adam_beta2 = t.get_double("adam_beta2", adam_beta2);
    adam_eps = t.get_double("adam_eps", adam_eps);
    densify_from = static_cast<int>(t.get_int("densify_from", densify_from));
    densify_until = static_cast<int>(t.get_int("densify_until", densify_until));
    densify_interval = static_cast<int>(t.get_int("densify_interval", densify_interval));
    densify_grad_threshold = t.get_double("densify_grad_threshold", densify_grad_threshold);
    prune_opacity = t.get_double("prune_opacity", prune_opacity);
    percent_dense = t.get_double("percent_dense", percent_dense);
    max_gaussians = static_cast<int>(t.get_int("max_gaussians", max_gaussians));
    init_opacity = t.get_double("init_opacity", init_opacity);
    seed = static_cast<uint64_t>(t.get_int("seed", static_cast<int64_t>(seed)));
    literal_eq2 = t.get_bool("literal_eq2", literal_eq2);
    enable_refinement = t.get_bool("enable_refinement", enable_refinement);
    static_freeze = t.get_bool("static_freeze", static_freeze);
    static_freeze_ratio = t.get_double("static_freeze_ratio", static_freeze_ratio);
    threads = static_cast<int>(t.get_int("threads", threads));
}

TrainConfig TrainConfig::from_toml(const TomlTable& table) {
    TrainConfig cfg;
    cfg.apply_overrides(table);
    cfg.validate();
    return cfg;
}

GaussianModel init_model_from_cloud(const PointCloud& cloud, const TrainConfig& config) {
    if (cloud.points.empty()) throw std::invalid_argument("cannot initialize from an empty cloud");
    const double extent = std::max(cloud.extent(), 1e-12);
    const double lo = 1e-4 * extent, hi = 0.1 * extent;

    const KdTree tree(cloud.points);
    GaussianModel model;
    model.resize(cloud.size());
    for (size_t i = 0; i < cloud.size(); ++i) {
        const auto knn = tree.knearest(cloud.points[i], 4);  // self + 3 neighbors
        double mean_dist = 0;
        int neighbors = 0;
        for (const auto& [idx, d2] : knn) {
            if (idx == i) continue;
            mean_dist += std::sqrt(d2);
            ++neighbors;
        }
        mean_dist = neighbors > 0 ? mean_dist / neighbors : 0.0;
        const double s = std::clamp(mean_dist, lo, hi);

        model.positions[i] = cloud.points[i];
        model.rotations[i] = Vec4(1, 0, 0, 0);
        model.log_scales[i] = Vec3::Constant(std::log(s));
        model.opacity_logits[i] = logit(config.init_opacity);
        model.colors[i] = cloud.has_colors() ? cloud.colors[i] : Vec3::Constant(0.5);
    }
    return model;
}

namespace {

struct EpochView {
    bool is_t0 = false;
    size_t index = 0;
};

struct TrainCore {
    const TrainConfig& cfg;
    const Vec3& background;
    RenderSettings render_settings;
    LossSettings loss_settings;
    AdamParams adam;
    double extent = 1.0;
    Rng rng_train;
    Rng rng_densify;
    DensifyStats stats;
    DensifyParams densify;
    int iterations = 0;

    TrainCore(const TrainConfig& config, const Vec3& bg, double scene_extent)
        : cfg(config),
          background(bg),
          rng_train(config.seed),
          rng_densify(config.seed ^ 0x5bd1e995ull) {
        render_settings.threads = cfg.threads;
        loss_settings.ssim_weight = cfg.ssim_weight;
        loss_settings.literal_eq2 = cfg.literal_eq2;
        adam.lr_rotation = cfg.lr_rotation;
        adam.lr_scale = cfg.lr_scale;
        adam.lr_opacity = cfg.lr_opacity;
        adam.lr_color = cfg.lr_color;
        adam.beta1 = cfg.adam_beta1;
        adam.beta2 = cfg.adam_beta2;
        adam.eps = cfg.adam_eps;
        extent = std::max(scene_extent, 1e-12);
        densify.grad_threshold = cfg.densify_grad_threshold;
        densify.percent_dense = cfg.percent_dense;
        densify.prune_opacity = cfg.prune_opacity;
        densify.scene_extent = extent;
        densify.max_gaussians = static_cast<size_t>(cfg.max_gaussians);
    }

    double position_lr() const {
        const double t = std::min(1.0, static_cast<double>(iterations) /
                                           std::max(1, cfg.max_iterations));
        return cfg.lr_position * extent *
               std::pow(cfg.lr_position_final / cfg.lr_position, t);
    }

    // One optimizer step on a single view. Returns the (weighted) loss value.
    double step(GaussianModel& model, const View& view, const ConfidenceMap& conf, double weight) {
        const Image rendered = render(model, view.camera, background, render_settings);
        LossResult loss = loss_init(rendered, view.image, conf, loss_settings);
        if (!std::isfinite(loss.value)) {
            const auto snapshot =
                std::filesystem::temp_directory_path() / "tempogs_nonfinite_snapshot.ply";
            save_gaussian_model(snapshot, model);
            throw std::runtime_error("non-finite loss at iteration " +
                                     std::to_string(iterations) + " on view " +
                                     std::to_string(view.camera.id) + "; model snapshot at " +
                                     snapshot.string());
        }
        if (weight != 1.0) {
            loss.value *= weight;
            for (double& v : loss.gradient.pixels) v *= weight;
        }
        RenderGradients grads =
            render_backward(model, view.camera, background, loss.gradient, render_settings);

        // Densification statistics on the NDC-calibrated, per-patch-mean scale.
        const double patch_count =
            static_cast<double>(conf.grid_rows) * static_cast<double>(conf.grid_cols);
        const double ndc = 0.5 * std::max(view.camera.width, view.camera.height);
        stats.accumulate(grads, ndc / patch_count);

        adam.lr_position = position_lr();
        adam_step(model, grads, adam);
        ++iterations;

        if (iterations >= cfg.densify_from && iterations <= cfg.densify_until &&
            iterations % cfg.densify_interval == 0) {
            densify_and_prune(model, stats, densify, rng_densify);
        }
        return loss.value;
    }
};

void apply_static_freeze(GaussianModel& model, const std::vector<View>& t0_views,
                         const std::vector<ConfidenceMap>& maps, double ratio,
                         const RenderSettings& render_settings) {
    model.frozen.assign(model.size(), 0);
    std::vector<PatchLayout> layouts;
    layouts.reserve(maps.size());
    for (size_t v = 0; v < t0_views.size(); ++v) {
        layouts.emplace_back(maps[v].grid_rows, maps[v].grid_cols, t0_views[v].camera.width,
                             t0_views[v].camera.height);
    }
    for (size_t i = 0; i < model.size(); ++i) {
        int visible = 0, confident = 0;
        for (size_t v = 0; v < t0_views.size(); ++v) {
            const Camera& cam = t0_views[v].camera;
            const Vec3 q = cam.rotation * model.positions[i] + cam.translation;
            if (q.z() < render_settings.near_clip) continue;
            const auto px = project(cam, model.positions[i]);
            if (!px) continue;
            const int col = static_cast<int>(std::floor(px->x()));
            const int row = static_cast<int>(std::floor(px->y()));
            if (col < 0 || col >= cam.width || row < 0 || row >= cam.height) continue;
            ++visible;
            if (maps[v].values[layouts[v].patch_of(row, col)] > 0) ++confident;
        }
        if (visible > 0 && static_cast<double>(confident) / visible >= ratio) {
            model.frozen[i] = 1;
            model.m_position[i].setZero();
            model.v_position[i].setZero();
            model.m_rotation[i].setZero();
            model.v_rotation[i].setZero();
            model.m_log_scale[i].setZero();
            model.v_log_scale[i].setZero();
            model.m_opacity[i] = model.v_opacity[i] = 0;
            model.m_color[i].setZero();
            model.v_color[i].setZero();
        }
    }
}

ProgressiveResult run_training(const GaussianModel* g0, const PointCloud* p_fused,
                               const std::vector<View>& t0_views,
                               const std::vector<View>& tn_views, const TrainConfig& cfg,
                               const Vec3& background,
                               const std::optional<std::vector<ConfidenceMap>>& initial_maps,
                               bool use_confidence_stages, bool init_from_g0) {
    cfg.validate();
    if (tn_views.empty()) throw std::invalid_argument("no tn training views supplied");
    const auto t_start = std::chrono::steady_clock::now();

    ProgressiveResult result;
    TrainReport& report = result.report;

    // Selected t0 supervision subset (stride over the provided views).
    std::vector<size_t> t0_selected;
    for (size_t v = 0; v < t0_views.size(); v += cfg.t0_view_stride) t0_selected.push_back(v);

    std::vector<ConfidenceMap> maps;
    if (use_confidence_stages && !t0_views.empty()) {
        if (initial_maps) {
            maps = *initial_maps;
            if (maps.size() != t0_views.size()) {
                throw std::invalid_argument("initial confidence maps do not match t0 views");
            }
        } else {
            if (!g0 || g0->empty()) {
                throw std::invalid_argument("confidence stages require a non-empty g0");
            }
            AdaptationSettings adapt;
            adapt.background = background;
            adapt.render.threads = cfg.threads;
            adapt.lr_position = cfg.lr_position * std::max(p_fused ? p_fused->extent() : 1.0, 1e-12);
            adapt.lr_rotation = cfg.lr_rotation;
            adapt.lr_scale = cfg.lr_scale;
            adapt.lr_opacity = cfg.lr_opacity;
            adapt.lr_color = cfg.lr_color;
            adapt.ssim_weight = cfg.ssim_weight;
            const GaussianModel adapted =
                adaptation_phase(*g0, tn_views, cfg.adaptation_steps, adapt);
            RenderSettings rs;
            rs.threads = cfg.threads;
            maps = build_confidence_maps(adapted, t0_views, cfg.initial_grid_rows,
                                         cfg.initial_grid_cols, cfg.tau, {}, rs, background);
        }
        report.coverage_per_round.push_back(mean_coverage(maps));
    }

    // Gn initialization.
    GaussianModel model;
    if (init_from_g0) {
        model = *g0;
        model.step = 0;
    } else {
        model = init_model_from_cloud(*p_fused, cfg);
    }
    const double extent = init_from_g0 ? [&] {
        PointCloud pc;
        pc.points = g0->positions;
        return pc.extent();
    }()
                                       : p_fused->extent();

    TrainCore core(cfg, background, extent);
    RenderSettings rs;
    rs.threads = cfg.threads;

    const ConfidenceMap tn_conf =
        ConfidenceMap::uniform(-1, cfg.initial_grid_rows, cfg.initial_grid_cols);

    bool frozen_applied = false;
    std::string termination = "max_iterations";
    int epoch = 0;
    while (core.iterations < cfg.max_iterations) {
        ++epoch;
        // Active t0 views: confident somewhere. Zero-coverage views are
        // skipped entirely so the baseline path is reproduced exactly when
        // every t0 patch is unconfident.
        std::vector<EpochView> epoch_views;
        for (size_t v = 0; v < tn_views.size(); ++v) epoch_views.push_back({false, v});
        if (use_confidence_stages) {
            for (size_t v : t0_selected) {
                if (maps[v].coverage() > 0.0) epoch_views.push_back({true, v});
            }
        }
        core.rng_train.shuffle(epoch_views);

        double epoch_loss = 0;
        int epoch_steps = 0;
        for (const EpochView& ev : epoch_views) {
            const View& view = ev.is_t0 ? t0_views[ev.index] : tn_views[ev.index];
            const ConfidenceMap* conf = &tn_conf;
            double weight = 1.0;
            if (ev.is_t0) {
                conf = &maps[ev.index];
                weight = cfg.t0_supervision_weight;
            }
            epoch_loss += core.step(model, view, *conf, weight);
            ++epoch_steps;
            if (core.iterations >= cfg.max_iterations) break;
        }
        if (epoch_steps > 0) report.loss_curve.push_back(epoch_loss / epoch_steps);

        if (use_confidence_stages && cfg.enable_refinement &&
            epoch % cfg.refine_interval_epochs == 0 && core.iterations < cfg.max_iterations) {
            maps = refine_confidence_maps(maps, model, t0_views, cfg.fine_grid_rows,
                                          cfg.fine_grid_cols, cfg.tau_iter, {}, rs, background);
            const double cov = mean_coverage(maps);
            const double prev = report.coverage_per_round.back();
            report.coverage_per_round.push_back(cov);
            if (cov - prev < cfg.coverage_convergence) {
                if (cfg.static_freeze && !frozen_applied) {
                    // Convergence marks the final refinement round: fix the
                    // static regions and spend the remaining budget on the
                    // dynamic ones.
                    apply_static_freeze(model, t0_views, maps, cfg.static_freeze_ratio, rs);
                    frozen_applied = true;
                } else {
                    termination = "coverage_converged";
                    break;
                }
            }
        }
    }

    report.iterations = core.iterations;
    report.termination = termination;
    report.final_gaussians = model.size();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    result.model = std::move(model);
    result.confidence_maps = std::move(maps);
    return result;
}

}  // namespace

ProgressiveResult progressive_optimize(
    const GaussianModel& g0, const PointCloud& p_fused, const std::vector<View>& t0_views,
    const std::vector<View>& tn_train_views, const TrainConfig& config, const Vec3& background,
    const std::optional<std::vector<ConfidenceMap>>& initial_maps) {
    if (p_fused.points.empty()) throw std::invalid_argument("fused cloud is empty");
    return run_training(&g0, &p_fused, t0_views, tn_train_views, config, background, initial_maps,
                        /*use_confidence_stages=*/true, /*init_from_g0=*/false);
}

ProgressiveResult baseline_optimize(const PointCloud& p_fused,
                                    const std::vector<View>& tn_train_views,
                                    const TrainConfig& config, const Vec3& background) {
    if (p_fused.points.empty()) throw std::invalid_argument("fused cloud is empty");
    return run_training(nullptr, &p_fused, {}, tn_train_views, config, background, std::nullopt,
                        /*use_confidence_stages=*/false, /*init_from_g0=*/false);
}

ProgressiveResult finetune_direct(const GaussianModel& g0,
                                  const std::vector<View>& tn_train_views,
                                  const TrainConfig& config, const Vec3& background) {
    if (g0.empty()) throw std::invalid_argument("cannot fine-tune an empty model");
    return run_training(&g0, nullptr, {}, tn_train_views, config, background, std::nullopt,
                        /*use_confidence_stages=*/false, /*init_from_g0=*/true);
}

}  // namespace tempogs
