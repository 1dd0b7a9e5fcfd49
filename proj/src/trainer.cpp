#include "weathergs/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "weathergs/checkpoint.hpp"
#include "weathergs/error.hpp"
#include "weathergs/image_io.hpp"
#include "weathergs/losses.hpp"
#include "weathergs/rng.hpp"
#include "weathergs/threading.hpp"

namespace wgs {

void TrainConfig::validate() const {
    require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::Validation, "train: lambda not in [0,1]");
    require(iterations >= 1, ErrorCode::Validation, "train: iterations must be >= 1");
    const double lrs[] = {lr_position, lr_rotation, lr_log_scales, lr_opacity, lr_color};
    for (double lr : lrs)
        require(lr > 0.0, ErrorCode::Validation, "train: learning rates must be positive");
    require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
            ErrorCode::Validation, "train: adam betas must be in [0,1)");
    require(adam_eps > 0.0, ErrorCode::Validation, "train: adam_eps must be positive");
    require(max_gaussians >= 1, ErrorCode::Validation, "train: max_gaussians must be >= 1");
    require(init_target_count >= 1, ErrorCode::Validation, "train: init_target_count must be >= 1");
    require(densify_interval >= 1 && prune_interval >= 1, ErrorCode::Validation,
            "train: densify/prune intervals must be >= 1");
}

void OptimizerState::resize(size_t n) {
    m_position.assign(n, {});
    v_position.assign(n, {});
    m_rotation.assign(n, {0, 0, 0, 0});
    v_rotation.assign(n, {0, 0, 0, 0});
    m_log_scales.assign(n, {});
    v_log_scales.assign(n, {});
    m_opacity.assign(n, 0.0);
    v_opacity.assign(n, 0.0);
    m_color.assign(n, {});
    v_color.assign(n, {});
}

GaussianCloud init_from_points(const PointCloud& points, size_t target_count, uint64_t seed) {
    require(!points.points.empty(), ErrorCode::Validation, "init_from_points: empty point cloud");
    require(target_count >= 1, ErrorCode::Validation, "init_from_points: target_count must be >= 1");

    const size_t n_in = points.points.size();
    std::vector<PointSample> selected;
    selected.reserve(target_count);
    if (n_in >= target_count) {
        for (size_t i = 0; i < target_count; ++i)
            selected.push_back(points.points[i * n_in / target_count]);
    } else {
        selected = points.points;
        // Top up with jittered duplicates so clones can separate during
        // optimization.
        Vec3 lo = points.points[0].position, hi = lo;
        for (const auto& p : points.points) {
            lo = {std::min(lo.x, p.position.x), std::min(lo.y, p.position.y),
                  std::min(lo.z, p.position.z)};
            hi = {std::max(hi.x, p.position.x), std::max(hi.y, p.position.y),
                  std::max(hi.z, p.position.z)};
        }
        const double jitter = 0.005 * std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z, 1e-3});
        Rng rng(derive_seed(seed, 0xC0DE));
        for (size_t i = n_in; i < target_count; ++i) {
            PointSample p = points.points[i % n_in];
            p.position += Vec3{rng.normal(0, jitter), rng.normal(0, jitter), rng.normal(0, jitter)};
            selected.push_back(p);
        }
    }

    const size_t n = selected.size();
    std::vector<double> nn_dist(n, 0.1);
    if (n >= 4) {
        parallel_for(n, 256, [&](size_t b, size_t e) {
            for (size_t i = b; i < e; ++i) {
                double best[3] = {1e30, 1e30, 1e30};
                for (size_t j = 0; j < n; ++j) {
                    if (j == i) continue;
                    const double d = (selected[j].position - selected[i].position).norm();
                    if (d < best[0]) {
                        best[2] = best[1]; best[1] = best[0]; best[0] = d;
                    } else if (d < best[1]) {
                        best[2] = best[1]; best[1] = d;
                    } else if (d < best[2]) {
                        best[2] = d;
                    }
                }
                nn_dist[i] = std::max((best[0] + best[1] + best[2]) / 3.0, 1e-6);
            }
        });
    }

    GaussianCloud cloud;
    cloud.gaussians.resize(n);
    for (size_t i = 0; i < n; ++i) {
        Gaussian& g = cloud.gaussians[i];
        g.position = selected[i].position;
        g.rotation = Quat::identity();
        const double s = std::log(nn_dist[i]);
        g.log_scales = {s, s, s};
        g.opacity_logit = logit(0.1);
        g.color = selected[i].color;
    }
    return cloud;
}

namespace {

inline double adam_update(double& m, double& v, double g, double lr, double bc1, double bc2,
                          const TrainConfig& c) {
    m = c.adam_beta1 * m + (1.0 - c.adam_beta1) * g;
    v = c.adam_beta2 * v + (1.0 - c.adam_beta2) * g * g;
    return -lr * (m / bc1) / (std::sqrt(v / bc2) + c.adam_eps);
}

}  // namespace

void adam_step(GaussianCloud& cloud, const CloudGradients& grads, OptimizerState& state,
               const TrainConfig& config) {
    const size_t n = cloud.count();
    require(grads.position.size() == n && state.size() == n, ErrorCode::Validation,
            "adam_step: shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(state.step));

    parallel_for(n, 512, [&](size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            Gaussian& g = cloud.gaussians[i];
            g.position.x += adam_update(state.m_position[i].x, state.v_position[i].x,
                                        grads.position[i].x, config.lr_position, bc1, bc2, config);
            g.position.y += adam_update(state.m_position[i].y, state.v_position[i].y,
                                        grads.position[i].y, config.lr_position, bc1, bc2, config);
            g.position.z += adam_update(state.m_position[i].z, state.v_position[i].z,
                                        grads.position[i].z, config.lr_position, bc1, bc2, config);

            double* q[4] = {&g.rotation.w, &g.rotation.x, &g.rotation.y, &g.rotation.z};
            for (int k = 0; k < 4; ++k)
                *q[k] += adam_update(state.m_rotation[i][k], state.v_rotation[i][k],
                                     grads.rotation[i][k], config.lr_rotation, bc1, bc2, config);
            g.rotation = g.rotation.normalized();

            g.log_scales.x += adam_update(state.m_log_scales[i].x, state.v_log_scales[i].x,
                                          grads.log_scales[i].x, config.lr_log_scales, bc1, bc2, config);
            g.log_scales.y += adam_update(state.m_log_scales[i].y, state.v_log_scales[i].y,
                                          grads.log_scales[i].y, config.lr_log_scales, bc1, bc2, config);
            g.log_scales.z += adam_update(state.m_log_scales[i].z, state.v_log_scales[i].z,
                                          grads.log_scales[i].z, config.lr_log_scales, bc1, bc2, config);

            g.opacity_logit += adam_update(state.m_opacity[i], state.v_opacity[i],
                                           grads.opacity_logit[i], config.lr_opacity, bc1, bc2, config);

            g.color.x += adam_update(state.m_color[i].x, state.v_color[i].x, grads.color[i].x,
                                     config.lr_color, bc1, bc2, config);
            g.color.y += adam_update(state.m_color[i].y, state.v_color[i].y, grads.color[i].y,
                                     config.lr_color, bc1, bc2, config);
            g.color.z += adam_update(state.m_color[i].z, state.v_color[i].z, grads.color[i].z,
                                     config.lr_color, bc1, bc2, config);
        }
    });
}

DensifyResult densify_and_prune(const GaussianCloud& cloud,
                                const std::vector<double>& mean_grad_norm,
                                const TrainConfig& config, int iter) {
    require(mean_grad_norm.size() == cloud.count(), ErrorCode::Validation,
            "densify_and_prune: gradient norms do not match cloud");
    DensifyResult out;

    // Prune pass.
    std::vector<uint32_t> kept;
    if (iter % config.prune_interval == 0) {
        for (uint32_t i = 0; i < cloud.count(); ++i)
            if (cloud.gaussians[i].opacity() >= config.prune_opacity_thresh) kept.push_back(i);
        if (kept.empty()) {
            // Never hand back an unrenderable cloud.
            uint32_t best = 0;
            for (uint32_t i = 1; i < cloud.count(); ++i)
                if (cloud.gaussians[i].opacity() > cloud.gaussians[best].opacity()) best = i;
            kept.push_back(best);
        }
    } else {
        kept.resize(cloud.count());
        std::iota(kept.begin(), kept.end(), 0);
    }

    for (uint32_t idx : kept) {
        out.cloud.gaussians.push_back(cloud.gaussians[idx]);
        out.parent.push_back(idx);
        out.is_clone.push_back(false);
    }

    // Densify pass: clone the strongest-gradient survivors.
    const bool densify_active = iter % config.densify_interval == 0 &&
                                iter <= config.resolved_densify_stop() &&
                                out.cloud.count() < config.max_gaussians;
    if (densify_active) {
        std::vector<uint32_t> candidates;  // indices into out.cloud
        for (uint32_t i = 0; i < out.cloud.count(); ++i)
            if (mean_grad_norm[out.parent[i]] > config.densify_grad_thresh) candidates.push_back(i);
        std::sort(candidates.begin(), candidates.end(), [&](uint32_t a, uint32_t b) {
            const double ga = mean_grad_norm[out.parent[a]];
            const double gb = mean_grad_norm[out.parent[b]];
            if (ga != gb) return ga > gb;
            return out.parent[a] < out.parent[b];
        });
        const size_t budget = config.max_gaussians - out.cloud.count();
        if (candidates.size() > budget) candidates.resize(budget);

        Rng rng(derive_seed(config.seed, 0xD5F1000ULL + static_cast<uint64_t>(iter)));
        for (uint32_t i : candidates) {
            Gaussian g = out.cloud.gaussians[i];
            const Vec3 s = g.scales();
            const double jitter = 0.5 * (s.x + s.y + s.z) / 3.0;
            g.position += Vec3{rng.normal(0, jitter), rng.normal(0, jitter),
                               rng.normal(0, jitter)};
            out.cloud.gaussians.push_back(g);
            out.parent.push_back(out.parent[i]);
            out.is_clone.push_back(true);
        }
    }
    return out;
}

namespace {

struct ViewData {
    Camera camera;
    ImageBuffer target;
    MaskImage mask;
};

}  // namespace

TrainResult train(const DatasetManifest& manifest, const TrainConfig& config,
                  const TrainOptions& options) {
    config.validate();
    validate_for_training(manifest);

    const auto train_idx = manifest.view_indices(Split::Train);
    std::vector<ViewData> views;
    views.reserve(train_idx.size());
    for (size_t idx : train_idx) {
        const ViewRecord& rec = manifest.views[idx];
        ViewData vd;
        vd.camera = rec.camera;
        if (options.use_processed) {
            require(rec.processed_path.has_value(), ErrorCode::Validation,
                    "train: use_processed requested but view has no processed image; "
                    "run the preprocess stage first or pass use_processed=false");
            vd.target = load_image(*rec.processed_path);
        } else {
            vd.target = load_image(rec.corrupted_path);
        }
        require(vd.target.width == vd.camera.width && vd.target.height == vd.camera.height,
                ErrorCode::DimensionMismatch, "train: target image does not match camera size");
        if (options.use_masks && rec.pred_mask_path.has_value()) {
            vd.mask = load_mask(*rec.pred_mask_path);
            require(vd.mask.width == vd.target.width && vd.mask.height == vd.target.height,
                    ErrorCode::DimensionMismatch, "train: mask does not match image size");
        } else {
            vd.mask = MaskImage(vd.target.width, vd.target.height, 0);
        }
        views.push_back(std::move(vd));
    }

    PointCloud points;
    {
        std::ifstream in(manifest.points_path);
        require(in.good(), ErrorCode::IoFailure, "train: cannot open " + manifest.points_path);
        double x, y, z, r, g, b;
        while (in >> x >> y >> z >> r >> g >> b)
            points.points.push_back({{x, y, z}, {r, g, b}});
        require(!points.points.empty(), ErrorCode::Validation,
                "train: point cloud is empty: " + manifest.points_path);
    }

    TrainResult result;
    result.cloud = init_from_points(points, config.init_target_count, config.seed);
    OptimizerState state;
    state.resize(result.cloud.count());

    std::vector<double> grad_norm_sum(result.cloud.count(), 0.0);
    int grad_norm_steps = 0;

    RenderOptions ropt;
    ropt.background = config.background;

    namespace fs = std::filesystem;
    if (!options.out_dir.empty()) fs::create_directories(options.out_dir);

    const auto t_start = std::chrono::steady_clock::now();
    std::vector<size_t> order;
    size_t order_pos = 0;
    uint64_t epoch = 0;

    for (int iter = 1; iter <= config.iterations; ++iter) {
        if (order_pos >= order.size()) {
            order.resize(views.size());
            std::iota(order.begin(), order.end(), 0);
            Rng rng(derive_seed(config.seed, 0x5E1EC7ULL + epoch));
            rng.shuffle(order);
            order_pos = 0;
            ++epoch;
        }
        const ViewData& view = views[order[order_pos++]];

        RenderAux aux;
        const ImageBuffer rendered = render(result.cloud, view.camera, ropt, &aux);
        LossOutput loss =
            total_loss(rendered, view.target, view.mask, config.lambda, config.l1_use_squared);
        CloudGradients grads =
            render_backward(result.cloud, view.camera, aux, loss.grad, ropt);

        for (size_t i = 0; i < result.cloud.count(); ++i)
            grad_norm_sum[i] += grads.position[i].norm();
        ++grad_norm_steps;

        adam_step(result.cloud, grads, state, config);

        const bool densify_due = iter % config.densify_interval == 0;
        const bool prune_due = iter % config.prune_interval == 0;
        if (densify_due || prune_due) {
            std::vector<double> mean_norm(result.cloud.count(), 0.0);
            for (size_t i = 0; i < result.cloud.count(); ++i)
                mean_norm[i] = grad_norm_sum[i] / std::max(1, grad_norm_steps);
            DensifyResult dr = densify_and_prune(result.cloud, mean_norm, config, iter);

            OptimizerState new_state;
            new_state.resize(dr.cloud.count());
            new_state.step = state.step;
            for (size_t i = 0; i < dr.cloud.count(); ++i) {
                if (dr.is_clone[i]) continue;  // clones start with zero moments
                const uint32_t p = dr.parent[i];
                new_state.m_position[i] = state.m_position[p];
                new_state.v_position[i] = state.v_position[p];
                new_state.m_rotation[i] = state.m_rotation[p];
                new_state.v_rotation[i] = state.v_rotation[p];
                new_state.m_log_scales[i] = state.m_log_scales[p];
                new_state.v_log_scales[i] = state.v_log_scales[p];
                new_state.m_opacity[i] = state.m_opacity[p];
                new_state.v_opacity[i] = state.v_opacity[p];
                new_state.m_color[i] = state.m_color[p];
                new_state.v_color[i] = state.v_color[p];
            }
            result.cloud = std::move(dr.cloud);
            state = std::move(new_state);
            grad_norm_sum.assign(result.cloud.count(), 0.0);
            grad_norm_steps = 0;
        }

        if (iter % 100 == 0 || iter == config.iterations) {
            const auto now = std::chrono::steady_clock::now();
            TrainLogRow row;
            row.iteration = iter;
            row.loss = loss.total;
            row.l1 = loss.l1;
            row.dssim = loss.dssim;
            row.gaussian_count = result.cloud.count();
            row.elapsed_ms =
                std::chrono::duration_cast<std::chrono::milliseconds>(now - t_start).count();
            result.log.push_back(row);
        }
        if (!options.out_dir.empty() && iter % 1000 == 0 && iter != config.iterations) {
            char name[64];
            std::snprintf(name, sizeof(name), "%s_%06d.wgs", options.checkpoint_stem.c_str(), iter);
            save_checkpoint((fs::path(options.out_dir) / name).string(), result.cloud,
                            options.config_hash);
        }
    }

    if (!options.out_dir.empty()) {
        const std::string final_path =
            (fs::path(options.out_dir) / (options.checkpoint_stem + "_final.wgs")).string();
        save_checkpoint(final_path, result.cloud, options.config_hash);
        result.final_checkpoint_path = final_path;
        write_train_log_csv((fs::path(options.out_dir) / (options.checkpoint_stem + "_log.csv")).string(),
                            result.log, options.config_hash);
    }
    return result;
}

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows,
                         uint64_t config_hash) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::IoFailure, "write_train_log_csv: cannot open " + path);
    out << "# config_hash=" << config_hash << "\n";
    out << "iteration,loss,l1,dssim,gaussian_count,elapsed_ms\n";
    char line[256];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%zu,%lld\n", r.iteration, r.loss,
                      r.l1, r.dssim, r.gaussian_count, static_cast<long long>(r.elapsed_ms));
        out << line;
    }
}

}  // namespace wgs
