#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weathergs/manifest.hpp"
#include "weathergs/renderer.hpp"
#include "weathergs/scene.hpp"

namespace wgs {

struct TrainConfig {
    double lambda = 0.2;  // D-SSIM weight in the combined loss
    int iterations = 5000;

    double lr_position = 1.6e-4;
    double lr_rotation = 1e-3;
    double lr_log_scales = 5e-3;
    double lr_opacity = 5e-2;
    double lr_color = 2.5e-3;

    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    double prune_opacity_thresh = 0.005;
    double densify_grad_thresh = 5e-5;
    int densify_interval = 300;
    int prune_interval = 300;
    int densify_stop_iter = -1;  // -1: 60% of iterations
    size_t max_gaussians = 20000;
    size_t init_target_count = 2000;

    Vec3 background{0, 0, 0};
    uint64_t seed = 0;
    bool l1_use_squared = false;  // alternate reading of the L1 term

    int resolved_densify_stop() const {
        return densify_stop_iter >= 0 ? densify_stop_iter
                                      : static_cast<int>(0.6 * iterations);
    }
    void validate() const;
};

/// Adam moments per parameter group, shapes mirroring the cloud.
struct OptimizerState {
    std::vector<Vec3> m_position, v_position;
    std::vector<std::array<double, 4>> m_rotation, v_rotation;
    std::vector<Vec3> m_log_scales, v_log_scales;
    std::vector<double> m_opacity, v_opacity;
    std::vector<Vec3> m_color, v_color;
    int64_t step = 0;

    void resize(size_t n);
    size_t size() const { return m_position.size(); }
};

/// One Gaussian per point: subsampled (even stride) or topped up with
/// jittered duplicates to reach target_count. Scales come from the mean
/// distance to the 3 nearest neighbors; opacity starts at 0.1.
GaussianCloud init_from_points(const PointCloud& points, size_t target_count,
                               uint64_t seed = 0);

/// Bias-corrected Adam over all parameter groups; quaternions are
/// renormalized after the step.
void adam_step(GaussianCloud& cloud, const CloudGradients& grads, OptimizerState& state,
               const TrainConfig& config);

struct DensifyResult {
    GaussianCloud cloud;
    // For entry i of the new cloud: index of the source Gaussian in the old
    // cloud. Clones carry their parent's index; the trainer uses this to
    // remap optimizer state (clones get zeroed moments).
    std::vector<uint32_t> parent;
    std::vector<bool> is_clone;
};

/// Prune (opacity below threshold), then clone high-gradient Gaussians with
/// seeded positional jitter, capped at max_gaussians. mean_grad_norm holds
/// the mean accumulated position-gradient norm per Gaussian.
DensifyResult densify_and_prune(const GaussianCloud& cloud,
                                const std::vector<double>& mean_grad_norm,
                                const TrainConfig& config, int iter);

struct TrainLogRow {
    int iteration = 0;
    double loss = 0, l1 = 0, dssim = 0;
    size_t gaussian_count = 0;
    int64_t elapsed_ms = 0;
};

struct TrainOptions {
    bool use_masks = true;       // false: all-zero masks (w/o LED ablation)
    bool use_processed = true;   // false: corrupted inputs (w/o AEF ablation)
    std::string out_dir;         // checkpoints + log land here when nonempty
    std::string checkpoint_stem = "checkpoint";
    uint64_t config_hash = 0;
};

struct TrainResult {
    GaussianCloud cloud;
    std::vector<TrainLogRow> log;
    std::string final_checkpoint_path;  // empty when out_dir unset
};

/// Full optimization loop: seeded view order, render with aux, Eq-style
/// masked loss, analytic backward, Adam, periodic densify/prune.
/// Deterministic given (manifest bytes, config, seed).
TrainResult train(const DatasetManifest& manifest, const TrainConfig& config,
                  const TrainOptions& options = {});

void write_train_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows,
                         uint64_t config_hash);

}  // namespace wgs
