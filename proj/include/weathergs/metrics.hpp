#pragma once

#include <string>
#include <vector>

#include "weathergs/manifest.hpp"
#include "weathergs/scene.hpp"

namespace wgs {

constexpr double kPsnrCap = 99.0;  // reported for identical images

/// 10 log10(1 / MSE) over all channels, peak 1.0. Identical images return
/// the 99 dB sentinel.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

struct EvalRow {
    size_t view_id = 0;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

struct EvalReport {
    std::string scene_name;
    std::string checkpoint_path;
    uint64_t config_hash = 0;
    std::string label;  // run name in comparison tables
    std::vector<EvalRow> rows;
    double avg_psnr = 0.0;
    double avg_ssim = 0.0;
};

/// Renders every test view of the manifest and scores it against the clean
/// ground truth (never corrupted or processed images).
EvalReport evaluate(const DatasetManifest& manifest, const GaussianCloud& cloud,
                    const Vec3& background = {0, 0, 0});

void write_report_csv(const std::string& path, const EvalReport& report);
std::string report_table(const EvalReport& report);

struct ComparisonTable {
    std::vector<std::string> labels;
    std::vector<double> psnr_values;
    std::vector<double> ssim_values;
    size_t best_psnr_index = 0;
    size_t best_ssim_index = 0;
    std::string text;  // aligned human-readable table with deltas
};

/// Aligns runs (first report is the baseline for deltas) and marks the best
/// value per metric.
ComparisonTable compare_runs(const std::vector<EvalReport>& reports);

}  // namespace wgs
