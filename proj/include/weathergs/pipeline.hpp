#pragma once

#include <string>
#include <vector>

#include "weathergs/config.hpp"
#include "weathergs/metrics.hpp"

namespace wgs {

/// The ablation matrix: which inputs the trainer sees.
enum class TrainVariant { Vanilla, NoAEF, NoLED, Full };

const char* variant_label(TrainVariant v);
bool variant_uses_masks(TrainVariant v);      // false reproduces "w/o LED"
bool variant_uses_processed(TrainVariant v);  // false reproduces "w/o AEF"

/// Synthesizes the dataset under <out_dir>/dataset. When an up-to-date tree
/// (matching config hash) already exists the stage is skipped. Returns the
/// manifest path.
std::string run_synth_stage(const PipelineConfig& config, bool* skipped = nullptr);

/// Dense-to-sparse preprocessing on the synthesized dataset.
PreprocessResult run_preprocess_stage(const PipelineConfig& config,
                                      const std::string& manifest_path);

struct VariantRun {
    TrainVariant variant = TrainVariant::Full;
    std::string checkpoint_path;
    std::string log_path;
    EvalReport report;
};

/// Trains one ablation variant into <out_dir>/train_<label> and evaluates it.
VariantRun run_train_variant(const PipelineConfig& config, const DatasetManifest& manifest,
                             TrainVariant variant);

struct PipelineSummary {
    std::string manifest_path;
    TaskPlugin plugin = TaskPlugin::Desnow;
    std::vector<VariantRun> runs;  // vanilla, no_aef, no_led, full
    ComparisonTable table;
};

/// synth -> preprocess -> the four trainings (vanilla baseline, w/o AEF,
/// w/o LED, full) -> evaluation -> comparison table.
PipelineSummary run_full_pipeline(const PipelineConfig& config);

}  // namespace wgs
