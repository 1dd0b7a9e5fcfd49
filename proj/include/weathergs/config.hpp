#pragma once

#include <cstdint>
#include <string>

#include "weathergs/preprocess.hpp"
#include "weathergs/synth.hpp"
#include "weathergs/trainer.hpp"

namespace wgs {

struct CameraRigConfig {
    int count = 24;
    double orbit_radius = 3.5;
    double height = 2.2;
    Vec3 look_at{0.0, 0.45, 0.0};
    double fx = 110.0, fy = 110.0;
    int width = 128, height_px = 128;
};

/// Everything a pipeline run needs, loadable from one JSON file (schema in
/// docs/formats.md; configs/default.json is the committed example). Keys
/// starting with "_" are annotations and are ignored.
struct PipelineConfig {
    SceneSpec scene;
    CameraRigConfig cameras;
    WeatherRecipe weather;
    PreprocessConfig preprocess;
    TrainConfig train;
    SynthConfig synth;
    std::string instruction = "Remove the snowy effect in the image";
    std::string out_dir = "out";
    uint64_t seed = 1;
    int threads = 0;  // 0 = all cores

    void validate() const;
};

/// Defaults: the snow+lens recipe on the default scene.
PipelineConfig default_pipeline_config();

PipelineConfig load_pipeline_config(const std::string& path);
void save_pipeline_config(const std::string& path, const PipelineConfig& config);

/// FNV-1a over the canonical serialized form; stamped into checkpoints,
/// manifests, and reports.
uint64_t config_hash(const PipelineConfig& config);

}  // namespace wgs
