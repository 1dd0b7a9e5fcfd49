#pragma once

#include <optional>
#include <string>
#include <vector>

#include "weathergs/scene.hpp"

namespace wgs {

enum class Split { Train, Test };

/// One view of a dataset. Paths are stored relative to the manifest file in
/// the on-disk schema and resolved to absolute paths on load.
struct ViewRecord {
    Camera camera;
    std::string clean_path;
    std::string corrupted_path;
    std::optional<std::string> processed_path;
    std::optional<std::string> gt_particle_mask_path;
    std::optional<std::string> gt_occlusion_mask_path;
    std::optional<std::string> pred_mask_path;
    Split split = Split::Train;
};

struct DatasetManifest {
    std::string scene_name;
    std::vector<ViewRecord> views;
    std::string points_path;
    uint64_t seed = 0;
    uint64_t config_hash = 0;

    size_t count_split(Split s) const {
        size_t n = 0;
        for (const auto& v : views)
            if (v.split == s) ++n;
        return n;
    }
    std::vector<size_t> view_indices(Split s) const {
        std::vector<size_t> idx;
        for (size_t i = 0; i < views.size(); ++i)
            if (views[i].split == s) idx.push_back(i);
        return idx;
    }
};

/// JSON schema documented in docs/formats.md. Unknown keys are rejected
/// (keys starting with "_" are treated as annotations and ignored).
/// check_files: verify every referenced file exists (dangling-path error).
DatasetManifest load_manifest(const std::string& path, bool check_files = true);

/// Writes the manifest next to its data; paths are relativized against the
/// manifest's directory when they live under it.
void save_manifest(const std::string& path, const DatasetManifest& manifest);

/// Training needs >= 2 train views and >= 1 test view.
void validate_for_training(const DatasetManifest& manifest);

/// Standalone camera spec file using the manifest's camera schema.
Camera load_camera_json(const std::string& path);

}  // namespace wgs
