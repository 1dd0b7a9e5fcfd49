#pragma once

#include <array>
#include <string>
#include <vector>

#include "weathergs/manifest.hpp"
#include "weathergs/scene.hpp"

namespace wgs {

enum class TaskPlugin { Derain, Desnow };

/// Shared 8-slot embedding space for the text and image encoders:
///   0 rain evidence        4 orientation coherence (image cue)
///   1 snow evidence        5 blob isotropy (image cue)
///   2 removal intent / artifact presence
///   3 negation / artifact absence
///   6 artifact pixel fraction
///   7 mean artifact luminance
/// Vectors are L2-normalized. The layout is documented in docs/formats.md.
using FeatureVector = std::array<double, 8>;

/// Per-pixel occlusion likelihood in [0,1].
struct ConfidenceMap {
    int width = 0, height = 0;
    std::vector<double> values;

    ConfidenceMap() = default;
    ConfidenceMap(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}
    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
};

struct PreprocessConfig {
    double theta = 0.0;               // plugin-selection threshold
    double t = 0.5;                   // mask binarization threshold
    double aef_contrast_thresh = 0.15;
    int aef_max_blob_px = 60;
    double led_variance_sigma = 0.004;
    int mask_dilate_px = 2;
    uint64_t seed = 0;

    void validate() const;
};

/// Keyword-indicator embedding of a weather-removal instruction. Errors
/// with unknown-instruction when the text names neither rain nor snow.
FeatureVector text_embed(const std::string& instruction);

/// Bright-artifact statistics of one image: structure-tensor orientation
/// coherence (high for streaks), blob isotropy, artifact fraction, mean
/// artifact luminance.
FeatureVector image_weather_features(const ImageBuffer& image);

/// Cosine of the combined (text + image) evidence against the rain-aligned
/// axis of the shared slot layout.
double plugin_selection_cosine(const FeatureVector& text, const FeatureVector& image);

/// Derain iff the cosine is strictly greater than theta, else Desnow.
TaskPlugin select_plugin(const FeatureVector& text, const FeatureVector& image, double theta);

/// Removes small bright blobs: pixels brighter than their 7x7 local median
/// by aef_contrast_thresh, in connected components of at most
/// aef_max_blob_px pixels, are replaced by the median of the non-detected
/// pixels around them. Undetected pixels pass through bit-identically.
ImageBuffer aef_desnow(const ImageBuffer& image, const PreprocessConfig& config);

/// Removes elongated bright streaks near the dominant residual orientation
/// (aspect ratio >= 3, width <= 3 px, within 15 degrees); detected pixels
/// are inpainted from a length-9 profile perpendicular to the streak.
ImageBuffer aef_derain(const ImageBuffer& image, const PreprocessConfig& config);

struct LedResult {
    ConfidenceMap map;        // shared by all views
    bool low_contrast = false;  // degenerate input; map is all zeros
};

/// Occlusion confidence from >= 3 views: static-in-image-coordinates
/// content (low cross-view variance) that is also locally blurred scores
/// high. Min-max rescaled to [0,1].
LedResult led_confidence(const std::vector<ImageBuffer>& processed_views,
                         const PreprocessConfig& config);

/// M(x,y) = 1 iff C(x,y) >= t (inclusive).
MaskImage binarize_mask(const ConfidenceMap& confidence, double t);

/// Pixelwise average across views re-binarized at 0.5, then dilated by
/// mask_dilate_px (euclidean disk); the result is replicated per view.
std::vector<MaskImage> mask_postprocess(const std::vector<MaskImage>& masks,
                                        const PreprocessConfig& config);

struct PreprocessResult {
    DatasetManifest manifest;
    TaskPlugin plugin = TaskPlugin::Desnow;
    double selection_cosine = 0.0;
    double mean_mask_coverage = 0.0;
    bool led_low_contrast = false;
};

/// The dense-to-sparse stage end to end: select the plugin once per dataset
/// (features averaged over train views), AEF every view, LED on the AEF
/// outputs of the train views, write processed images and predicted masks,
/// and update the manifest in place (prior manifest saved as <name>.bak).
/// Partial outputs are removed on failure.
PreprocessResult run_preprocess(const std::string& manifest_path, const std::string& instruction,
                                const PreprocessConfig& config);

}  // namespace wgs
