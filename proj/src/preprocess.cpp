#include "weathergs/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <set>

#include "weathergs/error.hpp"
#include "weathergs/image_io.hpp"
#include "weathergs/threading.hpp"

namespace fs = std::filesystem;

namespace wgs {

void PreprocessConfig::validate() const {
    require(theta >= -1.0 && theta <= 1.0, ErrorCode::Validation,
            "preprocess: theta must be in [-1,1]");
    require(t > 0.0 && t < 1.0, ErrorCode::Validation, "preprocess: t must be in (0,1)");
    require(aef_contrast_thresh > 0.0, ErrorCode::Validation,
            "preprocess: aef_contrast_thresh must be positive");
    require(aef_max_blob_px >= 1, ErrorCode::Validation,
            "preprocess: aef_max_blob_px must be >= 1");
    require(led_variance_sigma > 0.0, ErrorCode::Validation,
            "preprocess: led_variance_sigma must be positive");
    require(mask_dilate_px >= 0, ErrorCode::Validation,
            "preprocess: mask_dilate_px must be >= 0");
}

namespace {

double luminance(const Vec3& c) { return 0.299 * c.x + 0.587 * c.y + 0.114 * c.z; }

using Plane = std::vector<double>;

Plane luminance_plane(const ImageBuffer& img) {
    Plane out(img.pixel_count());
    for (size_t i = 0; i < out.size(); ++i) out[i] = luminance(img.pixels[i]);
    return out;
}

// 7x7 median with clamp-to-edge.
Plane median7(const Plane& in, int w, int h) {
    Plane out(in.size());
    parallel_for(static_cast<size_t>(h), 8, [&](size_t yb, size_t ye) {
        double window[49];
        for (size_t y = yb; y < ye; ++y) {
            for (int x = 0; x < w; ++x) {
                int n = 0;
                for (int dy = -3; dy <= 3; ++dy) {
                    const int yy = std::clamp(static_cast<int>(y) + dy, 0, h - 1);
                    for (int dx = -3; dx <= 3; ++dx) {
                        const int xx = std::clamp(x + dx, 0, w - 1);
                        window[n++] = in[static_cast<size_t>(yy) * w + xx];
                    }
                }
                std::nth_element(window, window + 24, window + 49);
                out[y * w + x] = window[24];
            }
        }
    });
    return out;
}

std::vector<uint8_t> bright_candidates(const Plane& lum, const Plane& med, double thresh) {
    std::vector<uint8_t> cand(lum.size(), 0);
    for (size_t i = 0; i < lum.size(); ++i) cand[i] = (lum[i] - med[i] > thresh) ? 1 : 0;
    return cand;
}

struct Component {
    std::vector<uint32_t> pixels;
};

// 8-connected components of a binary image.
std::vector<Component> find_components(const std::vector<uint8_t>& bin, int w, int h) {
    std::vector<Component> comps;
    std::vector<uint8_t> seen(bin.size(), 0);
    std::vector<uint32_t> stack;
    for (size_t start = 0; start < bin.size(); ++start) {
        if (!bin[start] || seen[start]) continue;
        Component comp;
        stack.clear();
        stack.push_back(static_cast<uint32_t>(start));
        seen[start] = 1;
        while (!stack.empty()) {
            const uint32_t p = stack.back();
            stack.pop_back();
            comp.pixels.push_back(p);
            const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (!dx && !dy) continue;
                    const int xx = x + dx, yy = y + dy;
                    if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
                    const uint32_t q = static_cast<uint32_t>(yy) * w + xx;
                    if (bin[q] && !seen[q]) {
                        seen[q] = 1;
                        stack.push_back(q);
                    }
                }
        }
        comps.push_back(std::move(comp));
    }
    return comps;
}

// Median color of non-detected pixels in a (2r+1)^2 window; false when the
// window holds none.
bool neighborhood_median(const ImageBuffer& img, const std::vector<uint8_t>& detected, int x,
                         int y, int radius, Vec3& out) {
    std::vector<double> ch[3];
    for (int dy = -radius; dy <= radius; ++dy) {
        const int yy = y + dy;
        if (yy < 0 || yy >= img.height) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
            const int xx = x + dx;
            if (xx < 0 || xx >= img.width) continue;
            const size_t q = static_cast<size_t>(yy) * img.width + xx;
            if (detected[q]) continue;
            const Vec3& c = img.pixels[q];
            ch[0].push_back(c.x);
            ch[1].push_back(c.y);
            ch[2].push_back(c.z);
        }
    }
    if (ch[0].empty()) return false;
    double v[3];
    for (int k = 0; k < 3; ++k) {
        auto& list = ch[k];
        const size_t mid = list.size() / 2;
        std::nth_element(list.begin(), list.begin() + mid, list.end());
        v[k] = list[mid];
    }
    out = {v[0], v[1], v[2]};
    return true;
}

ImageBuffer inpaint_detected(const ImageBuffer& image, const std::vector<uint8_t>& detected) {
    ImageBuffer out = image;
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            const size_t i = static_cast<size_t>(y) * image.width + x;
            if (!detected[i]) continue;
            Vec3 fill;
            if (neighborhood_median(image, detected, x, y, 3, fill) ||
                neighborhood_median(image, detected, x, y, 5, fill))
                out.pixels[i] = fill;
        }
    return out;
}

// Orientation statistics of the residual field: gradient structure tensor
// summed over the image (artifact edges dominate because scene texture is
// low-contrast relative to bright particles).
struct TensorStats {
    double coherence = 0.0;   // (l1 - l2) / (l1 + l2)
    double angle_rad = 0.0;   // major gradient direction
};

TensorStats structure_tensor(const Plane& residual, int w, int h) {
    double jxx = 0, jxy = 0, jyy = 0;
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            const double gx = 0.5 * (residual[static_cast<size_t>(y) * w + x + 1] -
                                     residual[static_cast<size_t>(y) * w + x - 1]);
            const double gy = 0.5 * (residual[static_cast<size_t>(y + 1) * w + x] -
                                     residual[static_cast<size_t>(y - 1) * w + x]);
            jxx += gx * gx;
            jxy += gx * gy;
            jyy += gy * gy;
        }
    TensorStats ts;
    const double tr = jxx + jyy;
    const double diff = jxx - jyy;
    const double root = std::sqrt(diff * diff + 4.0 * jxy * jxy);
    const double l1 = 0.5 * (tr + root), l2 = 0.5 * (tr - root);
    ts.coherence = tr > 1e-12 ? (l1 - l2) / tr : 0.0;
    ts.angle_rad = 0.5 * std::atan2(2.0 * jxy, diff);
    return ts;
}

double norm2(const FeatureVector& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

FeatureVector normalized(FeatureVector v) {
    const double n = norm2(v);
    if (n > 0)
        for (double& x : v) x /= n;
    return v;
}

}  // namespace

FeatureVector text_embed(const std::string& instruction) {
    require(!instruction.empty(), ErrorCode::Validation, "text_embed: empty instruction");
    std::string lower;
    lower.reserve(instruction.size());
    for (char c : instruction)
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

    static const std::vector<std::string> kRain = {"rain",  "rainy",  "raindrop", "drizzle",
                                                   "streak", "shower", "downpour", "wet"};
    static const std::vector<std::string> kSnow = {"snow", "snowy",    "snowflake", "flake",
                                                   "blizzard", "sleet", "frost"};
    static const std::vector<std::string> kVerb = {"remove", "clean", "clear", "eliminate",
                                                   "erase",  "restore", "fix", "get rid"};
    static const std::vector<std::string> kNeg = {"no ", "not ", "without", "keep"};

    auto contains_any = [&](const std::vector<std::string>& words) {
        for (const auto& word : words)
            if (lower.find(word) != std::string::npos) return true;
        return false;
    };

    const bool rain = contains_any(kRain);
    const bool snow = contains_any(kSnow);
    require(rain || snow, ErrorCode::UnknownInstruction,
            "text_embed: instruction mentions neither rain nor snow: " + instruction);

    FeatureVector v{};
    if (rain) v[0] = 1.0;
    if (snow) v[1] = 1.0;
    if (contains_any(kVerb)) v[2] = 0.5;
    if (contains_any(kNeg)) v[3] = 0.25;
    return normalized(v);
}

FeatureVector image_weather_features(const ImageBuffer& image) {
    const int w = image.width, h = image.height;
    const Plane lum = luminance_plane(image);
    const Plane med = median7(lum, w, h);
    Plane residual(lum.size());
    for (size_t i = 0; i < lum.size(); ++i) residual[i] = std::max(0.0, lum[i] - med[i]);

    constexpr double kCandThresh = 0.1;
    size_t count = 0;
    double lum_sum = 0.0;
    for (size_t i = 0; i < lum.size(); ++i) {
        if (lum[i] - med[i] > kCandThresh) {
            ++count;
            lum_sum += lum[i];
        }
    }
    const double fraction = static_cast<double>(count) / static_cast<double>(lum.size());

    FeatureVector v{};
    if (count < 20) {
        // No meaningful artifact signal.
        v[3] = 1.0;
        v[6] = fraction;
        return normalized(v);
    }

    const TensorStats ts = structure_tensor(residual, w, h);
    const double coherence = std::clamp(ts.coherence, 0.0, 1.0);
    const double isotropy = 1.0 - coherence;

    v[0] = coherence;                       // rain evidence
    v[1] = isotropy;                        // snow evidence
    v[2] = std::min(1.0, fraction * 50.0);  // artifact presence
    v[4] = coherence;
    v[5] = isotropy;
    v[6] = fraction;
    v[7] = count ? lum_sum / static_cast<double>(count) : 0.0;
    return normalized(v);
}

double plugin_selection_cosine(const FeatureVector& text, const FeatureVector& image) {
    FeatureVector sum{};
    for (size_t i = 0; i < sum.size(); ++i) sum[i] = text[i] + image[i];
    const double n = norm2(sum);
    if (n == 0.0) return 0.0;
    // rain axis: (e_rain - e_snow) / sqrt(2)
    constexpr double kInvSqrt2 = 0.70710678118654752440;
    return (sum[0] - sum[1]) * kInvSqrt2 / n;
}

TaskPlugin select_plugin(const FeatureVector& text, const FeatureVector& image, double theta) {
    return plugin_selection_cosine(text, image) > theta ? TaskPlugin::Derain : TaskPlugin::Desnow;
}

ImageBuffer aef_desnow(const ImageBuffer& image, const PreprocessConfig& config) {
    config.validate();
    const int w = image.width, h = image.height;
    const Plane lum = luminance_plane(image);
    const Plane med = median7(lum, w, h);
    const std::vector<uint8_t> cand = bright_candidates(lum, med, config.aef_contrast_thresh);

    std::vector<uint8_t> detected(cand.size(), 0);
    for (const Component& comp : find_components(cand, w, h)) {
        if (comp.pixels.size() > static_cast<size_t>(config.aef_max_blob_px)) continue;
        for (uint32_t p : comp.pixels) detected[p] = 1;
    }
    return inpaint_detected(image, detected);
}

ImageBuffer aef_derain(const ImageBuffer& image, const PreprocessConfig& config) {
    config.validate();
    const int w = image.width, h = image.height;
    const Plane lum = luminance_plane(image);
    const Plane med = median7(lum, w, h);
    const std::vector<uint8_t> cand = bright_candidates(lum, med, config.aef_contrast_thresh);

    Plane residual(lum.size());
    for (size_t i = 0; i < lum.size(); ++i) residual[i] = std::max(0.0, lum[i] - med[i]);
    const TensorStats ts = structure_tensor(residual, w, h);
    // Gradients run perpendicular to the streaks.
    const double streak_angle = ts.angle_rad + kPi / 2.0;

    std::vector<uint8_t> detected(cand.size(), 0);
    std::vector<double> comp_angle_of(cand.size(), streak_angle);
    for (const Component& comp : find_components(cand, w, h)) {
        if (comp.pixels.size() < 3) continue;
        double mx = 0, my = 0;
        for (uint32_t p : comp.pixels) {
            mx += p % w;
            my += p / w;
        }
        mx /= comp.pixels.size();
        my /= comp.pixels.size();
        double cxx = 0, cxy = 0, cyy = 0;
        for (uint32_t p : comp.pixels) {
            const double dx = static_cast<double>(p % w) - mx;
            const double dy = static_cast<double>(p / w) - my;
            cxx += dx * dx;
            cxy += dx * dy;
            cyy += dy * dy;
        }
        const double n = static_cast<double>(comp.pixels.size());
        cxx /= n;
        cxy /= n;
        cyy /= n;
        const double tr = cxx + cyy, diff = cxx - cyy;
        const double root = std::sqrt(diff * diff + 4.0 * cxy * cxy);
        const double l1 = 0.5 * (tr + root);
        const double l2 = std::max(0.5 * (tr - root), 0.0);
        // Uniform bar: variance along = len^2/12, across = width^2/12.
        const double aspect = std::sqrt((l1 + 0.25) / (l2 + 0.25));
        const double width_px = std::sqrt(12.0 * l2 + 1.0);
        if (aspect < 3.0 || width_px > 3.0) continue;
        const double angle = 0.5 * std::atan2(2.0 * cxy, diff);  // major axis
        double delta = std::abs(angle - streak_angle);
        while (delta > kPi / 2.0) delta = std::abs(delta - kPi);
        if (delta > deg_to_rad(15.0)) continue;
        for (uint32_t p : comp.pixels) {
            detected[p] = 1;
            comp_angle_of[p] = angle;
        }
    }

    // Inpaint across the streak: length-9 profile along the perpendicular.
    ImageBuffer out = image;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            if (!detected[i]) continue;
            const double a = comp_angle_of[i] + kPi / 2.0;
            const double nx = std::cos(a), ny = std::sin(a);
            std::vector<double> ch[3];
            for (int k = -4; k <= 4; ++k) {
                const int xx = static_cast<int>(std::lround(x + k * nx));
                const int yy = static_cast<int>(std::lround(y + k * ny));
                if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
                const size_t q = static_cast<size_t>(yy) * w + xx;
                if (detected[q]) continue;
                ch[0].push_back(image.pixels[q].x);
                ch[1].push_back(image.pixels[q].y);
                ch[2].push_back(image.pixels[q].z);
            }
            if (ch[0].empty()) {
                Vec3 fill;
                if (neighborhood_median(image, detected, x, y, 3, fill)) out.pixels[i] = fill;
                continue;
            }
            Vec3 fill;
            double* chans[3] = {&fill.x, &fill.y, &fill.z};
            for (int k = 0; k < 3; ++k) {
                const size_t mid = ch[k].size() / 2;
                std::nth_element(ch[k].begin(), ch[k].begin() + mid, ch[k].end());
                *chans[k] = ch[k][mid];
            }
            out.pixels[i] = fill;
        }
    return out;
}

LedResult led_confidence(const std::vector<ImageBuffer>& views, const PreprocessConfig& config) {
    config.validate();
    require(views.size() >= 3, ErrorCode::Validation, "led_confidence: needs >= 3 views");
    const int w = views[0].width, h = views[0].height;
    for (const auto& v : views)
        require(v.width == w && v.height == h, ErrorCode::DimensionMismatch,
                "led_confidence: views must share dimensions");

    const size_t n_pix = static_cast<size_t>(w) * h;
    const double n_views = static_cast<double>(views.size());

    // Cross-view variance, mean over channels, then averaged over a small
    // disk: lens occlusions are coherent blobs of static content, while
    // isolated low-variance scene pixels get pulled up by their neighbors.
    Plane var_px(n_pix, 0.0);
    for (size_t p = 0; p < n_pix; ++p) {
        Vec3 mean{0, 0, 0};
        for (const auto& v : views) mean += v.pixels[p];
        mean = mean / n_views;
        double acc = 0.0;
        for (const auto& v : views) {
            const Vec3 d = v.pixels[p] - mean;
            acc += d.dot(d);
        }
        var_px[p] = acc / (3.0 * n_views);
    }
    Plane var(n_pix, 0.0);
    constexpr int kVarRadius = 3;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            int count = 0;
            for (int dy = -kVarRadius; dy <= kVarRadius; ++dy)
                for (int dx = -kVarRadius; dx <= kVarRadius; ++dx) {
                    if (dx * dx + dy * dy > kVarRadius * kVarRadius) continue;
                    const int xx = x + dx, yy = y + dy;
                    if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
                    acc += var_px[static_cast<size_t>(yy) * w + xx];
                    ++count;
                }
            var[static_cast<size_t>(y) * w + x] = acc / count;
        }
    double var_mean = 0.0;
    for (double v : var) var_mean += v;
    var_mean /= static_cast<double>(n_pix);

    // Sharpness deficit: droplets blur away local detail in every view.
    // Compared on a log scale against the image median so the handful of
    // very sharp edges cannot stretch the calibration.
    Plane sharp(n_pix, 0.0);
    for (const auto& v : views) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
                const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
                const double c = luminance(v.at(x, y));
                const double lap = luminance(v.at(xm, y)) + luminance(v.at(xp, y)) +
                                   luminance(v.at(x, ym)) + luminance(v.at(x, yp)) - 4.0 * c;
                sharp[static_cast<size_t>(y) * w + x] += std::abs(lap);
            }
    }
    Plane log_sharp(n_pix);
    for (size_t p = 0; p < n_pix; ++p) log_sharp[p] = std::log(sharp[p] / n_views + 1e-8);
    Plane sorted_ls = log_sharp;
    std::nth_element(sorted_ls.begin(), sorted_ls.begin() + n_pix / 2, sorted_ls.end());
    const double log_sharp_median = sorted_ls[n_pix / 2];

    LedResult result;
    result.map = ConfidenceMap(w, h, 0.0);
    Plane raw(n_pix);
    for (size_t p = 0; p < n_pix; ++p) {
        const double static_score = sigmoid((var_mean - var[p]) / config.led_variance_sigma);
        const double blur_cue = sigmoid(log_sharp_median - log_sharp[p]);
        raw[p] = static_score * blur_cue;
    }
    const auto [mn_it, mx_it] = std::minmax_element(raw.begin(), raw.end());
    const double mn = *mn_it, mx = *mx_it;
    if (mx - mn < 1e-12) {
        result.low_contrast = true;  // no usable signal anywhere
        return result;
    }
    for (size_t p = 0; p < n_pix; ++p) result.map.values[p] = (raw[p] - mn) / (mx - mn);
    return result;
}

MaskImage binarize_mask(const ConfidenceMap& confidence, double t) {
    require(t > 0.0 && t < 1.0, ErrorCode::Validation, "binarize_mask: t must be in (0,1)");
    MaskImage mask(confidence.width, confidence.height, 0);
    for (size_t i = 0; i < confidence.values.size(); ++i)
        mask.values[i] = confidence.values[i] >= t ? 1 : 0;
    return mask;
}

std::vector<MaskImage> mask_postprocess(const std::vector<MaskImage>& masks,
                                        const PreprocessConfig& config) {
    require(!masks.empty(), ErrorCode::Validation, "mask_postprocess: no masks");
    const int w = masks[0].width, h = masks[0].height;
    for (const auto& m : masks)
        require(m.width == w && m.height == h, ErrorCode::DimensionMismatch,
                "mask_postprocess: masks must share dimensions");

    MaskImage averaged(w, h, 0);
    const double n = static_cast<double>(masks.size());
    for (size_t i = 0; i < averaged.values.size(); ++i) {
        double sum = 0.0;
        for (const auto& m : masks) sum += m.values[i];
        averaged.values[i] = (sum / n >= 0.5) ? 1 : 0;
    }

    MaskImage dilated(w, h, 0);
    const int r = config.mask_dilate_px;
    if (r == 0) {
        dilated = averaged;
    } else {
        std::vector<std::pair<int, int>> offsets;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                if (dx * dx + dy * dy <= r * r) offsets.emplace_back(dx, dy);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (!averaged.at(x, y)) continue;
                for (auto [dx, dy] : offsets) {
                    const int xx = x + dx, yy = y + dy;
                    if (xx >= 0 && xx < w && yy >= 0 && yy < h) dilated.at(xx, yy) = 1;
                }
            }
    }
    return std::vector<MaskImage>(masks.size(), dilated);
}

PreprocessResult run_preprocess(const std::string& manifest_path, const std::string& instruction,
                                const PreprocessConfig& config) {
    config.validate();
    DatasetManifest manifest = load_manifest(manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();

    std::vector<std::string> written;
    auto cleanup = [&]() {
        for (const auto& p : written) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    };

    try {
        const FeatureVector text_fv = text_embed(instruction);

        const auto train_idx = manifest.view_indices(Split::Train);
        FeatureVector image_sum{};
        for (size_t idx : train_idx) {
            const FeatureVector fv =
                image_weather_features(load_image(manifest.views[idx].corrupted_path));
            for (size_t k = 0; k < fv.size(); ++k) image_sum[k] += fv[k];
        }
        for (double& v : image_sum) v /= static_cast<double>(train_idx.size());
        const double inorm = norm2(image_sum);
        if (inorm > 0)
            for (double& v : image_sum) v /= inorm;

        PreprocessResult result;
        result.selection_cosine = plugin_selection_cosine(text_fv, image_sum);
        result.plugin = select_plugin(text_fv, image_sum, config.theta);

        fs::create_directories(base / "processed");
        fs::create_directories(base / "masks_pred");

        // Phase 1: AEF on every view.
        const size_t n = manifest.views.size();
        std::vector<ImageBuffer> processed(n);
        parallel_for(n, 1, [&](size_t b, size_t e) {
            for (size_t i = b; i < e; ++i) {
                const ImageBuffer corrupted = load_image(manifest.views[i].corrupted_path);
                processed[i] = result.plugin == TaskPlugin::Desnow
                                   ? aef_desnow(corrupted, config)
                                   : aef_derain(corrupted, config);
            }
        });
        for (size_t i = 0; i < n; ++i) {
            char name[64];
            std::snprintf(name, sizeof(name), "view_%03zu.ppm", i);
            const std::string path = (base / "processed" / name).string();
            save_image(path, processed[i]);
            written.push_back(path);
            manifest.views[i].processed_path = path;
        }

        // Phase 2: LED needs all AEF outputs (train views only, so the test
        // split never influences preprocessing).
        std::vector<ImageBuffer> train_processed;
        for (size_t idx : train_idx) train_processed.push_back(processed[idx]);
        const LedResult led = led_confidence(train_processed, config);
        result.led_low_contrast = led.low_contrast;

        const MaskImage raw_mask = binarize_mask(led.map, config.t);
        const std::vector<MaskImage> final_masks =
            mask_postprocess(std::vector<MaskImage>(train_idx.size(), raw_mask), config);
        const MaskImage& shared = final_masks[0];
        result.mean_mask_coverage =
            static_cast<double>(shared.ones()) / static_cast<double>(shared.values.size());

        for (size_t i = 0; i < n; ++i) {
            char name[64];
            std::snprintf(name, sizeof(name), "view_%03zu.pgm", i);
            const std::string path = (base / "masks_pred" / name).string();
            save_mask(path, shared);
            written.push_back(path);
            manifest.views[i].pred_mask_path = path;
        }

        // Keep the previous manifest around before updating in place.
        std::error_code ec;
        fs::copy_file(manifest_path, manifest_path + ".bak",
                      fs::copy_options::overwrite_existing, ec);
        save_manifest(manifest_path, manifest);
        result.manifest = std::move(manifest);
        return result;
    } catch (...) {
        cleanup();
        throw;
    }
}

}  // namespace wgs
