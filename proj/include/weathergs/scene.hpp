#pragma once

#include <cstdint>
#include <vector>

#include "weathergs/math.hpp"

namespace wgs {

/// One optimizable splat. Covariance is never stored: it is derived from
/// rotation and log_scales (see covariance_from_params), which keeps it PSD
/// with no projection step. Color is plain RGB, unbounded during
/// optimization and clamped to [0,1] only at render time.
struct Gaussian {
    Vec3 position;
    Quat rotation;       // unit quaternion (w,x,y,z); renormalized after steps
    Vec3 log_scales;     // per-axis stddev, natural log
    double opacity_logit = 0.0;  // alpha = sigmoid(opacity_logit)
    Vec3 color;

    double opacity() const { return sigmoid(opacity_logit); }
    Vec3 scales() const {
        return {std::exp(log_scales.x), std::exp(log_scales.y), std::exp(log_scales.z)};
    }
};

struct GaussianCloud {
    std::vector<Gaussian> gaussians;

    size_t count() const { return gaussians.size(); }
    bool empty() const { return gaussians.empty(); }
};

/// Pinhole camera. Right-handed convention: camera looks down +z in camera
/// space, image x right, image y down, origin top-left, pixel centers at
/// integer + 0.5. world-to-camera: p_cam = rotation_wc * p_world + translation_wc.
struct Camera {
    double fx = 0.0, fy = 0.0;
    double cx = 0.0, cy = 0.0;
    Mat3 rotation_wc = Mat3::identity();
    Vec3 translation_wc;
    int width = 0, height = 0;
    double near_clip = 0.01;

    Vec3 position_world() const {
        // p_cam = R p + t = 0  =>  p = -R^T t
        return rotation_wc.transposed() * (-translation_wc);
    }
    /// World-space direction of the ray through pixel center (px+0.5, py+0.5).
    Vec3 ray_direction(double px, double py) const {
        const Vec3 d_cam{(px + 0.5 - cx) / fx, (py + 0.5 - cy) / fy, 1.0};
        return (rotation_wc.transposed() * d_cam).normalized();
    }
};

Vec3 world_to_camera(const Camera& camera, const Vec3& p_world);

/// Sigma = R * diag(exp(2 * log_scales)) * R^T. Symmetric PSD by construction.
Mat3 covariance_from_params(const Quat& rotation, const Vec3& log_scales);

/// Float RGB image, row major, channels nominally in [0,1].
struct ImageBuffer {
    int width = 0, height = 0;
    std::vector<Vec3> pixels;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, const Vec3& fill = {0, 0, 0})
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {}

    Vec3& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    const Vec3& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    size_t pixel_count() const { return pixels.size(); }
    bool same_size(const ImageBuffer& o) const {
        return width == o.width && height == o.height;
    }
};

/// Binary mask, values strictly 0 or 1.
struct MaskImage {
    int width = 0, height = 0;
    std::vector<uint8_t> values;

    MaskImage() = default;
    MaskImage(int w, int h, uint8_t fill = 0)
        : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

    uint8_t& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    size_t ones() const {
        size_t n = 0;
        for (uint8_t v : values) n += v;
        return n;
    }
};

struct PointSample {
    Vec3 position;
    Vec3 color;  // RGB in [0,1]
};

struct PointCloud {
    std::vector<PointSample> points;
};

}  // namespace wgs
