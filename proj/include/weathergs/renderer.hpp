#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "weathergs/scene.hpp"

namespace wgs {

// Compositing gates. These are part of the differentiated function: the
// backward pass treats them as fixed branches (zero gradient through a
// clamped or skipped contribution).
constexpr double kCovDilation = 0.3;        // added to both cov2d eigenvalues
constexpr double kAlphaClamp = 0.99;        // per-contribution alpha ceiling
constexpr double kAlphaSkip = 1.0 / 255.0;  // contributions below are dropped
constexpr double kTransmittanceMin = 1e-4;  // early termination threshold

/// A Gaussian after projection to screen space.
struct Projected2D {
    Vec2 mean2d;        // pixels
    Mat2 cov2d;         // pixels^2, includes the kCovDilation term
    double depth = 0;   // camera-space z
    double opacity = 0; // sigmoid(opacity_logit)
    Vec3 color;         // clamped to [0,1] for rendering
    uint32_t source_index = 0;

    // Derived, filled by project_gaussian: inverse covariance and the
    // half-extents of the 3-sigma ellipse bounding box.
    double conic_a = 0, conic_b = 0, conic_c = 0;
    double radius_x = 0, radius_y = 0;
};

/// Jacobian of the pinhole projection at camera-space point p_cam.
/// Requires p_cam.z > 0.
void jacobian_perspective(const Vec3& p_cam, double fx, double fy, double j[2][3]);

/// Projects one Gaussian. Returns nullopt when culled (behind near plane or
/// 3-sigma extent entirely off-image).
std::optional<Projected2D> project_gaussian(const Gaussian& g, const Camera& camera,
                                            uint32_t source_index);

/// alpha * exp(-1/2 d^T cov2d^{-1} d), evaluated only inside the 3-sigma
/// ellipse bounding box (0 outside).
double eval_gaussian_2d(const Projected2D& p, const Vec2& pixel);

/// Stable ascending depth order; ties broken by source_index ascending.
std::vector<uint32_t> depth_sort(const std::vector<Projected2D>& projected);

/// Front-to-back alpha compositing over a background color. alpha values
/// must already be clamped to [0, kAlphaClamp]. Terminates early when
/// transmittance drops below kTransmittanceMin. Output is not clamped.
Vec3 composite_pixel(std::span<const std::pair<Vec3, double>> contributions,
                     const Vec3& background = {0, 0, 0});

/// Everything the backward pass needs to replay compositing exactly.
struct RenderAux {
    struct Contribution {
        uint32_t source_index;
        double weight;    // G = exp(-1/2 d^T conic d), before opacity
        double alpha;     // min(kAlphaClamp, opacity * weight), >= kAlphaSkip
        double t_before;  // transmittance before this contribution
    };

    int width = 0, height = 0;
    size_t cloud_count = 0;
    int tile_size = 0, tiles_x = 0, tiles_y = 0;
    std::vector<std::vector<Contribution>> tile_contributions;
    std::vector<uint32_t> pixel_offset;  // into the owning tile's vector
    std::vector<uint32_t> pixel_count;
    std::vector<double> final_transmittance;

    std::span<const Contribution> contributions_for_pixel(int x, int y) const;
    int tile_index_of(int x, int y) const {
        return (y / tile_size) * tiles_x + (x / tile_size);
    }
};

struct RenderOptions {
    Vec3 background{0, 0, 0};
};

/// Renders the cloud. Deterministic: bit-identical across runs and thread
/// counts. Output channels clamped to [0,1]. aux, when non-null, receives
/// the compositing replay data for render_backward.
ImageBuffer render(const GaussianCloud& cloud, const Camera& camera,
                   const RenderOptions& options = {}, RenderAux* aux = nullptr);

/// Per-parameter-group gradients, indexed like the cloud.
struct CloudGradients {
    std::vector<Vec3> position;
    std::vector<std::array<double, 4>> rotation;  // w,x,y,z (raw storage)
    std::vector<Vec3> log_scales;
    std::vector<double> opacity_logit;
    std::vector<Vec3> color;

    void resize(size_t n);
    double max_abs() const;
};

/// Exact chain-rule gradients of the forward render as implemented,
/// replaying the stored contribution lists. dL_dimage holds per-pixel
/// gradients of a scalar loss with respect to the (clamped) output image.
CloudGradients render_backward(const GaussianCloud& cloud, const Camera& camera,
                               const RenderAux& aux, const ImageBuffer& dL_dimage,
                               const RenderOptions& options = {});

/// exp with ~1e-13 relative accuracy over the compositing range. Pure
/// arithmetic, so results are identical on any host. Used by the renderer
/// so forward, backward, and finite differences see one function.
double fast_exp(double x);

}  // namespace wgs
