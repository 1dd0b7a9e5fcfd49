#include "weathergs/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "weathergs/error.hpp"
#include "weathergs/threading.hpp"

namespace wgs {

namespace {
constexpr int kTileSize = 16;
// Backward accumulation stripes. Fixed row height so the bucket layout (and
// therefore the reduction order) never depends on the thread count.
constexpr int kStripeRows = 32;
}  // namespace

double fast_exp(double x) {
    if (x < -700.0) return 0.0;
    if (x > 700.0) return std::numeric_limits<double>::infinity();
    constexpr double kLog2E = 1.4426950408889634074;
    constexpr double kLn2Hi = 6.93147180369123816490e-01;
    constexpr double kLn2Lo = 1.90821492927058770002e-10;
    const double kd = std::floor(x * kLog2E + 0.5);
    const int k = static_cast<int>(kd);
    const double r = (x - kd * kLn2Hi) - kd * kLn2Lo;
    // Taylor to r^11; |r| <= ln2/2 keeps the truncation below 1e-14 relative.
    double p = 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    return std::ldexp(p, k);
}

void jacobian_perspective(const Vec3& p_cam, double fx, double fy, double j[2][3]) {
    const double z_inv = 1.0 / p_cam.z;
    const double z_inv2 = z_inv * z_inv;
    j[0][0] = fx * z_inv;
    j[0][1] = 0.0;
    j[0][2] = -fx * p_cam.x * z_inv2;
    j[1][0] = 0.0;
    j[1][1] = fy * z_inv;
    j[1][2] = -fy * p_cam.y * z_inv2;
}

std::optional<Projected2D> project_gaussian(const Gaussian& g, const Camera& camera,
                                            uint32_t source_index) {
    const Vec3 p_cam = world_to_camera(camera, g.position);
    if (p_cam.z <= camera.near_clip) return std::nullopt;

    Projected2D out;
    out.depth = p_cam.z;
    out.source_index = source_index;
    out.mean2d = {camera.fx * p_cam.x / p_cam.z + camera.cx,
                  camera.fy * p_cam.y / p_cam.z + camera.cy};

    const Mat3 sigma = covariance_from_params(g.rotation, g.log_scales);
    const Mat3 v = camera.rotation_wc * sigma * camera.rotation_wc.transposed();

    double j[2][3];
    jacobian_perspective(p_cam, camera.fx, camera.fy, j);
    double jv[2][3];
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c)
            jv[r][c] = j[r][0] * v.m[0][c] + j[r][1] * v.m[1][c] + j[r][2] * v.m[2][c];
    const double m00 = jv[0][0] * j[0][0] + jv[0][1] * j[0][1] + jv[0][2] * j[0][2];
    const double m01 = jv[0][0] * j[1][0] + jv[0][1] * j[1][1] + jv[0][2] * j[1][2];
    const double m11 = jv[1][0] * j[1][0] + jv[1][1] * j[1][1] + jv[1][2] * j[1][2];

    out.cov2d.m[0][0] = m00 + kCovDilation;
    out.cov2d.m[0][1] = out.cov2d.m[1][0] = m01;
    out.cov2d.m[1][1] = m11 + kCovDilation;

    const double det = out.cov2d.det();
    out.conic_a = out.cov2d.m[1][1] / det;
    out.conic_b = -out.cov2d.m[0][1] / det;
    out.conic_c = out.cov2d.m[0][0] / det;
    out.radius_x = 3.0 * std::sqrt(out.cov2d.m[0][0]);
    out.radius_y = 3.0 * std::sqrt(out.cov2d.m[1][1]);

    if (out.mean2d.x + out.radius_x < 0.0 || out.mean2d.x - out.radius_x > camera.width ||
        out.mean2d.y + out.radius_y < 0.0 || out.mean2d.y - out.radius_y > camera.height)
        return std::nullopt;

    out.opacity = g.opacity();
    out.color = {clamp01(g.color.x), clamp01(g.color.y), clamp01(g.color.z)};
    return out;
}

double eval_gaussian_2d(const Projected2D& p, const Vec2& pixel) {
    const double dx = pixel.x - p.mean2d.x;
    const double dy = pixel.y - p.mean2d.y;
    if (std::abs(dx) > p.radius_x || std::abs(dy) > p.radius_y) return 0.0;
    const double q = p.conic_a * dx * dx + 2.0 * p.conic_b * dx * dy + p.conic_c * dy * dy;
    return p.opacity * fast_exp(-0.5 * q);
}

std::vector<uint32_t> depth_sort(const std::vector<Projected2D>& projected) {
    std::vector<uint32_t> order(projected.size());
    for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        if (projected[a].depth != projected[b].depth)
            return projected[a].depth < projected[b].depth;
        return projected[a].source_index < projected[b].source_index;
    });
    return order;
}

Vec3 composite_pixel(std::span<const std::pair<Vec3, double>> contributions,
                     const Vec3& background) {
    Vec3 c{0, 0, 0};
    double t = 1.0;
    for (const auto& [color, alpha] : contributions) {
        if (t < kTransmittanceMin) break;
        const double w = alpha * t;
        c.x += color.x * w;
        c.y += color.y * w;
        c.z += color.z * w;
        t *= 1.0 - alpha;
    }
    c.x += background.x * t;
    c.y += background.y * t;
    c.z += background.z * t;
    return c;
}

std::span<const RenderAux::Contribution> RenderAux::contributions_for_pixel(int x, int y) const {
    const size_t pix = static_cast<size_t>(y) * width + x;
    const auto& tile = tile_contributions[tile_index_of(x, y)];
    return {tile.data() + pixel_offset[pix], pixel_count[pix]};
}

namespace {

struct ProjectedCloud {
    std::vector<Projected2D> items;            // culled removed, cloud order
    std::vector<uint32_t> depth_order;         // indices into items
    std::vector<int32_t> slot_of_source;       // cloud index -> items slot or -1
};

ProjectedCloud project_cloud(const GaussianCloud& cloud, const Camera& camera) {
    const size_t n = cloud.count();
    std::vector<std::optional<Projected2D>> slots(n);
    parallel_for(n, 1024, [&](size_t b, size_t e) {
        for (size_t i = b; i < e; ++i)
            slots[i] = project_gaussian(cloud.gaussians[i], camera, static_cast<uint32_t>(i));
    });
    ProjectedCloud pc;
    pc.slot_of_source.assign(n, -1);
    pc.items.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        if (slots[i]) {
            pc.slot_of_source[i] = static_cast<int32_t>(pc.items.size());
            pc.items.push_back(*slots[i]);
        }
    }
    pc.depth_order = depth_sort(pc.items);
    return pc;
}

struct TileGrid {
    int tiles_x = 0, tiles_y = 0;
    std::vector<std::vector<uint32_t>> lists;  // item indices in depth order
};

TileGrid bin_tiles(const ProjectedCloud& pc, int width, int height) {
    TileGrid grid;
    grid.tiles_x = (width + kTileSize - 1) / kTileSize;
    grid.tiles_y = (height + kTileSize - 1) / kTileSize;
    grid.lists.resize(static_cast<size_t>(grid.tiles_x) * grid.tiles_y);
    for (const uint32_t idx : pc.depth_order) {
        const Projected2D& p = pc.items[idx];
        int tx0 = static_cast<int>(std::floor((p.mean2d.x - p.radius_x) / kTileSize));
        int tx1 = static_cast<int>(std::floor((p.mean2d.x + p.radius_x) / kTileSize));
        int ty0 = static_cast<int>(std::floor((p.mean2d.y - p.radius_y) / kTileSize));
        int ty1 = static_cast<int>(std::floor((p.mean2d.y + p.radius_y) / kTileSize));
        tx0 = std::max(tx0, 0);
        ty0 = std::max(ty0, 0);
        tx1 = std::min(tx1, grid.tiles_x - 1);
        ty1 = std::min(ty1, grid.tiles_y - 1);
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                grid.lists[static_cast<size_t>(ty) * grid.tiles_x + tx].push_back(idx);
    }
    return grid;
}

}  // namespace

ImageBuffer render(const GaussianCloud& cloud, const Camera& camera,
                   const RenderOptions& options, RenderAux* aux) {
    require(!cloud.empty(), ErrorCode::Validation, "render: empty cloud");
    require(camera.width >= 1 && camera.height >= 1, ErrorCode::Validation,
            "render: camera has empty image plane");

    const int width = camera.width, height = camera.height;
    const ProjectedCloud pc = project_cloud(cloud, camera);
    const TileGrid grid = bin_tiles(pc, width, height);

    ImageBuffer image(width, height);
    if (aux) {
        aux->width = width;
        aux->height = height;
        aux->cloud_count = cloud.count();
        aux->tile_size = kTileSize;
        aux->tiles_x = grid.tiles_x;
        aux->tiles_y = grid.tiles_y;
        aux->tile_contributions.assign(grid.lists.size(), {});
        aux->pixel_offset.assign(image.pixel_count(), 0);
        aux->pixel_count.assign(image.pixel_count(), 0);
        aux->final_transmittance.assign(image.pixel_count(), 1.0);
    }
    std::vector<double> final_t_local;
    if (!aux) final_t_local.assign(image.pixel_count(), 1.0);

    const Vec3 bg = options.background;
    const size_t tile_total = grid.lists.size();
    parallel_for(tile_total, 1, [&](size_t tb, size_t te) {
        for (size_t tile = tb; tile < te; ++tile) {
            const auto& list = grid.lists[tile];
            const int tx = static_cast<int>(tile % grid.tiles_x);
            const int ty = static_cast<int>(tile / grid.tiles_x);
            const int x0 = tx * kTileSize, x1 = std::min(width, x0 + kTileSize);
            const int y0 = ty * kTileSize, y1 = std::min(height, y0 + kTileSize);
            std::vector<RenderAux::Contribution>* contribs =
                aux ? &aux->tile_contributions[tile] : nullptr;

            for (int y = y0; y < y1; ++y) {
                const double py = y + 0.5;
                for (int x = x0; x < x1; ++x) {
                    const double px = x + 0.5;
                    const size_t pix = static_cast<size_t>(y) * width + x;
                    if (contribs) aux->pixel_offset[pix] = static_cast<uint32_t>(contribs->size());
                    Vec3 c{0, 0, 0};
                    double t = 1.0;
                    uint32_t count = 0;
                    for (const uint32_t idx : list) {
                        if (t < kTransmittanceMin) break;
                        const Projected2D& p = pc.items[idx];
                        const double dx = px - p.mean2d.x;
                        if (std::abs(dx) > p.radius_x) continue;
                        const double dy = py - p.mean2d.y;
                        if (std::abs(dy) > p.radius_y) continue;
                        const double q = p.conic_a * dx * dx + 2.0 * p.conic_b * dx * dy +
                                         p.conic_c * dy * dy;
                        const double g = fast_exp(-0.5 * q);
                        const double w = p.opacity * g;
                        const double alpha = w > kAlphaClamp ? kAlphaClamp : w;
                        if (alpha < kAlphaSkip) continue;
                        if (contribs) {
                            contribs->push_back({p.source_index, g, alpha, t});
                            ++count;
                        }
                        const double wt = alpha * t;
                        c.x += p.color.x * wt;
                        c.y += p.color.y * wt;
                        c.z += p.color.z * wt;
                        t *= 1.0 - alpha;
                    }
                    c.x += bg.x * t;
                    c.y += bg.y * t;
                    c.z += bg.z * t;
                    image.pixels[pix] = {clamp01(c.x), clamp01(c.y), clamp01(c.z)};
                    if (aux) {
                        aux->pixel_count[pix] = count;
                        aux->final_transmittance[pix] = t;
                    }
                }
            }
        }
    });
    return image;
}

void CloudGradients::resize(size_t n) {
    position.assign(n, {});
    rotation.assign(n, {0, 0, 0, 0});
    log_scales.assign(n, {});
    opacity_logit.assign(n, 0.0);
    color.assign(n, {});
}

double CloudGradients::max_abs() const {
    double m = 0.0;
    for (const auto& v : position) m = std::max({m, std::abs(v.x), std::abs(v.y), std::abs(v.z)});
    for (const auto& r : rotation)
        for (double v : r) m = std::max(m, std::abs(v));
    for (const auto& v : log_scales) m = std::max({m, std::abs(v.x), std::abs(v.y), std::abs(v.z)});
    for (double v : opacity_logit) m = std::max(m, std::abs(v));
    for (const auto& v : color) m = std::max({m, std::abs(v.x), std::abs(v.y), std::abs(v.z)});
    return m;
}

namespace {

// Derivative of the unit-quaternion rotation matrix with respect to unit
// component i (0=w,1=x,2=y,3=z).
Mat3 rotation_matrix_derivative(const Quat& u, int i) {
    const double w = u.w, x = u.x, y = u.y, z = u.z;
    Mat3 d;
    switch (i) {
        case 0:
            d.m[0][0] = 0;      d.m[0][1] = -2 * z; d.m[0][2] = 2 * y;
            d.m[1][0] = 2 * z;  d.m[1][1] = 0;      d.m[1][2] = -2 * x;
            d.m[2][0] = -2 * y; d.m[2][1] = 2 * x;  d.m[2][2] = 0;
            break;
        case 1:
            d.m[0][0] = 0;      d.m[0][1] = 2 * y;      d.m[0][2] = 2 * z;
            d.m[1][0] = 2 * y;  d.m[1][1] = -4 * x;     d.m[1][2] = -2 * w;
            d.m[2][0] = 2 * z;  d.m[2][1] = 2 * w;      d.m[2][2] = -4 * x;
            break;
        case 2:
            d.m[0][0] = -4 * y; d.m[0][1] = 2 * x;  d.m[0][2] = 2 * w;
            d.m[1][0] = 2 * x;  d.m[1][1] = 0;      d.m[1][2] = 2 * z;
            d.m[2][0] = -2 * w; d.m[2][1] = 2 * z;  d.m[2][2] = -4 * y;
            break;
        default:
            d.m[0][0] = -4 * z; d.m[0][1] = -2 * w; d.m[0][2] = 2 * x;
            d.m[1][0] = 2 * w;  d.m[1][1] = -4 * z; d.m[1][2] = 2 * y;
            d.m[2][0] = 2 * x;  d.m[2][1] = 2 * y;  d.m[2][2] = 0;
            break;
    }
    return d;
}

double frobenius_dot(const Mat3& a, const Mat3& b) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += a.m[i][j] * b.m[i][j];
    return s;
}

}  // namespace

CloudGradients render_backward(const GaussianCloud& cloud, const Camera& camera,
                               const RenderAux& aux, const ImageBuffer& dL_dimage,
                               const RenderOptions& options) {
    require(aux.cloud_count == cloud.count(), ErrorCode::Validation,
            "render_backward: aux does not match cloud");
    require(aux.width == camera.width && aux.height == camera.height,
            ErrorCode::DimensionMismatch, "render_backward: aux does not match camera");
    require(dL_dimage.width == aux.width && dL_dimage.height == aux.height,
            ErrorCode::DimensionMismatch, "render_backward: gradient image size mismatch");

    const int width = aux.width, height = aux.height;
    const ProjectedCloud pc = project_cloud(cloud, camera);
    const size_t n_slots = pc.items.size();
    const Vec3 bg = options.background;

    // Screen-space accumulators per projected slot:
    // [0:3) d color, [3] d opacity, [4:6) d mean2d, [6:9) d conic (a, b_sym, c)
    constexpr size_t kAcc = 9;
    const size_t n_stripes = (static_cast<size_t>(height) + kStripeRows - 1) / kStripeRows;
    std::vector<double> buckets(n_stripes * n_slots * kAcc, 0.0);

    parallel_for(n_stripes, 1, [&](size_t sb, size_t se) {
        for (size_t stripe = sb; stripe < se; ++stripe) {
            double* acc = buckets.data() + stripe * n_slots * kAcc;
            const int row0 = static_cast<int>(stripe) * kStripeRows;
            const int row1 = std::min(height, row0 + kStripeRows);
            for (int y = row0; y < row1; ++y) {
                for (int x = 0; x < width; ++x) {
                    const size_t pix = static_cast<size_t>(y) * width + x;
                    const auto contribs = aux.contributions_for_pixel(x, y);
                    if (contribs.empty()) continue;  // nothing to attribute

                    // Replay compositing to recover the pre-clamp color with
                    // the forward pass's exact arithmetic order.
                    Vec3 c_pre{0, 0, 0};
                    double t = 1.0;
                    for (const auto& cb : contribs) {
                        const Projected2D& p = pc.items[pc.slot_of_source[cb.source_index]];
                        const double wt = cb.alpha * t;
                        c_pre.x += p.color.x * wt;
                        c_pre.y += p.color.y * wt;
                        c_pre.z += p.color.z * wt;
                        t *= 1.0 - cb.alpha;
                    }
                    c_pre.x += bg.x * t;
                    c_pre.y += bg.y * t;
                    c_pre.z += bg.z * t;

                    const Vec3& gin = dL_dimage.pixels[pix];
                    const double gr = (c_pre.x >= 0.0 && c_pre.x <= 1.0) ? gin.x : 0.0;
                    const double gg = (c_pre.y >= 0.0 && c_pre.y <= 1.0) ? gin.y : 0.0;
                    const double gb2 = (c_pre.z >= 0.0 && c_pre.z <= 1.0) ? gin.z : 0.0;
                    if (gr == 0.0 && gg == 0.0 && gb2 == 0.0) continue;

                    const double px = x + 0.5, py = y + 0.5;
                    // Suffix sums S_ch = sum_{j>k} c_j a_j T_j + bg * T_final.
                    double sx = bg.x * t, sy = bg.y * t, sz = bg.z * t;
                    for (size_t k = contribs.size(); k-- > 0;) {
                        const auto& cb = contribs[k];
                        const int32_t slot = pc.slot_of_source[cb.source_index];
                        const Projected2D& p = pc.items[slot];
                        const double a = cb.alpha;
                        const double tk = cb.t_before;
                        const double wt = a * tk;
                        double* s = acc + static_cast<size_t>(slot) * kAcc;

                        s[0] += gr * wt;
                        s[1] += gg * wt;
                        s[2] += gb2 * wt;

                        const double one_minus = 1.0 - a;
                        const double da = gr * (p.color.x * tk - sx / one_minus) +
                                          gg * (p.color.y * tk - sy / one_minus) +
                                          gb2 * (p.color.z * tk - sz / one_minus);
                        sx += p.color.x * wt;
                        sy += p.color.y * wt;
                        sz += p.color.z * wt;

                        // alpha = min(kAlphaClamp, opacity * weight); the clamp
                        // is a fixed gate.
                        if (p.opacity * cb.weight > kAlphaClamp) continue;

                        s[3] += da * cb.weight;  // d opacity
                        const double dq = da * p.opacity * (-0.5 * cb.weight);
                        const double dx = px - p.mean2d.x;
                        const double dy = py - p.mean2d.y;
                        s[6] += dq * dx * dx;
                        s[7] += dq * 2.0 * dx * dy;
                        s[8] += dq * dy * dy;
                        const double qx = 2.0 * (p.conic_a * dx + p.conic_b * dy);
                        const double qy = 2.0 * (p.conic_b * dx + p.conic_c * dy);
                        s[4] -= dq * qx;
                        s[5] -= dq * qy;
                    }
                }
            }
        }
    });

    // Reduce stripes in fixed order, then chain through the projection.
    CloudGradients grads;
    grads.resize(cloud.count());

    parallel_for(n_slots, 256, [&](size_t b, size_t e) {
        for (size_t slot = b; slot < e; ++slot) {
            double a9[kAcc] = {0};
            for (size_t stripe = 0; stripe < n_stripes; ++stripe) {
                const double* s = buckets.data() + (stripe * n_slots + slot) * kAcc;
                for (size_t k = 0; k < kAcc; ++k) a9[k] += s[k];
            }
            const Projected2D& p = pc.items[slot];
            const uint32_t src = p.source_index;
            const Gaussian& g = cloud.gaussians[src];

            // Color: rendering clamps each channel to [0,1]; outside that the
            // gradient is gated off.
            grads.color[src] = {
                (g.color.x >= 0.0 && g.color.x <= 1.0) ? a9[0] : 0.0,
                (g.color.y >= 0.0 && g.color.y <= 1.0) ? a9[1] : 0.0,
                (g.color.z >= 0.0 && g.color.z <= 1.0) ? a9[2] : 0.0,
            };
            grads.opacity_logit[src] = a9[3] * p.opacity * (1.0 - p.opacity);

            // conic = inverse(cov2d): dL/dC = -Conic * G * Conic with the
            // symmetric off-diagonal split across both full-matrix slots.
            const double la = p.conic_a, lb = p.conic_b, lc = p.conic_c;
            const double g00 = a9[6], g01 = a9[7] * 0.5, g11 = a9[8];
            // K = G * Conic
            const double k00 = g00 * la + g01 * lb;
            const double k01 = g00 * lb + g01 * lc;
            const double k10 = g01 * la + g11 * lb;
            const double k11 = g01 * lb + g11 * lc;
            // dC = -Conic * K  (symmetric)
            const double dc00 = -(la * k00 + lb * k10);
            const double dc01 = -(la * k01 + lb * k11);
            const double dc11 = -(lb * k01 + lc * k11);

            const Vec3 p_cam = world_to_camera(camera, g.position);
            double j[2][3];
            jacobian_perspective(p_cam, camera.fx, camera.fy, j);
            const Mat3 sigma = covariance_from_params(g.rotation, g.log_scales);
            const Mat3 v = camera.rotation_wc * sigma * camera.rotation_wc.transposed();

            // dJ = 2 A (J V) where A = dC as a full symmetric 2x2.
            double jv[2][3];
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 3; ++c)
                    jv[r][c] = j[r][0] * v.m[0][c] + j[r][1] * v.m[1][c] + j[r][2] * v.m[2][c];
            double dj[2][3];
            for (int c = 0; c < 3; ++c) {
                dj[0][c] = 2.0 * (dc00 * jv[0][c] + dc01 * jv[1][c]);
                dj[1][c] = 2.0 * (dc01 * jv[0][c] + dc11 * jv[1][c]);
            }

            // dV = J^T A J
            Mat3 dv;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    dv.m[r][c] = j[0][r] * (dc00 * j[0][c] + dc01 * j[1][c]) +
                                 j[1][r] * (dc01 * j[0][c] + dc11 * j[1][c]);

            // dSigma = Rwc^T dV Rwc
            const Mat3 dsigma =
                camera.rotation_wc.transposed() * dv * camera.rotation_wc;

            // Sigma = R S^2 R^T with S^2 = diag(exp(2 s)).
            const Mat3 rot = g.rotation.rotation_matrix();
            const Vec3 s2{std::exp(2.0 * g.log_scales.x), std::exp(2.0 * g.log_scales.y),
                          std::exp(2.0 * g.log_scales.z)};
            // dR = 2 dSigma R S^2
            Mat3 dsr = dsigma * rot;
            Mat3 dr;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) dr.m[r][c] = 2.0 * dsr.m[r][c] * s2[c];
            // d log_scales: (R^T dSigma R)_kk * 2 exp(2 s_k)
            const Mat3 rtdr = rot.transposed() * dsigma * rot;
            grads.log_scales[src] = {rtdr.m[0][0] * 2.0 * s2.x, rtdr.m[1][1] * 2.0 * s2.y,
                                     rtdr.m[2][2] * 2.0 * s2.z};

            // Quaternion: chain through normalization.
            const double qnorm = g.rotation.norm();
            const Quat u = g.rotation.normalized();
            double du[4];
            for (int i = 0; i < 4; ++i)
                du[i] = frobenius_dot(dr, rotation_matrix_derivative(u, i));
            const double uv[4] = {u.w, u.x, u.y, u.z};
            double udot = 0.0;
            for (int i = 0; i < 4; ++i) udot += du[i] * uv[i];
            for (int i = 0; i < 4; ++i)
                grads.rotation[src][i] = (du[i] - udot * uv[i]) / qnorm;

            // Position: mean2d = pinhole(p_cam) plus the J(p_cam) dependence.
            const double dmx = a9[4], dmy = a9[5];
            Vec3 dpc{j[0][0] * dmx + j[1][0] * dmy, j[0][1] * dmx + j[1][1] * dmy,
                     j[0][2] * dmx + j[1][2] * dmy};
            const double z_inv = 1.0 / p_cam.z;
            const double z_inv2 = z_inv * z_inv;
            const double z_inv3 = z_inv2 * z_inv;
            dpc.x += dj[0][2] * (-camera.fx * z_inv2);
            dpc.y += dj[1][2] * (-camera.fy * z_inv2);
            dpc.z += dj[0][0] * (-camera.fx * z_inv2) + dj[1][1] * (-camera.fy * z_inv2) +
                     dj[0][2] * (2.0 * camera.fx * p_cam.x * z_inv3) +
                     dj[1][2] * (2.0 * camera.fy * p_cam.y * z_inv3);
            grads.position[src] = camera.rotation_wc.transposed() * dpc;
        }
    });

    return grads;
}

}  // namespace wgs
