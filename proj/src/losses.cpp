#include "weathergs/losses.hpp"

#include <array>
#include <cmath>

#include "weathergs/error.hpp"

namespace wgs {

namespace {

constexpr int kWin = 11;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

const std::array<double, kWin>& window_1d() {
    static const std::array<double, kWin> w = [] {
        std::array<double, kWin> k{};
        const double sigma = 1.5;
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i) {
            const double d = i - (kWin - 1) / 2.0;
            k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
            sum += k[i];
        }
        for (double& v : k) v /= sum;
        return k;
    }();
    return w;
}

using Plane = std::vector<double>;

// Separable valid convolution: (H, W) -> (H - 10, W - 10).
Plane conv_valid(const Plane& in, int w, int h) {
    const auto& k = window_1d();
    const int wm = w - kWin + 1, hm = h - kWin + 1;
    Plane tmp(static_cast<size_t>(wm) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < wm; ++x) {
            double s = 0.0;
            for (int i = 0; i < kWin; ++i) s += k[i] * in[static_cast<size_t>(y) * w + x + i];
            tmp[static_cast<size_t>(y) * wm + x] = s;
        }
    Plane out(static_cast<size_t>(wm) * hm);
    for (int y = 0; y < hm; ++y)
        for (int x = 0; x < wm; ++x) {
            double s = 0.0;
            for (int i = 0; i < kWin; ++i) s += k[i] * tmp[static_cast<size_t>(y + i) * wm + x];
            out[static_cast<size_t>(y) * wm + x] = s;
        }
    return out;
}

// Transpose of conv_valid: scatters a (H-10, W-10) map back to (H, W).
Plane conv_transpose(const Plane& in, int w, int h) {
    const auto& k = window_1d();
    const int wm = w - kWin + 1, hm = h - kWin + 1;
    Plane tmp(static_cast<size_t>(wm) * h, 0.0);
    for (int y = 0; y < hm; ++y)
        for (int x = 0; x < wm; ++x) {
            const double v = in[static_cast<size_t>(y) * wm + x];
            if (v == 0.0) continue;
            for (int i = 0; i < kWin; ++i) tmp[static_cast<size_t>(y + i) * wm + x] += k[i] * v;
        }
    Plane out(static_cast<size_t>(w) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < wm; ++x) {
            const double v = tmp[static_cast<size_t>(y) * wm + x];
            if (v == 0.0) continue;
            for (int i = 0; i < kWin; ++i) out[static_cast<size_t>(y) * w + x + i] += k[i] * v;
        }
    return out;
}

Plane extract_channel(const ImageBuffer& img, int ch) {
    Plane p(img.pixel_count());
    for (size_t i = 0; i < p.size(); ++i) p[i] = img.pixels[i][static_cast<int>(ch)];
    return p;
}

}  // namespace

double l1_masked(const ImageBuffer& rendered, const ImageBuffer& target,
                 const MaskImage& mask, ImageBuffer* grad, bool squared) {
    require(rendered.same_size(target), ErrorCode::DimensionMismatch,
            "l1_masked: image size mismatch");
    require(mask.width == rendered.width && mask.height == rendered.height,
            ErrorCode::DimensionMismatch, "l1_masked: mask size mismatch");

    size_t unmasked = 0;
    for (uint8_t v : mask.values) unmasked += v == 0;
    if (grad) *grad = ImageBuffer(rendered.width, rendered.height);
    if (unmasked == 0) return 0.0;  // fully masked: 0/0 -> 0 by convention

    const double scale = 1.0 / (3.0 * static_cast<double>(unmasked));
    double sum = 0.0;
    for (size_t i = 0; i < rendered.pixel_count(); ++i) {
        if (mask.values[i]) continue;
        const Vec3 d = rendered.pixels[i] - target.pixels[i];
        if (squared) {
            sum += d.x * d.x + d.y * d.y + d.z * d.z;
            if (grad) grad->pixels[i] = d * (2.0 * scale);
        } else {
            sum += std::abs(d.x) + std::abs(d.y) + std::abs(d.z);
            if (grad) {
                auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
                grad->pixels[i] = {sgn(d.x) * scale, sgn(d.y) * scale, sgn(d.z) * scale};
            }
        }
    }
    return sum * scale;
}

double ssim(const ImageBuffer& a, const ImageBuffer& b, ImageBuffer* grad_a) {
    require(a.same_size(b), ErrorCode::DimensionMismatch, "ssim: image size mismatch");
    require(a.width >= kWin && a.height >= kWin, ErrorCode::Validation,
            "ssim: images must be at least 11x11");

    const int w = a.width, h = a.height;
    const int wm = w - kWin + 1, hm = h - kWin + 1;
    const size_t n_map = static_cast<size_t>(wm) * hm;
    const double count = 3.0 * static_cast<double>(n_map);
    const double map_scale = 1.0 / count;

    if (grad_a) *grad_a = ImageBuffer(w, h);
    double total = 0.0;

    for (int ch = 0; ch < 3; ++ch) {
        const Plane pa = extract_channel(a, ch);
        const Plane pb = extract_channel(b, ch);
        Plane paa(pa.size()), pbb(pa.size()), pab(pa.size());
        for (size_t i = 0; i < pa.size(); ++i) {
            paa[i] = pa[i] * pa[i];
            pbb[i] = pb[i] * pb[i];
            pab[i] = pa[i] * pb[i];
        }
        const Plane mu_a = conv_valid(pa, w, h);
        const Plane mu_b = conv_valid(pb, w, h);
        const Plane s_aa = conv_valid(paa, w, h);
        const Plane s_bb = conv_valid(pbb, w, h);
        const Plane s_ab = conv_valid(pab, w, h);

        Plane d_mu(n_map), d_saa(n_map), d_sab(n_map);
        for (size_t i = 0; i < n_map; ++i) {
            const double u = mu_a[i], v = mu_b[i];
            const double va = s_aa[i] - u * u;
            const double vb = s_bb[i] - v * v;
            const double vab = s_ab[i] - u * v;
            const double a1 = 2.0 * u * v + kC1;
            const double a2 = 2.0 * vab + kC2;
            const double b1 = u * u + v * v + kC1;
            const double b2 = va + vb + kC2;
            const double denom = b1 * b2;
            const double s = (a1 * a2) / denom;
            total += s;
            if (grad_a) {
                d_mu[i] = 2.0 * v * (a2 - a1) / denom + 2.0 * u * s * (1.0 / b2 - 1.0 / b1);
                d_saa[i] = -s / b2;
                d_sab[i] = 2.0 * a1 / denom;
            }
        }
        if (grad_a) {
            const Plane gu = conv_transpose(d_mu, w, h);
            const Plane gaa = conv_transpose(d_saa, w, h);
            const Plane gab = conv_transpose(d_sab, w, h);
            for (size_t i = 0; i < pa.size(); ++i) {
                const double gv = map_scale * (gu[i] + 2.0 * pa[i] * gaa[i] + pb[i] * gab[i]);
                Vec3& gp = grad_a->pixels[i];
                if (ch == 0) gp.x = gv;
                else if (ch == 1) gp.y = gv;
                else gp.z = gv;
            }
        }
    }
    // Divide rather than multiply by the reciprocal so identical inputs give
    // exactly 1 (x / x == 1 in IEEE arithmetic).
    return total / count;
}

double dssim_masked(const ImageBuffer& rendered, const ImageBuffer& target,
                    const MaskImage& mask, ImageBuffer* grad) {
    require(mask.width == rendered.width && mask.height == rendered.height,
            ErrorCode::DimensionMismatch, "dssim_masked: mask size mismatch");
    ImageBuffer a = rendered, b = target;
    for (size_t i = 0; i < a.pixel_count(); ++i) {
        if (mask.values[i]) {
            a.pixels[i] = {0, 0, 0};
            b.pixels[i] = {0, 0, 0};
        }
    }
    const double s = ssim(a, b, grad);
    if (grad) {
        for (size_t i = 0; i < grad->pixel_count(); ++i) {
            if (mask.values[i]) grad->pixels[i] = {0, 0, 0};
            else grad->pixels[i] = grad->pixels[i] * -1.0;  // d(1 - ssim)
        }
    }
    return 1.0 - s;
}

LossOutput total_loss(const ImageBuffer& rendered, const ImageBuffer& target,
                      const MaskImage& mask, double lambda, bool l1_squared) {
    require(lambda >= 0.0 && lambda <= 1.0, ErrorCode::Validation,
            "total_loss: lambda must be in [0,1]");
    LossOutput out;
    ImageBuffer g_l1, g_dssim;
    out.l1 = l1_masked(rendered, target, mask, &g_l1, l1_squared);
    out.dssim = dssim_masked(rendered, target, mask, &g_dssim);
    out.total = (1.0 - lambda) * out.l1 + lambda * out.dssim;
    out.grad = ImageBuffer(rendered.width, rendered.height);
    for (size_t i = 0; i < out.grad.pixel_count(); ++i)
        out.grad.pixels[i] = g_l1.pixels[i] * (1.0 - lambda) + g_dssim.pixels[i] * lambda;
    return out;
}

}  // namespace wgs
