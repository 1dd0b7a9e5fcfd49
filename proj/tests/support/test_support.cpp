#include "test_support.hpp"

#include <cmath>
#include <cstdio>

namespace wgs::testing {

GateSignature gate_signature(const GaussianCloud& cloud, const Camera& cam, const Vec3& bg) {
    RenderAux aux;
    RenderOptions opt;
    opt.background = bg;
    (void)render(cloud, cam, opt, &aux);

    GateSignature sig;
    sig.pixel_counts.reserve(aux.pixel_count.size());
    for (int y = 0; y < aux.height; ++y) {
        for (int x = 0; x < aux.width; ++x) {
            const auto contribs = aux.contributions_for_pixel(x, y);
            sig.pixel_counts.push_back(static_cast<uint32_t>(contribs.size()));
            Vec3 c_pre{0, 0, 0};
            double t = 1.0;
            for (const auto& cb : contribs) {
                sig.contrib_sources.push_back(cb.source_index);
                sig.clamp_flags.push_back(cb.alpha >= kAlphaClamp ? 1 : 0);
                const Gaussian& g = cloud.gaussians[cb.source_index];
                const Vec3 col{clamp01(g.color.x), clamp01(g.color.y), clamp01(g.color.z)};
                const double wt = cb.alpha * t;
                c_pre.x += col.x * wt;
                c_pre.y += col.y * wt;
                c_pre.z += col.z * wt;
                t *= 1.0 - cb.alpha;
            }
            c_pre.x += bg.x * t;
            c_pre.y += bg.y * t;
            c_pre.z += bg.z * t;
            sig.out_clamp_flags.push_back(c_pre.x < 0.0 || c_pre.x > 1.0 ? 1 : 0);
            sig.out_clamp_flags.push_back(c_pre.y < 0.0 || c_pre.y > 1.0 ? 1 : 0);
            sig.out_clamp_flags.push_back(c_pre.z < 0.0 || c_pre.z > 1.0 ? 1 : 0);
        }
    }
    return sig;
}

double scene_loss(const GaussianCloud& cloud, const Camera& cam, const ImageBuffer& target) {
    const ImageBuffer img = render(cloud, cam);
    double loss = 0.0;
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        const Vec3 d = img.pixels[i] - target.pixels[i];
        loss += d.x * d.x + d.y * d.y + d.z * d.z;
    }
    return loss;
}

CloudGradients scene_loss_gradients(const GaussianCloud& cloud, const Camera& cam,
                                    const ImageBuffer& target) {
    RenderAux aux;
    const ImageBuffer img = render(cloud, cam, {}, &aux);
    ImageBuffer dl(img.width, img.height);
    for (size_t i = 0; i < img.pixel_count(); ++i)
        dl.pixels[i] = (img.pixels[i] - target.pixels[i]) * 2.0;
    return render_backward(cloud, cam, aux, dl);
}

double get_param(const Gaussian& g, int k) {
    switch (k) {
        case 0: return g.position.x;
        case 1: return g.position.y;
        case 2: return g.position.z;
        case 3: return g.rotation.w;
        case 4: return g.rotation.x;
        case 5: return g.rotation.y;
        case 6: return g.rotation.z;
        case 7: return g.log_scales.x;
        case 8: return g.log_scales.y;
        case 9: return g.log_scales.z;
        case 10: return g.opacity_logit;
        case 11: return g.color.x;
        case 12: return g.color.y;
        default: return g.color.z;
    }
}

void set_param(Gaussian& g, int k, double value) {
    switch (k) {
        case 0: g.position.x = value; break;
        case 1: g.position.y = value; break;
        case 2: g.position.z = value; break;
        case 3: g.rotation.w = value; break;
        case 4: g.rotation.x = value; break;
        case 5: g.rotation.y = value; break;
        case 6: g.rotation.z = value; break;
        case 7: g.log_scales.x = value; break;
        case 8: g.log_scales.y = value; break;
        case 9: g.log_scales.z = value; break;
        case 10: g.opacity_logit = value; break;
        case 11: g.color.x = value; break;
        case 12: g.color.y = value; break;
        default: g.color.z = value; break;
    }
}

int param_group_index(int k) {
    if (k < 3) return 0;
    if (k < 7) return 1;
    if (k < 10) return 2;
    if (k < 11) return 3;
    return 4;
}

const char* param_group_name(int k) {
    static const char* names[5] = {"position", "rotation", "log_scales", "opacity", "color"};
    return names[param_group_index(k)];
}

namespace {

double analytic_param_grad(const CloudGradients& grads, size_t gi, int k) {
    switch (k) {
        case 0: return grads.position[gi].x;
        case 1: return grads.position[gi].y;
        case 2: return grads.position[gi].z;
        case 3: return grads.rotation[gi][0];
        case 4: return grads.rotation[gi][1];
        case 5: return grads.rotation[gi][2];
        case 6: return grads.rotation[gi][3];
        case 7: return grads.log_scales[gi].x;
        case 8: return grads.log_scales[gi].y;
        case 9: return grads.log_scales[gi].z;
        case 10: return grads.opacity_logit[gi];
        case 11: return grads.color[gi].x;
        case 12: return grads.color[gi].y;
        default: return grads.color[gi].z;
    }
}

}  // namespace

GradCheckStats run_gradient_check(size_t n_scenes, uint64_t seed_base, double h, double rel_tol,
                                  double abs_tol) {
    GradCheckStats stats;
    const Camera cam = gradcheck_camera();

    for (size_t s = 0; s < n_scenes; ++s) {
        const uint64_t seed = derive_seed(seed_base, s);
        GaussianCloud cloud = random_gradcheck_scene(seed);
        const ImageBuffer target = random_target(derive_seed(seed, 7), cam.width, cam.height);

        const GateSignature base_sig = gate_signature(cloud, cam);
        const CloudGradients analytic = scene_loss_gradients(cloud, cam, target);
        ++stats.scenes;

        for (size_t gi = 0; gi < cloud.count(); ++gi) {
            for (int k = 0; k < kParamsPerGaussian; ++k) {
                const double v0 = get_param(cloud.gaussians[gi], k);

                set_param(cloud.gaussians[gi], k, v0 + h);
                const GateSignature sig_plus = gate_signature(cloud, cam);
                const double loss_plus = scene_loss(cloud, cam, target);

                set_param(cloud.gaussians[gi], k, v0 - h);
                const GateSignature sig_minus = gate_signature(cloud, cam);
                const double loss_minus = scene_loss(cloud, cam, target);

                set_param(cloud.gaussians[gi], k, v0);

                if (!(sig_plus == base_sig) || !(sig_minus == base_sig)) {
                    ++stats.skipped_gate_crossings;
                    continue;
                }

                const double fd = (loss_plus - loss_minus) / (2.0 * h);
                const double an = analytic_param_grad(analytic, gi, k);
                const double mag = std::max(std::abs(fd), std::abs(an));
                const double abs_err = std::abs(fd - an);
                const double rel_err = mag > 0 ? abs_err / mag : 0.0;

                ++stats.compared;
                ++stats.compared_per_group[param_group_index(k)];

                const bool ok = mag < 1e-3 ? abs_err <= abs_tol : rel_err <= rel_tol;
                if (!ok) {
                    ++stats.failures;
                    if (rel_err > stats.max_rel_err) {
                        char buf[160];
                        std::snprintf(buf, sizeof(buf),
                                      "seed=%llu gaussian=%zu param=%s[%d] fd=%.9g an=%.9g",
                                      static_cast<unsigned long long>(seed), gi,
                                      param_group_name(k), k, fd, an);
                        stats.worst = buf;
                    }
                }
                if (rel_err > stats.max_rel_err && mag >= 1e-3) stats.max_rel_err = rel_err;
            }
        }
    }
    return stats;
}

}  // namespace wgs::testing
