#pragma once

#include "weathergs/scene.hpp"

namespace wgs {

/// Mean absolute per-channel error over pixels with M = 0. Returns 0 when
/// every pixel is masked. grad, when non-null, receives d(loss)/d(rendered).
/// squared switches to mean squared error (the alternate reading of the
/// squared-norm notation some papers pair with an L1 label).
double l1_masked(const ImageBuffer& rendered, const ImageBuffer& target,
                 const MaskImage& mask, ImageBuffer* grad = nullptr, bool squared = false);

/// Mean SSIM over RGB channels: 11x11 Gaussian window (sigma 1.5), valid
/// windows only, C1 = 0.01^2, C2 = 0.03^2 on a [0,1] dynamic range.
/// Images must be at least 11x11. grad_a, when non-null, receives
/// d(ssim)/d(a).
double ssim(const ImageBuffer& a, const ImageBuffer& b, ImageBuffer* grad_a = nullptr);

/// 1 - SSIM(rendered o (1-M), target o (1-M)): masked pixels are zeroed in
/// both images, so they agree and pull SSIM toward 1 instead of adding
/// error. grad, when non-null, receives d(loss)/d(rendered).
double dssim_masked(const ImageBuffer& rendered, const ImageBuffer& target,
                    const MaskImage& mask, ImageBuffer* grad = nullptr);

struct LossOutput {
    double total = 0;
    double l1 = 0;
    double dssim = 0;
    ImageBuffer grad;  // d(total)/d(rendered)
};

/// (1 - lambda) * L1 + lambda * D-SSIM with analytic pixel gradients.
LossOutput total_loss(const ImageBuffer& rendered, const ImageBuffer& target,
                      const MaskImage& mask, double lambda, bool l1_squared = false);

}  // namespace wgs
