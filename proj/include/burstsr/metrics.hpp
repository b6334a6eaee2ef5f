#pragma once

#include <optional>
#include <vector>

#include "burstsr/image.hpp"
#include "burstsr/motion.hpp"

namespace burstsr {

// 10 log10(peak^2 / MSE) over an interior crop that drops `border` pixels on
// every side. Identical images give +infinity.
double psnr(const PlanarImage& a, const PlanarImage& b, double peak,
            int border = 0);

// Mean SSIM over all fully-interior 8x8 uniform windows, on the grayscale
// image (3-channel inputs are averaged first). C1 = (0.01 peak)^2,
// C2 = (0.03 peak)^2.
double ssim(const PlanarImage& a, const PlanarImage& b, double peak);

struct EvalReport {
  double psnr = 0.0;
  double ssim = 0.0;
  std::optional<double> geom_error_px;       // mean, reference frame excluded
  std::vector<double> per_frame_geom_px;
};

// Full-reference evaluation at the given upsampling factor: PSNR uses a crop
// border of scale + 2 to keep boundary effects out of comparisons. Geometric
// error is reported when both motion lists are supplied.
EvalReport evaluate(const PlanarImage& xhat, const PlanarImage& hr, int scale,
                    const std::vector<AffineMotion>* est = nullptr,
                    const std::vector<AffineMotion>* truth = nullptr,
                    int lr_w = 0, int lr_h = 0);

}  // namespace burstsr
