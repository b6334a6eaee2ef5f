#include "burstsr/metrics.hpp"

#include <cmath>
#include <limits>

#include "burstsr/errors.hpp"
#include "burstsr/registration.hpp"

namespace burstsr {

double psnr(const PlanarImage& a, const PlanarImage& b, double peak, int border) {
  if (!a.same_shape(b)) throw ConfigError("psnr: shapes differ");
  if (peak <= 0.0) throw ConfigError("psnr: peak must be positive");
  const int x0 = border, y0 = border;
  const int x1 = a.width - border, y1 = a.height - border;
  if (x1 <= x0 || y1 <= y0) throw ConfigError("psnr: crop border leaves no pixels");

  double acc = 0.0;
  for (int c = 0; c < a.channels; ++c)
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        acc += d * d;
      }
  const double mse = acc / (static_cast<double>(x1 - x0) * (y1 - y0) * a.channels);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const PlanarImage& a, const PlanarImage& b, double peak) {
  if (!a.same_shape(b)) throw ConfigError("ssim: shapes differ");
  if (peak <= 0.0) throw ConfigError("ssim: peak must be positive");
  const PlanarImage ga = a.channels == 3 ? to_grayscale(a) : a;
  const PlanarImage gb = b.channels == 3 ? to_grayscale(b) : b;
  if (ga.channels != 1) throw ConfigError("ssim: expected 1 or 3 channels");

  const int win = 8;
  const int w = ga.width, h = ga.height;
  if (w < win || h < win) throw ConfigError("ssim: image smaller than the window");

  // Summed-area tables; the per-window statistics come out in O(1).
  const size_t sw = w + 1;
  std::vector<double> sa(sw * (h + 1), 0.0), sb(sa.size(), 0.0);
  std::vector<double> saa(sa.size(), 0.0), sbb(sa.size(), 0.0), sab(sa.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t i = (y + 1) * sw + (x + 1);
      const double va = ga.at(x, y, 0), vb = gb.at(x, y, 0);
      sa[i] = va + sa[i - 1] + sa[i - sw] - sa[i - sw - 1];
      sb[i] = vb + sb[i - 1] + sb[i - sw] - sb[i - sw - 1];
      saa[i] = va * va + saa[i - 1] + saa[i - sw] - saa[i - sw - 1];
      sbb[i] = vb * vb + sbb[i - 1] + sbb[i - sw] - sbb[i - sw - 1];
      sab[i] = va * vb + sab[i - 1] + sab[i - sw] - sab[i - sw - 1];
    }
  auto box = [&](const std::vector<double>& s, int x, int y) {
    return s[(y + win) * sw + (x + win)] - s[y * sw + (x + win)] -
           s[(y + win) * sw + x] + s[y * sw + x];
  };

  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const double n = win * win;
  double acc = 0.0;
  size_t count = 0;
  for (int y = 0; y + win <= h; ++y)
    for (int x = 0; x + win <= w; ++x) {
      const double ma = box(sa, x, y) / n;
      const double mb = box(sb, x, y) / n;
      const double va = box(saa, x, y) / n - ma * ma;
      const double vb = box(sbb, x, y) / n - mb * mb;
      const double cov = box(sab, x, y) / n - ma * mb;
      const double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
      const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
      acc += num / den;
      ++count;
    }
  return acc / count;
}

EvalReport evaluate(const PlanarImage& xhat, const PlanarImage& hr, int scale,
                    const std::vector<AffineMotion>* est,
                    const std::vector<AffineMotion>* truth, int lr_w, int lr_h) {
  EvalReport rep;
  rep.psnr = psnr(xhat, hr, 1.0, scale + 2);
  rep.ssim = ssim(xhat, hr, 1.0);
  if (est && truth) {
    if (est->size() != truth->size())
      throw ConfigError("evaluate: motion list sizes differ");
    if (lr_w <= 0 || lr_h <= 0)
      throw ConfigError("evaluate: low-res dimensions required for geometric error");
    for (size_t k = 0; k < est->size(); ++k)
      rep.per_frame_geom_px.push_back(
          geometric_error((*est)[k], (*truth)[k], lr_w, lr_h));
    if (est->size() >= 2)
      rep.geom_error_px = mean_geometric_error(*est, *truth, lr_w, lr_h);
  }
  return rep;
}

}  // namespace burstsr
