#include "burstsr/image.hpp"

#include <algorithm>
#include <cmath>

#include "burstsr/errors.hpp"

namespace burstsr {

namespace {

inline int clamp_i(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Reflect an out-of-range coordinate back inside without changing its parity
// (-1 -> 1, n -> n-2). Keeps Bayer sites on their own channel.
inline int reflect_same_parity(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

}  // namespace

PlanarImage demosaic_bilinear(const BayerFrame& frame) {
  const int w = frame.width, h = frame.height;
  if (w <= 0 || h <= 0 || (w & 1) || (h & 1))
    throw ConfigError("demosaic_bilinear: frame dimensions must be positive and even");

  PlanarImage out(w, h, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int own = frame.channel_at(x, y);
      out.at(x, y, own) = frame.at(x, y);
      for (int c = 0; c < 3; ++c) {
        if (c == own) continue;
        double sum = 0.0;
        int count = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ux = x + dx, uy = y + dy;
            // Channel is decided by the unclamped position so the stencil is
            // shape-invariant at the borders.
            const int pch = (uy & 1) == 0 ? ((ux & 1) == 0 ? 0 : 1)
                                          : ((ux & 1) == 0 ? 1 : 2);
            if (pch != c) continue;
            sum += frame.at(reflect_same_parity(ux, w), reflect_same_parity(uy, h));
            ++count;
          }
        }
        out.at(x, y, c) = sum / count;
      }
    }
  }
  return out;
}

PlanarImage to_grayscale(const PlanarImage& rgb) {
  if (rgb.channels != 3) throw ConfigError("to_grayscale: expected 3 channels");
  PlanarImage out(rgb.width, rgb.height, 1);
  const size_t n = rgb.pixel_count();
  const double* r = rgb.plane(0);
  const double* g = rgb.plane(1);
  const double* b = rgb.plane(2);
  for (size_t i = 0; i < n; ++i) out.data[i] = (r[i] + g[i] + b[i]) / 3.0;
  return out;
}

namespace {

// 5-tap Gaussian, sigma = 1, normalized over the taps.
const double kGauss5[5] = {0.054488684549642945, 0.24420134200323337,
                           0.4026199468942474, 0.24420134200323337,
                           0.054488684549642945};

PlanarImage gauss5_blur(const PlanarImage& img) {
  const int w = img.width, h = img.height;
  PlanarImage tmp(w, h, img.channels), out(w, h, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -2; k <= 2; ++k)
          acc += kGauss5[k + 2] * img.at(clamp_i(x + k, 0, w - 1), y, c);
        tmp.at(x, y, c) = acc;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int k = -2; k <= 2; ++k)
          acc += kGauss5[k + 2] * tmp.at(x, clamp_i(y + k, 0, h - 1), c);
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

PlanarImage decimate2(const PlanarImage& img) {
  const int w = (img.width + 1) / 2, h = (img.height + 1) / 2;
  PlanarImage out(w, h, img.channels);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(x, y, c) = img.at(2 * x, 2 * y, c);
  return out;
}

}  // namespace

Pyramid build_pyramid(const PlanarImage& img, int levels) {
  if (levels < 1) throw ConfigError("build_pyramid: need at least one level");
  const int min_dim = std::min(img.width, img.height);
  if (min_dim >> (levels - 1) < 8)
    throw ConfigError("build_pyramid: image too small for requested levels");

  Pyramid pyr;
  pyr.levels.push_back(img);
  for (int l = 1; l < levels; ++l)
    pyr.levels.push_back(decimate2(gauss5_blur(pyr.levels.back())));
  return pyr;
}

std::pair<PlanarImage, PlanarImage> spatial_gradient(const PlanarImage& img) {
  const int w = img.width, h = img.height;
  PlanarImage gx(w, h, img.channels), gy(w, h, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (w == 1)
          gx.at(x, y, c) = 0.0;
        else if (x == 0)
          gx.at(x, y, c) = img.at(1, y, c) - img.at(0, y, c);
        else if (x == w - 1)
          gx.at(x, y, c) = img.at(w - 1, y, c) - img.at(w - 2, y, c);
        else
          gx.at(x, y, c) = 0.5 * (img.at(x + 1, y, c) - img.at(x - 1, y, c));

        if (h == 1)
          gy.at(x, y, c) = 0.0;
        else if (y == 0)
          gy.at(x, y, c) = img.at(x, 1, c) - img.at(x, 0, c);
        else if (y == h - 1)
          gy.at(x, y, c) = img.at(x, h - 1, c) - img.at(x, h - 2, c);
        else
          gy.at(x, y, c) = 0.5 * (img.at(x, y + 1, c) - img.at(x, y - 1, c));
      }
    }
  }
  return {std::move(gx), std::move(gy)};
}

PlanarImage upsample_bilinear(const PlanarImage& img, int factor) {
  if (factor < 1) throw ConfigError("upsample_bilinear: factor must be >= 1");
  if (factor == 1) return img;
  const int w = img.width * factor, h = img.height * factor;
  PlanarImage out(w, h, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < h; ++y) {
      const double sy = (y + 0.5) / factor - 0.5;
      int y0 = static_cast<int>(std::floor(sy));
      double fy = sy - y0;
      if (y0 < 0) { y0 = 0; fy = 0.0; }
      if (y0 >= img.height - 1) { y0 = img.height - 1; fy = 0.0; }
      const int y1 = std::min(y0 + 1, img.height - 1);
      for (int x = 0; x < w; ++x) {
        const double sx = (x + 0.5) / factor - 0.5;
        int x0 = static_cast<int>(std::floor(sx));
        double fx = sx - x0;
        if (x0 < 0) { x0 = 0; fx = 0.0; }
        if (x0 >= img.width - 1) { x0 = img.width - 1; fx = 0.0; }
        const int x1 = std::min(x0 + 1, img.width - 1);
        out.at(x, y, c) = (1 - fy) * ((1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c)) +
                          fy * ((1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c));
      }
    }
  }
  return out;
}

bool all_finite(const PlanarImage& img) {
  for (double v : img.data)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace burstsr
