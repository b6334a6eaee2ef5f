#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace burstsr {

// Planar multi-channel image. Linear-domain intensities, channel-major
// storage: data[c * w * h + y * w + x].
struct PlanarImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  PlanarImage() = default;
  PlanarImage(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c) {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }

  double* plane(int c) { return data.data() + static_cast<size_t>(c) * width * height; }
  const double* plane(int c) const {
    return data.data() + static_cast<size_t>(c) * width * height;
  }

  size_t pixel_count() const { return static_cast<size_t>(width) * height; }
  bool same_shape(const PlanarImage& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

enum class BayerPattern { RGGB };

// Per-frame heteroscedastic noise description: variance = shot_gain * signal
// + read_variance, in squared white-level units.
struct NoiseParams {
  double shot_gain = 0.0;
  double read_variance = 0.0;
};

// Single raw mosaic frame. Dimensions must be even so the 2x2 pattern tiles.
struct BayerFrame {
  int width = 0;
  int height = 0;
  BayerPattern pattern = BayerPattern::RGGB;
  std::vector<double> data;  // row-major single plane
  std::optional<NoiseParams> noise;

  BayerFrame() = default;
  BayerFrame(int w, int h, BayerPattern pat = BayerPattern::RGGB)
      : width(w), height(h), pattern(pat),
        data(static_cast<size_t>(w) * h, 0.0) {}

  double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

  // 0 = R, 1 = G, 2 = B.
  int channel_at(int x, int y) const {
    const int px = x & 1, py = y & 1;
    if (py == 0) return px == 0 ? 0 : 1;
    return px == 0 ? 1 : 2;
  }
};

// Coarse-to-fine stack; level 0 is the full resolution image.
struct Pyramid {
  std::vector<PlanarImage> levels;
};

// Copies the measured channel and fills the two missing channels at every
// site with the mean of the same-channel samples inside the 3x3 neighborhood.
// Border neighbors are clamped to the nearest in-range site of matching
// parity so each channel only ever reads its own samples.
PlanarImage demosaic_bilinear(const BayerFrame& frame);

// Channel mean. Throws unless the input has exactly 3 channels.
PlanarImage to_grayscale(const PlanarImage& rgb);

// Repeated blur (5-tap Gaussian, sigma 1, replicate borders) + 2x decimation.
// Requires min(w, h) / 2^(levels-1) >= 8.
Pyramid build_pyramid(const PlanarImage& img, int levels);

// Central differences inside, one-sided at the borders. Returns {d/dx, d/dy}
// with the same channel count as the input.
std::pair<PlanarImage, PlanarImage> spatial_gradient(const PlanarImage& img);

// Integer-factor bilinear upsampling with pixel-center alignment: output
// pixel j samples the input at (j + 0.5) / factor - 0.5, clamped.
PlanarImage upsample_bilinear(const PlanarImage& img, int factor);

bool all_finite(const PlanarImage& img);

}  // namespace burstsr
