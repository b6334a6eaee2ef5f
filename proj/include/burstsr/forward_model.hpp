#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "burstsr/image.hpp"
#include "burstsr/motion.hpp"

namespace burstsr {

// Boolean per-pixel validity. Pixels whose forward-model footprint leaves the
// source image are flagged false and drop out of residuals and Jacobians.
struct ValidityMask {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  ValidityMask() = default;
  ValidityMask(int w, int h, bool value = true)
      : width(w), height(h), data(static_cast<size_t>(w) * h, value ? 1 : 0) {}

  bool at(int x, int y) const { return data[static_cast<size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { data[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }

  size_t count() const;
  double fraction() const;
};

// Degradation pipeline settings: warp, s x s block-mean blur, s x decimation,
// and optionally a Bayer mosaic on top. Single-stage runs use s in {2, 3, 4};
// coarse-to-fine chains compose stages into larger cumulative factors.
struct DegradeConfig {
  int scale = 2;
  bool mosaic = true;
  BayerPattern pattern = BayerPattern::RGGB;
};

struct Observation {
  PlanarImage image;  // 1 channel in raw mode, 3 in RGB mode
  ValidityMask mask;
};

// Resamples img onto an out_w x out_h grid: out(u) = img(A n(u) + t) with
// bilinear interpolation, where n() maps the output pixel-center grid to
// normalized coordinates. Out-of-footprint samples produce 0 and a false
// mask entry. Throws NumericalError when det(A) <= 0.1.
std::pair<PlanarImage, ValidityMask> warp_affine(const PlanarImage& img,
                                                 const AffineMotion& motion,
                                                 int out_w, int out_h);

// Exact transpose of warp_affine: scatters each masked value back through its
// four bilinear weights. r and mask have the warp's output shape; the result
// has the warp's source shape src_w x src_h.
PlanarImage warp_adjoint(const PlanarImage& r, const ValidityMask& mask,
                         const AffineMotion& motion, int src_w, int src_h);

// s x s block means; dimensions must be divisible by s.
PlanarImage blur_downsample(const PlanarImage& img, int s);

// Transpose of blur_downsample: spreads each value over its block / s^2.
PlanarImage blur_downsample_adjoint(const PlanarImage& lr, int s);

// AND of each s x s block.
ValidityMask downsample_mask(const ValidityMask& mask, int s);

// Keeps the pattern-assigned channel at every site. Input must be 3-channel
// with even dimensions.
BayerFrame mosaic(const PlanarImage& rgb, BayerPattern pattern = BayerPattern::RGGB);

// Transpose of mosaic: scatters each sample into its own channel plane,
// leaving the other channels zero.
PlanarImage mosaic_adjoint(const BayerFrame& frame);

// Full degradation of a high-res image under one motion. The returned mask is
// low-res; in raw mode it applies to the single mosaic plane, in RGB mode to
// all three channels.
Observation forward_apply(const PlanarImage& x, const AffineMotion& motion,
                          const DegradeConfig& cfg);

// Transpose of the masked forward operator, mapping a low-res residual back
// to the hr_w x hr_h grid. Masked residual entries contribute nothing.
PlanarImage adjoint_apply(const PlanarImage& r, const AffineMotion& motion,
                          const DegradeConfig& cfg, const ValidityMask& lr_mask,
                          int hr_w, int hr_h);

// Derivative of forward_apply with respect to the six motion parameters, one
// low-res plane per parameter. Rows at masked pixels are zero.
struct MotionJacobian {
  std::array<PlanarImage, 6> planes;
  ValidityMask mask;
};

MotionJacobian motion_jacobian(const PlanarImage& z, const AffineMotion& motion,
                               const DegradeConfig& cfg);

}  // namespace burstsr
