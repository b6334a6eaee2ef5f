#pragma once

#include <cstdint>
#include <vector>

#include "burstsr/burst.hpp"
#include "burstsr/forward_model.hpp"
#include "burstsr/image.hpp"
#include "burstsr/motion.hpp"

namespace burstsr {

enum class MotionModel { Translation, Euclidean, Affine };

struct LkOptions {
  int pyramid_levels = 3;
  int max_iters_per_level = 50;
  double step_tolerance = 1e-7;   // on the parameter update norm
  double damping = 1e-4;          // Levenberg term, relative to mean diagonal
  MotionModel motion_model = MotionModel::Euclidean;
  // Pixels ignored at each frame edge (per pyramid level). Content enters and
  // leaves the field of view between captures, so residuals in the outermost
  // band compare pixels that have no counterpart and drag the fit off; a few
  // pixels of margin removes the bias at negligible cost in support.
  int border_margin = 4;
};

// Forward-additive Lucas-Kanade over a Gaussian pyramid. Returns the motion q
// minimizing sum |moving(A n(u) + t) - tmpl(u)|^2 over the valid footprint,
// i.e. the warp that pulls the moving image onto the template. Note this is
// the inverse of the motion that generated the moving image from the
// template. Both inputs must be single-channel and the same size. Throws
// NumericalError when the damped normal system is singular.
AffineMotion lk_align(const PlanarImage& tmpl, const PlanarImage& moving,
                      const AffineMotion& p0, const LkOptions& opts = {});

struct BurstAlignment {
  std::vector<AffineMotion> motions;   // forward-model direction, [0] = identity
  std::vector<uint8_t> ok;             // failed frames are flagged for exclusion
  std::vector<double> rms_residual;    // grayscale residual after alignment
};

// Aligns every frame against frame 0 on grayscale demosaics (raw mode) or
// grayscale frames (RGB mode). The LK result is inverted so the reported
// motions live in the forward-model direction (frame k = degrade(warp(x, p_k))).
BurstAlignment coarse_align_burst(const Burst& burst, const LkOptions& opts = {});

// Mean squared masked residual of the degradation prediction, used both for
// Gauss-Newton step acceptance and for diagnostics. +inf when nothing is valid.
double masked_ssd(const PlanarImage& z, const PlanarImage& y_obs,
                  const AffineMotion& motion, const DegradeConfig& cfg);

struct GnRefineResult {
  AffineMotion motion;
  bool stepped = false;    // true when the damped step was taken
  bool singular = false;   // zero/indefinite normal system, motion unchanged
  double ssd_before = 0.0;
  double ssd_after = 0.0;  // equals ssd_before when the step was rejected
};

// One damped Gauss-Newton step on the motion of a single frame against the
// current high-res estimate: solves (J^T J + damping diag(J^T J)) dp = -J^T r
// and keeps the update only when the masked SSD does not increase.
GnRefineResult gn_refine(const PlanarImage& z, const PlanarImage& y_obs,
                         const AffineMotion& motion, const DegradeConfig& cfg,
                         double damping = 1e-4);

// Mean distance, in low-res pixels, between the two motions' mappings of the
// lr_w x lr_h pixel-center grid.
double geometric_error(const AffineMotion& est, const AffineMotion& truth,
                       int lr_w, int lr_h);

// Mean geometric error over a burst, excluding the reference frame.
double mean_geometric_error(const std::vector<AffineMotion>& est,
                            const std::vector<AffineMotion>& truth,
                            int lr_w, int lr_h);

}  // namespace burstsr
