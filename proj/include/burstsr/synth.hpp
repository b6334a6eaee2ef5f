#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "burstsr/burst.hpp"
#include "burstsr/image.hpp"
#include "burstsr/motion.hpp"
#include "burstsr/registration.hpp"

namespace burstsr {

struct NoiseModel {
  bool enabled = true;
  double shot_gain = 1e-3;      // variance per unit signal, white level 1
  double read_variance = 1e-4;  // (1e-2 white)^2
};

struct SynthConfig {
  int k = 8;
  int scale = 2;
  MotionModel motion_model = MotionModel::Euclidean;
  double max_translation_px = 2.0;   // per axis, low-res pixels
  double max_rotation_deg = 2.0;
  double max_affine_perturb = 0.0;   // element-wise bound on the linear part
  NoiseModel noise;
  uint64_t seed = 0;
  bool raw = true;                   // false produces RGB frames
  bool bilinear_downsample = false;  // model-mismatch mode for robustness runs
  double input_gamma = 1.0;          // exponent applied to file inputs at load
};

// Frame 1 is the identity; the rest are drawn uniformly inside the configured
// bounds from per-frame streams of the seed, so the list is reproducible and
// independent of evaluation order. Low-res dimensions convert the pixel
// bounds into normalized units.
std::vector<AffineMotion> sample_motions(const SynthConfig& cfg, int lr_w, int lr_h);

// Renders each frame through the degradation pipeline and adds heteroscedastic
// Gaussian noise (variance shot_gain * signal + read_variance, clipped to
// [0, 1]) when enabled. With noise disabled this is exactly forward_apply per
// frame. HR dimensions must be divisible by the scale (and the low-res grid
// even, in raw mode).
Burst degrade_to_burst(const PlanarImage& hr, const std::vector<AffineMotion>& motions,
                       const SynthConfig& cfg);

struct Fixture {
  Burst burst;
  PlanarImage hr;
  std::vector<AffineMotion> motions;
  SynthConfig cfg;
  bool has_hr = false;
  bool has_motions = false;
};

// Writes the on-disk layout: hr.ppm, frame_%02d.pgm (or .ppm in RGB mode),
// motions.json-lines, noise.txt, config.txt. The reference is cropped
// top-left to dimensions divisible by 2 * scale first. Returns the in-memory
// fixture (pre-quantization values).
Fixture make_fixture(const PlanarImage& hr_linear, const std::string& out_dir,
                     const SynthConfig& cfg);

// Same, loading a 16-bit PPM and applying cfg.input_gamma to linearize it.
Fixture make_fixture_from_file(const std::string& hr_path, const std::string& out_dir,
                               const SynthConfig& cfg);

Fixture load_fixture(const std::string& dir);

// Deterministic multi-octave test scene with soft shapes; values inside
// [0.05, 0.95] so synthetic noise has clipping headroom.
PlanarImage textured_test_image(int w, int h, uint64_t seed);

}  // namespace burstsr
