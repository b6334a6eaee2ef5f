#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "burstsr/burst.hpp"
#include "burstsr/forward_model.hpp"
#include "burstsr/image.hpp"
#include "burstsr/motion.hpp"

namespace burstsr {

// Half-quadratic splitting configuration. The coupling weight follows the
// geometric schedule mu_t = mu0 * rho^(t-1), t = 1..iters.
struct HqsConfig {
  int scale = 2;
  int iters = 8;
  double mu0 = 0.01;
  double rho = 2.0;
  double lambda = 2e-3;     // TV weight; 0 turns the prior off
  int tv_inner_iters = 30;
  bool refine_motion = true;
  double eta = 0.0;         // gradient step; 0 = auto via power iteration
  double gn_damping = 1e-4;
};

struct SolverState {
  PlanarImage x;
  PlanarImage z;
  std::vector<AffineMotion> motions;
  std::vector<uint8_t> valid;   // frames excluded upstream carry 0
  double data_lipschitz = 0.0;  // cached lambda_max of the stacked operator
  PlanarImage power_vec;        // warm-start vector for re-estimates
};

struct ZStepStats {
  double data_before = 0.0, coupling_before = 0.0;
  double data_after = 0.0, coupling_after = 0.0;
  double grad_norm = 0.0;
  double energy_before() const { return data_before + coupling_before; }
  double energy_after() const { return data_after + coupling_after; }
};

struct IterationRecord {
  int stage = 0;
  double mu = 0.0, eta = 0.0;
  double data = 0.0, coupling = 0.0, tv = 0.0;
  double energy_before = 0.0, energy_after = 0.0;
  double geom = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> refine_ssd_before, refine_ssd_after;
};

struct SolverTrace {
  std::vector<IterationRecord> iterations;
};

struct HqsResult {
  PlanarImage x;
  std::vector<AffineMotion> motions;
  SolverTrace trace;
};

// Wall-clock phase breakdown, filled by hqs_run when requested.
struct HqsTiming {
  double init = 0.0, step_est = 0.0, z = 0.0, refine = 0.0, prox = 0.0;
  double total = 0.0;
};

// x0 = z0 = bilinear upsampling of the reference frame (demosaicked first in
// raw mode). Motions are copied from the initial alignment.
SolverState init_state(const Burst& burst, const std::vector<AffineMotion>& p_init,
                       const HqsConfig& cfg);

// One gradient step on the quadratic part
//   f(z) = 1/2 sum_k ||masked(U_k z - y_k)||^2 + mu/2 ||z - x||^2,
// z <- z - eta * grad f(z). Returns energies across the step; descent is
// guaranteed for eta <= 1/(lambda_max + mu).
ZStepStats z_step(SolverState& state, const Burst& burst, const HqsConfig& cfg,
                  double mu, double eta);

// 20 power-iteration steps on the stacked operator estimate
// L = lambda_max(U_p^T U_p) + mu; returns 1/L.
double estimate_step_size(const std::vector<AffineMotion>& motions,
                          const std::vector<uint8_t>& valid,
                          const DegradeConfig& cfg, int hr_w, int hr_h, double mu);

// Proximal operator of tau * isotropic TV via the dual fixed point
// (semi-implicit step 1/8, forward differences, Neumann boundaries), run for
// a fixed number of inner iterations. Channels are handled independently;
// tau = 0 returns the input unchanged.
PlanarImage prox_tv(const PlanarImage& v, double tau, int iters = 30);

// Discrete isotropic TV matching prox_tv's discretization.
double tv_value(const PlanarImage& img);

// Full alternating loop: z gradient step, optional per-frame Gauss-Newton
// motion refinement, TV proximal x update, mu schedule advance. Returns the
// prior variable x, the refined motions, and a per-iteration trace.
HqsResult hqs_run(const Burst& burst, const std::vector<AffineMotion>& p_init,
                  const HqsConfig& cfg,
                  const std::vector<uint8_t>* valid = nullptr,
                  const std::vector<AffineMotion>* gt_motions = nullptr,
                  HqsTiming* timing = nullptr);

// Progressive upscaling: stage i runs the full loop at the cumulative scale,
// initializing z and the motions from stage i-1 (normalized motion parameters
// carry across grids unchanged). Chain entries give per-stage factors whose
// product is the total factor.
HqsResult coarse_to_fine_run(const Burst& burst,
                             const std::vector<HqsConfig>& chain,
                             const std::vector<AffineMotion>& p_init,
                             const std::vector<uint8_t>* valid = nullptr,
                             const std::vector<AffineMotion>* gt_motions = nullptr);

// Single-frame reference baseline: demosaic then Catmull-Rom upsampling.
PlanarImage baseline_bicubic(const BayerFrame& frame, int s);
PlanarImage baseline_bicubic(const PlanarImage& rgb, int s);

}  // namespace burstsr
