#include "burstsr/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "burstsr/coords.hpp"
#include "burstsr/errors.hpp"
#include "burstsr/interp.hpp"

namespace burstsr {

namespace {

// Cholesky solve of an n x n SPD system packed into 6 x 6 storage.
// Returns false when a pivot collapses.
bool solve_spd(double h[6][6], const double g[6], double out[6], int n) {
  double l[6][6] = {};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double acc = h[i][j];
      for (int k = 0; k < j; ++k) acc -= l[i][k] * l[j][k];
      if (i == j) {
        if (acc <= 1e-300) return false;
        l[i][i] = std::sqrt(acc);
      } else {
        l[i][j] = acc / l[j][j];
      }
    }
  }
  double y[6];
  for (int i = 0; i < n; ++i) {
    double acc = g[i];
    for (int k = 0; k < i; ++k) acc -= l[i][k] * y[k];
    y[i] = acc / l[i][i];
  }
  for (int i = n - 1; i >= 0; --i) {
    double acc = y[i];
    for (int k = i + 1; k < n; ++k) acc -= l[k][i] * out[k];
    out[i] = acc / l[i][i];
  }
  return true;
}

struct LkState {
  MotionModel model;
  // Euclidean keeps (theta, t1, t2) so rotations stay on the manifold.
  double theta = 0.0;
  std::array<double, 6> p{};  // affine uses the raw parameter vector

  explicit LkState(MotionModel m, const AffineMotion& p0) : model(m) {
    p = p0.params();
    if (m == MotionModel::Euclidean) theta = std::atan2(p0.a21, p0.a11);
  }

  AffineMotion motion() const {
    if (model == MotionModel::Euclidean)
      return make_euclidean(theta, p[4], p[5]);
    if (model == MotionModel::Translation) {
      AffineMotion r;
      r.t1 = p[4];
      r.t2 = p[5];
      return r;
    }
    return AffineMotion::from_params(p);
  }

  int dof() const {
    switch (model) {
      case MotionModel::Translation: return 2;
      case MotionModel::Euclidean: return 3;
      default: return 6;
    }
  }

  void apply(const double* dq) {
    switch (model) {
      case MotionModel::Translation:
        p[4] += dq[0];
        p[5] += dq[1];
        break;
      case MotionModel::Euclidean:
        theta += dq[0];
        p[4] += dq[1];
        p[5] += dq[2];
        break;
      default:
        for (int i = 0; i < 6; ++i) p[i] += dq[i];
    }
  }

  // Rows of d(p6)/d(q) for the reduced parameterization.
  void reduce(const double sd6[6], double* out) const {
    switch (model) {
      case MotionModel::Translation:
        out[0] = sd6[4];
        out[1] = sd6[5];
        break;
      case MotionModel::Euclidean: {
        const double c = std::cos(theta), s = std::sin(theta);
        out[0] = -s * sd6[0] - c * sd6[1] + c * sd6[2] - s * sd6[3];
        out[1] = sd6[4];
        out[2] = sd6[5];
        break;
      }
      default:
        for (int i = 0; i < 6; ++i) out[i] = sd6[i];
    }
  }
};

// One Gauss-Newton pass at a single pyramid level. Returns the last update
// norm so callers can check convergence.
void lk_single_level(const PlanarImage& tmpl, const PlanarImage& moving,
                     LkState& state, const LkOptions& opts) {
  const int w = tmpl.width, h = tmpl.height;
  const double side = norm_side(w, h);
  const double px_per_norm = 0.5 * side;
  // Shrink the margin on tiny pyramid levels so some interior always remains.
  const int mg = std::max(0, std::min(opts.border_margin, std::min(w, h) / 4));

  for (int iter = 0; iter < opts.max_iters_per_level; ++iter) {
    const AffineMotion m = state.motion();
    const int dof = state.dof();
    double hmat[6][6] = {};
    double g[6] = {};
    double ssr = 0.0;
    size_t n_valid = 0;

    for (int y = mg; y < h - mg; ++y) {
      const double ny = to_norm(y, h, side);
      for (int x = mg; x < w - mg; ++x) {
        const double nx = to_norm(x, w, side);
        const double qx = m.a11 * nx + m.a12 * ny + m.t1;
        const double qy = m.a21 * nx + m.a22 * ny + m.t2;
        const double px = to_pixel(qx, w, side);
        const double py = to_pixel(qy, h, side);
        // Skip samples that would read the moving frame's own edge band.
        if (px < mg || px > w - 1 - mg || py < mg || py > h - 1 - mg) continue;
        const BilinearTap t = make_tap(px, py, w, h);
        if (!t.valid) continue;
        ++n_valid;
        const double r = tap_value(moving, 0, t) - tmpl.at(x, y, 0);
        const double gx = tap_dx(moving, 0, t) * px_per_norm;
        const double gy = tap_dy(moving, 0, t) * px_per_norm;
        const double sd6[6] = {gx * nx, gx * ny, gy * nx, gy * ny, gx, gy};
        double sd[6];
        state.reduce(sd6, sd);
        ssr += r * r;
        for (int i = 0; i < dof; ++i) {
          g[i] += sd[i] * r;
          for (int j = 0; j <= i; ++j) hmat[i][j] += sd[i] * sd[j];
        }
      }
    }

    if (n_valid == 0) throw NumericalError("lk_align: empty overlap");
    if (ssr == 0.0) return;  // already aligned, e.g. identical images

    for (int i = 0; i < dof; ++i)
      for (int j = i + 1; j < dof; ++j) hmat[i][j] = hmat[j][i];

    double trace = 0.0;
    for (int i = 0; i < dof; ++i) trace += hmat[i][i];
    const double lm = opts.damping * trace / dof;
    for (int i = 0; i < dof; ++i) hmat[i][i] += lm;

    double dq[6] = {};
    if (!solve_spd(hmat, g, dq, dof))
      throw NumericalError("lk_align: singular normal system");
    for (int i = 0; i < dof; ++i) dq[i] = -dq[i];
    state.apply(dq);

    double step = 0.0;
    for (int i = 0; i < dof; ++i) step += dq[i] * dq[i];
    if (std::sqrt(step) < opts.step_tolerance) return;
  }
}

}  // namespace

AffineMotion lk_align(const PlanarImage& tmpl, const PlanarImage& moving,
                      const AffineMotion& p0, const LkOptions& opts) {
  if (tmpl.channels != 1 || moving.channels != 1)
    throw ConfigError("lk_align: inputs must be single-channel");
  if (tmpl.width != moving.width || tmpl.height != moving.height)
    throw ConfigError("lk_align: image sizes differ");

  Pyramid pt = build_pyramid(tmpl, opts.pyramid_levels);
  Pyramid pm = build_pyramid(moving, opts.pyramid_levels);

  // Normalized parameters describe the same transform at every level, so the
  // state passes between levels untouched.
  LkState state(opts.motion_model, p0);
  for (int l = opts.pyramid_levels - 1; l >= 0; --l)
    lk_single_level(pt.levels[l], pm.levels[l], state, opts);
  return state.motion();
}

BurstAlignment coarse_align_burst(const Burst& burst, const LkOptions& opts) {
  if (burst.size() == 0) throw ConfigError("coarse_align_burst: empty burst");

  auto gray = [&](size_t k) {
    if (burst.raw) return to_grayscale(demosaic_bilinear(burst.bayer(k)));
    return to_grayscale(burst.frames[k]);
  };

  const PlanarImage ref = gray(0);
  BurstAlignment out;
  out.motions.resize(burst.size(), AffineMotion::identity());
  out.ok.assign(burst.size(), 1);
  out.rms_residual.assign(burst.size(), 0.0);

  for (size_t k = 1; k < burst.size(); ++k) {
    const PlanarImage mov = gray(k);
    try {
      const AffineMotion q = lk_align(ref, mov, AffineMotion::identity(), opts);
      auto [warped, mask] = warp_affine(mov, q, mov.width, mov.height);
      double ssr = 0.0;
      size_t n = 0;
      for (int y = 0; y < warped.height; ++y)
        for (int x = 0; x < warped.width; ++x)
          if (mask.at(x, y)) {
            const double r = warped.at(x, y, 0) - ref.at(x, y, 0);
            ssr += r * r;
            ++n;
          }
      if (n < ref.pixel_count() / 4)
        throw NumericalError("coarse_align_burst: overlap too small");
      // LK recovers the pull-back of frame k onto the reference; the forward
      // model wants the generating direction, which is its inverse.
      out.motions[k] = inverse(q);
      out.rms_residual[k] = std::sqrt(ssr / n);
    } catch (const Error&) {
      out.ok[k] = 0;
      out.motions[k] = AffineMotion::identity();
      out.rms_residual[k] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

double masked_ssd(const PlanarImage& z, const PlanarImage& y_obs,
                  const AffineMotion& motion, const DegradeConfig& cfg) {
  Observation pred = forward_apply(z, motion, cfg);
  if (!pred.image.same_shape(y_obs))
    throw ConfigError("masked_ssd: observation shape mismatch");
  double acc = 0.0;
  size_t n = 0;
  for (int c = 0; c < pred.image.channels; ++c)
    for (int y = 0; y < pred.image.height; ++y)
      for (int x = 0; x < pred.image.width; ++x)
        if (pred.mask.at(x, y)) {
          const double r = pred.image.at(x, y, c) - y_obs.at(x, y, c);
          acc += r * r;
          ++n;
        }
  if (n == 0) return std::numeric_limits<double>::infinity();
  return acc / n;
}

GnRefineResult gn_refine(const PlanarImage& z, const PlanarImage& y_obs,
                         const AffineMotion& motion, const DegradeConfig& cfg,
                         double damping) {
  GnRefineResult res;
  res.motion = motion;
  res.ssd_before = masked_ssd(z, y_obs, motion, cfg);
  res.ssd_after = res.ssd_before;

  Observation pred = forward_apply(z, motion, cfg);
  MotionJacobian jac = motion_jacobian(z, motion, cfg);

  double hmat[6][6] = {};
  double g[6] = {};
  for (int c = 0; c < pred.image.channels; ++c)
    for (int y = 0; y < pred.image.height; ++y)
      for (int x = 0; x < pred.image.width; ++x) {
        if (!pred.mask.at(x, y)) continue;
        const double r = pred.image.at(x, y, c) - y_obs.at(x, y, c);
        double ji[6];
        for (int i = 0; i < 6; ++i) ji[i] = jac.planes[i].at(x, y, c);
        for (int i = 0; i < 6; ++i) {
          g[i] += ji[i] * r;
          for (int j = 0; j <= i; ++j) hmat[i][j] += ji[i] * ji[j];
        }
      }
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) hmat[i][j] = hmat[j][i];

  double gnorm = 0.0;
  for (int i = 0; i < 6; ++i) gnorm += g[i] * g[i];
  double trace = 0.0;
  for (int i = 0; i < 6; ++i) trace += hmat[i][i];
  if (trace <= 0.0) {
    // Untextured footprint: the Jacobian vanished and nothing can be solved.
    res.singular = true;
    return res;
  }
  if (gnorm == 0.0) return res;  // stationary, nothing to do

  for (int i = 0; i < 6; ++i) hmat[i][i] += damping * hmat[i][i];

  double dp[6] = {};
  if (!solve_spd(hmat, g, dp, 6)) {
    res.singular = true;
    return res;
  }

  auto p = motion.params();
  for (int i = 0; i < 6; ++i) p[i] -= dp[i];
  const AffineMotion cand = AffineMotion::from_params(p);
  if (!(cand.det() > 0.1)) return res;  // reject degenerate updates

  const double ssd_cand = masked_ssd(z, y_obs, cand, cfg);
  if (ssd_cand <= res.ssd_before) {
    res.motion = cand;
    res.stepped = true;
    res.ssd_after = ssd_cand;
  }
  return res;
}

double geometric_error(const AffineMotion& est, const AffineMotion& truth,
                       int lr_w, int lr_h) {
  const double side = norm_side(lr_w, lr_h);
  const double px_per_norm = 0.5 * side;
  double acc = 0.0;
  for (int y = 0; y < lr_h; ++y) {
    const double ny = to_norm(y, lr_h, side);
    for (int x = 0; x < lr_w; ++x) {
      const double nx = to_norm(x, lr_w, side);
      const double dx = (est.a11 - truth.a11) * nx + (est.a12 - truth.a12) * ny +
                        (est.t1 - truth.t1);
      const double dy = (est.a21 - truth.a21) * nx + (est.a22 - truth.a22) * ny +
                        (est.t2 - truth.t2);
      acc += std::hypot(dx, dy);
    }
  }
  return acc / (static_cast<double>(lr_w) * lr_h) * px_per_norm;
}

double mean_geometric_error(const std::vector<AffineMotion>& est,
                            const std::vector<AffineMotion>& truth,
                            int lr_w, int lr_h) {
  if (est.size() != truth.size() || est.size() < 2)
    throw ConfigError("mean_geometric_error: need matching lists with >= 2 frames");
  double acc = 0.0;
  for (size_t k = 1; k < est.size(); ++k)
    acc += geometric_error(est[k], truth[k], lr_w, lr_h);
  return acc / (est.size() - 1);
}

}  // namespace burstsr
