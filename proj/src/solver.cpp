#include "burstsr/solver.hpp"

#include <chrono>
#include <cmath>

#include "burstsr/errors.hpp"
#include "burstsr/parallel.hpp"
#include "burstsr/registration.hpp"
#include "burstsr/rng.hpp"

namespace burstsr {

namespace {

double dot(const PlanarImage& a, const PlanarImage& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
  return acc;
}

double sq_norm(const PlanarImage& a) { return dot(a, a); }

// Applies sum_k U_k^T U_k to v (masked operators). Shared by the power
// iteration and nothing else; the z step needs residuals too.
PlanarImage apply_normal_op(const PlanarImage& v,
                            const std::vector<AffineMotion>& motions,
                            const std::vector<uint8_t>& valid,
                            const DegradeConfig& cfg) {
  const size_t k = motions.size();
  std::vector<PlanarImage> parts(k);
  parallel_for(k, [&](size_t i) {
    if (!valid.empty() && !valid[i]) return;
    Observation obs = forward_apply(v, motions[i], cfg);
    parts[i] = adjoint_apply(obs.image, motions[i], cfg, obs.mask, v.width, v.height);
  });
  PlanarImage acc(v.width, v.height, v.channels);
  for (size_t i = 0; i < k; ++i) {
    if (parts[i].data.empty()) continue;
    for (size_t j = 0; j < acc.data.size(); ++j) acc.data[j] += parts[i].data[j];
  }
  return acc;
}

// Power iteration for lambda_max of the stacked normal operator. v_inout may
// carry a previous iterate to warm-start cheap re-estimates.
double power_lipschitz(const std::vector<AffineMotion>& motions,
                       const std::vector<uint8_t>& valid, const DegradeConfig& cfg,
                       int hr_w, int hr_h, int iters, PlanarImage* v_inout) {
  PlanarImage v;
  if (v_inout && v_inout->width == hr_w && v_inout->height == hr_h &&
      v_inout->channels == 3) {
    v = *v_inout;
  } else {
    v = PlanarImage(hr_w, hr_h, 3);
    SplitMix64 rng(0x5eed5eedULL);
    for (double& p : v.data) p = rng.uniform() - 0.5;
  }
  double nrm = std::sqrt(sq_norm(v));
  if (nrm == 0.0) return 0.0;
  for (double& p : v.data) p /= nrm;

  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    PlanarImage w = apply_normal_op(v, motions, valid, cfg);
    lambda = std::sqrt(sq_norm(w));
    if (lambda == 0.0) break;
    for (double& p : w.data) p /= lambda;
    v = std::move(w);
  }
  if (v_inout) *v_inout = v;
  return lambda;
}

struct FramePass {
  double data = 0.0;   // 1/2 ||masked residual||^2
  PlanarImage grad;    // U_k^T masked residual
};

// Residual energies, optionally with the adjoint-propagated gradients.
std::vector<FramePass> frame_passes(const PlanarImage& z, const Burst& burst,
                                    const std::vector<AffineMotion>& motions,
                                    const std::vector<uint8_t>& valid,
                                    const DegradeConfig& cfg, bool want_grad) {
  std::vector<FramePass> out(burst.size());
  parallel_for(burst.size(), [&](size_t k) {
    if (!valid.empty() && !valid[k]) return;
    Observation pred = forward_apply(z, motions[k], cfg);
    const PlanarImage& y = burst.frames[k];
    PlanarImage r = pred.image;
    double acc = 0.0;
    for (int c = 0; c < r.channels; ++c)
      for (int yy = 0; yy < r.height; ++yy)
        for (int xx = 0; xx < r.width; ++xx) {
          double& rv = r.at(xx, yy, c);
          if (!pred.mask.at(xx, yy)) {
            rv = 0.0;
            continue;
          }
          rv -= y.at(xx, yy, c);
          acc += rv * rv;
        }
    out[k].data = 0.5 * acc;
    if (want_grad)
      out[k].grad = adjoint_apply(r, motions[k], cfg, pred.mask, z.width, z.height);
  });
  return out;
}

double total_data_term(const std::vector<FramePass>& passes) {
  double acc = 0.0;
  for (const auto& p : passes) acc += p.data;
  return acc;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

}  // namespace

SolverState init_state(const Burst& burst, const std::vector<AffineMotion>& p_init,
                       const HqsConfig& cfg) {
  if (burst.size() == 0) throw ConfigError("init_state: empty burst");
  if (p_init.size() != burst.size())
    throw ConfigError("init_state: one motion per frame required");

  SolverState st;
  st.motions = p_init;
  st.valid.assign(burst.size(), 1);

  PlanarImage ref_rgb =
      burst.raw ? demosaic_bilinear(burst.bayer(0)) : burst.frames[0];
  st.z = upsample_bilinear(ref_rgb, cfg.scale);
  st.x = st.z;
  return st;
}

ZStepStats z_step(SolverState& state, const Burst& burst, const HqsConfig& cfg,
                  double mu, double eta) {
  const DegradeConfig dcfg = burst.degrade_config(cfg.scale);
  ZStepStats stats;

  auto passes = frame_passes(state.z, burst, state.motions, state.valid, dcfg, true);
  stats.data_before = total_data_term(passes);

  PlanarImage grad(state.z.width, state.z.height, state.z.channels);
  for (const auto& p : passes) {
    if (p.grad.data.empty()) continue;
    for (size_t i = 0; i < grad.data.size(); ++i) grad.data[i] += p.grad.data[i];
  }

  double coupling = 0.0;
  for (size_t i = 0; i < grad.data.size(); ++i) {
    const double d = state.z.data[i] - state.x.data[i];
    coupling += d * d;
    grad.data[i] += mu * d;
  }
  stats.coupling_before = 0.5 * mu * coupling;
  stats.grad_norm = std::sqrt(sq_norm(grad));

  for (size_t i = 0; i < state.z.data.size(); ++i)
    state.z.data[i] -= eta * grad.data[i];
  if (!all_finite(state.z)) throw NumericalError("z_step: non-finite iterate");

  auto after = frame_passes(state.z, burst, state.motions, state.valid, dcfg, false);
  stats.data_after = total_data_term(after);
  double coupling_after = 0.0;
  for (size_t i = 0; i < state.z.data.size(); ++i) {
    const double d = state.z.data[i] - state.x.data[i];
    coupling_after += d * d;
  }
  stats.coupling_after = 0.5 * mu * coupling_after;
  return stats;
}

double estimate_step_size(const std::vector<AffineMotion>& motions,
                          const std::vector<uint8_t>& valid,
                          const DegradeConfig& cfg, int hr_w, int hr_h, double mu) {
  const double lambda = power_lipschitz(motions, valid, cfg, hr_w, hr_h, 20, nullptr);
  const double total = lambda + mu;
  if (total <= 0.0) return 1.0;
  return 1.0 / total;
}

PlanarImage prox_tv(const PlanarImage& v, double tau, int iters) {
  if (tau < 0.0) throw ConfigError("prox_tv: negative weight");
  if (tau == 0.0 || iters <= 0) return v;

  const int w = v.width, h = v.height;
  PlanarImage out(w, h, v.channels);
  std::vector<double> p1(static_cast<size_t>(w) * h), p2(p1.size());
  std::vector<double> u(p1.size());
  const double sigma = 0.125;

  for (int c = 0; c < v.channels; ++c) {
    std::fill(p1.begin(), p1.end(), 0.0);
    std::fill(p2.begin(), p2.end(), 0.0);
    const double* vv = v.plane(c);

    for (int it = 0; it < iters; ++it) {
      // u = div p - v / tau
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const size_t i = static_cast<size_t>(y) * w + x;
          double d = 0.0;
          if (x < w - 1) d += p1[i];
          if (x > 0) d -= p1[i - 1];
          if (y < h - 1) d += p2[i];
          if (y > 0) d -= p2[i - w];
          u[i] = d - vv[i] / tau;
        }
      // p = (p + sigma grad u) / (1 + sigma |grad u|)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const size_t i = static_cast<size_t>(y) * w + x;
          const double gx = x < w - 1 ? u[i + 1] - u[i] : 0.0;
          const double gy = y < h - 1 ? u[i + w] - u[i] : 0.0;
          const double mag = std::sqrt(gx * gx + gy * gy);
          const double denom = 1.0 + sigma * mag;
          p1[i] = (p1[i] + sigma * gx) / denom;
          p2[i] = (p2[i] + sigma * gy) / denom;
        }
    }

    double* oo = out.plane(c);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const size_t i = static_cast<size_t>(y) * w + x;
        double d = 0.0;
        if (x < w - 1) d += p1[i];
        if (x > 0) d -= p1[i - 1];
        if (y < h - 1) d += p2[i];
        if (y > 0) d -= p2[i - w];
        oo[i] = vv[i] - tau * d;
      }
  }
  return out;
}

double tv_value(const PlanarImage& img) {
  double acc = 0.0;
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const double gx = x < img.width - 1 ? img.at(x + 1, y, c) - img.at(x, y, c) : 0.0;
        const double gy = y < img.height - 1 ? img.at(x, y + 1, c) - img.at(x, y, c) : 0.0;
        acc += std::sqrt(gx * gx + gy * gy);
      }
  return acc;
}

namespace {

// The alternating loop shared by hqs_run and the coarse-to-fine driver.
void run_iterations(SolverState& state, const Burst& burst, const HqsConfig& cfg,
                    int stage, const std::vector<AffineMotion>* gt_motions,
                    SolverTrace& trace, HqsTiming* timing) {
  const DegradeConfig dcfg = burst.degrade_config(cfg.scale);
  const int lr_w = burst.frame_width(), lr_h = burst.frame_height();

  double t0 = now_seconds();
  if (cfg.eta <= 0.0) {
    state.data_lipschitz = power_lipschitz(state.motions, state.valid, dcfg,
                                           state.z.width, state.z.height, 20,
                                           &state.power_vec);
  }
  if (timing) timing->step_est += now_seconds() - t0;

  for (int t = 1; t <= cfg.iters; ++t) {
    IterationRecord rec;
    rec.stage = stage;
    rec.mu = cfg.mu0 * std::pow(cfg.rho, t - 1);
    rec.eta = cfg.eta > 0.0 ? cfg.eta : 1.0 / (state.data_lipschitz + rec.mu);

    t0 = now_seconds();
    const ZStepStats zs = z_step(state, burst, cfg, rec.mu, rec.eta);
    if (timing) timing->z += now_seconds() - t0;
    rec.data = zs.data_after;
    rec.coupling = zs.coupling_after;
    rec.energy_before = zs.energy_before();
    rec.energy_after = zs.energy_after();

    if (cfg.refine_motion && burst.size() > 1) {
      t0 = now_seconds();
      std::vector<GnRefineResult> results(burst.size());
      parallel_for(burst.size() - 1, [&](size_t idx) {
        const size_t k = idx + 1;
        if (!state.valid[k]) return;
        results[k] = gn_refine(state.z, burst.frames[k], state.motions[k], dcfg,
                               cfg.gn_damping);
      });
      bool changed = false;
      for (size_t k = 1; k < burst.size(); ++k) {
        if (!state.valid[k]) continue;
        state.motions[k] = results[k].motion;
        changed = changed || results[k].stepped;
        rec.refine_ssd_before.push_back(results[k].ssd_before);
        rec.refine_ssd_after.push_back(results[k].ssd_after);
      }
      if (timing) timing->refine += now_seconds() - t0;

      if (changed && cfg.eta <= 0.0) {
        t0 = now_seconds();
        state.data_lipschitz = power_lipschitz(state.motions, state.valid, dcfg,
                                               state.z.width, state.z.height, 2,
                                               &state.power_vec);
        if (timing) timing->step_est += now_seconds() - t0;
      }
    }

    t0 = now_seconds();
    const double tau = cfg.lambda > 0.0 ? cfg.lambda / rec.mu : 0.0;
    state.x = prox_tv(state.z, tau, cfg.tv_inner_iters);
    if (timing) timing->prox += now_seconds() - t0;
    rec.tv = tv_value(state.x);

    if (gt_motions && gt_motions->size() == state.motions.size() &&
        state.motions.size() >= 2)
      rec.geom = mean_geometric_error(state.motions, *gt_motions, lr_w, lr_h);

    trace.iterations.push_back(std::move(rec));
  }
}

}  // namespace

HqsResult hqs_run(const Burst& burst, const std::vector<AffineMotion>& p_init,
                  const HqsConfig& cfg, const std::vector<uint8_t>* valid,
                  const std::vector<AffineMotion>* gt_motions, HqsTiming* timing) {
  const double start = now_seconds();
  double t0 = now_seconds();
  SolverState state = init_state(burst, p_init, cfg);
  if (valid) {
    if (valid->size() != burst.size())
      throw ConfigError("hqs_run: one validity flag per frame required");
    state.valid = *valid;
  }
  if (timing) timing->init += now_seconds() - t0;

  HqsResult res;
  run_iterations(state, burst, cfg, 0, gt_motions, res.trace, timing);
  res.x = std::move(state.x);
  res.motions = std::move(state.motions);
  if (timing) timing->total += now_seconds() - start;
  return res;
}

HqsResult coarse_to_fine_run(const Burst& burst,
                             const std::vector<HqsConfig>& chain,
                             const std::vector<AffineMotion>& p_init,
                             const std::vector<uint8_t>* valid,
                             const std::vector<AffineMotion>* gt_motions) {
  if (chain.empty()) throw ConfigError("coarse_to_fine_run: empty chain");

  SolverState state;
  int cumulative = 1;
  HqsResult res;
  for (size_t i = 0; i < chain.size(); ++i) {
    HqsConfig cfg = chain[i];
    if (cfg.scale < 1) throw ConfigError("coarse_to_fine_run: bad stage factor");
    cumulative *= cfg.scale;
    const int factor = cfg.scale;
    cfg.scale = cumulative;

    if (i == 0) {
      state = init_state(burst, p_init, cfg);
      if (valid) state.valid = *valid;
    } else {
      state.z = upsample_bilinear(state.x, factor);
      state.x = state.z;
      state.power_vec = PlanarImage();  // grid changed; cold-start the estimate
    }
    run_iterations(state, burst, cfg, static_cast<int>(i), gt_motions, res.trace,
                   nullptr);
  }
  res.x = std::move(state.x);
  res.motions = std::move(state.motions);
  return res;
}

namespace {

// Catmull-Rom weights for the four taps around a sample at fraction f.
inline void catmull_rom_weights(double f, double w[4]) {
  const double f2 = f * f, f3 = f2 * f;
  w[0] = -0.5 * f + f2 - 0.5 * f3;
  w[1] = 1.0 - 2.5 * f2 + 1.5 * f3;
  w[2] = 0.5 * f + 2.0 * f2 - 1.5 * f3;
  w[3] = -0.5 * f2 + 0.5 * f3;
}

PlanarImage catmull_rom_axis(const PlanarImage& img, int s, bool horizontal) {
  const int n_in = horizontal ? img.width : img.height;
  const int n_out = n_in * s;
  const int other = horizontal ? img.height : img.width;
  PlanarImage out(horizontal ? n_out : img.width,
                  horizontal ? img.height : n_out, img.channels);

  for (int j = 0; j < n_out; ++j) {
    const double src = (j + 0.5) / s - 0.5;
    int i0 = static_cast<int>(std::floor(src));
    const double f = src - i0;
    double w[4];
    catmull_rom_weights(f, w);
    int taps[4];
    for (int k = 0; k < 4; ++k) {
      int idx = i0 - 1 + k;
      taps[k] = idx < 0 ? 0 : (idx >= n_in ? n_in - 1 : idx);
    }
    for (int c = 0; c < img.channels; ++c)
      for (int o = 0; o < other; ++o) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k)
          acc += w[k] * (horizontal ? img.at(taps[k], o, c) : img.at(o, taps[k], c));
        if (horizontal)
          out.at(j, o, c) = acc;
        else
          out.at(o, j, c) = acc;
      }
  }
  return out;
}

}  // namespace

PlanarImage baseline_bicubic(const PlanarImage& rgb, int s) {
  if (s < 1) throw ConfigError("baseline_bicubic: factor must be >= 1");
  if (s == 1) return rgb;
  return catmull_rom_axis(catmull_rom_axis(rgb, s, true), s, false);
}

PlanarImage baseline_bicubic(const BayerFrame& frame, int s) {
  return baseline_bicubic(demosaic_bilinear(frame), s);
}

}  // namespace burstsr
