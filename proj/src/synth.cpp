#include "burstsr/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "burstsr/coords.hpp"
#include "burstsr/errors.hpp"
#include "burstsr/forward_model.hpp"
#include "burstsr/interp.hpp"
#include "burstsr/io.hpp"
#include "burstsr/rng.hpp"

namespace burstsr {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Child-stream tags, one namespace per purpose so adding draws to one stage
// never shifts another.
constexpr uint64_t kMotionTag = 1;
constexpr uint64_t kNoiseTag = 2;

std::string frame_name(int k, bool raw) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%02d.%s", k, raw ? "pgm" : "ppm");
  return buf;
}

PlanarImage crop_top_left(const PlanarImage& img, int w, int h) {
  if (w == img.width && h == img.height) return img;
  PlanarImage out(w, h, img.channels);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(x, y, c) = img.at(x, y, c);
  return out;
}

void add_noise(PlanarImage& img, const NoiseModel& noise, SplitMix64& g) {
  for (double& v : img.data) {
    const double var = noise.shot_gain * std::max(v, 0.0) + noise.read_variance;
    v = std::clamp(v + g.normal() * std::sqrt(var), 0.0, 1.0);
  }
}

// Model-mismatch renderer: warp at full resolution, then point-sample the
// warped image at the low-res pixel centers with bilinear interpolation
// instead of averaging each block.
Observation render_bilinear(const PlanarImage& hr, const AffineMotion& motion,
                            const DegradeConfig& dc) {
  const auto [warped, wmask] = warp_affine(hr, motion, hr.width, hr.height);
  const int s = dc.scale;
  const int lw = hr.width / s, lh = hr.height / s;
  const double side_l = norm_side(lw, lh);
  const double side_h = norm_side(hr.width, hr.height);

  PlanarImage lr(lw, lh, 3);
  ValidityMask lmask(lw, lh, true);
  for (int y = 0; y < lh; ++y) {
    const double hy = to_pixel(to_norm(y, lh, side_l), hr.height, side_h);
    for (int x = 0; x < lw; ++x) {
      const double hx = to_pixel(to_norm(x, lw, side_l), hr.width, side_h);
      const BilinearTap tap = make_tap(hx, hy, hr.width, hr.height);
      const bool ok = tap.valid && wmask.at(tap.x0, tap.y0) && wmask.at(tap.x1, tap.y0) &&
                      wmask.at(tap.x0, tap.y1) && wmask.at(tap.x1, tap.y1);
      lmask.set(x, y, ok);
      for (int c = 0; c < 3; ++c) lr.at(x, y, c) = ok ? tap_value(warped, c, tap) : 0.0;
    }
  }
  if (!dc.mosaic) return {std::move(lr), std::move(lmask)};
  BayerFrame bf = mosaic(lr, dc.pattern);
  PlanarImage plane(lw, lh, 1);
  plane.data = std::move(bf.data);
  return {std::move(plane), std::move(lmask)};
}

}  // namespace

std::vector<AffineMotion> sample_motions(const SynthConfig& cfg, int lr_w, int lr_h) {
  if (cfg.k < 1) throw ConfigError("sample_motions: k must be >= 1");
  if (cfg.max_translation_px < 0 || cfg.max_rotation_deg < 0 || cfg.max_affine_perturb < 0)
    throw ConfigError("sample_motions: bounds must be nonnegative");
  if (lr_w <= 0 || lr_h <= 0) throw ConfigError("sample_motions: bad grid size");

  const double npp = norm_per_pixel(lr_w, lr_h);
  const double rot = cfg.max_rotation_deg * kPi / 180.0;

  std::vector<AffineMotion> motions(static_cast<size_t>(cfg.k));
  for (int k = 1; k < cfg.k; ++k) {
    SplitMix64 g = derive_stream(cfg.seed, kMotionTag, static_cast<uint64_t>(k));
    const double theta =
        cfg.motion_model == MotionModel::Translation ? 0.0 : g.uniform(-rot, rot);
    const double t1 = g.uniform(-cfg.max_translation_px, cfg.max_translation_px) * npp;
    const double t2 = g.uniform(-cfg.max_translation_px, cfg.max_translation_px) * npp;
    AffineMotion m = make_euclidean(theta, t1, t2);
    if (cfg.motion_model == MotionModel::Affine && cfg.max_affine_perturb > 0) {
      m.a11 += g.uniform(-cfg.max_affine_perturb, cfg.max_affine_perturb);
      m.a12 += g.uniform(-cfg.max_affine_perturb, cfg.max_affine_perturb);
      m.a21 += g.uniform(-cfg.max_affine_perturb, cfg.max_affine_perturb);
      m.a22 += g.uniform(-cfg.max_affine_perturb, cfg.max_affine_perturb);
    }
    motions[static_cast<size_t>(k)] = m;
  }
  return motions;
}

Burst degrade_to_burst(const PlanarImage& hr, const std::vector<AffineMotion>& motions,
                       const SynthConfig& cfg) {
  if (hr.channels != 3) throw ConfigError("degrade_to_burst: reference must be RGB");
  if (cfg.scale < 1) throw ConfigError("degrade_to_burst: scale must be >= 1");
  if (hr.width % cfg.scale != 0 || hr.height % cfg.scale != 0)
    throw ConfigError("degrade_to_burst: dimensions not divisible by scale");
  if (motions.empty()) throw ConfigError("degrade_to_burst: no motions");
  const int lw = hr.width / cfg.scale, lh = hr.height / cfg.scale;
  if (cfg.raw && (lw % 2 != 0 || lh % 2 != 0))
    throw ConfigError("degrade_to_burst: raw mode needs an even low-res grid");

  DegradeConfig dc;
  dc.scale = cfg.scale;
  dc.mosaic = cfg.raw;

  Burst burst;
  burst.raw = cfg.raw;
  burst.pattern = dc.pattern;
  if (cfg.noise.enabled)
    burst.noise = NoiseParams{cfg.noise.shot_gain, cfg.noise.read_variance};

  for (size_t k = 0; k < motions.size(); ++k) {
    Observation obs = cfg.bilinear_downsample ? render_bilinear(hr, motions[k], dc)
                                              : forward_apply(hr, motions[k], dc);
    if (cfg.noise.enabled) {
      SplitMix64 g = derive_stream(cfg.seed, kNoiseTag, k);
      add_noise(obs.image, cfg.noise, g);
    }
    burst.frames.push_back(std::move(obs.image));
  }
  return burst;
}

Fixture make_fixture(const PlanarImage& hr_linear, const std::string& out_dir,
                     const SynthConfig& cfg) {
  if (hr_linear.channels != 3) throw ConfigError("make_fixture: reference must be RGB");
  if (cfg.scale < 1) throw ConfigError("make_fixture: scale must be >= 1");
  const int q = 2 * cfg.scale;
  const int wc = (hr_linear.width / q) * q;
  const int hc = (hr_linear.height / q) * q;
  if (wc < q || hc < q) throw ConfigError("make_fixture: reference too small for the scale");

  Fixture fx;
  fx.cfg = cfg;
  fx.hr = crop_top_left(hr_linear, wc, hc);
  fx.has_hr = true;
  fx.motions = sample_motions(cfg, wc / cfg.scale, hc / cfg.scale);
  fx.has_motions = true;
  fx.burst = degrade_to_burst(fx.hr, fx.motions, cfg);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir + ": cannot create directory");
  const auto in_dir = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

  write_ppm16(in_dir("hr.ppm"), fx.hr);
  for (int k = 0; k < cfg.k; ++k) {
    const PlanarImage& f = fx.burst.frames[static_cast<size_t>(k)];
    if (cfg.raw)
      write_pgm16(in_dir(frame_name(k, true)), f);
    else
      write_ppm16(in_dir(frame_name(k, false)), f);
  }
  write_motions(in_dir("motions.json-lines"), fx.motions);
  {
    std::ofstream noise(in_dir("noise.txt"));
    if (!noise) throw IoError(in_dir("noise.txt") + ": cannot open for writing");
    const double shot = cfg.noise.enabled ? cfg.noise.shot_gain : 0.0;
    const double read = cfg.noise.enabled ? cfg.noise.read_variance : 0.0;
    noise << format_double(shot) << " " << format_double(read) << "\n";
  }
  write_kv(in_dir("config.txt"),
           {{"k", std::to_string(cfg.k)},
            {"scale", std::to_string(cfg.scale)},
            {"motion_model", cfg.motion_model == MotionModel::Translation ? "translation"
                             : cfg.motion_model == MotionModel::Euclidean ? "euclidean"
                                                                          : "affine"},
            {"max_translation_px", format_double(cfg.max_translation_px)},
            {"max_rotation_deg", format_double(cfg.max_rotation_deg)},
            {"max_affine_perturb", format_double(cfg.max_affine_perturb)},
            {"noise", cfg.noise.enabled ? "1" : "0"},
            {"shot_gain", format_double(cfg.noise.shot_gain)},
            {"read_variance", format_double(cfg.noise.read_variance)},
            {"seed", std::to_string(cfg.seed)},
            {"raw", cfg.raw ? "1" : "0"},
            {"bilinear_downsample", cfg.bilinear_downsample ? "1" : "0"},
            {"lr_width", std::to_string(wc / cfg.scale)},
            {"lr_height", std::to_string(hc / cfg.scale)}});
  return fx;
}

Fixture make_fixture_from_file(const std::string& hr_path, const std::string& out_dir,
                               const SynthConfig& cfg) {
  PlanarImage hr = read_pnm16(hr_path);
  if (hr.channels != 3) throw ConfigError(hr_path + ": reference must be a color PPM");
  if (cfg.input_gamma != 1.0)
    for (double& v : hr.data) v = std::pow(std::max(v, 0.0), cfg.input_gamma);
  return make_fixture(hr, out_dir, cfg);
}

Fixture load_fixture(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto in_dir = [&](const std::string& name) { return (fs::path(dir) / name).string(); };

  const auto kv = read_kv(in_dir("config.txt"));
  const auto need = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError(in_dir("config.txt") + ": missing key " + key);
    return it->second;
  };

  Fixture fx;
  SynthConfig& cfg = fx.cfg;
  try {
    cfg.k = std::stoi(need("k"));
    cfg.scale = std::stoi(need("scale"));
    const std::string model = need("motion_model");
    cfg.motion_model = model == "translation"  ? MotionModel::Translation
                       : model == "euclidean" ? MotionModel::Euclidean
                       : model == "affine"    ? MotionModel::Affine
                                              : throw ConfigError(dir + ": unknown motion_model " + model);
    cfg.max_translation_px = std::stod(need("max_translation_px"));
    cfg.max_rotation_deg = std::stod(need("max_rotation_deg"));
    cfg.max_affine_perturb = std::stod(need("max_affine_perturb"));
    cfg.noise.enabled = need("noise") == "1";
    cfg.noise.shot_gain = std::stod(need("shot_gain"));
    cfg.noise.read_variance = std::stod(need("read_variance"));
    cfg.seed = std::stoull(need("seed"));
    cfg.raw = need("raw") == "1";
    cfg.bilinear_downsample = need("bilinear_downsample") == "1";
  } catch (const std::invalid_argument&) {
    throw ConfigError(in_dir("config.txt") + ": malformed numeric value");
  } catch (const std::out_of_range&) {
    throw ConfigError(in_dir("config.txt") + ": numeric value out of range");
  }
  if (cfg.k < 1) throw ConfigError(in_dir("config.txt") + ": k must be >= 1");

  fx.burst.raw = cfg.raw;
  if (cfg.noise.enabled)
    fx.burst.noise = NoiseParams{cfg.noise.shot_gain, cfg.noise.read_variance};
  for (int k = 0; k < cfg.k; ++k) {
    PlanarImage f = read_pnm16(in_dir(frame_name(k, cfg.raw)));
    const int want = cfg.raw ? 1 : 3;
    if (f.channels != want)
      throw IoError(in_dir(frame_name(k, cfg.raw)) + ": unexpected channel count");
    if (k > 0 && !(f.width == fx.burst.frame_width() && f.height == fx.burst.frame_height()))
      throw IoError(in_dir(frame_name(k, cfg.raw)) + ": frame size mismatch");
    fx.burst.frames.push_back(std::move(f));
  }

  if (file_exists(in_dir("hr.ppm"))) {
    fx.hr = read_pnm16(in_dir("hr.ppm"));
    fx.has_hr = true;
  }
  if (file_exists(in_dir("motions.json-lines"))) {
    fx.motions = read_motions(in_dir("motions.json-lines"));
    if (fx.motions.size() != static_cast<size_t>(cfg.k))
      throw IoError(in_dir("motions.json-lines") + ": motion count does not match k");
    fx.has_motions = true;
  }
  return fx;
}

PlanarImage textured_test_image(int w, int h, uint64_t seed) {
  if (w <= 0 || h <= 0) throw ConfigError("textured_test_image: bad size");
  SplitMix64 g(seed ^ 0xA24BAED4963EE407ull);

  // A few smooth random plane waves per channel plus shared soft discs, so
  // the scene has sub-pixel detail at several orientations without hard
  // discontinuities the degradation model cannot represent.
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::array<std::vector<Wave>, 3> waves;
  for (auto& wv : waves)
    for (int i = 0; i < 6; ++i) {
      const double freq = g.uniform(1.5, 9.0);
      const double ang = g.uniform(0.0, 2.0 * kPi);
      wv.push_back({freq * std::cos(ang), freq * std::sin(ang), g.uniform(0.0, 2.0 * kPi),
                    g.uniform(0.04, 0.11)});
    }
  struct Disc {
    double cx, cy, r, soft, amp;
    int channel;  // -1 affects all channels
  };
  std::vector<Disc> discs;
  for (int i = 0; i < 8; ++i)
    discs.push_back({g.uniform(-0.9, 0.9), g.uniform(-0.9, 0.9), g.uniform(0.08, 0.35),
                     g.uniform(0.02, 0.08), g.uniform(-0.14, 0.14),
                     static_cast<int>(g.next() % 4) - 1});

  const double side = norm_side(w, h);
  PlanarImage img(w, h, 3, 0.5);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y) {
      const double ny = to_norm(y, h, side);
      for (int x = 0; x < w; ++x) {
        const double nx = to_norm(x, w, side);
        double v = 0.5;
        for (const Wave& wv : waves[static_cast<size_t>(c)])
          v += wv.amp * std::sin(kPi * (wv.fx * nx + wv.fy * ny) + wv.phase);
        for (const Disc& d : discs) {
          if (d.channel != -1 && d.channel != c) continue;
          const double dist = std::hypot(nx - d.cx, ny - d.cy);
          v += d.amp * 0.5 * (1.0 + std::tanh((d.r - dist) / d.soft));
        }
        img.at(x, y, c) = std::clamp(v, 0.05, 0.95);
      }
    }
  return img;
}

}  // namespace burstsr
