// Command line front end: synth / align / sr / eval / bench.
//
// Exit codes: 0 success, 2 file problems, 3 bad configuration or flags,
// 4 numerical failure. Everything is deterministic given --seed, and with
// --threads 1 the float outputs of `sr` are byte-stable across runs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "burstsr/burst.hpp"
#include "burstsr/errors.hpp"
#include "burstsr/image.hpp"
#include "burstsr/io.hpp"
#include "burstsr/metrics.hpp"
#include "burstsr/motion.hpp"
#include "burstsr/parallel.hpp"
#include "burstsr/registration.hpp"
#include "burstsr/solver.hpp"
#include "burstsr/synth.hpp"

namespace {

using namespace burstsr;
namespace fs = std::filesystem;

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

int parse_int(const std::string& key, const std::string& s) {
  size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an integer: " + s);
  }
  if (pos != s.size()) throw ConfigError(key + ": not an integer: " + s);
  return v;
}

double parse_double(const std::string& key, const std::string& s) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: " + s);
  }
  if (pos != s.size()) throw ConfigError(key + ": not a number: " + s);
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw ConfigError(key + ": expected 0/1/true/false, got " + s);
}

MotionModel parse_model(const std::string& s) {
  if (s == "translation") return MotionModel::Translation;
  if (s == "euclidean") return MotionModel::Euclidean;
  if (s == "affine") return MotionModel::Affine;
  throw ConfigError("unknown motion model: " + s);
}

// Solver settings come from an optional key=value file plus repeatable
// --set overrides, applied in that order. Unknown keys are rejected so a
// typo cannot silently fall back to a default.
void apply_solver_keys(const std::map<std::string, std::string>& kv, HqsConfig& cfg) {
  for (const auto& [key, val] : kv) {
    if (key == "scale")
      cfg.scale = parse_int(key, val);
    else if (key == "iters")
      cfg.iters = parse_int(key, val);
    else if (key == "mu0")
      cfg.mu0 = parse_double(key, val);
    else if (key == "rho")
      cfg.rho = parse_double(key, val);
    else if (key == "lambda")
      cfg.lambda = parse_double(key, val);
    else if (key == "tv_iters")
      cfg.tv_inner_iters = parse_int(key, val);
    else if (key == "refine")
      cfg.refine_motion = parse_bool(key, val);
    else if (key == "eta")
      cfg.eta = parse_double(key, val);
    else
      throw ConfigError("unknown config key: " + key);
  }
  if (cfg.scale < 1) throw ConfigError("scale must be >= 1");
  if (cfg.iters < 1) throw ConfigError("iters must be >= 1");
  if (cfg.mu0 <= 0 || cfg.rho <= 0) throw ConfigError("mu0 and rho must be positive");
  if (cfg.lambda < 0 || cfg.eta < 0) throw ConfigError("lambda and eta must be >= 0");
  if (cfg.tv_inner_iters < 1) throw ConfigError("tv_iters must be >= 1");
}

std::map<std::string, std::string> merge_overrides(
    const std::string& config_path, const std::vector<std::string>& sets) {
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) kv = read_kv(config_path);
  for (const std::string& s : sets) {
    const size_t eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set expects key=value, got: " + s);
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return kv;
}

std::vector<int> parse_chain(const std::string& spec) {
  std::vector<int> factors;
  size_t start = 0;
  while (start <= spec.size()) {
    const size_t comma = spec.find(',', start);
    const std::string tok =
        spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    factors.push_back(parse_int("--chain", tok));
    if (factors.back() < 2) throw ConfigError("--chain factors must be >= 2");
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return factors;
}

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------- synth ----

int cmd_synth(const std::string& hr_path, const std::string& out_dir, int k,
              int scale, int size, const std::string& model, double max_t,
              double max_r, double max_a, bool no_noise, bool rgb,
              bool bilinear, double input_gamma, uint64_t seed) {
  SynthConfig cfg;
  cfg.k = k;
  cfg.scale = scale;
  cfg.motion_model = parse_model(model);
  cfg.max_translation_px = max_t;
  cfg.max_rotation_deg = max_r;
  cfg.max_affine_perturb = max_a;
  cfg.noise.enabled = !no_noise;
  cfg.seed = seed;
  cfg.raw = !rgb;
  cfg.bilinear_downsample = bilinear;
  cfg.input_gamma = input_gamma;

  Fixture fx;
  if (!hr_path.empty()) {
    fx = make_fixture_from_file(hr_path, out_dir, cfg);
  } else {
    if (size < 4 * scale) throw ConfigError("--size too small for the scale");
    fx = make_fixture(textured_test_image(size, size, seed), out_dir, cfg);
  }

  std::printf("fixture\t%s\n", out_dir.c_str());
  std::printf("frames\t%d\n", cfg.k);
  std::printf("scale\t%d\n", cfg.scale);
  std::printf("hr_size\t%dx%d\n", fx.hr.width, fx.hr.height);
  std::printf("lr_size\t%dx%d\n", fx.burst.frame_width(), fx.burst.frame_height());
  std::printf("raw\t%d\n", cfg.raw ? 1 : 0);
  std::printf("noise\t%d\n", cfg.noise.enabled ? 1 : 0);
  std::printf("seed\t%llu\n", static_cast<unsigned long long>(cfg.seed));
  return 0;
}

// ---------------------------------------------------------------- align ----

int cmd_align(const std::string& fixture_dir, const std::string& out_path,
              const std::string& model, int levels) {
  const Fixture fx = load_fixture(fixture_dir);
  LkOptions opts;
  opts.motion_model = parse_model(model);
  if (levels > 0) opts.pyramid_levels = levels;

  const BurstAlignment al = coarse_align_burst(fx.burst, opts);
  write_motions(out_path, al.motions);

  std::printf("# frame\tok\trms_residual%s\n", fx.has_motions ? "\tgeom_px" : "");
  for (size_t kf = 0; kf < al.motions.size(); ++kf) {
    std::printf("%zu\t%d\t%s", kf, al.ok[kf] ? 1 : 0, fmt(al.rms_residual[kf]).c_str());
    if (fx.has_motions)
      std::printf("\t%s", fmt(geometric_error(al.motions[kf], fx.motions[kf],
                                              fx.burst.frame_width(),
                                              fx.burst.frame_height()))
                              .c_str());
    std::printf("\n");
  }
  if (fx.has_motions)
    std::printf("# mean_geom_px\t%s\n",
                fmt(mean_geometric_error(al.motions, fx.motions,
                                         fx.burst.frame_width(),
                                         fx.burst.frame_height()))
                    .c_str());
  return 0;
}

// ------------------------------------------------------------------- sr ----

void write_trace(const std::string& path, const SolverTrace& trace) {
  std::string out =
      "# stage\titer\tmu\teta\tdata\tcoupling\ttv\tenergy_before\tenergy_after\tgeom_px\n";
  int stage = -1, iter = 0;
  for (const IterationRecord& rec : trace.iterations) {
    if (rec.stage != stage) {
      stage = rec.stage;
      iter = 0;
    }
    ++iter;
    out += std::to_string(rec.stage) + '\t' + std::to_string(iter) + '\t' +
           fmt(rec.mu) + '\t' + fmt(rec.eta) + '\t' + fmt(rec.data) + '\t' +
           fmt(rec.coupling) + '\t' + fmt(rec.tv) + '\t' + fmt(rec.energy_before) +
           '\t' + fmt(rec.energy_after) + '\t' +
           (std::isnan(rec.geom) ? std::string("NA") : fmt(rec.geom)) + '\n';
  }
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open for writing: " + path);
  std::fwrite(out.data(), 1, out.size(), f);
  std::fclose(f);
}

int cmd_sr(const std::string& fixture_dir, const std::string& out_dir,
           const std::string& config_path, const std::vector<std::string>& sets,
           const std::string& chain_spec, bool use_gt, bool no_refine,
           const std::string& align_model) {
  const double t0 = now_s();
  const Fixture fx = load_fixture(fixture_dir);

  HqsConfig cfg;
  cfg.scale = fx.cfg.scale;
  apply_solver_keys(merge_overrides(config_path, sets), cfg);
  if (no_refine) cfg.refine_motion = false;

  std::vector<HqsConfig> chain;
  if (!chain_spec.empty()) {
    for (int f : parse_chain(chain_spec)) {
      HqsConfig stage = cfg;
      stage.scale = f;
      chain.push_back(stage);
    }
  } else {
    chain.push_back(cfg);
  }
  int total = 1;
  for (const HqsConfig& stage : chain) total *= stage.scale;
  if (total != fx.cfg.scale)
    throw ConfigError("reconstruction factor " + std::to_string(total) +
                      " does not match the fixture scale " +
                      std::to_string(fx.cfg.scale) +
                      "; the chain factors (or the scale key) must multiply to it");

  // Initial motions: ground truth when requested, otherwise the coarse
  // pyramid alignment. Frames the aligner rejects are dropped from the data
  // term but still get a (meaningless) motion record.
  std::vector<AffineMotion> p0;
  std::vector<uint8_t> valid;
  if (use_gt) {
    if (!fx.has_motions)
      throw ConfigError(fixture_dir + ": no ground truth motions for --use-gt-motions");
    p0 = fx.motions;
    valid.assign(p0.size(), 1);
  } else {
    LkOptions lk;
    lk.motion_model = parse_model(align_model);
    const BurstAlignment al = coarse_align_burst(fx.burst, lk);
    p0 = al.motions;
    valid = al.ok;
  }
  const double t_align = now_s();

  const std::vector<AffineMotion>* gt = fx.has_motions ? &fx.motions : nullptr;
  const HqsResult res = coarse_to_fine_run(fx.burst, chain, p0, &valid, gt);
  const double t_solve = now_s();

  fs::create_directories(out_dir);
  const auto in_out = [&](const std::string& name) {
    return (fs::path(out_dir) / name).string();
  };
  write_ppm16(in_out("result.ppm"), res.x);
  write_bsr(in_out("result.bsr"), res.x);
  write_motions(in_out("motions.json-lines"), res.motions);
  write_trace(in_out("trace.tsv"), res.trace);

  std::vector<std::pair<std::string, std::string>> echo;
  echo.emplace_back("fixture", fixture_dir);
  echo.emplace_back("scale", std::to_string(total));
  std::string stages;
  for (const HqsConfig& stage : chain)
    stages += (stages.empty() ? "" : ",") + std::to_string(stage.scale);
  echo.emplace_back("chain", stages);
  echo.emplace_back("iters", std::to_string(cfg.iters));
  echo.emplace_back("mu0", fmt(cfg.mu0));
  echo.emplace_back("rho", fmt(cfg.rho));
  echo.emplace_back("lambda", fmt(cfg.lambda));
  echo.emplace_back("tv_iters", std::to_string(cfg.tv_inner_iters));
  echo.emplace_back("refine", cfg.refine_motion ? "1" : "0");
  echo.emplace_back("eta", fmt(cfg.eta));
  echo.emplace_back("init_motions", use_gt ? "ground_truth" : "coarse_align");
  write_kv(in_out("config.txt"), echo);

  std::printf("result\t%s\n", in_out("result.ppm").c_str());
  std::printf("hr_size\t%dx%d\n", res.x.width, res.x.height);
  int dropped = 0;
  for (uint8_t v : valid) dropped += v ? 0 : 1;
  std::printf("frames\t%zu\n", fx.burst.size());
  if (dropped) std::printf("frames_dropped\t%d\n", dropped);
  if (fx.has_hr) {
    const EvalReport rep = evaluate(res.x, fx.hr, total, &res.motions, gt,
                                    fx.burst.frame_width(), fx.burst.frame_height());
    std::printf("psnr\t%s\n", fmt(rep.psnr).c_str());
    std::printf("ssim\t%s\n", fmt(rep.ssim).c_str());
    if (rep.geom_error_px)
      std::printf("geom_px\t%s\n", fmt(*rep.geom_error_px).c_str());
  }
  std::printf("align_s\t%.3f\n", t_align - t0);
  std::printf("solve_s\t%.3f\n", t_solve - t_align);
  return 0;
}

// ----------------------------------------------------------------- eval ----

PlanarImage read_result(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bsr") == 0)
    return read_bsr(path);
  return read_pnm16(path);
}

int cmd_eval(const std::string& result_path, const std::string& fixture_dir,
             const std::string& reference_path, int scale_flag,
             const std::string& motions_path, bool as_json) {
  const PlanarImage xhat = read_result(result_path);

  PlanarImage hr;
  int scale = scale_flag;
  std::vector<AffineMotion> truth;
  int lr_w = 0, lr_h = 0;
  if (!fixture_dir.empty()) {
    const Fixture fx = load_fixture(fixture_dir);
    if (!fx.has_hr) throw IoError(fixture_dir + ": fixture has no hr.ppm reference");
    hr = fx.hr;
    if (scale <= 0) scale = fx.cfg.scale;
    truth = fx.motions;
    lr_w = fx.burst.frame_width();
    lr_h = fx.burst.frame_height();
  } else if (!reference_path.empty()) {
    hr = read_pnm16(reference_path);
    if (scale <= 0) throw ConfigError("--reference needs an explicit --scale");
  } else {
    throw ConfigError("eval needs --fixture or --reference");
  }

  std::vector<AffineMotion> est;
  if (!motions_path.empty()) est = read_motions(motions_path);
  const bool with_geom = !est.empty() && !truth.empty();
  const EvalReport rep =
      evaluate(xhat, hr, scale, with_geom ? &est : nullptr,
               with_geom ? &truth : nullptr, lr_w, lr_h);

  const auto num_or = [](double v, const char* fallback) {
    return std::isfinite(v) ? format_double(v) : std::string(fallback);
  };
  if (as_json) {
    std::printf("{\"psnr\": %s, \"ssim\": %s, \"geom_px\": %s}\n",
                num_or(rep.psnr, "\"inf\"").c_str(), fmt(rep.ssim).c_str(),
                rep.geom_error_px ? fmt(*rep.geom_error_px).c_str() : "null");
  } else {
    std::printf("%s\t%s\t%s\n", num_or(rep.psnr, "inf").c_str(), fmt(rep.ssim).c_str(),
                rep.geom_error_px ? fmt(*rep.geom_error_px).c_str() : "NA");
  }
  return 0;
}

// ---------------------------------------------------------------- bench ----

int cmd_bench(const std::string& fixture_dir, int k, int size, int scale,
              int iters, uint64_t seed) {
  Burst burst;
  std::vector<AffineMotion> motions;
  int bench_scale = scale;
  if (!fixture_dir.empty()) {
    Fixture fx = load_fixture(fixture_dir);
    burst = std::move(fx.burst);
    bench_scale = fx.cfg.scale;
    motions = fx.has_motions ? fx.motions
                             : coarse_align_burst(burst).motions;
  } else {
    SynthConfig scfg;
    scfg.k = k;
    scfg.scale = scale;
    scfg.seed = seed;
    const int side = size - size % (2 * scale);
    if (side < 4 * scale) throw ConfigError("--size too small for the scale");
    const PlanarImage hr = textured_test_image(side, side, seed);
    motions = sample_motions(scfg, side / scale, side / scale);
    burst = degrade_to_burst(hr, motions, scfg);
  }

  HqsConfig cfg;
  cfg.scale = bench_scale;
  cfg.iters = iters;
  HqsTiming timing;
  const HqsResult res = hqs_run(burst, motions, cfg, nullptr, nullptr, &timing);
  (void)res;

  std::printf("frames\t%zu\n", burst.size());
  std::printf("lr_size\t%dx%d\n", burst.frame_width(), burst.frame_height());
  std::printf("scale\t%d\n", bench_scale);
  std::printf("iters\t%d\n", cfg.iters);
  std::printf("threads\t%d\n", max_threads());
  std::printf("total_s\t%.4f\n", timing.total);

  const double other =
      timing.total - (timing.init + timing.step_est + timing.z + timing.refine + timing.prox);
  const std::pair<const char*, double> phases[] = {
      {"init", timing.init},   {"step_est", timing.step_est}, {"z", timing.z},
      {"refine", timing.refine}, {"prox", timing.prox},       {"other", other}};
  for (const auto& [name, secs] : phases)
    std::printf("phase\t%s\t%.4f\t%.1f\n", name, secs,
                timing.total > 0 ? 100.0 * secs / timing.total : 0.0);
  std::printf("z_per_iter_ms\t%.3f\n", 1000.0 * timing.z / cfg.iters);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-frame raw burst super-resolution"};
  app.require_subcommand(1);
  app.fallthrough();  // --threads / --seed may follow the subcommand

  int threads = 0;
  uint64_t seed = 0;
  app.add_option("--threads", threads, "worker thread cap (0 = hardware, 1 = bit-reproducible)");
  app.add_option("--seed", seed, "seed for every random draw");

  auto* synth = app.add_subcommand("synth", "render a synthetic burst fixture");
  std::string sy_hr, sy_out, sy_model = "euclidean";
  int sy_k = 8, sy_scale = 2, sy_size = 256;
  double sy_maxt = 2.0, sy_maxr = 2.0, sy_maxa = 0.0, sy_gamma = 2.2;
  bool sy_no_noise = false, sy_rgb = false, sy_bilinear = false;
  synth->add_option("--hr", sy_hr, "16-bit PPM source image (default: generated texture)");
  synth->add_option("--out", sy_out, "fixture directory")->required();
  synth->add_option("--k", sy_k, "burst length");
  synth->add_option("--scale", sy_scale, "downsampling factor");
  synth->add_option("--size", sy_size, "generated source side length");
  synth->add_option("--motion-model", sy_model, "translation|euclidean|affine");
  synth->add_option("--max-translation", sy_maxt, "bound in low-res pixels");
  synth->add_option("--max-rotation", sy_maxr, "bound in degrees");
  synth->add_option("--max-affine", sy_maxa, "bound on linear perturbation");
  synth->add_option("--input-gamma", sy_gamma, "exponent linearizing --hr files");
  synth->add_flag("--no-noise", sy_no_noise, "disable shot and read noise");
  synth->add_flag("--rgb", sy_rgb, "emit RGB frames instead of raw mosaics");
  synth->add_flag("--bilinear-downsample", sy_bilinear, "model-mismatch degradation");

  auto* align = app.add_subcommand("align", "coarse-align a burst and report residuals");
  std::string al_fixture, al_out, al_model = "euclidean";
  int al_levels = 0;
  align->add_option("--fixture", al_fixture, "fixture directory")->required();
  align->add_option("--out", al_out, "motion estimates file")->required();
  align->add_option("--model", al_model, "translation|euclidean|affine");
  align->add_option("--levels", al_levels, "pyramid levels (0 = default)");

  auto* sr = app.add_subcommand("sr", "reconstruct the high-resolution image");
  std::string sr_fixture, sr_out, sr_config, sr_chain, sr_align_model = "euclidean";
  std::vector<std::string> sr_sets;
  bool sr_gt = false, sr_no_refine = false;
  sr->add_option("--fixture", sr_fixture, "fixture directory")->required();
  sr->add_option("--out", sr_out, "output directory")->required();
  sr->add_option("--config", sr_config, "key=value solver settings file");
  sr->add_option("--set", sr_sets, "override a config key (key=value, repeatable)");
  sr->add_option("--chain", sr_chain, "progressive stage factors, e.g. 2,2");
  sr->add_option("--align-model", sr_align_model, "coarse alignment motion model");
  sr->add_flag("--use-gt-motions", sr_gt, "start from the fixture's true motions");
  sr->add_flag("--no-refine", sr_no_refine, "skip Gauss-Newton motion refinement");

  auto* ev = app.add_subcommand("eval", "score a result against a reference");
  std::string ev_result, ev_fixture, ev_reference, ev_motions;
  int ev_scale = 0;
  bool ev_json = false;
  ev->add_option("--result", ev_result, "reconstruction (.bsr or .ppm)")->required();
  ev->add_option("--fixture", ev_fixture, "fixture directory holding the reference");
  ev->add_option("--reference", ev_reference, "reference image (needs --scale)");
  ev->add_option("--scale", ev_scale, "upsampling factor used for the crop border");
  ev->add_option("--motions", ev_motions, "estimated motions for the geometry column");
  ev->add_flag("--json", ev_json, "emit a JSON object instead of a TSV line");

  auto* bench = app.add_subcommand("bench", "time the solver and print a phase breakdown");
  std::string be_fixture;
  int be_k = 20, be_size = 300, be_scale = 2, be_iters = 8;
  bench->add_option("--fixture", be_fixture, "fixture directory (default: synthesize)");
  bench->add_option("--k", be_k, "burst length for the synthesized input");
  bench->add_option("--size", be_size, "source side length for the synthesized input");
  bench->add_option("--scale", be_scale, "downsampling factor for the synthesized input");
  bench->add_option("--iters", be_iters, "solver iterations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 3;
  }

  try {
    set_max_threads(threads);
    if (app.got_subcommand(synth))
      return cmd_synth(sy_hr, sy_out, sy_k, sy_scale, sy_size, sy_model, sy_maxt,
                       sy_maxr, sy_maxa, sy_no_noise, sy_rgb, sy_bilinear,
                       sy_gamma, seed);
    if (app.got_subcommand(align)) return cmd_align(al_fixture, al_out, al_model, al_levels);
    if (app.got_subcommand(sr))
      return cmd_sr(sr_fixture, sr_out, sr_config, sr_sets, sr_chain, sr_gt,
                    sr_no_refine, sr_align_model);
    if (app.got_subcommand(ev))
      return cmd_eval(ev_result, ev_fixture, ev_reference, ev_scale, ev_motions, ev_json);
    if (app.got_subcommand(bench))
      return cmd_bench(be_fixture, be_k, be_size, be_scale, be_iters, seed);
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
