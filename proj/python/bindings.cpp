// Python module exposing the main operations on numpy arrays. Images travel
// as float64 arrays, (h, w) for single-plane data and (h, w, 3) for RGB;
// bursts stack frames on a leading axis. Motions are rows of
// [a11, a12, a21, a22, t1, t2], matching the file format.

#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

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

namespace py = pybind11;
using namespace burstsr;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

PlanarImage to_image(const DoubleArray& a) {
  const py::buffer_info info = a.request();
  int h = 0, w = 0, c = 1;
  if (info.ndim == 2) {
    h = static_cast<int>(info.shape[0]);
    w = static_cast<int>(info.shape[1]);
  } else if (info.ndim == 3) {
    h = static_cast<int>(info.shape[0]);
    w = static_cast<int>(info.shape[1]);
    c = static_cast<int>(info.shape[2]);
  } else {
    throw ConfigError("expected an (h, w) or (h, w, c) array");
  }
  const double* src = static_cast<const double*>(info.ptr);
  PlanarImage img(w, h, c);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        img.at(x, y, ch) = src[(static_cast<size_t>(y) * w + x) * c + ch];
  return img;
}

py::array_t<double> from_image(const PlanarImage& img) {
  py::array_t<double> out;
  if (img.channels == 1)
    out = py::array_t<double>({img.height, img.width});
  else
    out = py::array_t<double>({img.height, img.width, img.channels});
  double* dst = static_cast<double*>(out.request().ptr);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        dst[(static_cast<size_t>(y) * img.width + x) * img.channels + c] =
            img.at(x, y, c);
  return out;
}

std::vector<AffineMotion> to_motions(const DoubleArray& a) {
  const py::buffer_info info = a.request();
  if (info.ndim != 2 || info.shape[1] != 6)
    throw ConfigError("motions must be a (k, 6) array");
  const double* src = static_cast<const double*>(info.ptr);
  std::vector<AffineMotion> out(info.shape[0]);
  for (size_t k = 0; k < out.size(); ++k) {
    const double* r = src + 6 * k;
    out[k] = {r[0], r[1], r[2], r[3], r[4], r[5]};
  }
  return out;
}

py::array_t<double> from_motions(const std::vector<AffineMotion>& motions) {
  py::array_t<double> out({motions.size(), size_t{6}});
  double* dst = static_cast<double*>(out.request().ptr);
  for (size_t k = 0; k < motions.size(); ++k) {
    const AffineMotion& m = motions[k];
    dst[6 * k + 0] = m.a11;
    dst[6 * k + 1] = m.a12;
    dst[6 * k + 2] = m.a21;
    dst[6 * k + 3] = m.a22;
    dst[6 * k + 4] = m.t1;
    dst[6 * k + 5] = m.t2;
  }
  return out;
}

Burst to_burst(const DoubleArray& frames, bool raw) {
  const py::buffer_info info = frames.request();
  const int want = raw ? 3 : 4;
  if (info.ndim != want)
    throw ConfigError(raw ? "raw burst must be a (k, h, w) array"
                          : "rgb burst must be a (k, h, w, 3) array");
  if (!raw && info.shape[3] != 3) throw ConfigError("rgb burst needs 3 channels");
  const int k = static_cast<int>(info.shape[0]);
  const int h = static_cast<int>(info.shape[1]);
  const int w = static_cast<int>(info.shape[2]);
  const int c = raw ? 1 : 3;
  const double* src = static_cast<const double*>(info.ptr);

  Burst burst;
  burst.raw = raw;
  for (int f = 0; f < k; ++f) {
    PlanarImage img(w, h, c);
    const double* base = src + static_cast<size_t>(f) * h * w * c;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < c; ++ch)
          img.at(x, y, ch) = base[(static_cast<size_t>(y) * w + x) * c + ch];
    burst.frames.push_back(std::move(img));
  }
  return burst;
}

py::array_t<double> stack_frames(const Burst& burst) {
  const int k = static_cast<int>(burst.size());
  const int h = burst.frame_height(), w = burst.frame_width();
  const int c = burst.raw ? 1 : 3;
  py::array_t<double> out;
  if (burst.raw)
    out = py::array_t<double>({k, h, w});
  else
    out = py::array_t<double>({k, h, w, c});
  double* dst = static_cast<double*>(out.request().ptr);
  for (int f = 0; f < k; ++f) {
    const PlanarImage& img = burst.frames[f];
    double* base = dst + static_cast<size_t>(f) * h * w * c;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < c; ++ch)
          base[(static_cast<size_t>(y) * w + x) * c + ch] = img.at(x, y, ch);
  }
  return out;
}

MotionModel model_from_string(const std::string& s) {
  if (s == "translation") return MotionModel::Translation;
  if (s == "euclidean") return MotionModel::Euclidean;
  if (s == "affine") return MotionModel::Affine;
  throw ConfigError("unknown motion model: " + s);
}

py::list trace_to_list(const SolverTrace& trace) {
  py::list out;
  for (const IterationRecord& rec : trace.iterations) {
    py::dict d;
    d["stage"] = rec.stage;
    d["mu"] = rec.mu;
    d["eta"] = rec.eta;
    d["data"] = rec.data;
    d["coupling"] = rec.coupling;
    d["tv"] = rec.tv;
    d["energy_before"] = rec.energy_before;
    d["energy_after"] = rec.energy_after;
    d["geom_px"] = std::isnan(rec.geom) ? py::object(py::none()) : py::cast(rec.geom);
    d["refine_ssd_before"] = rec.refine_ssd_before;
    d["refine_ssd_after"] = rec.refine_ssd_after;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "multi-frame raw burst super-resolution";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(PyExc_ArithmeticError, e.what());
    }
  });

  m.def("set_threads", &set_max_threads, py::arg("n"),
        "Cap worker threads; n <= 0 restores the hardware count.");

  m.def(
      "textured_image",
      [](int width, int height, uint64_t seed) {
        return from_image(textured_test_image(width, height, seed));
      },
      py::arg("width"), py::arg("height"), py::arg("seed") = 0,
      "Deterministic multi-octave test scene in [0.05, 0.95], shape (h, w, 3).");

  m.def(
      "synthesize",
      [](const DoubleArray& hr, int k, int scale, uint64_t seed, bool noise,
         bool raw, double max_translation_px, double max_rotation_deg,
         const std::string& motion_model) {
        SynthConfig cfg;
        cfg.k = k;
        cfg.scale = scale;
        cfg.seed = seed;
        cfg.noise.enabled = noise;
        cfg.raw = raw;
        cfg.max_translation_px = max_translation_px;
        cfg.max_rotation_deg = max_rotation_deg;
        cfg.motion_model = model_from_string(motion_model);
        const PlanarImage img = to_image(hr);
        const auto motions = sample_motions(cfg, img.width / scale, img.height / scale);
        const Burst burst = degrade_to_burst(img, motions, cfg);
        py::dict out;
        out["frames"] = stack_frames(burst);
        out["motions"] = from_motions(motions);
        return out;
      },
      py::arg("hr"), py::arg("k") = 8, py::arg("scale") = 2, py::arg("seed") = 0,
      py::arg("noise") = true, py::arg("raw") = true,
      py::arg("max_translation_px") = 2.0, py::arg("max_rotation_deg") = 2.0,
      py::arg("motion_model") = "euclidean",
      "Degrade an (h, w, 3) image into a burst of low-res frames with known "
      "motions; frame 0 carries the identity.");

  m.def(
      "align",
      [](const DoubleArray& frames, bool raw, const std::string& model) {
        LkOptions opts;
        opts.motion_model = model_from_string(model);
        const BurstAlignment al = coarse_align_burst(to_burst(frames, raw), opts);
        py::dict out;
        out["motions"] = from_motions(al.motions);
        out["ok"] = al.ok;
        out["rms_residual"] = al.rms_residual;
        return out;
      },
      py::arg("frames"), py::arg("raw") = true, py::arg("model") = "euclidean",
      "Pyramid Lucas-Kanade alignment of every frame against frame 0.");

  m.def(
      "reconstruct",
      [](const DoubleArray& frames, const DoubleArray& motions, bool raw,
         int scale, const std::vector<int>& chain, int iters, double mu0,
         double rho, double lam, int tv_iters, bool refine, double eta,
         py::object truth) {
        const Burst burst = to_burst(frames, raw);
        HqsConfig cfg;
        cfg.scale = scale;
        cfg.iters = iters;
        cfg.mu0 = mu0;
        cfg.rho = rho;
        cfg.lambda = lam;
        cfg.tv_inner_iters = tv_iters;
        cfg.refine_motion = refine;
        cfg.eta = eta;

        std::vector<HqsConfig> stages;
        if (chain.empty()) {
          stages.push_back(cfg);
        } else {
          for (int f : chain) {
            HqsConfig stage = cfg;
            stage.scale = f;
            stages.push_back(stage);
          }
        }
        std::vector<AffineMotion> gt;
        if (!truth.is_none()) gt = to_motions(truth.cast<DoubleArray>());
        const HqsResult res =
            coarse_to_fine_run(burst, stages, to_motions(motions), nullptr,
                               gt.empty() ? nullptr : &gt);
        py::dict out;
        out["image"] = from_image(res.x);
        out["motions"] = from_motions(res.motions);
        out["trace"] = trace_to_list(res.trace);
        return out;
      },
      py::arg("frames"), py::arg("motions"), py::arg("raw") = true,
      py::arg("scale") = 2, py::arg("chain") = std::vector<int>{},
      py::arg("iters") = 8, py::arg("mu0") = 0.01, py::arg("rho") = 2.0,
      py::arg("lam") = 2e-3, py::arg("tv_iters") = 30, py::arg("refine") = true,
      py::arg("eta") = 0.0, py::arg("truth") = py::none(),
      "Half-quadratic splitting reconstruction from initial motions. A chain "
      "like [2, 2] solves progressively instead of in one stage; passing the "
      "true motions adds per-iteration geometric error to the trace.");

  m.def(
      "baseline_bicubic",
      [](const DoubleArray& frame, int scale, bool raw) {
        const PlanarImage img = to_image(frame);
        if (raw) {
          if (img.channels != 1) throw ConfigError("raw frame must be (h, w)");
          BayerFrame bf(img.width, img.height);
          bf.data = img.data;
          return from_image(baseline_bicubic(bf, scale));
        }
        return from_image(baseline_bicubic(img, scale));
      },
      py::arg("frame"), py::arg("scale"), py::arg("raw") = true,
      "Single-frame reference: demosaic (raw mode) plus Catmull-Rom upsampling.");

  m.def(
      "prox_tv",
      [](const DoubleArray& v, double tau, int iters) {
        return from_image(prox_tv(to_image(v), tau, iters));
      },
      py::arg("v"), py::arg("tau"), py::arg("iters") = 30,
      "Proximal operator of tau * isotropic total variation.");

  m.def(
      "tv", [](const DoubleArray& img) { return tv_value(to_image(img)); },
      py::arg("img"), "Discrete isotropic total variation.");

  m.def(
      "psnr",
      [](const DoubleArray& a, const DoubleArray& b, double peak, int border) {
        return psnr(to_image(a), to_image(b), peak, border);
      },
      py::arg("a"), py::arg("b"), py::arg("peak") = 1.0, py::arg("border") = 0);

  m.def(
      "ssim",
      [](const DoubleArray& a, const DoubleArray& b, double peak) {
        return ssim(to_image(a), to_image(b), peak);
      },
      py::arg("a"), py::arg("b"), py::arg("peak") = 1.0);

  m.def(
      "mean_geometric_error",
      [](const DoubleArray& est, const DoubleArray& truth, int lr_width,
         int lr_height) {
        return mean_geometric_error(to_motions(est), to_motions(truth), lr_width,
                                    lr_height);
      },
      py::arg("est"), py::arg("truth"), py::arg("lr_width"), py::arg("lr_height"),
      "Mean per-pixel warp displacement in low-res pixels, frame 0 excluded.");

  m.def(
      "read_image",
      [](const std::string& path) {
        if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bsr") == 0)
          return from_image(read_bsr(path));
        return from_image(read_pnm16(path));
      },
      py::arg("path"), "Read a 16-bit PGM/PPM or a float32 .bsr container.");

  m.def(
      "write_image",
      [](const std::string& path, const DoubleArray& img) {
        const PlanarImage im = to_image(img);
        if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".bsr") == 0)
          write_bsr(path, im);
        else if (im.channels == 1)
          write_pgm16(path, im);
        else
          write_ppm16(path, im);
      },
      py::arg("path"), py::arg("img"),
      "Write by extension: .bsr is lossless float32, .pgm/.ppm quantize to 16 bits.");

  m.def(
      "read_motions",
      [](const std::string& path) { return from_motions(read_motions(path)); },
      py::arg("path"));

  m.def(
      "write_motions",
      [](const std::string& path, const DoubleArray& motions) {
        write_motions(path, to_motions(motions));
      },
      py::arg("path"), py::arg("motions"));
}
