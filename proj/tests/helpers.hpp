#pragma once

// Shared test utilities: deterministic inputs, temp directories, and
// independently coded reference implementations ("oracles") that the library
// is checked against. The oracles favor the most literal formulation of each
// definition (per-pixel loops, dense matrices) over speed.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "burstsr/coords.hpp"
#include "burstsr/forward_model.hpp"
#include "burstsr/image.hpp"
#include "burstsr/interp.hpp"
#include "burstsr/motion.hpp"
#include "burstsr/rng.hpp"

namespace testutil {

using namespace burstsr;

inline PlanarImage random_image(int w, int h, int c, uint64_t seed, double lo = 0.0,
                                double hi = 1.0) {
  SplitMix64 g(seed);
  PlanarImage img(w, h, c);
  for (double& v : img.data) v = g.uniform(lo, hi);
  return img;
}

// Random image put through a few 3x3 box passes. Smooth enough that sampled
// derivatives behave, but still full of texture.
inline PlanarImage smooth_image(int w, int h, int c, uint64_t seed, int passes = 4) {
  PlanarImage img = random_image(w, h, c, seed);
  for (int p = 0; p < passes; ++p) {
    PlanarImage out(w, h, c);
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double sum = 0.0;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
              sum += img.at(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1), ch);
          out.at(x, y, ch) = sum / 9.0;
        }
    img = std::move(out);
  }
  return img;
}

// A small motion whose translation lands well inside interpolation cells of
// the warped grid, so no sample sits on a cell boundary (where the bilinear
// interpolant has no two-sided derivative). Offsets are drawn in pixels of
// the grid being warped and kept a safe distance from integer values.
inline AffineMotion cell_safe_motion(uint64_t seed, int hr_w, int hr_h) {
  SplitMix64 g(seed);
  const double npp = norm_per_pixel(hr_w, hr_h);
  const double theta = g.uniform(-0.4, 0.4) * 3.14159265358979323846 / 180.0;
  const double tx = (g.uniform(0.3, 0.7) + static_cast<double>(g.next() % 3) - 1.0) * npp;
  const double ty = (g.uniform(0.3, 0.7) + static_cast<double>(g.next() % 3) - 1.0) * npp;
  return make_euclidean(theta, tx, ty);
}

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& stem) {
    static uint64_t counter = 0;
    path = std::filesystem::temp_directory_path() /
           (stem + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::vector<char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_abs_diff(const PlanarImage& a, const PlanarImage& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

// ---------------------------------------------------------------------------
// core-image oracles

// Literal stencil version of the demosaic rule: for each missing channel,
// average the 3x3 neighbors whose (unclamped) parity owns that channel,
// reading each from the nearest in-range site of the same parity.
inline PlanarImage oracle_demosaic(const BayerFrame& f) {
  const auto channel_of = [](int x, int y) {
    if ((y & 1) == 0) return (x & 1) == 0 ? 0 : 1;
    return (x & 1) == 0 ? 1 : 2;
  };
  const auto mirror = [](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * n - 2 - i : i); };
  PlanarImage out(f.width, f.height, 3);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x)
      for (int c = 0; c < 3; ++c) {
        if (channel_of(x, y) == c) {
          out.at(x, y, c) = f.at(x, y);
          continue;
        }
        double sum = 0.0;
        int count = 0;
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx)
            if (channel_of(x + dx, y + dy) == c) {
              sum += f.at(mirror(x + dx, f.width), mirror(y + dy, f.height));
              ++count;
            }
        out.at(x, y, c) = sum / count;
      }
  return out;
}

// One blur+decimate step, written as a non-separable 5x5 convolution with a
// kernel recomputed from the Gaussian formula.
inline PlanarImage oracle_pyramid_step(const PlanarImage& img) {
  double k1[5];
  double sum = 0.0;
  for (int i = -2; i <= 2; ++i) sum += std::exp(-0.5 * i * i);
  for (int i = -2; i <= 2; ++i) k1[i + 2] = std::exp(-0.5 * i * i) / sum;

  const int w = img.width, h = img.height;
  PlanarImage blurred(w, h, img.channels);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int dy = -2; dy <= 2; ++dy)
          for (int dx = -2; dx <= 2; ++dx)
            acc += k1[dx + 2] * k1[dy + 2] *
                   img.at(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1), c);
        blurred.at(x, y, c) = acc;
      }
  PlanarImage out((w + 1) / 2, (h + 1) / 2, img.channels);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x) out.at(x, y, c) = blurred.at(2 * x, 2 * y, c);
  return out;
}

// ---------------------------------------------------------------------------
// forward-model oracles

// Direct bilinear evaluation of the warp at one output pixel, no shared code
// with the library's tap machinery.
inline PlanarImage oracle_warp(const PlanarImage& img, const AffineMotion& m, int out_w,
                               int out_h) {
  PlanarImage out(out_w, out_h, img.channels);
  const double side_out = std::max(out_w, out_h);
  const double side_in = std::max(img.width, img.height);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      const double nx = (2.0 * x + 1.0 - out_w) / side_out;
      const double ny = (2.0 * y + 1.0 - out_h) / side_out;
      const double qx = m.a11 * nx + m.a12 * ny + m.t1;
      const double qy = m.a21 * nx + m.a22 * ny + m.t2;
      const double px = 0.5 * (qx * side_in + img.width - 1.0);
      const double py = 0.5 * (qy * side_in + img.height - 1.0);
      if (!(px >= 0.0 && px <= img.width - 1.0 && py >= 0.0 && py <= img.height - 1.0))
        continue;  // leave 0, matching the masked convention
      const int x0 = std::min(static_cast<int>(std::floor(px)), img.width - 2 >= 0 ? img.width - 2 : 0);
      const int y0 = std::min(static_cast<int>(std::floor(py)), img.height - 2 >= 0 ? img.height - 2 : 0);
      const double fx = px - x0, fy = py - y0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = (1 - fx) * img.at(x0, y0, c) + fx * img.at(x0 + 1, y0, c);
        const double bot = (1 - fx) * img.at(x0, y0 + 1, c) + fx * img.at(x0 + 1, y0 + 1, c);
        out.at(x, y, c) = (1 - fy) * top + fy * bot;
      }
    }
  return out;
}

inline PlanarImage oracle_block_mean(const PlanarImage& img, int s) {
  PlanarImage out(img.width / s, img.height / s, img.channels);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x) {
        double sum = 0.0;
        for (int dy = 0; dy < s; ++dy)
          for (int dx = 0; dx < s; ++dx) sum += img.at(x * s + dx, y * s + dy, c);
        out.at(x, y, c) = sum / (s * s);
      }
  return out;
}

// ---------------------------------------------------------------------------
// dense linear-algebra oracle

// Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
inline double jacobi_max_eigenvalue(std::vector<double> a, int n) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
  }
  double lmax = a[0];
  for (int i = 1; i < n; ++i) lmax = std::max(lmax, a[i * n + i]);
  return lmax;
}

// ---------------------------------------------------------------------------
// TV prox oracle

inline double tv_objective(const PlanarImage& x, const PlanarImage& v, double tau) {
  double fit = 0.0;
  for (size_t i = 0; i < x.data.size(); ++i) {
    const double d = x.data[i] - v.data[i];
    fit += 0.5 * d * d;
  }
  double tv = 0.0;
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < x.height; ++y)
      for (int xx = 0; xx < x.width; ++xx) {
        const double gx = xx + 1 < x.width ? x.at(xx + 1, y, c) - x.at(xx, y, c) : 0.0;
        const double gy = y + 1 < x.height ? x.at(xx, y + 1, c) - x.at(xx, y, c) : 0.0;
        tv += std::sqrt(gx * gx + gy * gy);
      }
  return fit + tau * tv;
}

// Minimizes 1/2 ||x - v||^2 + tau TV(x) by projected gradient on the dual
// (a different algorithm family than the library's semi-implicit fixed
// point), run until the iterates stall below 1e-8.
inline PlanarImage oracle_prox_tv(const PlanarImage& v, double tau) {
  if (tau <= 0.0) return v;
  const int w = v.width, h = v.height;
  PlanarImage out(w, h, v.channels);
  for (int c = 0; c < v.channels; ++c) {
    std::vector<double> p1(static_cast<size_t>(w) * h, 0.0), p2(p1.size(), 0.0);
    const auto idx = [w](int x, int y) { return static_cast<size_t>(y) * w + x; };

    // x(p) = v - tau * DT p with DT the exact transpose of the forward-diff
    // gradient (Neumann: last row/column differences are absent).
    std::vector<double> xv(p1.size());
    const auto form_x = [&]() {
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) xv[idx(x, y)] = v.at(x, y, c);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w - 1; ++x) {
          xv[idx(x + 1, y)] -= tau * p1[idx(x, y)];
          xv[idx(x, y)] += tau * p1[idx(x, y)];
        }
      for (int y = 0; y < h - 1; ++y)
        for (int x = 0; x < w; ++x) {
          xv[idx(x, y + 1)] -= tau * p2[idx(x, y)];
          xv[idx(x, y)] += tau * p2[idx(x, y)];
        }
    };

    const double step = 1.0 / (8.0 * tau * tau + 1e-30);
    for (int it = 0; it < 200000; ++it) {
      form_x();
      // gradient of 1/2||v - tau DT p||^2 in p is -tau D x(p)
      double change = 0.0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          double g1 = x + 1 < w ? xv[idx(x + 1, y)] - xv[idx(x, y)] : 0.0;
          double g2 = y + 1 < h ? xv[idx(x, y + 1)] - xv[idx(x, y)] : 0.0;
          double n1 = p1[idx(x, y)] + step * tau * g1;
          double n2 = p2[idx(x, y)] + step * tau * g2;
          const double norm = std::sqrt(n1 * n1 + n2 * n2);
          if (norm > 1.0) {
            n1 /= norm;
            n2 /= norm;
          }
          change = std::max({change, std::abs(n1 - p1[idx(x, y)]), std::abs(n2 - p2[idx(x, y)])});
          p1[idx(x, y)] = n1;
          p2[idx(x, y)] = n2;
        }
      if (change < 1e-8 && it > 10) break;
    }
    form_x();
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(x, y, c) = xv[idx(x, y)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// metric oracles

inline double oracle_psnr(const PlanarImage& a, const PlanarImage& b, double peak, int border) {
  double acc = 0.0;
  size_t n = 0;
  for (int c = 0; c < a.channels; ++c)
    for (int y = border; y < a.height - border; ++y)
      for (int x = border; x < a.width - border; ++x) {
        const double d = a.at(x, y, c) - b.at(x, y, c);
        acc += d * d;
        ++n;
      }
  const double mse = acc / n;
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

// Window statistics computed by direct per-window loops.
inline double oracle_ssim(const PlanarImage& a3, const PlanarImage& b3, double peak) {
  const PlanarImage a = a3.channels == 3 ? to_grayscale(a3) : a3;
  const PlanarImage b = b3.channels == 3 ? to_grayscale(b3) : b3;
  const int win = 8;
  const double c1 = 0.0001 * peak * peak, c2 = 0.0009 * peak * peak;
  double acc = 0.0;
  size_t count = 0;
  for (int y0 = 0; y0 + win <= a.height; ++y0)
    for (int x0 = 0; x0 + win <= a.width; ++x0) {
      double ma = 0, mb = 0;
      for (int y = y0; y < y0 + win; ++y)
        for (int x = x0; x < x0 + win; ++x) {
          ma += a.at(x, y, 0);
          mb += b.at(x, y, 0);
        }
      ma /= win * win;
      mb /= win * win;
      double va = 0, vb = 0, cov = 0;
      for (int y = y0; y < y0 + win; ++y)
        for (int x = x0; x < x0 + win; ++x) {
          va += (a.at(x, y, 0) - ma) * (a.at(x, y, 0) - ma);
          vb += (b.at(x, y, 0) - mb) * (b.at(x, y, 0) - mb);
          cov += (a.at(x, y, 0) - ma) * (b.at(x, y, 0) - mb);
        }
      va /= win * win;
      vb /= win * win;
      cov /= win * win;
      acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return acc / count;
}

// Catmull-Rom kernel evaluated from its piecewise-cubic closed form.
inline double catmull_rom_kernel(double t) {
  const double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return (a + 2.0) * t * t * t - (a + 3.0) * t * t + 1.0;
  if (t < 2.0) return a * (t * t * t - 5.0 * t * t + 8.0 * t - 4.0);
  return 0.0;
}

inline PlanarImage oracle_catmull_rom_upsample(const PlanarImage& img, int s) {
  const int w = img.width * s, h = img.height * s;
  PlanarImage out(w, h, img.channels);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double sx = (x + 0.5) / s - 0.5;
        const double sy = (y + 0.5) / s - 0.5;
        double acc = 0.0;
        for (int j = static_cast<int>(std::floor(sy)) - 1; j <= std::floor(sy) + 2; ++j)
          for (int i = static_cast<int>(std::floor(sx)) - 1; i <= std::floor(sx) + 2; ++i) {
            const double wgt = catmull_rom_kernel(sx - i) * catmull_rom_kernel(sy - j);
            acc += wgt * img.at(std::clamp(i, 0, img.width - 1), std::clamp(j, 0, img.height - 1), c);
          }
        out.at(x, y, c) = acc;
      }
  return out;
}

// Pixel-space evaluation of the mean mapping distance between two warps:
// transforms every grid center with each motion separately, in pixel
// coordinates end to end.
inline double oracle_geometric_error(const AffineMotion& pe, const AffineMotion& pt, int w,
                                     int h) {
  const double side = std::max(w, h);
  double acc = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double nx = (2.0 * x + 1.0 - w) / side;
      const double ny = (2.0 * y + 1.0 - h) / side;
      const double ex = 0.5 * ((pe.a11 * nx + pe.a12 * ny + pe.t1) * side + w - 1.0);
      const double ey = 0.5 * ((pe.a21 * nx + pe.a22 * ny + pe.t2) * side + h - 1.0);
      const double tx = 0.5 * ((pt.a11 * nx + pt.a12 * ny + pt.t1) * side + w - 1.0);
      const double ty = 0.5 * ((pt.a21 * nx + pt.a22 * ny + pt.t2) * side + h - 1.0);
      acc += std::hypot(ex - tx, ey - ty);
    }
  return acc / (static_cast<double>(w) * h);
}

}  // namespace testutil
