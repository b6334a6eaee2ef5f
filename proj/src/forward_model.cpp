#include "burstsr/forward_model.hpp"

#include <cmath>

#include "burstsr/coords.hpp"
#include "burstsr/errors.hpp"
#include "burstsr/interp.hpp"

namespace burstsr {

size_t ValidityMask::count() const {
  size_t n = 0;
  for (uint8_t v : data) n += v != 0;
  return n;
}

double ValidityMask::fraction() const {
  return data.empty() ? 0.0 : static_cast<double>(count()) / data.size();
}

namespace {

void check_motion(const AffineMotion& m) {
  if (!(m.det() > 0.1)) throw NumericalError("warp: degenerate linear part");
}

}  // namespace

std::pair<PlanarImage, ValidityMask> warp_affine(const PlanarImage& img,
                                                 const AffineMotion& m,
                                                 int out_w, int out_h) {
  check_motion(m);
  const double side_out = norm_side(out_w, out_h);
  const double side_in = norm_side(img.width, img.height);
  PlanarImage out(out_w, out_h, img.channels);
  ValidityMask mask(out_w, out_h, false);

  for (int y = 0; y < out_h; ++y) {
    const double ny = to_norm(y, out_h, side_out);
    for (int x = 0; x < out_w; ++x) {
      const double nx = to_norm(x, out_w, side_out);
      const double qx = m.a11 * nx + m.a12 * ny + m.t1;
      const double qy = m.a21 * nx + m.a22 * ny + m.t2;
      const BilinearTap t = make_tap(to_pixel(qx, img.width, side_in),
                                     to_pixel(qy, img.height, side_in),
                                     img.width, img.height);
      if (!t.valid) continue;
      mask.set(x, y, true);
      for (int c = 0; c < img.channels; ++c) out.at(x, y, c) = tap_value(img, c, t);
    }
  }
  return {std::move(out), std::move(mask)};
}

PlanarImage warp_adjoint(const PlanarImage& r, const ValidityMask& mask,
                         const AffineMotion& m, int src_w, int src_h) {
  check_motion(m);
  const double side_out = norm_side(r.width, r.height);
  const double side_in = norm_side(src_w, src_h);
  PlanarImage acc(src_w, src_h, r.channels);

  for (int y = 0; y < r.height; ++y) {
    const double ny = to_norm(y, r.height, side_out);
    for (int x = 0; x < r.width; ++x) {
      if (!mask.at(x, y)) continue;
      const double nx = to_norm(x, r.width, side_out);
      const double qx = m.a11 * nx + m.a12 * ny + m.t1;
      const double qy = m.a21 * nx + m.a22 * ny + m.t2;
      const BilinearTap t = make_tap(to_pixel(qx, src_w, side_in),
                                     to_pixel(qy, src_h, side_in), src_w, src_h);
      if (!t.valid) continue;
      for (int c = 0; c < r.channels; ++c) {
        const double v = r.at(x, y, c);
        acc.at(t.x0, t.y0, c) += (1.0 - t.fy) * (1.0 - t.fx) * v;
        acc.at(t.x1, t.y0, c) += (1.0 - t.fy) * t.fx * v;
        acc.at(t.x0, t.y1, c) += t.fy * (1.0 - t.fx) * v;
        acc.at(t.x1, t.y1, c) += t.fy * t.fx * v;
      }
    }
  }
  return acc;
}

PlanarImage blur_downsample(const PlanarImage& img, int s) {
  if (s < 1 || img.width % s || img.height % s)
    throw ConfigError("blur_downsample: dimensions must be divisible by the scale");
  const int w = img.width / s, h = img.height / s;
  const double inv = 1.0 / (s * s);
  PlanarImage out(w, h, img.channels);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int by = 0; by < s; ++by)
          for (int bx = 0; bx < s; ++bx) acc += img.at(x * s + bx, y * s + by, c);
        out.at(x, y, c) = acc * inv;
      }
  return out;
}

PlanarImage blur_downsample_adjoint(const PlanarImage& lr, int s) {
  const double inv = 1.0 / (s * s);
  PlanarImage out(lr.width * s, lr.height * s, lr.channels);
  for (int c = 0; c < lr.channels; ++c)
    for (int y = 0; y < lr.height; ++y)
      for (int x = 0; x < lr.width; ++x) {
        const double v = lr.at(x, y, c) * inv;
        for (int by = 0; by < s; ++by)
          for (int bx = 0; bx < s; ++bx) out.at(x * s + bx, y * s + by, c) = v;
      }
  return out;
}

ValidityMask downsample_mask(const ValidityMask& mask, int s) {
  if (s < 1 || mask.width % s || mask.height % s)
    throw ConfigError("downsample_mask: dimensions must be divisible by the scale");
  ValidityMask out(mask.width / s, mask.height / s, true);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      bool all = true;
      for (int by = 0; by < s && all; ++by)
        for (int bx = 0; bx < s; ++bx)
          if (!mask.at(x * s + bx, y * s + by)) { all = false; break; }
      out.set(x, y, all);
    }
  return out;
}

BayerFrame mosaic(const PlanarImage& rgb, BayerPattern pattern) {
  if (rgb.channels != 3) throw ConfigError("mosaic: expected 3 channels");
  if ((rgb.width & 1) || (rgb.height & 1))
    throw ConfigError("mosaic: dimensions must be even");
  BayerFrame out(rgb.width, rgb.height, pattern);
  for (int y = 0; y < rgb.height; ++y)
    for (int x = 0; x < rgb.width; ++x)
      out.at(x, y) = rgb.at(x, y, out.channel_at(x, y));
  return out;
}

PlanarImage mosaic_adjoint(const BayerFrame& frame) {
  PlanarImage out(frame.width, frame.height, 3);
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x)
      out.at(x, y, frame.channel_at(x, y)) = frame.at(x, y);
  return out;
}

Observation forward_apply(const PlanarImage& x, const AffineMotion& m,
                          const DegradeConfig& cfg) {
  auto [warped, hr_mask] = warp_affine(x, m, x.width, x.height);
  PlanarImage lr = blur_downsample(warped, cfg.scale);
  ValidityMask lr_mask = downsample_mask(hr_mask, cfg.scale);
  if (!cfg.mosaic) return {std::move(lr), std::move(lr_mask)};

  BayerFrame frame = mosaic(lr, cfg.pattern);
  PlanarImage plane(frame.width, frame.height, 1);
  plane.data = frame.data;
  return {std::move(plane), std::move(lr_mask)};
}

PlanarImage adjoint_apply(const PlanarImage& r, const AffineMotion& m,
                          const DegradeConfig& cfg, const ValidityMask& lr_mask,
                          int hr_w, int hr_h) {
  if (r.width != lr_mask.width || r.height != lr_mask.height)
    throw ConfigError("adjoint_apply: residual and mask shapes differ");

  PlanarImage rgb;
  if (cfg.mosaic) {
    if (r.channels != 1) throw ConfigError("adjoint_apply: raw residual must be 1-channel");
    BayerFrame masked(r.width, r.height, cfg.pattern);
    for (int y = 0; y < r.height; ++y)
      for (int x = 0; x < r.width; ++x)
        masked.at(x, y) = lr_mask.at(x, y) ? r.at(x, y, 0) : 0.0;
    rgb = mosaic_adjoint(masked);
  } else {
    rgb = r;
    for (int c = 0; c < rgb.channels; ++c)
      for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x)
          if (!lr_mask.at(x, y)) rgb.at(x, y, c) = 0.0;
  }

  PlanarImage spread = blur_downsample_adjoint(rgb, cfg.scale);
  if (spread.width != hr_w || spread.height != hr_h)
    throw ConfigError("adjoint_apply: high-res dimensions inconsistent with scale");
  ValidityMask hr_full(hr_w, hr_h, true);
  return warp_adjoint(spread, hr_full, m, hr_w, hr_h);
}

MotionJacobian motion_jacobian(const PlanarImage& z, const AffineMotion& m,
                               const DegradeConfig& cfg) {
  check_motion(m);
  const int w = z.width, h = z.height;
  const double side = norm_side(w, h);
  const double px_per_norm = 0.5 * side;

  // d(sample position)/d(params), chained with the interpolant derivative.
  // Columns, in parameter order (da11, da12, da21, da22, t1, t2):
  //   x-coordinate moves with (nx, ny, 0, 0, 1, 0) * side/2,
  //   y-coordinate moves with (0, 0, nx, ny, 0, 1) * side/2.
  std::array<PlanarImage, 6> hr;
  for (auto& p : hr) p = PlanarImage(w, h, z.channels);
  ValidityMask hr_mask(w, h, false);

  for (int y = 0; y < h; ++y) {
    const double ny = to_norm(y, h, side);
    for (int x = 0; x < w; ++x) {
      const double nx = to_norm(x, w, side);
      const double qx = m.a11 * nx + m.a12 * ny + m.t1;
      const double qy = m.a21 * nx + m.a22 * ny + m.t2;
      const BilinearTap t =
          make_tap(to_pixel(qx, w, side), to_pixel(qy, h, side), w, h);
      if (!t.valid) continue;
      hr_mask.set(x, y, true);
      for (int c = 0; c < z.channels; ++c) {
        const double gx = tap_dx(z, c, t) * px_per_norm;
        const double gy = tap_dy(z, c, t) * px_per_norm;
        hr[0].at(x, y, c) = gx * nx;
        hr[1].at(x, y, c) = gx * ny;
        hr[2].at(x, y, c) = gy * nx;
        hr[3].at(x, y, c) = gy * ny;
        hr[4].at(x, y, c) = gx;
        hr[5].at(x, y, c) = gy;
      }
    }
  }

  MotionJacobian jac;
  jac.mask = downsample_mask(hr_mask, cfg.scale);
  for (int i = 0; i < 6; ++i) {
    PlanarImage lr = blur_downsample(hr[i], cfg.scale);
    PlanarImage col;
    if (cfg.mosaic) {
      BayerFrame f = mosaic(lr, cfg.pattern);
      col = PlanarImage(f.width, f.height, 1);
      col.data = f.data;
    } else {
      col = std::move(lr);
    }
    for (int c = 0; c < col.channels; ++c)
      for (int y = 0; y < col.height; ++y)
        for (int x = 0; x < col.width; ++x)
          if (!jac.mask.at(x, y)) col.at(x, y, c) = 0.0;
    jac.planes[i] = std::move(col);
  }
  return jac;
}

}  // namespace burstsr
