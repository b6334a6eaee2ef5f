#pragma once

#include <cmath>

#include "burstsr/image.hpp"

namespace burstsr {

// One bilinear sampling site. A position is valid when its full footprint
// lies inside [0, w-1] x [0, h-1]; the right/bottom edge is handled by
// collapsing onto the last sample with zero fractional weight.
struct BilinearTap {
  bool valid = false;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double fx = 0.0, fy = 0.0;
};

inline BilinearTap make_tap(double x, double y, int w, int h) {
  BilinearTap t;
  if (!(x >= 0.0 && x <= w - 1.0 && y >= 0.0 && y <= h - 1.0)) return t;
  t.valid = true;
  t.x0 = static_cast<int>(std::floor(x));
  t.y0 = static_cast<int>(std::floor(y));
  t.fx = x - t.x0;
  t.fy = y - t.y0;
  if (t.x0 >= w - 1) { t.x0 = w - 1; t.fx = 0.0; }
  if (t.y0 >= h - 1) { t.y0 = h - 1; t.fy = 0.0; }
  t.x1 = t.x0 + 1 < w ? t.x0 + 1 : w - 1;
  t.y1 = t.y0 + 1 < h ? t.y0 + 1 : h - 1;
  return t;
}

inline double tap_value(const PlanarImage& img, int c, const BilinearTap& t) {
  const double v00 = img.at(t.x0, t.y0, c), v10 = img.at(t.x1, t.y0, c);
  const double v01 = img.at(t.x0, t.y1, c), v11 = img.at(t.x1, t.y1, c);
  return (1.0 - t.fy) * ((1.0 - t.fx) * v00 + t.fx * v10) +
         t.fy * ((1.0 - t.fx) * v01 + t.fx * v11);
}

// Exact derivatives of the interpolated value with respect to the sample
// position, in pixel units. These are the in-cell one-sided differences, not
// a resampled gradient field, so they agree with finite differences of
// tap_value to machine precision away from cell boundaries.
inline double tap_dx(const PlanarImage& img, int c, const BilinearTap& t) {
  const double v00 = img.at(t.x0, t.y0, c), v10 = img.at(t.x1, t.y0, c);
  const double v01 = img.at(t.x0, t.y1, c), v11 = img.at(t.x1, t.y1, c);
  return (1.0 - t.fy) * (v10 - v00) + t.fy * (v11 - v01);
}

inline double tap_dy(const PlanarImage& img, int c, const BilinearTap& t) {
  const double v00 = img.at(t.x0, t.y0, c), v10 = img.at(t.x1, t.y0, c);
  const double v01 = img.at(t.x0, t.y1, c), v11 = img.at(t.x1, t.y1, c);
  return (1.0 - t.fx) * (v01 - v00) + t.fx * (v11 - v10);
}

}  // namespace burstsr
