#pragma once

#include <array>

namespace burstsr {

// Sub-pixel affine motion in normalized coordinates (see coords.hpp):
// a point n maps to A n + t. Parameters serialize as the 6-vector
// (a11-1, a12, a21, a22-1, t1, t2) so the identity is all zeros.
struct AffineMotion {
  double a11 = 1.0, a12 = 0.0;
  double a21 = 0.0, a22 = 1.0;
  double t1 = 0.0, t2 = 0.0;

  static AffineMotion identity() { return {}; }

  static AffineMotion from_params(const std::array<double, 6>& p) {
    return {1.0 + p[0], p[1], p[2], 1.0 + p[3], p[4], p[5]};
  }

  std::array<double, 6> params() const {
    return {a11 - 1.0, a12, a21, a22 - 1.0, t1, t2};
  }

  double det() const { return a11 * a22 - a12 * a21; }

  bool is_identity(double tol = 0.0) const;
};

// compose(a, b): apply b first, then a (A = Aa*Ab, t = Aa*tb + ta). Under the
// pull-back warp convention, warp(warp(img, a), b) == warp(img, compose(a, b)).
AffineMotion compose(const AffineMotion& a, const AffineMotion& b);

// Throws NumericalError when the linear part is near singular.
AffineMotion inverse(const AffineMotion& m);

// Euclidean motion: rotation by theta (radians) about the image center plus
// a normalized translation.
AffineMotion make_euclidean(double theta, double t1, double t2);

// Translation given in pixels of a w x h grid.
AffineMotion make_translation_px(double dx, double dy, int w, int h);

// Norm of the parameter 6-vector difference; used for step tolerances.
double param_distance(const AffineMotion& a, const AffineMotion& b);

}  // namespace burstsr
