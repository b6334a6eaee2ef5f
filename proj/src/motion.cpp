#include "burstsr/motion.hpp"

#include <cmath>

#include "burstsr/coords.hpp"
#include "burstsr/errors.hpp"

namespace burstsr {

bool AffineMotion::is_identity(double tol) const {
  const auto p = params();
  for (double v : p)
    if (std::abs(v) > tol) return false;
  return true;
}

AffineMotion compose(const AffineMotion& a, const AffineMotion& b) {
  AffineMotion r;
  r.a11 = a.a11 * b.a11 + a.a12 * b.a21;
  r.a12 = a.a11 * b.a12 + a.a12 * b.a22;
  r.a21 = a.a21 * b.a11 + a.a22 * b.a21;
  r.a22 = a.a21 * b.a12 + a.a22 * b.a22;
  r.t1 = a.a11 * b.t1 + a.a12 * b.t2 + a.t1;
  r.t2 = a.a21 * b.t1 + a.a22 * b.t2 + a.t2;
  return r;
}

AffineMotion inverse(const AffineMotion& m) {
  const double d = m.det();
  if (std::abs(d) < 1e-12) throw NumericalError("inverse: singular linear part");
  AffineMotion r;
  r.a11 = m.a22 / d;
  r.a12 = -m.a12 / d;
  r.a21 = -m.a21 / d;
  r.a22 = m.a11 / d;
  r.t1 = -(r.a11 * m.t1 + r.a12 * m.t2);
  r.t2 = -(r.a21 * m.t1 + r.a22 * m.t2);
  return r;
}

AffineMotion make_euclidean(double theta, double t1, double t2) {
  const double c = std::cos(theta), s = std::sin(theta);
  AffineMotion r;
  r.a11 = c;
  r.a12 = -s;
  r.a21 = s;
  r.a22 = c;
  r.t1 = t1;
  r.t2 = t2;
  return r;
}

AffineMotion make_translation_px(double dx, double dy, int w, int h) {
  const double step = norm_per_pixel(w, h);
  AffineMotion r;
  r.t1 = dx * step;
  r.t2 = dy * step;
  return r;
}

double param_distance(const AffineMotion& a, const AffineMotion& b) {
  const auto pa = a.params(), pb = b.params();
  double acc = 0.0;
  for (int i = 0; i < 6; ++i) {
    const double d = pa[i] - pb[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace burstsr
