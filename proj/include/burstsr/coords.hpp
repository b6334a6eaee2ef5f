#pragma once

#include <algorithm>

namespace burstsr {

// Normalized image coordinates. The origin sits at the image center and the
// longer side spans [-1, 1]; pixel i of an axis of length n maps to
// (2i + 1 - n) / side with side = max(width, height). Because a low-res grid
// and the s-times larger high-res grid of the same scene share this domain
// (the LR pixel center coincides with the center of its s x s HR block),
// motion parameters expressed here are resolution independent and carry
// across pyramid levels and upsampling stages without conversion.

inline double norm_side(int w, int h) { return static_cast<double>(std::max(w, h)); }

inline double to_norm(double i, int n, double side) { return (2.0 * i + 1.0 - n) / side; }

inline double to_pixel(double q, int n, double side) { return 0.5 * (q * side + n - 1.0); }

// One pixel step expressed in normalized units, and its inverse.
inline double norm_per_pixel(int w, int h) { return 2.0 / norm_side(w, h); }
inline double pixels_per_norm(int w, int h) { return 0.5 * norm_side(w, h); }

}  // namespace burstsr
