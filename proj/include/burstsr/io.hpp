#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "burstsr/image.hpp"
#include "burstsr/motion.hpp"

namespace burstsr {

// Binary netpbm (P5 / P6). Writers always emit maxval 65535, two big-endian
// bytes per sample; readers accept any maxval up to 65535 (single byte below
// 256) and scale into [0, 1]. Values outside [0, 1] are clipped on write.
PlanarImage read_pnm16(const std::string& path);
void write_pgm16(const std::string& path, const PlanarImage& img);  // 1 channel
void write_ppm16(const std::string& path, const PlanarImage& img);  // 3 channels

// Lossless float container for intermediates: 16-byte header ("BSR1" magic,
// then width/height/channels as little-endian uint32) followed by the planes
// as little-endian float32, channel-major.
PlanarImage read_bsr(const std::string& path);
void write_bsr(const std::string& path, const PlanarImage& img);

// One JSON array per line, frame order, holding the six warp numbers
// [a11, a12, a21, a22, t1, t2] in normalized coordinates.
std::vector<AffineMotion> read_motions(const std::string& path);
void write_motions(const std::string& path, const std::vector<AffineMotion>& motions);

// Plain "key=value" lines; '#' starts a comment, blank lines are skipped.
// Values keep their raw string form.
std::map<std::string, std::string> read_kv(const std::string& path);
void write_kv(const std::string& path,
              const std::vector<std::pair<std::string, std::string>>& entries);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

bool file_exists(const std::string& path);

}  // namespace burstsr
