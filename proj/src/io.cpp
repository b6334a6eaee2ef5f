#include "burstsr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "burstsr/errors.hpp"

namespace burstsr {

namespace {

// Skips whitespace and '#' comments between netpbm header tokens.
int next_header_int(std::istream& in, const std::string& path) {
  for (;;) {
    const int c = in.peek();
    if (c == EOF) throw IoError(path + ": truncated header");
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    break;
  }
  int value = 0;
  if (!(in >> value)) throw IoError(path + ": malformed header");
  return value;
}

uint16_t quantize16(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<uint16_t>(std::lround(c * 65535.0));
}

void write_pnm(const std::string& path, const PlanarImage& img, bool color) {
  const int want = color ? 3 : 1;
  if (img.channels != want)
    throw ConfigError(path + ": expected " + std::to_string(want) + " channel image");
  if (img.width <= 0 || img.height <= 0) throw ConfigError(path + ": empty image");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << (color ? "P6" : "P5") << "\n"
      << img.width << " " << img.height << "\n65535\n";
  std::vector<uint8_t> row(static_cast<size_t>(img.width) * want * 2);
  for (int y = 0; y < img.height; ++y) {
    size_t o = 0;
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < want; ++c) {
        const uint16_t q = quantize16(img.at(x, y, c));
        row[o++] = static_cast<uint8_t>(q >> 8);
        row[o++] = static_cast<uint8_t>(q & 0xff);
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw IoError(path + ": write failed");
}

uint32_t read_u32le(std::istream& in) {
  uint8_t b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_u32le(std::ostream& out, uint32_t v) {
  const uint8_t b[4] = {static_cast<uint8_t>(v & 0xff), static_cast<uint8_t>((v >> 8) & 0xff),
                        static_cast<uint8_t>((v >> 16) & 0xff),
                        static_cast<uint8_t>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

PlanarImage read_pnm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || (m1 != '5' && m1 != '6')) throw IoError(path + ": not a binary P5/P6 file");
  const int channels = m1 == '6' ? 3 : 1;
  const int w = next_header_int(in, path);
  const int h = next_header_int(in, path);
  const int maxval = next_header_int(in, path);
  if (w <= 0 || h <= 0) throw IoError(path + ": bad dimensions");
  if (maxval <= 0 || maxval > 65535) throw IoError(path + ": unsupported maxval");
  in.get();  // exactly one whitespace byte separates header and raster

  const bool wide = maxval > 255;
  const size_t samples = static_cast<size_t>(w) * h * channels;
  std::vector<uint8_t> raster(samples * (wide ? 2 : 1));
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (static_cast<size_t>(in.gcount()) != raster.size()) throw IoError(path + ": truncated raster");

  PlanarImage img(w, h, channels);
  const double inv = 1.0 / maxval;
  size_t o = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) {
        uint32_t v;
        if (wide) {
          v = (static_cast<uint32_t>(raster[o]) << 8) | raster[o + 1];
          o += 2;
        } else {
          v = raster[o++];
        }
        img.at(x, y, c) = v * inv;
      }
  return img;
}

void write_pgm16(const std::string& path, const PlanarImage& img) { write_pnm(path, img, false); }

void write_ppm16(const std::string& path, const PlanarImage& img) { write_pnm(path, img, true); }

PlanarImage read_bsr(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open");
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "BSR1", 4) != 0)
    throw IoError(path + ": bad magic");
  const uint32_t w = read_u32le(in);
  const uint32_t h = read_u32le(in);
  const uint32_t c = read_u32le(in);
  if (!in || w == 0 || h == 0 || c == 0 || c > 16)
    throw IoError(path + ": bad header");
  const size_t n = static_cast<size_t>(w) * h * c;
  std::vector<uint8_t> buf(n * 4);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<size_t>(in.gcount()) != buf.size()) throw IoError(path + ": truncated data");

  PlanarImage img(static_cast<int>(w), static_cast<int>(h), static_cast<int>(c));
  for (size_t i = 0; i < n; ++i) {
    const uint32_t bits = static_cast<uint32_t>(buf[4 * i]) |
                          (static_cast<uint32_t>(buf[4 * i + 1]) << 8) |
                          (static_cast<uint32_t>(buf[4 * i + 2]) << 16) |
                          (static_cast<uint32_t>(buf[4 * i + 3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    img.data[i] = f;
  }
  return img;
}

void write_bsr(const std::string& path, const PlanarImage& img) {
  if (img.width <= 0 || img.height <= 0 || img.channels <= 0)
    throw ConfigError(path + ": empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write("BSR1", 4);
  write_u32le(out, static_cast<uint32_t>(img.width));
  write_u32le(out, static_cast<uint32_t>(img.height));
  write_u32le(out, static_cast<uint32_t>(img.channels));
  std::vector<uint8_t> buf(img.data.size() * 4);
  for (size_t i = 0; i < img.data.size(); ++i) {
    const float f = static_cast<float>(img.data[i]);
    uint32_t bits;
    std::memcpy(&bits, &f, 4);
    buf[4 * i] = static_cast<uint8_t>(bits & 0xff);
    buf[4 * i + 1] = static_cast<uint8_t>((bits >> 8) & 0xff);
    buf[4 * i + 2] = static_cast<uint8_t>((bits >> 16) & 0xff);
    buf[4 * i + 3] = static_cast<uint8_t>((bits >> 24) & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError(path + ": write failed");
}

std::vector<AffineMotion> read_motions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  std::vector<AffineMotion> motions;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_array() || j.size() != 6)
      throw IoError(path + ":" + std::to_string(lineno) + ": expected a 6-element array");
    AffineMotion m;
    m.a11 = j[0].get<double>();
    m.a12 = j[1].get<double>();
    m.a21 = j[2].get<double>();
    m.a22 = j[3].get<double>();
    m.t1 = j[4].get<double>();
    m.t2 = j[5].get<double>();
    motions.push_back(m);
  }
  return motions;
}

void write_motions(const std::string& path, const std::vector<AffineMotion>& motions) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  for (const AffineMotion& m : motions) {
    out << '[' << format_double(m.a11) << ", " << format_double(m.a12) << ", "
        << format_double(m.a21) << ", " << format_double(m.a22) << ", " << format_double(m.t1)
        << ", " << format_double(m.t2) << "]\n";
  }
  if (!out) throw IoError(path + ": write failed");
}

std::map<std::string, std::string> read_kv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    if (strip(line).empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = strip(line.substr(0, eq));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = strip(line.substr(eq + 1));
  }
  return kv;
}

void write_kv(const std::string& path,
              const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  for (const auto& [k, v] : entries) out << k << "=" << v << "\n";
  if (!out) throw IoError(path + ": write failed");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool file_exists(const std::string& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

}  // namespace burstsr
