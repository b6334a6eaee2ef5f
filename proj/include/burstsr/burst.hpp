#pragma once

#include <optional>
#include <vector>

#include "burstsr/errors.hpp"
#include "burstsr/forward_model.hpp"
#include "burstsr/image.hpp"

namespace burstsr {

// A captured (or synthesized) low-res frame stack. In raw mode each frame is
// a single-plane Bayer mosaic; in RGB mode each frame has three channels.
struct Burst {
  std::vector<PlanarImage> frames;
  bool raw = true;
  BayerPattern pattern = BayerPattern::RGGB;
  std::optional<NoiseParams> noise;

  size_t size() const { return frames.size(); }
  int frame_width() const { return frames.empty() ? 0 : frames.front().width; }
  int frame_height() const { return frames.empty() ? 0 : frames.front().height; }

  BayerFrame bayer(size_t k) const {
    if (!raw) throw ConfigError("Burst::bayer: burst is not raw");
    const PlanarImage& f = frames.at(k);
    BayerFrame b(f.width, f.height, pattern);
    b.data = f.data;
    b.noise = noise;
    return b;
  }

  DegradeConfig degrade_config(int scale) const {
    DegradeConfig cfg;
    cfg.scale = scale;
    cfg.mosaic = raw;
    cfg.pattern = pattern;
    return cfg;
  }
};

}  // namespace burstsr
