#pragma once

// `start:stop:steps` axis specifications.

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rfnoise {

enum class Spacing { linear, geometric };

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  int steps = 1;
  Spacing spacing = Spacing::linear;

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(static_cast<std::size_t>(steps));
    if (steps == 1) {
      v.push_back(start);
      return v;
    }
    for (int i = 0; i < steps; ++i) {
      const double t = static_cast<double>(i) / (steps - 1);
      if (spacing == Spacing::linear)
        v.push_back(i == steps - 1 ? stop : start + t * (stop - start));
      else
        v.push_back(i == steps - 1 ? stop : start * std::pow(stop / start, t));
    }
    return v;
  }
};

inline GridSpec parse_grid(std::string_view text, Spacing spacing = Spacing::linear) {
  auto fail = [&] { return std::invalid_argument("invalid grid spec '" + std::string(text) + "' (want start:stop:steps)"); };
  const auto c1 = text.find(':');
  const auto c2 = c1 == std::string_view::npos ? c1 : text.find(':', c1 + 1);
  if (c1 == std::string_view::npos || c2 == std::string_view::npos) throw fail();

  auto real = [&](std::string_view s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw fail();
    return v;
  };
  GridSpec g;
  g.start = real(text.substr(0, c1));
  g.stop = real(text.substr(c1 + 1, c2 - c1 - 1));
  const auto steps_text = text.substr(c2 + 1);
  auto [p, ec] = std::from_chars(steps_text.data(), steps_text.data() + steps_text.size(), g.steps);
  if (ec != std::errc() || p != steps_text.data() + steps_text.size()) throw fail();
  g.spacing = spacing;

  if (g.steps < 1) throw std::invalid_argument("grid needs at least one step");
  if (!std::isfinite(g.start) || !std::isfinite(g.stop) || g.stop < g.start) throw fail();
  if (spacing == Spacing::geometric && g.start <= 0.0)
    throw std::invalid_argument("geometric grid needs start > 0");
  return g;
}

}  // namespace rfnoise
