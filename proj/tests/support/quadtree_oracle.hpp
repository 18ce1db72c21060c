#pragma once

#include <algorithm>
#include <tuple>
#include <vector>

#include "handtrack/depth.hpp"

namespace handtrack::testing {

struct OracleQuad {
  int x0, y0, size;
  double mean;
  bool operator<(const OracleQuad& o) const {
    return std::tie(y0, x0, size) < std::tie(o.y0, o.x0, o.size);
  }
};

// Straight recursive split over raw pixels, no precomputed pyramid.
inline void oracle_split(const DepthFrame& f, int x0, int y0, int size, double eps,
                         double min_valid_fraction, std::vector<OracleQuad>& out) {
  int valid = 0;
  double lo = 1e300, hi = -1e300, sum = 0.0;
  for (int y = y0; y < y0 + size; ++y) {
    for (int x = x0; x < x0 + size; ++x) {
      if (x >= f.width || y >= f.height || !f.valid(x, y)) continue;
      const double d = f.at(x, y);
      ++valid;
      sum += d;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  if (valid == 0) return;
  const bool full_enough = valid >= min_valid_fraction * size * size;
  if (size == 1 || (full_enough && hi - lo < eps)) {
    out.push_back({x0, y0, size, sum / valid});
    return;
  }
  const int h = size / 2;
  oracle_split(f, x0, y0, h, eps, min_valid_fraction, out);
  oracle_split(f, x0 + h, y0, h, eps, min_valid_fraction, out);
  oracle_split(f, x0, y0 + h, h, eps, min_valid_fraction, out);
  oracle_split(f, x0 + h, y0 + h, h, eps, min_valid_fraction, out);
}

inline std::vector<OracleQuad> oracle_quadtree(const DepthFrame& f, double eps,
                                               double min_valid_fraction) {
  int side = 1;
  while (side < f.width || side < f.height) side *= 2;
  std::vector<OracleQuad> out;
  oracle_split(f, 0, 0, side, eps, min_valid_fraction, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace handtrack::testing
