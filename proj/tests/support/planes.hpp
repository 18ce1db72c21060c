#pragma once

#include <random>

#include "handtrack/depth.hpp"

namespace handtrack::testing {

// Two fronto-parallel rectangles of random size and height: a near one (label 0) on the
// left and a far one (label 1) to its right.
inline void two_plane_frame(std::mt19937_64& rng, DepthFrame& frame, LabelImage& labels) {
  constexpr int w = 160, h = 120;
  frame = DepthFrame(w, h, Camera{110.0, 80.0, 60.0});
  labels = LabelImage(w, h);
  std::uniform_int_distribution<int> side(20, 40), top(5, 60), gap(2, 20), left(5, 40);
  std::uniform_real_distribution<float> near_d(280.0f, 320.0f), far_d(430.0f, 470.0f);
  const int xa = left(rng), wa = side(rng), ya = top(rng), ha = side(rng);
  const int xb = xa + wa + gap(rng), wb = side(rng), yb = top(rng), hb = side(rng);
  const float da = near_d(rng), db = far_d(rng);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (x >= xa && x < xa + wa && y >= ya && y < ya + ha) {
        frame.at(x, y) = da;
        labels.at(x, y) = 0;
      } else if (x >= xb && x < xb + wb && y >= yb && y < yb + hb) {
        frame.at(x, y) = db;
        labels.at(x, y) = 1;
      }
    }
  }
}

}  // namespace handtrack::testing
