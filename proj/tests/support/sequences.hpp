#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "handtrack/hand_model.hpp"
#include "handtrack/synth.hpp"

namespace handtrack::testing {

// Finger flexion of `amount` in [0, 1] applied to the four fingers and the thumb.
inline PoseVector flexed(double amount, PoseVector pose = rest_pose()) {
  for (int base : {10, 14, 18, 22}) {
    pose[base + 1] = 1.0 * amount;  // mcp flex
    pose[base + 2] = 1.2 * amount;  // pip
    pose[base + 3] = 0.8 * amount;  // dip
  }
  pose[7] = 0.4 * amount;
  pose[8] = 0.5 * amount;
  pose[9] = 0.6 * amount;
  return pose;
}

// Smooth flexion-extension cycles with global translation and rotation, keyed every
// `spacing` frames. The last keyframe sits on frame `frames - 1`.
inline PoseScript flexex_script(int frames = 200, int spacing = 4, double tilt = 0.0,
                                double period = 100.0) {
  PoseScript script;
  const double tau = 2.0 * std::numbers::pi;
  for (int f = 0;; f += spacing) {
    f = std::min(f, frames - 1);
    const double t = static_cast<double>(f);
    const double phase = tau * t / (frames - 1);
    PoseVector pose = flexed(0.7 * 0.5 * (1.0 - std::cos(tau * t / period)));
    pose[0] = 25.0 * std::sin(phase);
    pose[1] = 15.0 * std::sin(2.0 * phase);
    pose[2] = 20.0 * std::cos(phase) - 20.0;
    pose[3] = tilt + 0.15 * std::sin(phase);
    pose[4] = 0.2 * std::sin(phase + 1.0);
    pose[5] = 0.2 * std::cos(2.0 * phase) - 0.2;
    script.keyframes.push_back({f, pose});
    if (f == frames - 1) break;
  }
  return script;
}

}  // namespace handtrack::testing
