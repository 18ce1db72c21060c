#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <vector>

#include "handtrack/depth.hpp"
#include "handtrack/hand_model.hpp"

namespace handtrack {

/// Rendered frame with everything the tracker is later scored against.
struct GroundTruthFrame {
  DepthFrame depth;
  LabelImage labels;
  PoseVector pose = PoseVector::Zero();
  FingertipPositions fingertips;
};

struct RenderOptions {
  double noise_std = 0.0;  // mm, additive Gaussian depth noise before quantization
  std::uint64_t seed = 0;
};

/// Ray-casts every posed Gaussian as a sphere of radius sigma. Each pixel keeps the
/// nearest hit (depth rounded to 1 mm) and that Gaussian's part label; misses stay
/// invalid with the background label.
GroundTruthFrame render_depth(const HandModel& model, const PoseVector& pose, const Camera& camera,
                              int width, int height, const RenderOptions& options = {});

/// Pose spread over a broad slice of pose space: each joint uniform within its limits
/// clipped to [-0.35, 1.6] rad, global rotations within +-0.4 rad, and root translation
/// within +-30, +-20, +-40 mm of the rest placement so the hand stays in view.
PoseVector sample_pose(const HandModel& model, std::mt19937_64& rng);

struct Keyframe {
  int frame = 0;
  PoseVector pose = PoseVector::Zero();
};

/// Keyframed pose trajectory with per-DOF linear interpolation. The sequence spans
/// every frame from the first keyframe to the last, inclusive.
struct PoseScript {
  std::vector<Keyframe> keyframes;

  /// Throws std::invalid_argument unless frame indices strictly increase.
  void validate() const;
  int first_frame() const { return keyframes.front().frame; }
  int last_frame() const { return keyframes.back().frame; }
  PoseVector pose_at(int frame) const;
};

std::vector<GroundTruthFrame> make_sequence(const HandModel& model, const PoseScript& script,
                                            const Camera& camera, int width, int height,
                                            const RenderOptions& options = {});

// Script file: "handtrack-script 1" header, then "key <frame> <26 values>" lines.
PoseScript parse_pose_script(std::istream& in);
PoseScript load_pose_script(const std::filesystem::path& path);
void write_pose_script(std::ostream& out, const PoseScript& script);

}  // namespace handtrack
