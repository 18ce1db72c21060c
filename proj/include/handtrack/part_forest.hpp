#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "handtrack/depth.hpp"

namespace handtrack {

/// Depth read by probes that leave the frame or land on invalid pixels.
inline constexpr float kBackgroundDepth = 10000.0f;

/// Depth-difference feature with offsets in px*mm, divided by the center depth at
/// evaluation so responses are depth invariant.
struct SplitFeature {
  Eigen::Vector2f u = Eigen::Vector2f::Zero();
  Eigen::Vector2f v = Eigen::Vector2f::Zero();
  float threshold = 0.0f;  // mm
};

/// d(x + u / d(x)) - d(x + v / d(x)). The pixel at (x, y) must be valid.
float depth_feature(const DepthFrame& frame, int x, int y, const SplitFeature& feature);

using LabelDistribution = std::array<float, kNumPartLabels>;

/// Node of a tree stored in preorder: an internal node's left child directly follows it.
struct ForestNode {
  bool leaf = true;
  SplitFeature split;
  int right = -1;
  LabelDistribution distribution{};
};

struct DecisionTree {
  std::vector<ForestNode> nodes;

  /// Leaf distribution reached by a valid pixel; responses below the threshold go left.
  const LabelDistribution& classify(const DepthFrame& frame, int x, int y) const;
  int depth() const;
};

struct PartForest {
  std::vector<DecisionTree> trees;
};

struct ForestParams {
  int trees = 3;
  int max_depth = 22;
  int pixels_per_image = 2000;
  /// Candidate (feature, threshold) pairs per node, split into
  /// candidates / thresholds_per_feature offset pairs.
  int candidates = 4000;
  int thresholds_per_feature = 20;
  int min_samples = 10;
  double max_offset = 30000.0;  // px*mm
  std::uint64_t seed = 1;
};

/// Labeled frames kept as crops around their valid pixels. Crops lose nothing: every
/// probe outside the crop would have read background anyway.
class TrainingSet {
 public:
  void add(const DepthFrame& frame, const LabelImage& labels);
  std::size_t size() const { return images_.size(); }

  struct Image {
    int frame_width = 0;
    int frame_height = 0;
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
    std::vector<float> depth;
    std::vector<std::uint8_t> labels;
    std::vector<std::uint32_t> foreground;  // crop indices of valid, labeled pixels
  };
  const std::vector<Image>& images() const { return images_; }

 private:
  std::vector<Image> images_;
};

/// Grows each tree on a bootstrap sample of the images, choosing at every node the
/// candidate split with the highest Shannon information gain. Nodes stop at max_depth,
/// below min_samples, or when no candidate gains. Deterministic given params.seed.
PartForest train_forest(const TrainingSet& data, const ForestParams& params);

struct Classification {
  LabelImage labels;
  std::vector<float> confidence;  // probability of the chosen label, 0 off the hand
};

/// Averages the trees' leaf distributions per valid pixel and keeps the argmax (lowest
/// label on ties). Invalid pixels get the background label.
Classification classify_frame(const PartForest& forest, const DepthFrame& frame);

struct AccuracyStats {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
  AccuracyStats& operator+=(const AccuracyStats& o) {
    correct += o.correct;
    total += o.total;
    return *this;
  }
};

/// Per-pixel accuracy over valid pixels that carry a ground-truth part label.
AccuracyStats pixel_accuracy(const PartForest& forest, const DepthFrame& frame,
                             const LabelImage& truth);

// Binary little-endian format: "HTPF", version, tree count, label count, then each tree
// as a preorder stream of nodes (kind byte; internal: u, v, threshold as float32;
// leaf: 12 float32 probabilities). Only realized nodes are stored.
void write_forest(std::ostream& out, const PartForest& forest);
PartForest read_forest(std::istream& in);
void save_forest(const std::filesystem::path& path, const PartForest& forest);
PartForest load_forest(const std::filesystem::path& path);

}  // namespace handtrack
