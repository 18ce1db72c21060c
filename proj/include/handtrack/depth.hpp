#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "handtrack/gaussian.hpp"

namespace handtrack {

/// Pinhole intrinsics. Pixel centers sit at integer coordinates.
struct Camera {
  double f = 220.0;
  double cx = 160.0;
  double cy = 120.0;

  Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    return {f * p.x() / p.z() + cx, f * p.y() / p.z() + cy};
  }
  Eigen::Vector3d unproject(const Eigen::Vector2d& px, double z) const {
    return {(px.x() - cx) * z / f, (px.y() - cy) * z / f, z};
  }
};

/// Dense depth map in millimeters, row-major. A value of 0 marks an invalid pixel.
struct DepthFrame {
  int width = 0;
  int height = 0;
  std::vector<float> depth;
  Camera camera;

  DepthFrame() = default;
  DepthFrame(int w, int h, const Camera& cam, float fill = 0.0f)
      : width(w), height(h), depth(static_cast<std::size_t>(w) * h, fill), camera(cam) {}

  float at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return depth[static_cast<std::size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool valid(int x, int y) const { return at(x, y) > 0.0f; }
  std::size_t valid_count() const;
};

inline constexpr std::uint8_t kBackgroundLabel = 255;

/// Per-pixel part labels; kBackgroundLabel marks pixels without a part.
struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> labels;

  LabelImage() = default;
  LabelImage(int w, int h, std::uint8_t fill = kBackgroundLabel)
      : width(w), height(h), labels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// Clips to the working volume [near, far] and median filters valid pixels over a
/// (2 radius + 1)^2 window. Invalid pixels stay invalid and never enter a window.
DepthFrame preprocess(const DepthFrame& frame, double near = 150.0, double far = 600.0,
                      int median_radius = 1);

/// Square quadtree leaf covering pixels [x0, x0 + size) x [y0, y0 + size). mean_depth
/// averages the valid member pixels only.
struct Quad {
  int x0 = 0;
  int y0 = 0;
  int size = 1;
  double mean_depth = 0.0;
  int label = kNoLabel;

  Eigen::Vector2d center() const {
    const double half = 0.5 * (size - 1);
    return {x0 + half, y0 + half};
  }
};

/// Leaves of the depth quadtree. A quad becomes a leaf once the depth spread of its valid
/// pixels is below eps_c and at least min_valid_fraction of its pixels are valid, or once
/// it shrinks to one pixel. Quads without valid pixels are dropped, so the leaves tile the
/// valid pixels exactly once. The root is the smallest power-of-two square holding the
/// frame; area outside the frame counts as invalid. min_valid_fraction = 1 splits every
/// quad that touches background.
std::vector<Quad> quadtree_leaves(const DepthFrame& frame, double eps_c = 20.0,
                                  double min_valid_fraction = 0.5);

/// One unit-weight Gaussian per quad: mu at the quad center, sigma = side / sqrt(2).
Mixture<Gaussian2D> quads_to_mixture(const std::vector<Quad>& quads);

/// quads_to_mixture(quadtree_leaves(frame, eps_c, min_valid_fraction)).
Mixture<Gaussian2D> quadtree_cluster(const DepthFrame& frame, double eps_c = 20.0,
                                     double min_valid_fraction = 0.5);

/// Sets each quad's label to the plurality label among its valid, labeled pixels.
/// Ties go to the smallest label id; quads without labeled pixels get kNoLabel.
void assign_quad_labels(std::vector<Quad>& quads, const DepthFrame& frame,
                        const LabelImage& labels);

}  // namespace handtrack
