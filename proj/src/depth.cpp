#include "handtrack/depth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace handtrack {

std::size_t DepthFrame::valid_count() const {
  return static_cast<std::size_t>(
      std::count_if(depth.begin(), depth.end(), [](float d) { return d > 0.0f; }));
}

DepthFrame preprocess(const DepthFrame& frame, double near, double far, int median_radius) {
  if (!(near < far)) throw std::invalid_argument("preprocess: near must be below far");
  if (median_radius < 0) throw std::invalid_argument("preprocess: negative median radius");

  DepthFrame clipped = frame;
  for (float& d : clipped.depth) {
    if (!(d >= near && d <= far)) d = 0.0f;
  }
  if (median_radius == 0) return clipped;

  DepthFrame out = clipped;
  std::vector<float> window;
  window.reserve(static_cast<std::size_t>((2 * median_radius + 1) * (2 * median_radius + 1)));
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (!clipped.valid(x, y)) continue;
      window.clear();
      for (int dy = -median_radius; dy <= median_radius; ++dy) {
        for (int dx = -median_radius; dx <= median_radius; ++dx) {
          const int u = x + dx;
          const int v = y + dy;
          if (clipped.in_bounds(u, v) && clipped.valid(u, v)) window.push_back(clipped.at(u, v));
        }
      }
      // Lower median for even counts keeps the output a member of the window.
      auto mid = window.begin() + static_cast<std::ptrdiff_t>((window.size() - 1) / 2);
      std::nth_element(window.begin(), mid, window.end());
      out.at(x, y) = *mid;
    }
  }
  return out;
}

namespace {

// Min/max/sum/valid-count pyramid. Level k covers quads of side 2^k; cells outside the
// frame are never stored and count as invalid.
struct QuadPyramid {
  struct Cell {
    float min = 0.0f;
    float max = 0.0f;
    double sum = 0.0;
    int valid = 0;
  };
  struct Level {
    int width = 0;
    int height = 0;
    std::vector<Cell> cells;
    const Cell* at(int x, int y) const {
      return x < width && y < height ? &cells[static_cast<std::size_t>(y) * width + x] : nullptr;
    }
  };
  std::vector<Level> levels;

  explicit QuadPyramid(const DepthFrame& frame) {
    int side = 1;
    int top = 0;
    while (side < frame.width || side < frame.height) {
      side *= 2;
      ++top;
    }
    levels.resize(top + 1);
    Level& base = levels[0];
    base.width = frame.width;
    base.height = frame.height;
    base.cells.resize(frame.depth.size());
    for (std::size_t i = 0; i < frame.depth.size(); ++i) {
      const float d = frame.depth[i];
      if (d > 0.0f) base.cells[i] = {d, d, d, 1};
    }
    for (int k = 1; k <= top; ++k) {
      const Level& prev = levels[k - 1];
      Level& cur = levels[k];
      cur.width = (prev.width + 1) / 2;
      cur.height = (prev.height + 1) / 2;
      cur.cells.resize(static_cast<std::size_t>(cur.width) * cur.height);
      for (int y = 0; y < cur.height; ++y) {
        for (int x = 0; x < cur.width; ++x) {
          Cell c;
          for (int q = 0; q < 4; ++q) {
            const Cell* s = prev.at(2 * x + q % 2, 2 * y + q / 2);
            if (!s || s->valid == 0) continue;
            if (c.valid == 0) {
              c.min = s->min;
              c.max = s->max;
            } else {
              c.min = std::min(c.min, s->min);
              c.max = std::max(c.max, s->max);
            }
            c.sum += s->sum;
            c.valid += s->valid;
          }
          cur.cells[static_cast<std::size_t>(y) * cur.width + x] = c;
        }
      }
    }
  }
};

void collect_leaves(const QuadPyramid& pyr, int level, int cx, int cy, double eps_c,
                    double min_valid_fraction, std::vector<Quad>& out) {
  const QuadPyramid::Cell* cell = pyr.levels[level].at(cx, cy);
  if (!cell || cell->valid == 0) return;
  const int size = 1 << level;
  const double fraction = static_cast<double>(cell->valid) / (static_cast<double>(size) * size);
  if (level == 0 ||
      (fraction >= min_valid_fraction && static_cast<double>(cell->max) - cell->min < eps_c)) {
    out.push_back({cx * size, cy * size, size, cell->sum / cell->valid, kNoLabel});
    return;
  }
  for (int q = 0; q < 4; ++q) {
    collect_leaves(pyr, level - 1, 2 * cx + q % 2, 2 * cy + q / 2, eps_c, min_valid_fraction,
                   out);
  }
}

}  // namespace

std::vector<Quad> quadtree_leaves(const DepthFrame& frame, double eps_c,
                                  double min_valid_fraction) {
  if (!(eps_c > 0.0)) throw std::invalid_argument("quadtree_leaves: eps_c must be positive");
  if (!(min_valid_fraction > 0.0 && min_valid_fraction <= 1.0)) {
    throw std::invalid_argument("quadtree_leaves: min_valid_fraction must lie in (0, 1]");
  }
  std::vector<Quad> leaves;
  if (frame.width <= 0 || frame.height <= 0) return leaves;
  const QuadPyramid pyr(frame);
  collect_leaves(pyr, static_cast<int>(pyr.levels.size()) - 1, 0, 0, eps_c, min_valid_fraction,
                 leaves);
  return leaves;
}

Mixture<Gaussian2D> quads_to_mixture(const std::vector<Quad>& quads) {
  Mixture<Gaussian2D> mixture;
  mixture.reserve(quads.size());
  for (const Quad& q : quads) {
    mixture.push_back({q.center(), q.size / std::sqrt(2.0), 1.0, q.mean_depth, q.label});
  }
  return mixture;
}

Mixture<Gaussian2D> quadtree_cluster(const DepthFrame& frame, double eps_c,
                                     double min_valid_fraction) {
  return quads_to_mixture(quadtree_leaves(frame, eps_c, min_valid_fraction));
}

void assign_quad_labels(std::vector<Quad>& quads, const DepthFrame& frame,
                        const LabelImage& labels) {
  if (labels.width != frame.width || labels.height != frame.height) {
    throw std::invalid_argument("assign_quad_labels: label image size does not match frame");
  }
  std::array<int, 256> votes{};
  for (Quad& q : quads) {
    votes.fill(0);
    const int x1 = std::min(q.x0 + q.size, frame.width);
    const int y1 = std::min(q.y0 + q.size, frame.height);
    for (int y = q.y0; y < y1; ++y) {
      for (int x = q.x0; x < x1; ++x) {
        if (!frame.valid(x, y)) continue;
        const std::uint8_t l = labels.at(x, y);
        if (l != kBackgroundLabel) ++votes[l];
      }
    }
    int best = kNoLabel;
    int best_votes = 0;
    for (int l = 0; l < 255; ++l) {
      if (votes[l] > best_votes) {
        best = l;
        best_votes = votes[l];
      }
    }
    q.label = best;
  }
}

}  // namespace handtrack
