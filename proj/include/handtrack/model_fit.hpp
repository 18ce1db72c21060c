#pragma once

#include <vector>

#include "handtrack/depth.hpp"
#include "handtrack/energy.hpp"
#include "handtrack/hand_model.hpp"


namespace handtrack {

/// Inclusive range lo, lo + step, ... up to hi (hi itself is included when it lies on
/// the lattice within a small tolerance).
struct ScaleRange {
  double lo = 1.0;
  double hi = 1.0;
  double step = 0.05;

  std::vector<double> values() const;
};

struct ScaleGrid {
  ScaleRange length{0.8, 1.25, 0.05};
  ScaleRange width{0.8, 1.25, 0.05};
  ScaleRange sigma{0.8, 1.25, 0.05};
};

enum class FitObjective {
  /// Tracking energy with smoothness off.
  Energy,
  /// Renders each candidate, clusters the rendering like a captured frame and scores
  /// the normalized 2.5D similarity of the two mixtures. Peaks at 1 when they agree.
  Synthesis,
};

enum class FitSearch {
  Exhaustive,
  /// Coordinate-wise: scan one parameter's full range with the others fixed, cycle
  /// until a full pass changes nothing.
  Greedy,
};

struct FitOptions {
  Camera camera;
  EnergyWeights weights;
  FitObjective objective = FitObjective::Synthesis;
  FitSearch search = FitSearch::Exhaustive;
  OverlapOptions overlap;
  // Synthesis only: frame size and clustering used for the calibration frame.
  int width = 320;
  int height = 240;
  double eps_c = 20.0;
  double min_valid_fraction = 0.5;
};

struct FitResult {
  ScaleParams scale;
  double score = 0.0;
  std::size_t evaluated = 0;
};

/// Normalized similarity of two image mixtures with a depth ramp of half-width eps:
/// S(a, b) / sqrt(S(a, a) S(b, b)), where S sums ramp-weighted pairwise overlaps.
double normalized_mixture_similarity(const Mixture<Gaussian2D>& a, const Mixture<Gaussian2D>& b,
                                     double eps, const OverlapOptions& options = {});

/// Search over the grid for the scaling whose posed model best explains the
/// calibration mixture. Throws DataError when the mixture is empty (no hand in view).
FitResult fit_user_model(const HandModel& base, const Mixture<Gaussian2D>& calib,
                         const PoseVector& calib_pose, const ScaleGrid& grid,
                         const FitOptions& options = {});

}  // namespace handtrack
