#include "handtrack/model_fit.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "handtrack/errors.hpp"
#include "handtrack/synth.hpp"

namespace handtrack {

std::vector<double> ScaleRange::values() const {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("ScaleRange: need step > 0, hi >= lo");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

namespace {

double ramp_similarity(const Mixture<Gaussian2D>& a, const Mixture<Gaussian2D>& b, double eps,
                       const OverlapOptions& options) {
  double total = 0.0;
  for (const Gaussian2D& p : a) {
    for (const Gaussian2D& q : b) {
      const double ramp = 1.0 - std::abs(p.depth - q.depth) / (2.0 * eps);
      if (ramp <= 0.0) continue;
      if (options.prune &&
          beyond_prune_radius((p.mu - q.mu).squaredNorm(), p.sigma, q.sigma)) {
        continue;
      }
      total += ramp * gaussian_overlap(p, q);
    }
  }
  return total;
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class Scorer {
 public:
  Scorer(const HandModel& base, const Mixture<Gaussian2D>& calib, const PoseVector& pose,
         const FitOptions& options)
      : base_(base), calib_(calib), pose_(pose), options_(options), image_(calib, options.overlap) {
    if (options.objective == FitObjective::Synthesis) {
      calib_self_ = ramp_similarity(calib, calib, options.eps_c, options.overlap);
    }
  }

  double operator()(const ScaleParams& scale) const {
    try {
      const HandModel model = scale_model(base_, scale);
      if (options_.objective == FitObjective::Energy) {
        EnergyContext ctx;
        ctx.model = &model;
        ctx.image = &image_;
        ctx.camera = options_.camera;
        ctx.weights = options_.weights;
        ctx.overlap = options_.overlap;
        return total_energy(pose_, ctx);
      }
      const GroundTruthFrame render =
          render_depth(model, pose_, options_.camera, options_.width, options_.height);
      const Mixture<Gaussian2D> synth =
          quadtree_cluster(render.depth, options_.eps_c, options_.min_valid_fraction);
      if (synth.empty()) return kNegInf;
      const double self = ramp_similarity(synth, synth, options_.eps_c, options_.overlap);
      return ramp_similarity(calib_, synth, options_.eps_c, options_.overlap) /
             std::sqrt(calib_self_ * self);
    } catch (const TrackingFailure&) {
      return kNegInf;
    }
  }

 private:
  const HandModel& base_;
  const Mixture<Gaussian2D>& calib_;
  PoseVector pose_;
  const FitOptions& options_;
  ImageEvidence image_;
  double calib_self_ = 0.0;
};

}  // namespace

double normalized_mixture_similarity(const Mixture<Gaussian2D>& a, const Mixture<Gaussian2D>& b,
                                     double eps, const OverlapOptions& options) {
  const double denom =
      std::sqrt(ramp_similarity(a, a, eps, options) * ramp_similarity(b, b, eps, options));
  return denom > 0.0 ? ramp_similarity(a, b, eps, options) / denom : 0.0;
}

FitResult fit_user_model(const HandModel& base, const Mixture<Gaussian2D>& calib,
                         const PoseVector& calib_pose, const ScaleGrid& grid,
                         const FitOptions& options) {
  if (calib.empty()) throw DataError("calibration frame contains no hand");
  const std::array<std::vector<double>, 3> axes = {grid.length.values(), grid.width.values(),
                                                   grid.sigma.values()};
  const Scorer score(base, calib, calib_pose, options);

  FitResult best;
  best.score = kNegInf;
  std::map<std::array<std::size_t, 3>, double> cache;
  const auto eval = [&](const std::array<std::size_t, 3>& idx) {
    if (const auto it = cache.find(idx); it != cache.end()) return it->second;
    const double s = score({axes[0][idx[0]], axes[1][idx[1]], axes[2][idx[2]]});
    ++best.evaluated;
    cache.emplace(idx, s);
    return s;
  };
  std::array<std::size_t, 3> best_idx{};

  if (options.search == FitSearch::Exhaustive) {
    for (std::size_t i = 0; i < axes[0].size(); ++i) {
      for (std::size_t j = 0; j < axes[1].size(); ++j) {
        for (std::size_t k = 0; k < axes[2].size(); ++k) {
          const double s = eval({i, j, k});
          if (s > best.score) {
            best.score = s;
            best_idx = {i, j, k};
          }
        }
      }
    }
  } else {
    // Start from the lattice points nearest the unscaled model.
    for (int a = 0; a < 3; ++a) {
      std::size_t nearest = 0;
      for (std::size_t i = 1; i < axes[a].size(); ++i) {
        if (std::abs(axes[a][i] - 1.0) < std::abs(axes[a][nearest] - 1.0)) nearest = i;
      }
      best_idx[a] = nearest;
    }
    best.score = eval(best_idx);
    for (bool changed = true; changed;) {
      changed = false;
      for (int a = 0; a < 3; ++a) {
        std::array<std::size_t, 3> idx = best_idx;
        for (std::size_t i = 0; i < axes[a].size(); ++i) {
          idx[a] = i;
          const double s = eval(idx);
          if (s > best.score) {
            best.score = s;
            best_idx = idx;
            changed = true;
          }
        }
      }
    }
  }
  if (!std::isfinite(best.score)) throw DataError("calibration pose cannot be scored");
  best.scale = {axes[0][best_idx[0]], axes[1][best_idx[1]], axes[2][best_idx[2]]};
  return best;
}

}  // namespace handtrack
