#include "handtrack/energy.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace handtrack {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Ramp value and its derivative with respect to depth_p.
struct Ramp {
  double value = 0.0;
  double slope = 0.0;
};

inline Ramp ramp(double depth_p, double depth_q, double half_width) {
  const double diff = depth_p - depth_q;
  const double dist = std::abs(diff);
  const double width = 2.0 * half_width;
  if (dist >= width) return {};
  const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
  return {1.0 - dist / width, -sign / width};
}

inline Ramp pair_factor(const Gaussian2D& p, double sigma_h, const Gaussian2D& q,
                        const EnergyMode& mode) {
  if (mode.variant == EnergyVariant::DepthOnly) return ramp(p.depth, q.depth, sigma_h);
  if (p.label == kNoLabel || p.label != q.label) return {};
  return ramp(p.depth, q.depth, mode.influence_radius);
}

// Similarity numerator and, when dmu is non-null, its derivative with respect to every
// posed 3D mean (not yet divided by the normalizer).
double similarity_sum(const ProjectedHand& projected, const Mixture<Gaussian3D>* posed,
                      const Camera& camera, const ImageEvidence& image, const EnergyMode& mode,
                      const OverlapOptions& options, std::vector<Eigen::Vector3d>* dmu) {
  const auto& model = projected.gaussians;
  const auto& data = image.mixture();
  double total = 0.0;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const Gaussian2D& p = model[i];
    const double sigma_h = projected.source_sigma[i];
    const double var_p = p.sigma * p.sigma;
    Eigen::Vector2d d_mu2 = Eigen::Vector2d::Zero();
    double d_var = 0.0;
    double d_depth = 0.0;
    for (const Gaussian2D& q : data) {
      const Ramp factor = pair_factor(p, sigma_h, q, mode);
      if (factor.value == 0.0) continue;
      const Eigen::Vector2d diff = p.mu - q.mu;
      const double dist_sq = diff.squaredNorm();
      if (options.prune && beyond_prune_radius(dist_sq, p.sigma, q.sigma)) continue;
      const double var_q = q.sigma * q.sigma;
      const double var_sum = var_p + var_q;
      const double overlap = p.weight * q.weight * kTwoPi * (var_p * var_q) / var_sum *
                             std::exp(-dist_sq / (2.0 * var_sum));
      total += factor.value * overlap;
      if (dmu) {
        const double weighted = factor.value * overlap;
        d_mu2 -= weighted / var_sum * diff;
        d_var += weighted * (var_q / (var_p * var_sum) + dist_sq / (2.0 * var_sum * var_sum));
        d_depth += factor.slope * overlap;
      }
    }
    if (dmu) {
      // mu_p = f (x, y) / z + c, sigma_p = sigma_h f / z, d_p = z - sigma_h.
      const Eigen::Vector3d& m = (*posed)[i].mu;
      const double inv_z = 1.0 / m.z();
      const double fz = camera.f * inv_z;
      const double d_sigma = d_var * 2.0 * p.sigma;
      (*dmu)[i] = Eigen::Vector3d(
          d_mu2.x() * fz, d_mu2.y() * fz,
          -(d_mu2.x() * m.x() + d_mu2.y() * m.y()) * fz * inv_z - d_sigma * p.sigma * inv_z +
              d_depth);
    }
  }
  return total;
}

struct CollisionSums {
  double pairs = 0.0;  // sum over q > p
  double self = 0.0;   // sum over p == q
};

inline double overlap3(double dist_sq, double var_p, double var_q, double weights) {
  const double var_sum = var_p + var_q;
  const double base = kTwoPi * (var_p * var_q) / var_sum;
  return weights * base * std::sqrt(base) * std::exp(-dist_sq / (2.0 * var_sum));
}

CollisionSums collision_sums(const Mixture<Gaussian3D>& posed, const OverlapOptions& options,
                             std::vector<Eigen::Vector3d>* dmu) {
  CollisionSums sums;
  for (std::size_t i = 0; i < posed.size(); ++i) {
    const Gaussian3D& p = posed[i];
    const double var_p = p.sigma * p.sigma;
    sums.self += overlap3(0.0, var_p, var_p, p.weight * p.weight);
    for (std::size_t j = i + 1; j < posed.size(); ++j) {
      const Gaussian3D& q = posed[j];
      const Eigen::Vector3d diff = p.mu - q.mu;
      const double dist_sq = diff.squaredNorm();
      if (options.prune && beyond_prune_radius(dist_sq, p.sigma, q.sigma)) continue;
      const double var_q = q.sigma * q.sigma;
      const double d = overlap3(dist_sq, var_p, var_q, p.weight * q.weight);
      sums.pairs += d;
      if (dmu) {
        const Eigen::Vector3d g = -d / (var_p + var_q) * diff;
        (*dmu)[i] += g;
        (*dmu)[j] -= g;
      }
    }
  }
  return sums;
}

inline double collision_value(const CollisionSums& s) { return s.pairs / (s.self + 2.0 * s.pairs); }

}  // namespace

double depth_similarity_factor(double depth_p, double depth_q, double sigma_h) {
  return ramp(depth_p, depth_q, sigma_h).value;
}

double label_similarity_factor(int label_p, int label_q, double depth_p, double depth_q,
                               double influence_radius) {
  if (label_p == kNoLabel || label_p != label_q) return 0.0;
  return ramp(depth_p, depth_q, influence_radius).value;
}

ImageEvidence::ImageEvidence(Mixture<Gaussian2D> image, const OverlapOptions& options)
    : image_(std::move(image)), normalizer_(self_similarity(image_, options)) {}

double e_sim(const ProjectedHand& projected, const ImageEvidence& image, const EnergyMode& mode,
             const OverlapOptions& options) {
  if (image.empty()) throw TrackingFailure("empty image mixture");
  return similarity_sum(projected, nullptr, Camera{}, image, mode, options, nullptr) /
         image.normalizer();
}

double e_col(const Mixture<Gaussian3D>& posed, const OverlapOptions& options) {
  return collision_value(collision_sums(posed, options, nullptr));
}

double e_lim(const PoseVector& pose, const Skeleton& skeleton) {
  double total = 0.0;
  for (int j = 0; j < kNumDofs; ++j) {
    const Dof& d = skeleton.dofs[j];
    if (pose[j] < d.lower) {
      total += (d.lower - pose[j]) * (d.lower - pose[j]);
    } else if (pose[j] > d.upper) {
      total += (pose[j] - d.upper) * (pose[j] - d.upper);
    }
  }
  return total;
}

PoseVector smoothness_units(const Skeleton& skeleton) {
  PoseVector u;
  for (int j = 0; j < kNumDofs; ++j) {
    u[j] = skeleton.dofs[j].kind == DofKind::Translation ? 1e-3 : 1.0;
  }
  return u;
}

double e_smo(const PoseVector& pose, const PoseHistory& history, const Skeleton& skeleton) {
  if (!history.active) return 0.0;
  const PoseVector r = 0.5 * (history.prev2 + pose) - history.prev1;
  return r.cwiseProduct(smoothness_units(skeleton)).squaredNorm();
}

EnergyTerms evaluate_energy(const PoseVector& pose, const EnergyContext& ctx) {
  if (ctx.image->empty()) throw TrackingFailure("empty image mixture");
  const Mixture<Gaussian3D> posed = forward_kinematics(*ctx.model, pose);
  const ProjectedHand projected = project_model(posed, ctx.camera);
  EnergyTerms t;
  t.sim = e_sim(projected, *ctx.image, ctx.mode, ctx.overlap);
  t.col = e_col(posed, ctx.overlap);
  t.lim = e_lim(pose, ctx.model->skeleton);
  t.smo = e_smo(pose, ctx.history, ctx.model->skeleton);
  const EnergyWeights& w = ctx.weights;
  t.total = t.sim - w.collision * t.col - w.limits * t.lim - w.smoothness * t.smo;
  return t;
}

double total_energy(const PoseVector& pose, const EnergyContext& ctx) {
  return evaluate_energy(pose, ctx).total;
}

EnergyAndGradient energy_and_gradient(const PoseVector& pose, const EnergyContext& ctx) {
  if (ctx.image->empty()) throw TrackingFailure("empty image mixture");
  const HandModel& model = *ctx.model;
  const EnergyWeights& w = ctx.weights;
  const PosedHand posed = pose_hand(model, pose);
  const ProjectedHand projected = project_model(posed.gaussians, ctx.camera);
  const std::size_t m = posed.gaussians.size();

  std::vector<Eigen::Vector3d> d_sim(m, Eigen::Vector3d::Zero());
  const double inv_norm = 1.0 / ctx.image->normalizer();
  const double sim = similarity_sum(projected, &posed.gaussians, ctx.camera, *ctx.image,
                                    ctx.mode, ctx.overlap, &d_sim) *
                     inv_norm;

  std::vector<Eigen::Vector3d> d_pairs(m, Eigen::Vector3d::Zero());
  const CollisionSums col = collision_sums(posed.gaussians, ctx.overlap, &d_pairs);
  const double col_norm = col.self + 2.0 * col.pairs;
  // d(A / (S + 2A)) = dA * S / (S + 2A)^2
  const double col_scale = col.self / (col_norm * col_norm);

  std::vector<Eigen::Vector3d> dmu(m);
  for (std::size_t h = 0; h < m; ++h) {
    dmu[h] = d_sim[h] * inv_norm - w.collision * col_scale * d_pairs[h];
  }

  EnergyAndGradient out;
  out.gradient = pull_back_gradient(model, posed, dmu);

  const Skeleton& sk = model.skeleton;
  for (int j = 0; j < kNumDofs; ++j) {
    const Dof& d = sk.dofs[j];
    if (pose[j] < d.lower) {
      out.gradient[j] -= w.limits * -2.0 * (d.lower - pose[j]);
    } else if (pose[j] > d.upper) {
      out.gradient[j] -= w.limits * 2.0 * (pose[j] - d.upper);
    }
  }
  if (ctx.history.active) {
    const PoseVector u = smoothness_units(sk);
    out.gradient -= w.smoothness * (0.5 * (ctx.history.prev2 + pose) - ctx.history.prev1)
                                       .cwiseProduct(u.cwiseProduct(u));
  }

  out.value = sim - w.collision * collision_value(col) - w.limits * e_lim(pose, sk) -
              w.smoothness * e_smo(pose, ctx.history, sk);
  return out;
}

PoseVector energy_gradient(const PoseVector& pose, const EnergyContext& ctx) {
  return energy_and_gradient(pose, ctx).gradient;
}

}  // namespace handtrack
