#pragma once

#include <vector>

#include <Eigen/Core>

namespace handtrack {

/// Part label id used when a Gaussian or quad carries no label.
inline constexpr int kNoLabel = -1;
/// Number of hand part labels predicted by the forest and carried by model Gaussians.
inline constexpr int kNumPartLabels = 12;

/// Unnormalized isotropic 2D Gaussian, exp(-|x - mu|^2 / (2 sigma^2)), scaled by weight.
/// Image-space atoms carry the depth of the surface they represent and an optional part label.
struct Gaussian2D {
  Eigen::Vector2d mu = Eigen::Vector2d::Zero();  // pixels
  double sigma = 1.0;                            // pixels
  double weight = 1.0;
  double depth = 0.0;  // mm
  int label = kNoLabel;

  bool valid() const { return sigma > 0.0 && weight > 0.0; }
};

/// Unnormalized isotropic 3D Gaussian rigidly attached to a skeleton bone.
struct Gaussian3D {
  Eigen::Vector3d mu = Eigen::Vector3d::Zero();  // mm
  double sigma = 1.0;                            // mm
  double weight = 1.0;
  int bone = 0;
  int label = 0;

  bool valid() const { return sigma > 0.0 && weight > 0.0; }
};

template <class G>
using Mixture = std::vector<G>;

/// Controls the optional far-pair pruning used by the real-time profile.
struct OverlapOptions {
  /// Skip pairs whose means are further apart than 3 (sigma_p + sigma_q).
  bool prune = false;
};

/// w_p w_q times the integral over the plane of G_p(x) G_q(x).
double gaussian_overlap(const Gaussian2D& p, const Gaussian2D& q);

/// w_p w_q times the integral over R^3 of G_p(x) G_q(x).
double gaussian_overlap(const Gaussian3D& p, const Gaussian3D& q);

/// True when the pair lies beyond the pruning radius 3 (sigma_p + sigma_q).
inline bool beyond_prune_radius(double dist_sq, double sigma_p, double sigma_q) {
  const double r = 3.0 * (sigma_p + sigma_q);
  return dist_sq > r * r;
}

/// Sum of pairwise overlaps over all cross pairs (a_i, b_j). Empty input yields 0.
double mixture_similarity(const Mixture<Gaussian2D>& a, const Mixture<Gaussian2D>& b,
                          const OverlapOptions& options = {});
double mixture_similarity(const Mixture<Gaussian3D>& a, const Mixture<Gaussian3D>& b,
                          const OverlapOptions& options = {});

/// mixture_similarity(a, a), exploiting symmetry of the double sum.
double self_similarity(const Mixture<Gaussian2D>& a, const OverlapOptions& options = {});
double self_similarity(const Mixture<Gaussian3D>& a, const OverlapOptions& options = {});

}  // namespace handtrack
