#pragma once

#include "handtrack/depth.hpp"
#include "handtrack/errors.hpp"
#include "handtrack/gaussian.hpp"
#include "handtrack/hand_model.hpp"

namespace handtrack {

/// Weights of the penalty terms; similarity always has unit weight.
struct EnergyWeights {
  double collision = 1.0;
  double limits = 0.2;
  double smoothness = 1.0;
};

enum class EnergyVariant { DepthOnly, DetectionGuided };

struct EnergyMode {
  EnergyVariant variant = EnergyVariant::DepthOnly;
  double influence_radius = 200.0;  // mm, label factor only
};

/// Poses at t-1 and t-2. Smoothness is only charged once `active` is set, which the
/// tracker does from the third frame of a sequence on.
struct PoseHistory {
  PoseVector prev1 = PoseVector::Zero();
  PoseVector prev2 = PoseVector::Zero();
  bool active = false;
};

/// 1 - |d_p - d_q| / (2 sigma_h) inside the ramp, 0 beyond 2 sigma_h.
double depth_similarity_factor(double depth_p, double depth_q, double sigma_h);

/// Same ramp with the influence radius, and 0 whenever the labels differ or are missing.
double label_similarity_factor(int label_p, int label_q, double depth_p, double depth_q,
                               double influence_radius);

/// Image mixture for one frame together with its self-similarity normalizer, computed
/// once and shared read-only by every energy evaluation on that frame.
class ImageEvidence {
 public:
  explicit ImageEvidence(Mixture<Gaussian2D> image, const OverlapOptions& options = {});

  const Mixture<Gaussian2D>& mixture() const { return image_; }
  double normalizer() const { return normalizer_; }
  bool empty() const { return image_.empty(); }

 private:
  Mixture<Gaussian2D> image_;
  double normalizer_ = 0.0;
};

/// Normalized 2.5D overlap between projected model and image. Throws TrackingFailure
/// when the image mixture is empty.
double e_sim(const ProjectedHand& projected, const ImageEvidence& image, const EnergyMode& mode,
             const OverlapOptions& options = {});

/// Normalized overlap between distinct model Gaussians (pairs q > p).
double e_col(const Mixture<Gaussian3D>& posed, const OverlapOptions& options = {});

/// Squared violation of the per-DOF limits.
double e_lim(const PoseVector& pose, const Skeleton& skeleton);

/// Per-DOF units used by the smoothness term: translations in metres, angles in radians.
PoseVector smoothness_units(const Skeleton& skeleton);

/// Squared deviation from constant-velocity motion in smoothness_units; 0 while the
/// history is inactive.
double e_smo(const PoseVector& pose, const PoseHistory& history, const Skeleton& skeleton);

/// Everything needed to score a pose on one frame. Pointers must outlive the context.
struct EnergyContext {
  const HandModel* model = nullptr;
  const ImageEvidence* image = nullptr;
  Camera camera;
  PoseHistory history;
  EnergyWeights weights;
  EnergyMode mode;
  OverlapOptions overlap;
};

struct EnergyTerms {
  double sim = 0.0;
  double col = 0.0;
  double lim = 0.0;
  double smo = 0.0;
  double total = 0.0;
};

/// E = E_sim - w_c E_col - w_l E_lim - w_s E_smo; higher is better.
EnergyTerms evaluate_energy(const PoseVector& pose, const EnergyContext& ctx);
double total_energy(const PoseVector& pose, const EnergyContext& ctx);

struct EnergyAndGradient {
  double value = 0.0;
  PoseVector gradient = PoseVector::Zero();
};

/// Exact gradient of total_energy. The ramp factors contribute a zero subgradient at
/// their kinks.
EnergyAndGradient energy_and_gradient(const PoseVector& pose, const EnergyContext& ctx);
PoseVector energy_gradient(const PoseVector& pose, const EnergyContext& ctx);

}  // namespace handtrack
