#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "handtrack/depth.hpp"
#include "handtrack/energy.hpp"
#include "handtrack/hand_model.hpp"
#include "handtrack/part_forest.hpp"

namespace handtrack {

/// How particles are seeded from the two previous poses.
enum class ParticleFormula {
  Extrapolate,  // p = t1 + alpha * (t1 - t2)
  Literal,      // p = t1 + alpha * t2
};

/// Per-DOF diagonal conditioning of the gradient step.
enum class Conditioning {
  /// Rotations use rotation_scale rad per unit.
  Uniform,
  /// Each rotation uses 1 / lever rad per unit, where lever is the largest distance from
  /// its joint to the surface of a Gaussian it moves, so one unit moves that surface by
  /// about 1 mm.
  LeverArm,
};

struct OptimizerConfig {
  int particles = 2;
  int iterations = 10;
  /// Initial step length. With normalized_step it is the length of each step in
  /// conditioned units (1 unit = 1 mm of translation = rotation_scale rad of rotation);
  /// otherwise it multiplies the conditioned gradient directly.
  double step = 4.0;
  double step_up = 1.2;
  double step_down = 0.5;
  double alpha_sigma = 0.3;
  double rotation_scale = 0.02;  // rad per conditioned unit
  Conditioning conditioning = Conditioning::LeverArm;
  bool normalized_step = true;
  ParticleFormula formula = ParticleFormula::Extrapolate;
  int threads = 1;

  void validate() const;
};

struct Particle {
  PoseVector pose = PoseVector::Zero();
  EnergyMode mode;
  PoseVector alpha = PoseVector::Ones();
};

/// Seeds cfg.particles poses from the history. Particle 0 uses alpha = 1 exactly; the
/// others draw alpha per DOF from N(1, alpha_sigma^2). When `guided` is given, the last
/// particle uses it and every other particle is depth-only.
std::vector<Particle> spawn_particles(const PoseHistory& history, const OptimizerConfig& cfg,
                                      std::mt19937_64& rng, const EnergyMode* guided = nullptr);

/// Per-DOF conditioning c_j: 1 for translations (mm); for rotations as set by cfg.
PoseVector dof_conditioning(const HandModel& model, const OptimizerConfig& cfg);

struct AscentResult {
  PoseVector pose = PoseVector::Zero();
  double energy = 0.0;
  double start_energy = 0.0;
  int accepted = 0;
  bool aborted = false;  // non-finite gradient or unscorable start
};

using EnergyFunction = std::function<EnergyAndGradient(const PoseVector&)>;

/// Gradient ascent with step theta + s * C^2 * grad. Steps are only taken when they raise
/// the energy; s grows by step_up after an accepted step and shrinks by step_down after a
/// rejected one. A TrackingFailure thrown while scoring a trial counts as a rejection.
AscentResult adaptive_gradient_ascent(const PoseVector& start, const EnergyFunction& energy,
                                      const PoseVector& conditioning, const OptimizerConfig& cfg);
AscentResult adaptive_gradient_ascent(const PoseVector& start, const EnergyContext& ctx,
                                      const OptimizerConfig& cfg);

struct Candidate {
  PoseVector pose = PoseVector::Zero();
  EnergyVariant mode = EnergyVariant::DepthOnly;
  bool prediction = false;  // particle spawned with alpha = 1
};

/// Index of the candidate with the highest depth-only total energy under `ctx` (whose
/// mode is ignored). Ties favour the prediction, then the lowest index. `scores`, when
/// given, receives each re-scored energy (-inf for unscorable poses).
std::size_t fuse(const std::vector<Candidate>& candidates, const EnergyContext& ctx,
                 std::vector<double>* scores = nullptr);

struct TrackerConfig {
  double near = 150.0;  // mm
  double far = 600.0;   // mm
  int median_radius = 1;
  double eps_c = 20.0;  // mm
  double min_valid_fraction = 0.5;
  EnergyWeights weights;
  double influence_radius = 200.0;  // mm
  bool prune = true;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  PoseVector initial_pose = rest_pose();

  void validate() const;
};

struct TrackerState {
  PoseHistory history;
  PoseVector current = PoseVector::Zero();
  int frame_index = 0;     // frames seen, including lost ones
  int tracked_frames = 0;  // frames that updated the history
  std::mt19937_64 rng;
};

TrackerState initial_state(const TrackerConfig& cfg);

enum class FrameStatus { Tracked, Lost };

struct ParticleReport {
  EnergyVariant mode = EnergyVariant::DepthOnly;
  double start_energy = 0.0;
  double final_energy = 0.0;
  double fused_energy = 0.0;  // depth-only re-score
  int accepted = 0;
  bool aborted = false;
};

struct StageTimings {
  double preprocess_cluster_ms = 0.0;
  double forest_ms = 0.0;
  double optimize_ms = 0.0;
  double total_ms = 0.0;
};

struct FrameResult {
  int frame = 0;
  FrameStatus status = FrameStatus::Tracked;
  PoseVector pose = PoseVector::Zero();
  FingertipPositions fingertips{};
  EnergyVariant winning_mode = EnergyVariant::DepthOnly;
  int winner = -1;
  std::size_t quads = 0;
  std::vector<ParticleReport> particles;
  StageTimings timings;
};

/// Runs one frame through preprocessing, optional part classification, clustering,
/// particle optimization and fusion. A frame without hand evidence is reported Lost; it
/// keeps the previous pose and leaves the history untouched.
FrameResult track_frame(TrackerState& state, const DepthFrame& frame, const HandModel& model,
                        const PartForest* forest, const TrackerConfig& cfg);

/// Same pipeline with per-pixel part labels supplied by the caller instead of a forest
/// (for instance ground-truth labels of synthetic frames). Null labels mean depth-only.
FrameResult track_frame_labeled(TrackerState& state, const DepthFrame& frame,
                                const HandModel& model, const LabelImage* labels,
                                const TrackerConfig& cfg);

class Tracker {
 public:
  Tracker(const HandModel& model, const PartForest* forest, TrackerConfig cfg);

  FrameResult track(const DepthFrame& frame) {
    return track_frame(state_, frame, model_, forest_, cfg_);
  }
  TrackerState& state() { return state_; }
  const TrackerConfig& config() const { return cfg_; }

 private:
  const HandModel& model_;
  const PartForest* forest_;
  TrackerConfig cfg_;
  TrackerState state_;
};

const char* to_string(EnergyVariant variant);
const char* to_string(FrameStatus status);

}  // namespace handtrack
