#include "handtrack/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace handtrack {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

void OptimizerConfig::validate() const {
  if (particles < 1) throw std::invalid_argument("optimizer: particles must be >= 1");
  if (iterations < 1) throw std::invalid_argument("optimizer: iterations must be >= 1");
  if (!(step > 0.0) || !(step_up >= 1.0) || !(step_down > 0.0 && step_down < 1.0)) {
    throw std::invalid_argument("optimizer: invalid step constants");
  }
  if (!(alpha_sigma >= 0.0) || !(rotation_scale > 0.0)) {
    throw std::invalid_argument("optimizer: invalid alpha_sigma or rotation_scale");
  }
  if (threads < 1) throw std::invalid_argument("optimizer: threads must be >= 1");
}

void TrackerConfig::validate() const {
  if (!(near > 0.0 && near < far)) throw std::invalid_argument("tracker: need 0 < near < far");
  if (median_radius < 0) throw std::invalid_argument("tracker: negative median radius");
  if (!(eps_c > 0.0)) throw std::invalid_argument("tracker: eps_c must be positive");
  if (!(min_valid_fraction > 0.0 && min_valid_fraction <= 1.0)) {
    throw std::invalid_argument("tracker: min_valid_fraction must lie in (0, 1]");
  }
  if (!(influence_radius > 0.0)) throw std::invalid_argument("tracker: R_i must be positive");
  if (weights.collision < 0.0 || weights.limits < 0.0 || weights.smoothness < 0.0) {
    throw std::invalid_argument("tracker: energy weights must be non-negative");
  }
  optimizer.validate();
}

std::vector<Particle> spawn_particles(const PoseHistory& history, const OptimizerConfig& cfg,
                                      std::mt19937_64& rng, const EnergyMode* guided) {
  cfg.validate();
  std::normal_distribution<double> alpha_dist(1.0, cfg.alpha_sigma);
  std::vector<Particle> particles(static_cast<std::size_t>(cfg.particles));
  for (std::size_t i = 0; i < particles.size(); ++i) {
    Particle& p = particles[i];
    if (i > 0 && cfg.alpha_sigma > 0.0) {
      for (int j = 0; j < kNumDofs; ++j) p.alpha[j] = alpha_dist(rng);
    }
    const PoseVector& t1 = history.prev1;
    const PoseVector& t2 = history.prev2;
    if (cfg.formula == ParticleFormula::Extrapolate) {
      p.pose = t1 + p.alpha.cwiseProduct(t1 - t2);
    } else {
      p.pose = t1 + p.alpha.cwiseProduct(t2);
    }
  }
  if (guided) particles.back().mode = *guided;
  return particles;
}

PoseVector dof_conditioning(const HandModel& model, const OptimizerConfig& cfg) {
  const Skeleton& sk = model.skeleton;
  PoseVector c;
  if (cfg.conditioning == Conditioning::Uniform) {
    for (int j = 0; j < kNumDofs; ++j) {
      c[j] = sk.dofs[j].kind == DofKind::Translation ? 1.0 : cfg.rotation_scale;
    }
    return c;
  }
  // Levers measured in the rest pose.
  const PosedHand rest = pose_hand(model, rest_pose());
  const auto moves = [&sk](int dof_bone, int bone) {
    for (int b = bone; b >= 0; b = sk.bones[b].parent) {
      if (b == dof_bone) return true;
    }
    return false;
  };
  for (int j = 0; j < kNumDofs; ++j) {
    const Dof& dof = sk.dofs[j];
    if (dof.kind == DofKind::Translation) {
      c[j] = 1.0;
      continue;
    }
    double lever = 0.0;
    for (const Gaussian3D& g : rest.gaussians) {
      if (!moves(dof.bone, g.bone)) continue;
      lever = std::max(lever, (g.mu - rest.dof_origins[j]).norm() + g.sigma);
    }
    c[j] = lever > 0.0 ? 1.0 / lever : cfg.rotation_scale;
  }
  return c;
}

AscentResult adaptive_gradient_ascent(const PoseVector& start, const EnergyFunction& energy,
                                      const PoseVector& conditioning, const OptimizerConfig& cfg) {
  if (cfg.iterations < 1) throw std::invalid_argument("adaptive_gradient_ascent: iterations < 1");
  AscentResult result;
  result.pose = start;
  EnergyAndGradient current;
  try {
    current = energy(start);
  } catch (const TrackingFailure&) {
    result.energy = result.start_energy = kNegInf;
    result.aborted = true;
    return result;
  }
  result.energy = result.start_energy = current.value;
  if (!std::isfinite(current.value)) {
    result.aborted = true;
    return result;
  }
  const PoseVector c2 = conditioning.cwiseProduct(conditioning);
  double s = cfg.step;
  for (int it = 0; it < cfg.iterations; ++it) {
    if (!current.gradient.allFinite()) {
      result.pose = start;
      result.energy = result.start_energy;
      result.aborted = true;
      return result;
    }
    PoseVector direction = c2.cwiseProduct(current.gradient);
    if (cfg.normalized_step) {
      const double norm = conditioning.cwiseProduct(current.gradient).norm();
      if (norm == 0.0) break;  // stationary point
      direction /= norm;
    }
    const PoseVector trial = result.pose + s * direction;
    bool improved = false;
    EnergyAndGradient next;
    try {
      next = energy(trial);
      improved = std::isfinite(next.value) && next.value > current.value;
    } catch (const TrackingFailure&) {
      improved = false;
    }
    if (improved) {
      result.pose = trial;
      result.energy = next.value;
      current = std::move(next);
      ++result.accepted;
      s *= cfg.step_up;
    } else {
      s *= cfg.step_down;
    }
  }
  return result;
}

AscentResult adaptive_gradient_ascent(const PoseVector& start, const EnergyContext& ctx,
                                      const OptimizerConfig& cfg) {
  const PoseVector conditioning = dof_conditioning(*ctx.model, cfg);
  return adaptive_gradient_ascent(
      start, [&ctx](const PoseVector& pose) { return energy_and_gradient(pose, ctx); },
      conditioning, cfg);
}

std::size_t fuse(const std::vector<Candidate>& candidates, const EnergyContext& ctx,
                 std::vector<double>* scores) {
  if (candidates.empty()) throw std::invalid_argument("fuse: no candidates");
  EnergyContext depth_ctx = ctx;
  depth_ctx.mode.variant = EnergyVariant::DepthOnly;
  std::vector<double> values(candidates.size(), kNegInf);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    try {
      const double v = total_energy(candidates[i].pose, depth_ctx);
      if (std::isfinite(v)) values[i] = v;
    } catch (const TrackingFailure&) {
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (values[i] > values[best] ||
        (values[i] == values[best] && candidates[i].prediction && !candidates[best].prediction)) {
      best = i;
    }
  }
  if (scores) *scores = std::move(values);
  return best;
}

TrackerState initial_state(const TrackerConfig& cfg) {
  TrackerState state;
  state.current = cfg.initial_pose;
  state.history.prev1 = cfg.initial_pose;
  state.history.prev2 = cfg.initial_pose;
  state.history.active = false;
  state.rng.seed(cfg.seed);
  return state;
}

namespace {

// Shared pipeline; `labeler` fills the label image of the cleaned frame, or is empty for
// depth-only tracking.
FrameResult run_frame(TrackerState& state, const DepthFrame& frame, const HandModel& model,
                      const std::function<LabelImage(const DepthFrame&)>& labeler,
                      const TrackerConfig& cfg) {
  const auto t_start = Clock::now();
  FrameResult out;
  out.frame = state.frame_index++;

  const auto hold = [&](FrameResult& r) {
    r.status = FrameStatus::Lost;
    r.pose = state.current;
    r.fingertips = fingertip_positions(model, state.current);
    r.timings.total_ms = elapsed_ms(t_start);
    return r;
  };

  auto t = Clock::now();
  const DepthFrame clean = preprocess(frame, cfg.near, cfg.far, cfg.median_radius);
  std::vector<Quad> quads = quadtree_leaves(clean, cfg.eps_c, cfg.min_valid_fraction);
  out.timings.preprocess_cluster_ms = elapsed_ms(t);

  if (labeler) {
    t = Clock::now();
    assign_quad_labels(quads, clean, labeler(clean));
    out.timings.forest_ms = elapsed_ms(t);
  }
  out.quads = quads.size();
  if (quads.empty()) return hold(out);

  t = Clock::now();
  const OverlapOptions overlap{cfg.prune};
  const ImageEvidence image(quads_to_mixture(quads), overlap);

  EnergyContext ctx;
  ctx.model = &model;
  ctx.image = &image;
  ctx.camera = frame.camera;
  ctx.history = state.history;
  ctx.history.active = state.tracked_frames >= 2;
  ctx.weights = cfg.weights;
  ctx.mode.influence_radius = cfg.influence_radius;
  ctx.overlap = overlap;

  EnergyMode guided;
  guided.variant = EnergyVariant::DetectionGuided;
  guided.influence_radius = cfg.influence_radius;
  const std::vector<Particle> particles =
      spawn_particles(ctx.history, cfg.optimizer, state.rng, labeler ? &guided : nullptr);

  std::vector<AscentResult> results(particles.size());
  const auto run = [&](std::size_t i) {
    EnergyContext pctx = ctx;
    pctx.mode = particles[i].mode;
    results[i] = adaptive_gradient_ascent(particles[i].pose, pctx, cfg.optimizer);
  };
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.optimizer.threads), particles.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < particles.size(); ++i) run(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < particles.size(); i += workers) run(i);
      });
    }
    for (std::thread& th : pool) th.join();
  }

  std::vector<Candidate> candidates(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) {
    candidates[i] = {results[i].pose, particles[i].mode.variant, i == 0};
  }
  std::vector<double> scores;
  const std::size_t winner = fuse(candidates, ctx, &scores);
  out.timings.optimize_ms = elapsed_ms(t);

  out.particles.resize(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) {
    out.particles[i] = {particles[i].mode.variant, results[i].start_energy, results[i].energy,
                        scores[i], results[i].accepted, results[i].aborted};
  }
  if (!std::isfinite(scores[winner])) return hold(out);

  state.current = candidates[winner].pose;
  state.history.prev2 = state.history.prev1;
  state.history.prev1 = state.current;
  if (state.tracked_frames == 0) state.history.prev2 = state.current;
  ++state.tracked_frames;
  state.history.active = state.tracked_frames >= 2;

  out.status = FrameStatus::Tracked;
  out.pose = state.current;
  out.fingertips = fingertip_positions(model, state.current);
  out.winning_mode = candidates[winner].mode;
  out.winner = static_cast<int>(winner);
  out.timings.total_ms = elapsed_ms(t_start);
  return out;
}

}  // namespace

FrameResult track_frame(TrackerState& state, const DepthFrame& frame, const HandModel& model,
                        const PartForest* forest, const TrackerConfig& cfg) {
  std::function<LabelImage(const DepthFrame&)> labeler;
  if (forest && !forest->trees.empty()) {
    labeler = [forest](const DepthFrame& clean) { return classify_frame(*forest, clean).labels; };
  }
  return run_frame(state, frame, model, labeler, cfg);
}

FrameResult track_frame_labeled(TrackerState& state, const DepthFrame& frame,
                                const HandModel& model, const LabelImage* labels,
                                const TrackerConfig& cfg) {
  std::function<LabelImage(const DepthFrame&)> labeler;
  if (labels) labeler = [labels](const DepthFrame&) { return *labels; };
  return run_frame(state, frame, model, labeler, cfg);
}

Tracker::Tracker(const HandModel& model, const PartForest* forest, TrackerConfig cfg)
    : model_(model), forest_(forest), cfg_(std::move(cfg)) {
  cfg_.validate();
  state_ = initial_state(cfg_);
}

const char* to_string(EnergyVariant variant) {
  return variant == EnergyVariant::DepthOnly ? "depth_only" : "detection_guided";
}

const char* to_string(FrameStatus status) {
  return status == FrameStatus::Tracked ? "tracked" : "lost";
}

}  // namespace handtrack
