// handtrack: command-line front end for tracking, training, fitting, synthesis,
// evaluation and benchmarking.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "handtrack/config.hpp"
#include "handtrack/depth.hpp"
#include "handtrack/errors.hpp"
#include "handtrack/eval.hpp"
#include "handtrack/hand_model.hpp"
#include "handtrack/image_io.hpp"
#include "handtrack/model_fit.hpp"
#include "handtrack/optimizer.hpp"
#include "handtrack/part_forest.hpp"
#include "handtrack/synth.hpp"

namespace fs = std::filesystem;
using namespace handtrack;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kLostMajority = 3 };

// Frame directories hold depth_NNNNN.png with an intrinsics sidecar depth_NNNNN.txt and,
// optionally, label_NNNNN.png.
struct FrameFiles {
  int index = 0;
  fs::path depth;
  fs::path labels;  // empty when absent
};

std::string frame_name(const char* prefix, int index, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05d%s", prefix, index, ext);
  return buf;
}

std::vector<FrameFiles> list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a frame directory: " + dir.string());
  static const std::regex pattern(R"(depth_(\d+)\.png)");
  std::vector<FrameFiles> frames;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    FrameFiles f;
    f.index = std::stoi(m[1].str());
    f.depth = entry.path();
    const fs::path labels = dir / frame_name("label", f.index, ".png");
    if (fs::exists(labels)) f.labels = labels;
    frames.push_back(f);
  }
  if (frames.empty()) throw DataError("no depth_*.png frames in " + dir.string());
  std::sort(frames.begin(), frames.end(),
            [](const FrameFiles& a, const FrameFiles& b) { return a.index < b.index; });
  return frames;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

TrackerConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  TrackerConfig cfg = path.empty() ? TrackerConfig{} : load_tracker_config(path);
  if (seed) cfg.seed = *seed;
  return cfg;
}

std::string provenance(const std::string& command, const std::string& hash, std::uint64_t seed) {
  return "# handtrack " + command + "\n# config_hash=" + hash + " seed=" + std::to_string(seed) +
         "\n";
}

PoseVector parse_pose(const std::string& text) {
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  PoseVector pose;
  for (int j = 0; j < kNumDofs; ++j) {
    if (!(in >> pose[j])) throw DataError("pose needs 26 values");
  }
  if (!(in >> std::ws).eof()) throw DataError("pose needs 26 values");
  return pose;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto k = static_cast<std::size_t>(std::ceil(p * v.size())) - 1;
  return v[std::min(k, v.size() - 1)];
}

// ---- track ----------------------------------------------------------------------------

struct TrackArgs {
  std::string model;
  std::string config;
  std::string forest;
  std::string frames;
  std::string out;
  std::string diagnostics;
  std::optional<std::uint64_t> seed;
  bool truth_labels = false;
  bool timing = false;
};

int run_track(const TrackArgs& a) {
  const HandModel model = load_hand_model(a.model);
  const TrackerConfig cfg = load_config(a.config, a.seed);
  std::optional<PartForest> forest;
  if (!a.forest.empty()) forest = load_forest(a.forest);
  if (forest && a.truth_labels) throw std::invalid_argument("--forest and --truth-labels exclude each other");
  const auto frames = list_frames(a.frames);

  const std::string header = provenance("track", config_hash(cfg), cfg.seed);
  std::ofstream out = open_output(a.out);
  out << header << trajectory_header(a.timing) << '\n';
  std::ofstream diag;
  if (!a.diagnostics.empty()) {
    diag = open_output(a.diagnostics);
    diag << header
         << "frame,status,quads,particle,mode,start_energy,final_energy,fused_energy,accepted,"
            "aborted,winner";
    if (a.timing) diag << ",preprocess_cluster_ms,forest_ms,optimize_ms,total_ms";
    diag << '\n';
  }

  TrackerState state = initial_state(cfg);
  int lost = 0;
  std::map<std::string, int> winners;
  for (const FrameFiles& f : frames) {
    const DepthFrame frame = read_depth_frame(f.depth);
    FrameResult r;
    if (a.truth_labels) {
      if (f.labels.empty()) throw DataError("missing labels for " + f.depth.string());
      const LabelImage labels = read_label_png(f.labels);
      r = track_frame_labeled(state, frame, model, &labels, cfg);
    } else {
      r = track_frame(state, frame, model, forest ? &*forest : nullptr, cfg);
    }
    TrajectoryRow row;
    row.frame = f.index;
    row.status = to_string(r.status);
    row.pose = r.pose;
    row.fingertips = r.fingertips;
    row.mode = to_string(r.winning_mode);
    if (a.timing) row.time_ms = r.timings.total_ms;
    out << format_row(row) << '\n';
    if (r.status == FrameStatus::Lost) {
      ++lost;
    } else {
      ++winners[row.mode];
    }
    if (diag.is_open()) {
      for (std::size_t i = 0; i < r.particles.size(); ++i) {
        const ParticleReport& p = r.particles[i];
        char buf[256];
        std::snprintf(buf, sizeof buf, "%d,%s,%zu,%zu,%s,%.9g,%.9g,%.9g,%d,%d,%d", f.index,
                      row.status.c_str(), r.quads, i, to_string(p.mode), p.start_energy,
                      p.final_energy, p.fused_energy, p.accepted, p.aborted ? 1 : 0,
                      static_cast<int>(i) == r.winner ? 1 : 0);
        diag << buf;
        if (a.timing) {
          std::snprintf(buf, sizeof buf, ",%.3f,%.3f,%.3f,%.3f", r.timings.preprocess_cluster_ms,
                        r.timings.forest_ms, r.timings.optimize_ms, r.timings.total_ms);
          diag << buf;
        }
        diag << '\n';
      }
      if (r.particles.empty()) diag << f.index << ',' << row.status << ",0,,,,,,,,\n";
    }
  }
  if (!out) throw DataError("write failed: " + a.out);

  std::cout << "frames " << frames.size() << ", lost " << lost;
  for (const auto& [mode, n] : winners) std::cout << ", " << mode << " wins " << n;
  std::cout << '\n';
  return 2 * lost > static_cast<int>(frames.size()) ? kLostMajority : kOk;
}

// ---- train-forest ---------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  ForestParams params;
  double holdout = 0.1;
};

int run_train(const TrainArgs& a) {
  if (a.holdout < 0.0 || a.holdout >= 1.0) throw std::invalid_argument("--holdout must lie in [0, 1)");
  const auto frames = list_frames(a.data);
  const std::size_t n_test =
      static_cast<std::size_t>(std::ceil(a.holdout * static_cast<double>(frames.size())));
  if (n_test >= frames.size()) throw DataError("holdout leaves no training frames");
  const std::size_t n_train = frames.size() - n_test;

  auto load = [](const FrameFiles& f) {
    if (f.labels.empty()) throw DataError("missing labels for " + f.depth.string());
    return std::make_pair(read_depth_frame(f.depth), read_label_png(f.labels));
  };
  TrainingSet train;
  for (std::size_t i = 0; i < n_train; ++i) {
    const auto [depth, labels] = load(frames[i]);
    train.add(depth, labels);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const PartForest forest = train_forest(train, a.params);
  const double train_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_forest(a.out, forest);

  const ForestParams& p = a.params;
  std::ostringstream canon;
  canon << p.trees << ' ' << p.max_depth << ' ' << p.pixels_per_image << ' ' << p.candidates
        << ' ' << p.thresholds_per_feature << ' ' << p.min_samples << ' ' << p.max_offset << ' '
        << a.holdout;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canon.str())));

  AccuracyStats acc;
  for (std::size_t i = n_train; i < frames.size(); ++i) {
    const auto [depth, labels] = load(frames[i]);
    acc += pixel_accuracy(forest, depth, labels);
  }
  std::ofstream meta = open_output(a.out + ".txt");
  meta << provenance("train-forest", hash, p.seed) << "trees " << p.trees << "\nmax_depth "
       << p.max_depth << "\npixels_per_image " << p.pixels_per_image << "\ncandidates "
       << p.candidates << "\nthresholds_per_feature " << p.thresholds_per_feature
       << "\nmin_samples " << p.min_samples << "\nmax_offset " << p.max_offset << "\ntrain_frames "
       << n_train << "\ntest_frames " << n_test << "\nheld_out_accuracy " << acc.accuracy() << '\n';

  std::printf("trained %d trees on %zu frames in %.1f s\n", p.trees, n_train, train_s);
  if (n_test > 0) {
    std::printf("held-out accuracy %.4f over %zu pixels (%zu frames)\n", acc.accuracy(), acc.total,
                n_test);
  }
  return kOk;
}

// ---- fit-model ------------------------------------------------------------------------

struct FitArgs {
  std::string model;
  std::string frame;
  std::string out;
  std::string pose;
  std::string truth;
  int truth_frame = 0;
  double lo = 0.8;
  double hi = 1.25;
  double step = 0.05;
  bool greedy = false;
  double near = 150.0;
  double far = 600.0;
  double eps_c = 20.0;
};

int run_fit(const FitArgs& a) {
  if (!a.pose.empty() && !a.truth.empty()) throw std::invalid_argument("--pose and --truth exclude each other");
  const HandModel base = load_hand_model(a.model);
  const DepthFrame raw = read_depth_frame(a.frame);
  PoseVector pose = rest_pose();
  if (!a.pose.empty()) pose = parse_pose(a.pose);
  if (!a.truth.empty()) {
    const auto rows = load_truth(a.truth);
    const auto it = std::find_if(rows.begin(), rows.end(),
                                 [&](const TruthRow& r) { return r.frame == a.truth_frame; });
    if (it == rows.end()) throw DataError("frame " + std::to_string(a.truth_frame) + " not in " + a.truth);
    pose = it->pose;
  }
  const DepthFrame frame = preprocess(raw, a.near, a.far);
  FitOptions options;
  options.camera = raw.camera;
  options.width = raw.width;
  options.height = raw.height;
  options.eps_c = a.eps_c;
  options.search = a.greedy ? FitSearch::Greedy : FitSearch::Exhaustive;
  const auto calib = quadtree_cluster(frame, options.eps_c, options.min_valid_fraction);
  const ScaleRange range{a.lo, a.hi, a.step};
  const ScaleGrid grid{range, range, range};
  const FitResult fit = fit_user_model(base, calib, pose, grid, options);

  std::ostringstream canon;
  canon << a.lo << ' ' << a.hi << ' ' << a.step << ' ' << a.greedy << ' ' << a.near << ' '
        << a.far << ' ' << a.eps_c;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canon.str())));

  std::ostringstream body;
  write_hand_model(body, scale_model(base, fit.scale));
  std::string text = body.str();
  const auto eol = text.find('\n') + 1;
  char note[160];
  std::snprintf(note, sizeof note, "# scale length=%.3f width=%.3f sigma=%.3f score=%.6f\n",
                fit.scale.length, fit.scale.width, fit.scale.sigma, fit.score);
  text.insert(eol, provenance("fit-model", hash, 0) + note);
  std::ofstream out = open_output(a.out);
  out << text;

  std::printf("scale length %.3f width %.3f sigma %.3f (score %.6f, %zu evaluations)\n",
              fit.scale.length, fit.scale.width, fit.scale.sigma, fit.score, fit.evaluated);
  return kOk;
}

// ---- synth-gen ------------------------------------------------------------------------

struct SynthArgs {
  std::string model;
  std::string script;
  int random = 0;
  std::string out;
  int width = 320;
  int height = 240;
  Camera camera;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

int run_synth(const SynthArgs& a) {
  if (a.script.empty() == (a.random == 0)) throw std::invalid_argument("give exactly one of --script, --random");
  if (a.width <= 0 || a.height <= 0) throw std::invalid_argument("frame size must be positive");
  const HandModel model = load_hand_model(a.model);

  std::vector<std::pair<int, PoseVector>> poses;
  if (!a.script.empty()) {
    const PoseScript script = load_pose_script(a.script);
    for (int f = script.first_frame(); f <= script.last_frame(); ++f) poses.emplace_back(f, script.pose_at(f));
  } else {
    std::mt19937_64 rng(a.seed);
    for (int f = 0; f < a.random; ++f) poses.emplace_back(f, sample_pose(model, rng));
  }

  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::ostringstream canon;
  canon << a.width << ' ' << a.height << ' ' << a.camera.f << ' ' << a.camera.cx << ' '
        << a.camera.cy << ' ' << a.noise << ' ' << a.random;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(canon.str())));
  std::ofstream truth = open_output(dir / "truth.csv");
  truth << provenance("synth-gen", hash, a.seed) << truth_header() << '\n';

  for (const auto& [f, pose] : poses) {
    RenderOptions ro;
    ro.noise_std = a.noise;
    ro.seed = a.seed * 1000003ULL + static_cast<std::uint64_t>(f);
    const GroundTruthFrame gt = render_depth(model, pose, a.camera, a.width, a.height, ro);
    write_depth_frame(dir / frame_name("depth", f, ".png"), gt.depth);
    write_label_png(dir / frame_name("label", f, ".png"), gt.labels);
    TruthRow row;
    row.frame = f;
    row.pose = gt.pose;
    row.fingertips = gt.fingertips;
    truth << format_row(row) << '\n';
  }
  std::printf("wrote %zu frames to %s\n", poses.size(), dir.string().c_str());
  return kOk;
}

// ---- eval -----------------------------------------------------------------------------

struct EvalArgs {
  std::string tracked;
  std::string truth;
  std::string json;
  std::vector<double> thresholds = kDefaultThresholds;
};

int run_eval(const EvalArgs& a) {
  const auto tracked = load_trajectory(a.tracked);
  const auto truth = load_truth(a.truth);
  const EvalReport report = eval_fingertip_error(tracked, truth, a.thresholds);

  // With JSON on stdout the human summary moves to stderr.
  std::FILE* text = a.json == "-" ? stderr : stdout;
  std::fprintf(text, "frames %zu\nmean %.2f mm\n", report.per_frame_errors.size(), report.mean_error);
  for (const auto& [t, pct] : report.pct_below) std::fprintf(text, "below %g mm: %.1f%%\n", t, pct);

  if (!a.json.empty()) {
    nlohmann::ordered_json j;
    j["frames"] = report.per_frame_errors.size();
    j["mean_error_mm"] = report.mean_error;
    nlohmann::ordered_json pct = nlohmann::ordered_json::object();
    for (const auto& [t, p] : report.pct_below) {
      char key[32];
      std::snprintf(key, sizeof key, "%g", t);
      pct[key] = p;
    }
    j["pct_below"] = pct;
    j["per_frame_errors_mm"] = report.per_frame_errors;
    if (a.json == "-") {
      std::cout << j.dump(2) << '\n';
    } else {
      std::ofstream out = open_output(a.json);
      out << j.dump(2) << '\n';
    }
  }
  return kOk;
}

// ---- bench ----------------------------------------------------------------------------

struct BenchArgs {
  std::string model;
  std::string config;
  std::string forest;
  std::string frames;
  std::string script;
  int count = 100;
  std::optional<std::uint64_t> seed;
};

// Default workload: a slow flexion-extension cycle with some global motion.
PoseScript default_bench_script(int frames) {
  PoseScript script;
  const int last = std::max(frames - 1, 1);
  for (int k = 0; k <= 4; ++k) {
    Keyframe key;
    key.frame = last * k / 4;
    const double a = (k % 2) ? 0.6 : 0.0;
    for (int base : {10, 14, 18, 22}) {
      key.pose[base + 1] = a;
      key.pose[base + 2] = 1.2 * a;
      key.pose[base + 3] = 0.8 * a;
    }
    key.pose[0] = 10.0 * (k - 2);
    key.pose[4] = 0.1 * (k % 3);
    if (script.keyframes.empty() || key.frame > script.keyframes.back().frame) script.keyframes.push_back(key);
  }
  return script;
}

int run_bench(const BenchArgs& a) {
  const HandModel model = load_hand_model(a.model);
  const TrackerConfig cfg = load_config(a.config, a.seed);
  std::optional<PartForest> forest;
  if (!a.forest.empty()) forest = load_forest(a.forest);

  std::vector<DepthFrame> frames;
  if (!a.frames.empty()) {
    for (const FrameFiles& f : list_frames(a.frames)) frames.push_back(read_depth_frame(f.depth));
  } else {
    if (a.count < 1) throw std::invalid_argument("--count must be positive");
    const PoseScript script = a.script.empty() ? default_bench_script(a.count) : load_pose_script(a.script);
    for (auto& gt : make_sequence(model, script, Camera{}, 320, 240)) frames.push_back(std::move(gt.depth));
  }

  TrackerState state = initial_state(cfg);
  std::vector<double> pre, det, opt, total;
  for (const DepthFrame& frame : frames) {
    const FrameResult r = track_frame(state, frame, model, forest ? &*forest : nullptr, cfg);
    pre.push_back(r.timings.preprocess_cluster_ms);
    det.push_back(r.timings.forest_ms);
    opt.push_back(r.timings.optimize_ms);
    total.push_back(r.timings.total_ms);
  }

  std::cout << provenance("bench", config_hash(cfg), cfg.seed);
  std::printf("# %zu frames %dx%d, %d particles x %d iterations, forest %s\n", frames.size(),
              frames.front().width, frames.front().height, cfg.optimizer.particles,
              cfg.optimizer.iterations, forest ? "on" : "off");
  std::printf("%-20s %10s %10s %10s\n", "stage", "median_ms", "mean_ms", "p95_ms");
  auto line = [](const char* name, const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    std::printf("%-20s %10.3f %10.3f %10.3f\n", name, median(v), mean, percentile(v, 0.95));
  };
  line("preprocess+cluster", pre);
  line("forest", det);
  line("optimize", opt);
  line("total", total);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-based hand tracking from depth"};
  app.require_subcommand(1);

  TrackArgs track;
  auto* t = app.add_subcommand("track", "Track a frame directory and write a trajectory CSV");
  t->add_option("--model", track.model, "Hand model file")->required();
  t->add_option("--frames", track.frames, "Directory of depth_NNNNN.png frames")->required();
  t->add_option("--out", track.out, "Trajectory CSV")->required();
  t->add_option("--config", track.config, "Tracker config file");
  t->add_option("--forest", track.forest, "Part forest file (omit for depth-only tracking)");
  t->add_option("--diagnostics", track.diagnostics, "Per-particle diagnostics CSV");
  t->add_option("--seed", track.seed, "Override the config seed");
  t->add_flag("--truth-labels", track.truth_labels, "Use label_NNNNN.png instead of a forest");
  t->add_flag("--timing", track.timing, "Add per-frame wall time (not reproducible)");

  TrainArgs train;
  auto* tr = app.add_subcommand("train-forest", "Train a part forest on labeled frames");
  tr->add_option("--data", train.data, "Directory of depth_/label_ frame pairs")->required();
  tr->add_option("--out", train.out, "Forest file")->required();
  tr->add_option("--trees", train.params.trees, "Tree count")->capture_default_str();
  tr->add_option("--max-depth", train.params.max_depth, "Maximum tree depth")->capture_default_str();
  tr->add_option("--pixels", train.params.pixels_per_image, "Pixels sampled per image")->capture_default_str();
  tr->add_option("--candidates", train.params.candidates, "Candidate splits per node")->capture_default_str();
  tr->add_option("--thresholds", train.params.thresholds_per_feature, "Thresholds per feature")
      ->capture_default_str();
  tr->add_option("--min-samples", train.params.min_samples, "Smallest splittable node")->capture_default_str();
  tr->add_option("--max-offset", train.params.max_offset, "Offset radius (px*mm)")->capture_default_str();
  tr->add_option("--seed", train.params.seed, "Random seed")->capture_default_str();
  tr->add_option("--holdout", train.holdout, "Fraction of frames (the last ones) held out")
      ->capture_default_str();

  FitArgs fit;
  auto* fm = app.add_subcommand("fit-model", "Fit the model scale to a calibration frame");
  fm->add_option("--model", fit.model, "Base hand model")->required();
  fm->add_option("--frame", fit.frame, "Calibration depth PNG")->required();
  fm->add_option("--out", fit.out, "Scaled model file")->required();
  fm->add_option("--pose", fit.pose, "Calibration pose as 26 space-separated values (default rest)");
  fm->add_option("--truth", fit.truth, "Take the calibration pose from a ground-truth CSV");
  fm->add_option("--truth-frame", fit.truth_frame, "Frame index within --truth")->capture_default_str();
  fm->add_option("--lo", fit.lo, "Smallest scale")->capture_default_str();
  fm->add_option("--hi", fit.hi, "Largest scale")->capture_default_str();
  fm->add_option("--step", fit.step, "Scale step")->capture_default_str();
  fm->add_flag("--greedy", fit.greedy, "Coordinate-wise search instead of the full grid");
  fm->add_option("--eps-c", fit.eps_c, "Quadtree depth threshold (mm)")->capture_default_str();

  SynthArgs synth;
  auto* sg = app.add_subcommand("synth-gen", "Render synthetic frames with ground truth");
  sg->add_option("--model", synth.model, "Hand model file")->required();
  sg->add_option("--out", synth.out, "Output directory")->required();
  sg->add_option("--script", synth.script, "Keyframe script");
  sg->add_option("--random", synth.random, "Render this many random poses instead of a script");
  sg->add_option("--width", synth.width, "Frame width")->capture_default_str();
  sg->add_option("--height", synth.height, "Frame height")->capture_default_str();
  sg->add_option("--f", synth.camera.f, "Focal length (px)")->capture_default_str();
  sg->add_option("--cx", synth.camera.cx, "Principal point x")->capture_default_str();
  sg->add_option("--cy", synth.camera.cy, "Principal point y")->capture_default_str();
  sg->add_option("--noise", synth.noise, "Depth noise std (mm)")->capture_default_str();
  sg->add_option("--seed", synth.seed, "Random seed")->capture_default_str();

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "Fingertip error of a trajectory against ground truth");
  ev->add_option("--tracked", eval.tracked, "Trajectory CSV")->required();
  ev->add_option("--truth", eval.truth, "Ground-truth CSV")->required();
  ev->add_option("--json", eval.json, "Write the report as JSON to this file ('-' for stdout)");
  ev->add_option("--thresholds", eval.thresholds, "Error thresholds (mm)")->capture_default_str();

  BenchArgs bench;
  auto* bn = app.add_subcommand("bench", "Per-stage timing over a synthetic or recorded sequence");
  bn->add_option("--model", bench.model, "Hand model file")->required();
  bn->add_option("--config", bench.config, "Tracker config file");
  bn->add_option("--forest", bench.forest, "Part forest file");
  bn->add_option("--frames", bench.frames, "Frame directory (default: render a sequence)");
  bn->add_option("--script", bench.script, "Keyframe script to render");
  bn->add_option("--count", bench.count, "Frames in the built-in sequence")->capture_default_str();
  bn->add_option("--seed", bench.seed, "Override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*t) return run_track(track);
    if (*tr) return run_train(train);
    if (*fm) return run_fit(fit);
    if (*sg) return run_synth(synth);
    if (*ev) return run_eval(eval);
    if (*bn) return run_bench(bench);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
