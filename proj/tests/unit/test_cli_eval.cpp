#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include <doctest.h>

#include "handtrack/config.hpp"
#include "handtrack/eval.hpp"
#include "handtrack/synth.hpp"
#include "support/fixtures.hpp"
#include "support/sequences.hpp"

using namespace handtrack;
using namespace handtrack::testing;

namespace {

FingertipPositions tips_at(double base) {
  FingertipPositions t;
  for (int f = 0; f < kNumFingertips; ++f) t[f] = Eigen::Vector3d(base + f, 2.0 * f, 400.0 + base);
  return t;
}

std::vector<FingertipPositions> frames(int n) {
  std::vector<FingertipPositions> out;
  for (int i = 0; i < n; ++i) out.push_back(tips_at(i));
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Runs the CLI with stdout and stderr captured; returns the exit code.
int cli(const std::string& args, const std::filesystem::path& out, std::string* text = nullptr) {
  const std::string cmd = std::string(HANDTRACK_CLI) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (text) *text = slurp(out);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Writes a short rendered sequence to `dir` through the CLI.
void synth_frames(const std::filesystem::path& dir, int count) {
  std::ofstream script(dir / "s.script");
  write_pose_script(script, flexex_script(count, 3));
  script.close();
  REQUIRE(cli("synth-gen --model " + data_path("hand_default.model").string() + " --script " +
                  (dir / "s.script").string() + " --out " + (dir / "frames").string(),
              dir / "synth.log") == 0);
}

}  // namespace

TEST_SUITE("cli_eval") {

TEST_CASE("identical trajectories have zero error") {
  const EvalReport r = eval_fingertip_error(frames(7), frames(7));
  CHECK(r.mean_error == 0.0);
  REQUIRE(r.per_frame_errors.size() == 7);
  for (double t : kDefaultThresholds) CHECK(r.pct_below.at(t) == 100.0);
}

TEST_CASE("a 3-4-5 offset gives 5 mm") {
  auto tracked = frames(4);
  for (auto& t : tracked) {
    for (auto& p : t) p += Eigen::Vector3d(3.0, 4.0, 0.0);
  }
  const EvalReport r = eval_fingertip_error(tracked, frames(4));
  CHECK(r.mean_error == doctest::Approx(5.0));
  CHECK(r.pct_below.at(15.0) == 100.0);
  CHECK(fingertip_error(tracked[0], frames(1)[0]) == doctest::Approx(5.0));
}

TEST_CASE("one bad frame in a hundred") {
  auto tracked = frames(100);
  for (auto& p : tracked[42]) p.z() += 100.0;
  const EvalReport r = eval_fingertip_error(tracked, frames(100));
  CHECK(r.pct_below.at(30.0) == doctest::Approx(99.0));
  CHECK(r.mean_error == doctest::Approx(1.0));
}

TEST_CASE("percentages are bounded and monotone in the threshold") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  auto tracked = frames(50);
  for (auto& t : tracked) {
    const double e = u(rng);
    for (auto& p : t) p.x() += e;
  }
  const std::vector<double> th = {1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 45.0};
  const EvalReport r = eval_fingertip_error(tracked, frames(50), th);
  double last = 0.0;
  for (const auto& [t, pct] : r.pct_below) {
    CHECK(pct >= last);
    CHECK(pct <= 100.0);
    last = pct;
  }
  CHECK(r.pct_below.at(45.0) == 100.0);
}

TEST_CASE("mismatched inputs are hard errors") {
  CHECK_THROWS(eval_fingertip_error(frames(3), frames(4)));
  std::vector<TrajectoryRow> tracked(2);
  std::vector<TruthRow> truth(2);
  tracked[1].frame = 1;
  truth[1].frame = 2;
  CHECK_THROWS(eval_fingertip_error(tracked, truth));
  truth[1].frame = 1;
  CHECK_NOTHROW(eval_fingertip_error(tracked, truth));
}

TEST_CASE("trajectory and truth files round trip") {
  TrajectoryRow row;
  row.frame = 12;
  row.status = "lost";
  row.pose = PoseVector::LinSpaced(-1.0, 1.0);
  row.fingertips = tips_at(3.25);
  row.mode = "detection_guided";
  std::stringstream buf;
  buf << "# provenance\n" << trajectory_header(false) << '\n' << format_row(row) << '\n';
  const auto back = read_trajectory(buf);
  REQUIRE(back.size() == 1);
  CHECK(back[0].frame == 12);
  CHECK(back[0].status == "lost");
  CHECK(back[0].mode == "detection_guided");
  // Six decimals on disk.
  CHECK((back[0].pose - row.pose).norm() < 1e-5);
  CHECK(fingertip_error(back[0].fingertips, row.fingertips) < 1e-5);
  CHECK(!back[0].time_ms);

  TruthRow t;
  t.frame = 3;
  t.pose = row.pose;
  t.fingertips = row.fingertips;
  std::stringstream tbuf;
  tbuf << truth_header() << '\n' << format_row(t) << '\n';
  const auto tback = read_truth(tbuf);
  REQUIRE(tback.size() == 1);
  CHECK((tback[0].pose - t.pose).norm() < 1e-5);
  CHECK(fingertip_error(tback[0].fingertips, t.fingertips) < 1e-5);
}

TEST_CASE("malformed CSV is rejected") {
  std::stringstream short_row;
  short_row << trajectory_header(false) << "\n1,tracked,0,0\n";
  CHECK_THROWS_AS(read_trajectory(short_row), DataError);
  std::stringstream bad_number;
  bad_number << truth_header() << "\n0";
  for (int i = 0; i < kNumDofs + 15; ++i) bad_number << (i == 4 ? ",x" : ",0");
  bad_number << '\n';
  CHECK_THROWS_AS(read_truth(bad_number), DataError);
  CHECK_THROWS_AS(load_truth("/nonexistent/truth.csv"), DataError);
}

TEST_CASE("tracker configuration files") {
  std::istringstream in("# tuned\niterations = 30\nparticles = 3\nconditioning = uniform\n");
  const TrackerConfig cfg = parse_tracker_config(in);
  CHECK(cfg.optimizer.iterations == 30);
  CHECK(cfg.optimizer.particles == 3);
  CHECK(cfg.optimizer.conditioning == Conditioning::Uniform);

  std::istringstream again(format_tracker_config(cfg));
  const TrackerConfig back = parse_tracker_config(again);
  CHECK(format_tracker_config(back) == format_tracker_config(cfg));
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(config_hash(cfg) != config_hash(TrackerConfig{}));
  CHECK(config_hash(TrackerConfig{}).size() == 16);

  TrackerConfig threaded = cfg;
  threaded.optimizer.threads = 4;
  CHECK(config_hash(threaded) == config_hash(cfg));

  std::istringstream unknown("iteratons = 3\n");
  CHECK_THROWS_AS(parse_tracker_config(unknown), DataError);
  std::istringstream malformed("iterations = many\n");
  CHECK_THROWS_AS(parse_tracker_config(malformed), DataError);
  std::istringstream bad_mode("conditioning = sideways\n");
  CHECK_THROWS_AS(parse_tracker_config(bad_mode), DataError);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("eval on identical files reports zero") {
  const auto dir = scratch_dir("cli_eval");
  synth_frames(dir, 4);
  const std::string truth = (dir / "frames" / "truth.csv").string();
  {
    std::ofstream traj(dir / "perfect.csv");
    traj << trajectory_header(false) << '\n';
    for (const TruthRow& t : load_truth(truth)) {
      TrajectoryRow r;
      r.frame = t.frame;
      r.pose = t.pose;
      r.fingertips = t.fingertips;
      traj << format_row(r) << '\n';
    }
  }
  std::string text;
  CHECK(cli("eval --tracked " + (dir / "perfect.csv").string() + " --truth " + truth, dir / "eval.txt", &text) ==
        0);
  CHECK(text.find("mean 0.00 mm") != std::string::npos);
}

TEST_CASE("exit codes separate usage and data errors") {
  const auto dir = scratch_dir("cli_codes");
  CHECK(cli("", dir / "none.txt") == 1);
  CHECK(cli("frobnicate", dir / "bad.txt") == 1);
  CHECK(cli("eval --tracked", dir / "flag.txt") == 1);
  CHECK(cli("eval --tracked /nonexistent.csv --truth /nonexistent.csv", dir / "missing.txt") == 2);
  std::ofstream(dir / "garbage.csv") << "frame,status\n1,2,3\n";
  const std::string g = (dir / "garbage.csv").string();
  CHECK(cli("eval --tracked " + g + " --truth " + g, dir / "garbage.txt") == 2);
  CHECK(cli("--help", dir / "help.txt") == 0);
}

TEST_CASE("tracking without a forest reports depth-only winners") {
  const auto dir = scratch_dir("cli_track");
  synth_frames(dir, 6);
  std::string text;
  REQUIRE(cli("track --model " + data_path("hand_default.model").string() + " --frames " +
                  (dir / "frames").string() + " --out " + (dir / "traj.csv").string() +
                  " --diagnostics " + (dir / "diag.csv").string() + " --seed 3",
              dir / "track.txt", &text) == 0);
  const auto rows = load_trajectory(dir / "traj.csv");
  REQUIRE(rows.size() == 6);
  for (const auto& r : rows) CHECK(r.mode == "depth_only");

  const std::string header = slurp(dir / "traj.csv");
  CHECK(header.rfind("# handtrack track", 0) == 0);
  TrackerConfig seeded;
  seeded.seed = 3;
  CHECK(header.find("config_hash=" + config_hash(seeded)) != std::string::npos);
  CHECK(header.find("seed=3") != std::string::npos);

  std::istringstream diag(slurp(dir / "diag.csv"));
  std::string line;
  int rows_seen = 0;
  while (std::getline(diag, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("frame,", 0) == 0) continue;
    ++rows_seen;
    CHECK(line.find("detection_guided") == std::string::npos);
  }
  CHECK(rows_seen > 0);
}

}  // TEST_SUITE
