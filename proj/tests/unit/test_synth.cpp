#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <doctest.h>

#include "handtrack/synth.hpp"
#include "support/fixtures.hpp"
#include "support/sequences.hpp"

using namespace handtrack;
using namespace handtrack::testing;

namespace {

// Default skeleton carrying only the given spheres, placed in camera space at rest pose.
HandModel sphere_model(const std::vector<std::pair<Eigen::Vector3d, double>>& spheres) {
  HandModel m = default_model();
  const Eigen::Isometry3d root = pose_hand(m, rest_pose()).bone_frames[0];
  m.gaussians.clear();
  int label = 0;
  for (const auto& [center, sigma] : spheres) {
    Gaussian3D g;
    g.bone = 0;
    g.mu = root.inverse() * center;
    g.sigma = sigma;
    g.label = label++;
    m.gaussians.push_back(g);
  }
  return m;
}

// Nearest front-face hit of the pixel ray with any sphere, independent of the renderer.
struct Hit {
  double z;
  int index;
};

std::optional<Hit> cast(const Mixture<Gaussian3D>& spheres, const Camera& cam, int x, int y) {
  const Eigen::Vector3d d((x - cam.cx) / cam.f, (y - cam.cy) / cam.f, 1.0);
  std::optional<Hit> best;
  for (std::size_t i = 0; i < spheres.size(); ++i) {
    const Eigen::Vector3d& c = spheres[i].mu;
    const double a = d.squaredNorm();
    const double b = d.dot(c);
    const double disc = b * b - a * (c.squaredNorm() - spheres[i].sigma * spheres[i].sigma);
    if (disc < 0.0) continue;
    const double t = (b - std::sqrt(disc)) / a;
    if (t > 0.0 && (!best || t < best->z)) best = Hit{t, static_cast<int>(i)};
  }
  return best;
}

bool ray_hits(const Gaussian3D& g, const Camera& cam, int x, int y, double slack) {
  const Eigen::Vector3d d = Eigen::Vector3d((x - cam.cx) / cam.f, (y - cam.cy) / cam.f, 1.0).normalized();
  const double along = d.dot(g.mu);
  return (g.mu - along * d).norm() <= g.sigma + slack;
}

}  // namespace

TEST_SUITE("synth_oracle") {

TEST_CASE("a sphere on the principal ray shows its front face") {
  const Camera cam;
  const HandModel m = sphere_model({{{0.0, 0.0, 400.0}, 20.0}});
  const GroundTruthFrame gt = render_depth(m, rest_pose(), cam, 320, 240);
  CHECK(gt.depth.at(160, 120) == 380.0f);
  CHECK(gt.labels.at(160, 120) == 0);
  // Far corner rays miss the sphere.
  CHECK(gt.depth.at(0, 0) == 0.0f);
  CHECK(gt.labels.at(0, 0) == kBackgroundLabel);
}

TEST_CASE("the nearer sphere wins on a shared ray") {
  const HandModel m = sphere_model({{{0.0, 0.0, 400.0}, 30.0}, {{0.0, 0.0, 300.0}, 10.0}});
  const GroundTruthFrame gt = render_depth(m, rest_pose(), Camera{}, 320, 240);
  CHECK(gt.depth.at(160, 120) == 290.0f);
  CHECK(gt.labels.at(160, 120) == 1);
  // Outside the small sphere's silhouette the far one shows through.
  CHECK(gt.labels.at(160 + 13, 120) == 0);
}

TEST_CASE("rendered depth matches independent ray casting") {
  const Camera cam;
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const PoseVector pose = sample_pose(default_model(), rng);
    const GroundTruthFrame gt = render_depth(default_model(), pose, cam, 320, 240);
    const auto posed = forward_kinematics(default_model(), pose);
    int mismatched = 0;
    for (int y = 0; y < 240; ++y) {
      for (int x = 0; x < 320; ++x) {
        const auto hit = cast(posed, cam, x, y);
        if (!hit) {
          mismatched += gt.depth.valid(x, y);
          continue;
        }
        mismatched += std::abs(gt.depth.at(x, y) - hit->z) > 0.5 + 1e-6;
      }
    }
    CHECK(mismatched == 0);
  }
}

TEST_CASE("every labeled pixel lies on a sphere carrying its label") {
  const Camera cam;
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const PoseVector pose = sample_pose(default_model(), rng);
    const GroundTruthFrame gt = render_depth(default_model(), pose, cam, 320, 240);
    const auto posed = forward_kinematics(default_model(), pose);
    int orphans = 0;
    for (int y = 0; y < 240; ++y) {
      for (int x = 0; x < 320; ++x) {
        const std::uint8_t l = gt.labels.at(x, y);
        CHECK((l == kBackgroundLabel) == !gt.depth.valid(x, y));
        if (l == kBackgroundLabel) continue;
        bool found = false;
        for (const auto& g : posed) found = found || (g.label == l && ray_hits(g, cam, x, y, 1e-9));
        orphans += !found;
      }
    }
    CHECK(orphans == 0);
  }
}

TEST_CASE("fingertips follow forward kinematics") {
  std::mt19937_64 rng(8);
  const PoseVector pose = sample_pose(default_model(), rng);
  const GroundTruthFrame gt = render_depth(default_model(), pose, Camera{}, 320, 240);
  const auto tips = fingertip_positions(default_model(), pose);
  CHECK(gt.pose == pose);
  for (int f = 0; f < kNumFingertips; ++f) CHECK(gt.fingertips[f] == tips[f]);
}

TEST_CASE("quad depths match the analytic surface") {
  const Camera cam;
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const PoseVector pose = sample_pose(default_model(), rng);
    const GroundTruthFrame gt = render_depth(default_model(), pose, cam, 320, 240);
    const auto posed = forward_kinematics(default_model(), pose);
    const auto quads = quadtree_leaves(gt.depth, 20.0);
    REQUIRE(!quads.empty());
    double worst = 0.0;
    for (const Quad& q : quads) {
      double sum = 0.0;
      int n = 0;
      for (int y = q.y0; y < q.y0 + q.size && y < 240; ++y) {
        for (int x = q.x0; x < q.x0 + q.size && x < 320; ++x) {
          if (const auto hit = cast(posed, cam, x, y)) {
            sum += hit->z;
            ++n;
          }
        }
      }
      REQUIRE(n > 0);
      worst = std::max(worst, std::abs(q.mean_depth - sum / n));
    }
    CHECK(worst < 20.0);
  }
}

TEST_CASE("noise is seeded") {
  RenderOptions o;
  o.noise_std = 2.0;
  o.seed = 3;
  const auto a = render_depth(default_model(), flexed(0.3), Camera{}, 160, 120, o);
  const auto b = render_depth(default_model(), flexed(0.3), Camera{}, 160, 120, o);
  const auto clean = render_depth(default_model(), flexed(0.3), Camera{}, 160, 120);
  CHECK(a.depth.depth == b.depth.depth);
  CHECK(a.depth.depth != clean.depth.depth);
  CHECK(a.labels.labels == clean.labels.labels);
}

TEST_CASE("identical keyframes give identical frames") {
  PoseScript s;
  s.keyframes = {{0, flexed(0.5)}, {10, flexed(0.5)}};
  const auto seq = make_sequence(default_model(), s, Camera{}, 160, 120);
  REQUIRE(seq.size() == 11);
  for (const auto& f : seq) {
    CHECK(f.depth.depth == seq.front().depth.depth);
    CHECK(f.labels.labels == seq.front().labels.labels);
  }
}

TEST_CASE("poses interpolate linearly per DOF") {
  PoseVector end = rest_pose();
  end[12] = 1.0;
  PoseScript s;
  s.keyframes = {{0, rest_pose()}, {10, end}};
  CHECK(s.pose_at(5)[12] == doctest::Approx(0.5));
  CHECK(s.pose_at(0) == rest_pose());
  CHECK(s.pose_at(10) == end);
  CHECK(s.pose_at(-3) == rest_pose());
  CHECK(s.pose_at(40) == end);
  const auto seq = make_sequence(default_model(), s, Camera{}, 160, 120);
  CHECK(seq[5].pose[12] == doctest::Approx(0.5));
}

TEST_CASE("flexion sweeps the fingertip depth monotonically") {
  PoseScript s;
  s.keyframes = {{0, flexed(0.0)}, {20, flexed(0.5)}};
  const auto seq = make_sequence(default_model(), s, Camera{}, 160, 120);
  for (int f = 1; f < kNumFingertips; ++f) {
    int rising = 0, falling = 0;
    for (std::size_t i = 1; i < seq.size(); ++i) {
      const double dz = seq[i].fingertips[f].z() - seq[i - 1].fingertips[f].z();
      rising += dz > 0.0;
      falling += dz < 0.0;
    }
    CHECK((rising == 0 || falling == 0));
    CHECK(rising + falling > 0);
  }
}

TEST_CASE("sequences are deterministic and may be empty") {
  const PoseScript s = flexex_script(12, 4);
  const auto a = make_sequence(default_model(), s, Camera{}, 160, 120);
  const auto b = make_sequence(default_model(), s, Camera{}, 160, 120);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].depth.depth == b[i].depth.depth);
  CHECK(make_sequence(default_model(), PoseScript{}, Camera{}, 160, 120).empty());
}

TEST_CASE("script files round trip") {
  const PoseScript s = flexex_script(30, 7);
  std::stringstream buf;
  write_pose_script(buf, s);
  const PoseScript back = parse_pose_script(buf);
  REQUIRE(back.keyframes.size() == s.keyframes.size());
  for (std::size_t i = 0; i < s.keyframes.size(); ++i) {
    CHECK(back.keyframes[i].frame == s.keyframes[i].frame);
    CHECK(back.keyframes[i].pose == s.keyframes[i].pose);
  }
  const PoseScript shipped = load_pose_script(data_path("flexex.script"));
  CHECK(shipped.first_frame() == 0);
  CHECK(shipped.last_frame() == 199);
}

TEST_CASE("malformed scripts are rejected") {
  PoseScript s;
  s.keyframes = {{5, rest_pose()}, {5, rest_pose()}};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  std::istringstream bad_header("nonsense 1\n");
  CHECK_THROWS_AS(parse_pose_script(bad_header), DataError);
  std::istringstream short_row("handtrack-script 1\nkey 0 1 2 3\n");
  CHECK_THROWS_AS(parse_pose_script(short_row), DataError);
  std::string zeros;
  for (int j = 0; j < kNumDofs; ++j) zeros += " 0";
  std::istringstream backwards("handtrack-script 1\nkey 4" + zeros + "\nkey 2" + zeros + "\n");
  CHECK_THROWS(parse_pose_script(backwards));
  CHECK_THROWS_AS(load_pose_script(data_path("missing.script")), DataError);
}

}  // TEST_SUITE
