#include <random>
#include <sstream>

#include <doctest.h>

#include "handtrack/part_forest.hpp"
#include "support/fixtures.hpp"
#include "support/planes.hpp"

using namespace handtrack;
using namespace handtrack::testing;

namespace {

PartForest pure_forest(int label, int trees = 3) {
  PartForest f;
  for (int t = 0; t < trees; ++t) {
    ForestNode leaf;
    leaf.distribution[label] = 1.0f;
    f.trees.push_back({{leaf}});
  }
  return f;
}

std::string bytes(const PartForest& f) {
  std::ostringstream out;
  write_forest(out, f);
  return out.str();
}

TrainingSet small_plane_set(int images, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TrainingSet set;
  DepthFrame f;
  LabelImage l;
  for (int i = 0; i < images; ++i) {
    two_plane_frame(rng, f, l);
    set.add(f, l);
  }
  return set;
}

ForestParams quick_params() {
  ForestParams p;
  p.pixels_per_image = 100;
  p.candidates = 200;
  p.max_depth = 8;
  return p;
}

}  // namespace

TEST_SUITE("part_forest") {

TEST_CASE("depth feature responses") {
  DepthFrame plane(40, 40, Camera{}, 400.0f);
  const SplitFeature same{{2000.0f, 0.0f}, {2000.0f, 0.0f}, 0.0f};
  CHECK(depth_feature(plane, 20, 20, same) == 0.0f);
  const SplitFeature inside{{2000.0f, 400.0f}, {-1200.0f, 800.0f}, 0.0f};
  CHECK(depth_feature(plane, 20, 20, inside) == 0.0f);

  // u lands 30 px to the right, outside the frame; v stays on the plane.
  DepthFrame ramp(40, 40, Camera{});
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 40; ++x) ramp.at(x, y) = 300.0f + x;
  }
  const float center = ramp.at(20, 20);
  const SplitFeature off{{30.0f * center, 0.0f}, {-5.0f * center, 0.0f}, 0.0f};
  CHECK(depth_feature(ramp, 20, 20, off) == kBackgroundDepth - ramp.at(15, 20));
  ramp.at(25, 20) = 0.0f;
  const SplitFeature hole{{5.0f * center, 0.0f}, {0.0f, 0.0f}, 0.0f};
  CHECK(depth_feature(ramp, 20, 20, hole) == kBackgroundDepth - center);
}

TEST_CASE("responses are invariant to image translation while probes stay inside") {
  DepthFrame a(60, 60, Camera{}), b(60, 60, Camera{});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> d(300.0f, 500.0f);
  for (int y = 0; y < 50; ++y) {
    for (int x = 0; x < 50; ++x) {
      a.at(x, y) = d(rng);
      b.at(x + 7, y + 4) = a.at(x, y);
    }
  }
  std::uniform_real_distribution<float> o(-3000.0f, 3000.0f);
  for (int i = 0; i < 50; ++i) {
    const SplitFeature s{{o(rng), o(rng)}, {o(rng), o(rng)}, 0.0f};
    CHECK(depth_feature(a, 25, 25, s) == depth_feature(b, 32, 29, s));
  }
}

TEST_CASE("single-label data grows pure leaves") {
  TrainingSet set;
  DepthFrame f(20, 20, Camera{}, 350.0f);
  set.add(f, LabelImage(20, 20, 4));
  const PartForest forest = train_forest(set, quick_params());
  REQUIRE(forest.trees.size() == 3);
  for (const auto& t : forest.trees) {
    CHECK(t.nodes.size() == 1);
    CHECK(t.depth() == 0);
  }
  const Classification c = classify_frame(forest, f);
  for (std::size_t i = 0; i < c.labels.labels.size(); ++i) {
    CHECK(c.labels.labels[i] == 4);
    CHECK(c.confidence[i] == doctest::Approx(1.0));
  }
}

TEST_CASE("classification averages the trees") {
  DepthFrame f(4, 3, Camera{}, 300.0f);
  f.at(1, 1) = 0.0f;
  const Classification pure = classify_frame(pure_forest(3), f);
  CHECK(pure.labels.at(0, 0) == 3);
  CHECK(pure.confidence[0] == doctest::Approx(1.0));
  CHECK(pure.labels.at(1, 1) == kBackgroundLabel);
  CHECK(pure.confidence[5] == 0.0f);

  PartForest split = pure_forest(1, 1);
  split.trees.push_back(pure_forest(0, 1).trees[0]);
  const Classification tie = classify_frame(split, f);
  CHECK(tie.labels.at(0, 0) == 0);
  CHECK(tie.confidence[0] == doctest::Approx(0.5));

  const Classification empty = classify_frame(pure_forest(2), DepthFrame(4, 3, Camera{}));
  for (auto l : empty.labels.labels) CHECK(l == kBackgroundLabel);
}

TEST_CASE("two-plane data is separated almost perfectly") {
  ForestParams p;
  p.pixels_per_image = 500;
  p.candidates = 1000;
  p.max_depth = 20;
  const PartForest forest = train_forest(small_plane_set(200, 3), p);
  std::mt19937_64 rng(99);
  AccuracyStats acc;
  DepthFrame f;
  LabelImage l;
  for (int i = 0; i < 30; ++i) {
    two_plane_frame(rng, f, l);
    acc += pixel_accuracy(forest, f, l);
  }
  MESSAGE("two-plane held-out accuracy " << acc.accuracy());
  CHECK(acc.accuracy() > 0.99);
}

TEST_CASE("trained trees respect their structural invariants") {
  ForestParams p = quick_params();
  p.max_depth = 5;
  const PartForest forest = train_forest(small_plane_set(20, 8), p);
  for (const auto& t : forest.trees) {
    CHECK(t.depth() <= 5);
    for (const auto& n : t.nodes) {
      if (!n.leaf) {
        CHECK(n.split.u.norm() <= p.max_offset);
        CHECK(n.split.v.norm() <= p.max_offset);
        continue;
      }
      double sum = 0.0;
      for (float q : n.distribution) sum += q;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("training is reproducible from the seed") {
  const TrainingSet set = small_plane_set(15, 5);
  ForestParams p = quick_params();
  const std::string a = bytes(train_forest(set, p));
  CHECK(a == bytes(train_forest(set, p)));
  p.seed = 2;
  CHECK(a != bytes(train_forest(set, p)));
}

TEST_CASE("forest files round trip") {
  const PartForest forest = train_forest(small_plane_set(10, 1), quick_params());
  const auto dir = scratch_dir("forest_io");
  save_forest(dir / "f.bin", forest);
  const PartForest back = load_forest(dir / "f.bin");
  CHECK(bytes(back) == bytes(forest));
  const std::string raw = bytes(forest);
  CHECK(raw.substr(0, 4) == "HTPF");
  CHECK(static_cast<unsigned char>(raw[4]) == 1);

  std::istringstream bad_magic("XXXX" + raw.substr(4));
  CHECK_THROWS_AS(read_forest(bad_magic), DataError);
  std::istringstream truncated(raw.substr(0, raw.size() / 2));
  CHECK_THROWS_AS(read_forest(truncated), DataError);
  CHECK_THROWS_AS(load_forest(dir / "missing.bin"), DataError);
}

TEST_CASE("training rejects bad input") {
  CHECK_THROWS(train_forest(TrainingSet{}, quick_params()));
  TrainingSet set;
  CHECK_THROWS_AS(set.add(DepthFrame(4, 4, Camera{}, 300.0f), LabelImage(3, 4)), std::invalid_argument);
}

}  // TEST_SUITE
