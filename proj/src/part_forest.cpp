#include "handtrack/part_forest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>

#include "handtrack/errors.hpp"

namespace handtrack {

namespace {

// Shared by full frames and training crops so both read identical responses.
template <class DepthAt>
inline float feature_response(const DepthAt& depth_at, float center, int x, int y,
                              const Eigen::Vector2f& u, const Eigen::Vector2f& v) {
  const float inv = 1.0f / center;
  const float a = depth_at(x + static_cast<int>(std::lround(u.x() * inv)),
                           y + static_cast<int>(std::lround(u.y() * inv)));
  const float b = depth_at(x + static_cast<int>(std::lround(v.x() * inv)),
                           y + static_cast<int>(std::lround(v.y() * inv)));
  return a - b;
}

struct FrameLookup {
  const DepthFrame& frame;
  float operator()(int x, int y) const {
    if (!frame.in_bounds(x, y)) return kBackgroundDepth;
    const float d = frame.at(x, y);
    return d > 0.0f ? d : kBackgroundDepth;
  }
};

struct CropLookup {
  const TrainingSet::Image& img;
  float operator()(int x, int y) const {
    const int cx = x - img.x0;
    const int cy = y - img.y0;
    if (cx < 0 || cy < 0 || cx >= img.width || cy >= img.height) return kBackgroundDepth;
    const float d = img.depth[static_cast<std::size_t>(cy) * img.width + cx];
    return d > 0.0f ? d : kBackgroundDepth;
  }
};

struct Sample {
  std::uint32_t image;
  std::uint16_t x;  // frame coordinates
  std::uint16_t y;
  std::uint8_t label;
  float depth;
};

using Histogram = std::array<std::uint32_t, kNumPartLabels>;

double entropy(const Histogram& h, std::uint64_t n) {
  if (n == 0) return 0.0;
  double e = 0.0;
  for (std::uint32_t c : h) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    e -= p * std::log2(p);
  }
  return e;
}

class TreeBuilder {
 public:
  TreeBuilder(const TrainingSet& data, const ForestParams& params, std::uint64_t seed)
      : data_(data), params_(params), rng_(seed) {}

  DecisionTree build(std::vector<Sample> samples) {
    samples_ = std::move(samples);
    responses_.resize(samples_.size());
    tree_.nodes.clear();
    grow(0, samples_.size(), 0);
    return std::move(tree_);
  }

 private:
  Eigen::Vector2f random_offset() {
    // Uniform in the disc of radius max_offset.
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    const float r = static_cast<float>(params_.max_offset) * std::sqrt(unit(rng_));
    const float a = 2.0f * static_cast<float>(std::numbers::pi) * unit(rng_);
    return {r * std::cos(a), r * std::sin(a)};
  }

  void compute_responses(std::size_t begin, std::size_t end, const Eigen::Vector2f& u,
                         const Eigen::Vector2f& v) {
    const auto& images = data_.images();
    for (std::size_t i = begin; i < end; ++i) {
      const Sample& s = samples_[i];
      responses_[i] =
          feature_response(CropLookup{images[s.image]}, s.depth, s.x, s.y, u, v);
    }
  }

  int grow(std::size_t begin, std::size_t end, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();

    Histogram total{};
    for (std::size_t i = begin; i < end; ++i) ++total[samples_[i].label];
    const std::uint64_t n = end - begin;
    const double parent_entropy = entropy(total, n);

    SplitFeature best;
    double best_gain = 0.0;
    if (depth < params_.max_depth && n >= static_cast<std::uint64_t>(params_.min_samples) &&
        parent_entropy > 0.0) {
      const int thresholds = std::max(1, params_.thresholds_per_feature);
      const int features = std::max(1, params_.candidates / thresholds);
      std::vector<float> cuts(thresholds);
      std::vector<Histogram> bins(thresholds + 1);
      for (int f = 0; f < features; ++f) {
        const Eigen::Vector2f u = random_offset();
        const Eigen::Vector2f v = random_offset();
        compute_responses(begin, end, u, v);
        const auto [lo_it, hi_it] =
            std::minmax_element(responses_.begin() + begin, responses_.begin() + end);
        const float lo = *lo_it;
        const float hi = *hi_it;
        if (!(hi > lo)) continue;
        std::uniform_real_distribution<float> pick(lo, hi);
        for (float& c : cuts) c = pick(rng_);
        std::sort(cuts.begin(), cuts.end());
        for (Histogram& b : bins) b.fill(0);
        for (std::size_t i = begin; i < end; ++i) {
          // Bin k holds responses in [cuts[k-1], cuts[k]); a sample goes left of cut k
          // when its response is below it.
          const auto k = std::upper_bound(cuts.begin(), cuts.end(), responses_[i]) - cuts.begin();
          ++bins[k][samples_[i].label];
        }
        Histogram left{};
        std::uint64_t n_left = 0;
        for (int k = 0; k < thresholds; ++k) {
          for (int l = 0; l < kNumPartLabels; ++l) {
            left[l] += bins[k][l];
            n_left += bins[k][l];
          }
          if (n_left == 0 || n_left == n) continue;
          Histogram right;
          for (int l = 0; l < kNumPartLabels; ++l) right[l] = total[l] - left[l];
          const double gain = parent_entropy -
                              (static_cast<double>(n_left) / n) * entropy(left, n_left) -
                              (static_cast<double>(n - n_left) / n) * entropy(right, n - n_left);
          if (gain > best_gain) {
            best_gain = gain;
            best = {u, v, cuts[k]};
          }
        }
      }
    }

    if (best_gain <= 0.0) {
      ForestNode& node = tree_.nodes[index];
      node.leaf = true;
      for (int l = 0; l < kNumPartLabels; ++l) {
        node.distribution[l] = static_cast<float>(static_cast<double>(total[l]) / n);
      }
      return index;
    }

    compute_responses(begin, end, best.u, best.v);
    std::size_t mid = begin;
    for (std::size_t i = begin; i < end; ++i) {
      if (responses_[i] < best.threshold) {
        std::swap(samples_[i], samples_[mid]);
        std::swap(responses_[i], responses_[mid]);
        ++mid;
      }
    }
    tree_.nodes[index].leaf = false;
    tree_.nodes[index].split = best;
    grow(begin, mid, depth + 1);
    const int right = grow(mid, end, depth + 1);
    tree_.nodes[index].right = right;
    return index;
  }

  const TrainingSet& data_;
  const ForestParams& params_;
  std::mt19937_64 rng_;
  std::vector<Sample> samples_;
  std::vector<float> responses_;
  DecisionTree tree_;
};

std::vector<Sample> draw_samples(const TrainingSet& data, const ForestParams& params,
                                 std::mt19937_64& rng) {
  const auto& images = data.images();
  std::vector<Sample> samples;
  std::uniform_int_distribution<std::size_t> pick_image(0, images.size() - 1);
  std::vector<std::uint32_t> pool;
  for (std::size_t k = 0; k < images.size(); ++k) {
    const std::size_t idx = pick_image(rng);
    const TrainingSet::Image& img = images[idx];
    pool = img.foreground;
    const std::size_t take = std::min<std::size_t>(pool.size(), params.pixels_per_image);
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
      const std::uint32_t c = pool[i];
      const int cx = static_cast<int>(c % img.width);
      const int cy = static_cast<int>(c / img.width);
      samples.push_back({static_cast<std::uint32_t>(idx), static_cast<std::uint16_t>(cx + img.x0),
                         static_cast<std::uint16_t>(cy + img.y0), img.labels[c], img.depth[c]});
    }
  }
  return samples;
}

}  // namespace

float depth_feature(const DepthFrame& frame, int x, int y, const SplitFeature& feature) {
  return feature_response(FrameLookup{frame}, frame.at(x, y), x, y, feature.u, feature.v);
}

const LabelDistribution& DecisionTree::classify(const DepthFrame& frame, int x, int y) const {
  const FrameLookup lookup{frame};
  const float center = frame.at(x, y);
  int i = 0;
  while (!nodes[i].leaf) {
    const SplitFeature& s = nodes[i].split;
    i = feature_response(lookup, center, x, y, s.u, s.v) < s.threshold ? i + 1 : nodes[i].right;
  }
  return nodes[i].distribution;
}

int DecisionTree::depth() const {
  // Preorder walk tracking depth with an explicit stack.
  int deepest = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].leaf) {
      stack.push_back({i + 1, d + 1});
      stack.push_back({nodes[i].right, d + 1});
    }
  }
  return deepest;
}

void TrainingSet::add(const DepthFrame& frame, const LabelImage& labels) {
  if (labels.width != frame.width || labels.height != frame.height) {
    throw std::invalid_argument("TrainingSet::add: label image size does not match frame");
  }
  int x0 = frame.width, y0 = frame.height, x1 = -1, y1 = -1;
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (!frame.valid(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  Image img;
  img.frame_width = frame.width;
  img.frame_height = frame.height;
  if (x1 >= 0) {
    img.x0 = x0;
    img.y0 = y0;
    img.width = x1 - x0 + 1;
    img.height = y1 - y0 + 1;
  }
  img.depth.resize(static_cast<std::size_t>(img.width) * img.height);
  img.labels.resize(img.depth.size());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const std::size_t c = static_cast<std::size_t>(y) * img.width + x;
      img.depth[c] = frame.at(x + img.x0, y + img.y0);
      img.labels[c] = labels.at(x + img.x0, y + img.y0);
      if (img.depth[c] > 0.0f && img.labels[c] < kNumPartLabels) {
        img.foreground.push_back(static_cast<std::uint32_t>(c));
      }
    }
  }
  images_.push_back(std::move(img));
}

PartForest train_forest(const TrainingSet& data, const ForestParams& params) {
  if (data.size() == 0) throw std::invalid_argument("train_forest: empty dataset");
  if (params.trees < 1 || params.max_depth < 0 || params.pixels_per_image < 1 ||
      params.candidates < 1 || params.thresholds_per_feature < 1 || !(params.max_offset > 0.0)) {
    throw std::invalid_argument("train_forest: invalid parameters");
  }
  PartForest forest;
  for (int t = 0; t < params.trees; ++t) {
    // Independent stream per tree so trees could be grown in any order.
    std::seed_seq seq{params.seed, static_cast<std::uint64_t>(t)};
    std::mt19937_64 rng(seq);
    std::vector<Sample> samples = draw_samples(data, params, rng);
    TreeBuilder builder(data, params, rng());
    if (samples.empty()) {
      DecisionTree tree;
      tree.nodes.emplace_back();
      tree.nodes[0].distribution.fill(1.0f / kNumPartLabels);
      forest.trees.push_back(std::move(tree));
      continue;
    }
    forest.trees.push_back(builder.build(std::move(samples)));
  }
  return forest;
}

Classification classify_frame(const PartForest& forest, const DepthFrame& frame) {
  Classification out;
  out.labels = LabelImage(frame.width, frame.height);
  out.confidence.assign(static_cast<std::size_t>(frame.width) * frame.height, 0.0f);
  if (forest.trees.empty()) return out;
  const float scale = 1.0f / static_cast<float>(forest.trees.size());
  for (int y = 0; y < frame.height; ++y) {
    for (int x = 0; x < frame.width; ++x) {
      if (!frame.valid(x, y)) continue;
      LabelDistribution mean{};
      for (const DecisionTree& tree : forest.trees) {
        const LabelDistribution& d = tree.classify(frame, x, y);
        for (int l = 0; l < kNumPartLabels; ++l) mean[l] += d[l];
      }
      int best = 0;
      for (int l = 1; l < kNumPartLabels; ++l) {
        if (mean[l] > mean[best]) best = l;
      }
      out.labels.at(x, y) = static_cast<std::uint8_t>(best);
      out.confidence[static_cast<std::size_t>(y) * frame.width + x] = mean[best] * scale;
    }
  }
  return out;
}

AccuracyStats pixel_accuracy(const PartForest& forest, const DepthFrame& frame,
                             const LabelImage& truth) {
  const Classification c = classify_frame(forest, frame);
  AccuracyStats stats;
  for (std::size_t i = 0; i < truth.labels.size(); ++i) {
    if (!(frame.depth[i] > 0.0f) || truth.labels[i] >= kNumPartLabels) continue;
    ++stats.total;
    if (c.labels.labels[i] == truth.labels[i]) ++stats.correct;
  }
  return stats;
}

namespace {

constexpr char kForestMagic[4] = {'H', 'T', 'P', 'F'};
constexpr std::uint32_t kForestVersion = 1;

template <class T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw DataError("truncated forest file");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

int read_subtree(std::istream& in, DecisionTree& tree, int depth) {
  if (depth > 64) throw DataError("forest tree exceeds maximum depth");
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  const auto kind = get<std::uint8_t>(in);
  if (kind == 1) {
    for (float& p : tree.nodes[index].distribution) p = get<float>(in);
    return index;
  }
  if (kind != 0) throw DataError("corrupt forest node kind");
  SplitFeature s;
  s.u.x() = get<float>(in);
  s.u.y() = get<float>(in);
  s.v.x() = get<float>(in);
  s.v.y() = get<float>(in);
  s.threshold = get<float>(in);
  tree.nodes[index].leaf = false;
  tree.nodes[index].split = s;
  read_subtree(in, tree, depth + 1);
  const int right = read_subtree(in, tree, depth + 1);
  tree.nodes[index].right = right;
  return index;
}

}  // namespace

void write_forest(std::ostream& out, const PartForest& forest) {
  out.write(kForestMagic, 4);
  put<std::uint32_t>(out, kForestVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(forest.trees.size()));
  put<std::uint32_t>(out, kNumPartLabels);
  for (const DecisionTree& tree : forest.trees) {
    // Nodes are already in preorder.
    for (const ForestNode& node : tree.nodes) {
      put<std::uint8_t>(out, node.leaf ? 1 : 0);
      if (node.leaf) {
        for (float p : node.distribution) put<float>(out, p);
      } else {
        put<float>(out, node.split.u.x());
        put<float>(out, node.split.u.y());
        put<float>(out, node.split.v.x());
        put<float>(out, node.split.v.y());
        put<float>(out, node.split.threshold);
      }
    }
  }
}

PartForest read_forest(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kForestMagic, 4) != 0) {
    throw DataError("not a forest file (bad magic)");
  }
  if (get<std::uint32_t>(in) != kForestVersion) throw DataError("unsupported forest version");
  const auto trees = get<std::uint32_t>(in);
  if (get<std::uint32_t>(in) != static_cast<std::uint32_t>(kNumPartLabels)) {
    throw DataError("forest label count mismatch");
  }
  PartForest forest;
  for (std::uint32_t t = 0; t < trees; ++t) {
    DecisionTree tree;
    read_subtree(in, tree, 0);
    forest.trees.push_back(std::move(tree));
  }
  return forest;
}

void save_forest(const std::filesystem::path& path, const PartForest& forest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  write_forest(out, forest);
}

PartForest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open forest file: " + path.string());
  return read_forest(in);
}

}  // namespace handtrack
