#include "handtrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "handtrack/errors.hpp"

namespace handtrack {

GroundTruthFrame render_depth(const HandModel& model, const PoseVector& pose, const Camera& camera,
                              int width, int height, const RenderOptions& options) {
  GroundTruthFrame out;
  out.pose = pose;
  out.depth = DepthFrame(width, height, camera);
  out.labels = LabelImage(width, height);
  out.fingertips = fingertip_positions(model, pose);

  const Mixture<Gaussian3D> posed = forward_kinematics(model, pose);
  std::vector<double> zbuf(static_cast<std::size_t>(width) * height,
                           std::numeric_limits<double>::infinity());
  for (const Gaussian3D& g : posed) {
    const Eigen::Vector3d& c = g.mu;
    const double r = g.sigma;
    if (c.z() + r <= 0.0) continue;
    int x0 = 0, x1 = width - 1, y0 = 0, y1 = height - 1;
    if (c.z() - r > 0.0) {
      // The sphere's image lies within the projected center +- r f / (z - r).
      const Eigen::Vector2d ctr = camera.project(c);
      const double ext = r * camera.f / (c.z() - r) + 1.0;
      x0 = std::max(0, static_cast<int>(std::floor(ctr.x() - ext)));
      x1 = std::min(width - 1, static_cast<int>(std::ceil(ctr.x() + ext)));
      y0 = std::max(0, static_cast<int>(std::floor(ctr.y() - ext)));
      y1 = std::min(height - 1, static_cast<int>(std::ceil(ctr.y() + ext)));
    }
    const double c_sq = c.squaredNorm() - r * r;
    for (int v = y0; v <= y1; ++v) {
      for (int u = x0; u <= x1; ++u) {
        const Eigen::Vector3d dir((u - camera.cx) / camera.f, (v - camera.cy) / camera.f, 1.0);
        const double b = dir.dot(c);
        const double a = dir.squaredNorm();
        const double disc = b * b - a * c_sq;
        if (disc < 0.0) continue;
        const double t = (b - std::sqrt(disc)) / a;  // z of the hit since dir.z() == 1
        if (t <= 0.0) continue;
        double& z = zbuf[static_cast<std::size_t>(v) * width + u];
        if (t < z) {
          z = t;
          out.labels.at(u, v) = static_cast<std::uint8_t>(g.label);
        }
      }
    }
  }

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> noise(0.0, options.noise_std > 0.0 ? options.noise_std : 1.0);
  for (std::size_t i = 0; i < zbuf.size(); ++i) {
    if (!std::isfinite(zbuf[i])) continue;
    double z = zbuf[i];
    if (options.noise_std > 0.0) z += noise(rng);
    const double mm = std::round(z);
    out.depth.depth[i] = mm > 0.0 ? static_cast<float>(mm) : 0.0f;
    if (mm <= 0.0) out.labels.labels[i] = kBackgroundLabel;
  }
  return out;
}

PoseVector sample_pose(const HandModel& model, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PoseVector pose = rest_pose();
  pose[0] = 60.0 * (u(rng) - 0.5);
  pose[1] = 40.0 * (u(rng) - 0.5);
  pose[2] = 80.0 * (u(rng) - 0.5);
  for (int j = 3; j < 6; ++j) pose[j] = 0.8 * (u(rng) - 0.5);
  for (int j = 6; j < kNumDofs; ++j) {
    const Dof& d = model.skeleton.dofs[j];
    const double lo = std::max(d.lower, -0.35);
    const double hi = std::min(d.upper, 1.6);
    pose[j] = lo + (hi - lo) * u(rng);
  }
  return pose;
}

void PoseScript::validate() const {
  for (std::size_t i = 1; i < keyframes.size(); ++i) {
    if (keyframes[i].frame <= keyframes[i - 1].frame) {
      throw std::invalid_argument("script keyframes must have strictly increasing frame indices");
    }
  }
}

PoseVector PoseScript::pose_at(int frame) const {
  if (keyframes.empty()) throw std::invalid_argument("empty pose script");
  if (frame <= keyframes.front().frame) return keyframes.front().pose;
  if (frame >= keyframes.back().frame) return keyframes.back().pose;
  const auto next = std::upper_bound(keyframes.begin(), keyframes.end(), frame,
                                     [](int f, const Keyframe& k) { return f < k.frame; });
  const Keyframe& b = *next;
  const Keyframe& a = *(next - 1);
  const double t = static_cast<double>(frame - a.frame) / (b.frame - a.frame);
  return (1.0 - t) * a.pose + t * b.pose;
}

std::vector<GroundTruthFrame> make_sequence(const HandModel& model, const PoseScript& script,
                                            const Camera& camera, int width, int height,
                                            const RenderOptions& options) {
  std::vector<GroundTruthFrame> frames;
  if (script.keyframes.empty()) return frames;
  script.validate();
  for (int f = script.first_frame(); f <= script.last_frame(); ++f) {
    RenderOptions per_frame = options;
    per_frame.seed = options.seed + static_cast<std::uint64_t>(f - script.first_frame());
    frames.push_back(render_depth(model, script.pose_at(f), camera, width, height, per_frame));
  }
  return frames;
}

PoseScript parse_pose_script(std::istream& in) {
  PoseScript script;
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string kind;
    if (!(ss >> kind)) continue;
    if (!header) {
      int version = 0;
      if (kind != "handtrack-script" || !(ss >> version) || version != 1) {
        throw DataError("script must start with 'handtrack-script 1'");
      }
      header = true;
      continue;
    }
    if (kind != "key") {
      throw DataError("script line " + std::to_string(line_no) + ": unknown record " + kind);
    }
    Keyframe k;
    if (!(ss >> k.frame)) {
      throw DataError("script line " + std::to_string(line_no) + ": missing frame index");
    }
    for (int j = 0; j < kNumDofs; ++j) {
      if (!(ss >> k.pose[j])) {
        throw DataError("script line " + std::to_string(line_no) + ": expected 26 DOF values");
      }
    }
    std::string extra;
    if (ss >> extra) throw DataError("script line " + std::to_string(line_no) + ": trailing data");
    script.keyframes.push_back(k);
  }
  if (!header) throw DataError("empty script file");
  try {
    script.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return script;
}

PoseScript load_pose_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open script: " + path.string());
  return parse_pose_script(in);
}

void write_pose_script(std::ostream& out, const PoseScript& script) {
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  out << "handtrack-script 1\n";
  for (const Keyframe& k : script.keyframes) {
    out << "key " << k.frame;
    for (int j = 0; j < kNumDofs; ++j) out << ' ' << k.pose[j];
    out << '\n';
  }
  out.precision(old);
}

}  // namespace handtrack
