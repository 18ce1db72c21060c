#include "handtrack/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "handtrack/image_io.hpp"

namespace handtrack {

namespace {

Eigen::Matrix3d rotation_from_vector(const Eigen::Vector3d& rv) {
  const double angle = rv.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, rv / angle).toRotationMatrix();
}

}  // namespace

int Skeleton::bone_index(const std::string& name) const {
  for (std::size_t i = 0; i < bones.size(); ++i) {
    if (bones[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void Skeleton::validate() const {
  if (bones.empty()) throw std::invalid_argument("skeleton has no bones");
  if (static_cast<int>(dofs.size()) != kNumDofs) {
    throw std::invalid_argument("skeleton must have exactly 26 DOFs, found " +
                                std::to_string(dofs.size()));
  }
  for (std::size_t i = 0; i < bones.size(); ++i) {
    const Bone& b = bones[i];
    if (i == 0 ? b.parent != -1 : (b.parent < 0 || b.parent >= static_cast<int>(i))) {
      throw std::invalid_argument("bone '" + b.name + "' breaks topological order");
    }
    for (int j : b.dofs) {
      if (j < 0 || j >= kNumDofs || dofs[j].bone != static_cast<int>(i)) {
        throw std::invalid_argument("bone '" + b.name + "' has an inconsistent DOF list");
      }
    }
  }
  int translations = 0, root_rotations = 0;
  for (std::size_t j = 0; j < dofs.size(); ++j) {
    const Dof& d = dofs[j];
    if (d.bone < 0 || d.bone >= static_cast<int>(bones.size())) {
      throw std::invalid_argument("DOF '" + d.name + "' refers to a missing bone");
    }
    if (std::abs(d.axis.norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("DOF '" + d.name + "' axis is not unit length");
    }
    if (!(d.lower <= d.upper)) {
      throw std::invalid_argument("DOF '" + d.name + "' has lower limit above upper limit");
    }
    const auto& owner = bones[d.bone].dofs;
    if (std::find(owner.begin(), owner.end(), static_cast<int>(j)) == owner.end()) {
      throw std::invalid_argument("DOF '" + d.name + "' is not listed by its bone");
    }
    if (d.kind == DofKind::Translation) {
      if (d.bone != 0) throw std::invalid_argument("only the root bone may translate");
      ++translations;
    } else if (d.bone == 0) {
      ++root_rotations;
    }
  }
  if (translations != 3 || root_rotations != 3) {
    throw std::invalid_argument("root must carry 3 translations and 3 global rotations");
  }
}

void HandModel::validate() const {
  skeleton.validate();
  if (gaussians.empty()) throw std::invalid_argument("hand model has no Gaussians");
  const int nbones = static_cast<int>(skeleton.bones.size());
  for (const Gaussian3D& g : gaussians) {
    if (g.bone < 0 || g.bone >= nbones) throw std::invalid_argument("Gaussian on missing bone");
    if (!g.valid()) throw std::invalid_argument("Gaussian sigma and weight must be positive");
    if (g.label < 0 || g.label >= kNumPartLabels) {
      throw std::invalid_argument("Gaussian label outside the 12 part labels");
    }
  }
  for (const FingertipSite& tip : fingertips) {
    if (tip.bone < 0 || tip.bone >= nbones) throw std::invalid_argument("fingertip on missing bone");
    for (const Bone& b : skeleton.bones) {
      if (b.parent == tip.bone) throw std::invalid_argument("fingertip must sit on a distal bone");
    }
  }
}

PosedHand pose_hand(const HandModel& model, const PoseVector& pose) {
  const Skeleton& sk = model.skeleton;
  PosedHand out;
  out.bone_frames.resize(sk.bones.size());
  for (std::size_t b = 0; b < sk.bones.size(); ++b) {
    const Bone& bone = sk.bones[b];
    Eigen::Isometry3d frame =
        bone.parent >= 0 ? out.bone_frames[bone.parent] : Eigen::Isometry3d::Identity();
    frame.translate(bone.offset);
    frame.rotate(rotation_from_vector(bone.rest_rotation));
    for (int j : bone.dofs) {
      const Dof& dof = sk.dofs[j];
      out.dof_axes[j] = frame.linear() * dof.axis;
      out.dof_origins[j] = frame.translation();
      if (dof.kind == DofKind::Translation) {
        frame.translate(dof.axis * pose[j]);
      } else {
        frame.rotate(Eigen::AngleAxisd(pose[j], dof.axis));
      }
    }
    out.bone_frames[b] = frame;
  }
  out.gaussians = model.gaussians;
  for (Gaussian3D& g : out.gaussians) g.mu = out.bone_frames[g.bone] * g.mu;
  return out;
}

Mixture<Gaussian3D> forward_kinematics(const HandModel& model, const PoseVector& pose) {
  return pose_hand(model, pose).gaussians;
}

FingertipPositions fingertip_positions(const HandModel& model, const PoseVector& pose) {
  const PosedHand posed = pose_hand(model, pose);
  FingertipPositions tips;
  for (int i = 0; i < kNumFingertips; ++i) {
    tips[i] = posed.bone_frames[model.fingertips[i].bone] * model.fingertips[i].local;
  }
  return tips;
}

PoseVector pull_back_gradient(const HandModel& model, const PosedHand& posed,
                              std::span<const Eigen::Vector3d> dmu) {
  const Skeleton& sk = model.skeleton;
  const std::size_t nb = sk.bones.size();
  // Per-bone force and moment about the world origin, then summed over subtrees.
  std::vector<Eigen::Vector3d> force(nb, Eigen::Vector3d::Zero());
  std::vector<Eigen::Vector3d> moment(nb, Eigen::Vector3d::Zero());
  for (std::size_t h = 0; h < posed.gaussians.size(); ++h) {
    const int b = posed.gaussians[h].bone;
    force[b] += dmu[h];
    moment[b] += posed.gaussians[h].mu.cross(dmu[h]);
  }
  for (std::size_t b = nb; b-- > 1;) {
    force[sk.bones[b].parent] += force[b];
    moment[sk.bones[b].parent] += moment[b];
  }
  PoseVector grad;
  for (int j = 0; j < kNumDofs; ++j) {
    const Dof& dof = sk.dofs[j];
    const Eigen::Vector3d& axis = posed.dof_axes[j];
    if (dof.kind == DofKind::Translation) {
      grad[j] = axis.dot(force[dof.bone]);
    } else {
      // d mu / d theta = axis x (mu - origin); summed against dE/dmu.
      grad[j] = axis.dot(moment[dof.bone] - posed.dof_origins[j].cross(force[dof.bone]));
    }
  }
  return grad;
}

ProjectedHand project_model(const Mixture<Gaussian3D>& posed, const Camera& camera) {
  ProjectedHand out;
  out.gaussians.reserve(posed.size());
  out.source_sigma.reserve(posed.size());
  for (const Gaussian3D& g : posed) {
    const double z = g.mu.z();
    if (!(z > 0.0)) throw ProjectionError("model Gaussian at or behind the camera plane");
    out.gaussians.push_back(
        {camera.project(g.mu), g.sigma * camera.f / z, g.weight, z - g.sigma, g.label});
    out.source_sigma.push_back(g.sigma);
  }
  return out;
}

HandModel scale_model(const HandModel& base, const ScaleParams& scale) {
  if (!(scale.length > 0.0 && scale.width > 0.0 && scale.sigma > 0.0)) {
    throw std::invalid_argument("scale factors must be positive");
  }
  const Eigen::Vector3d s(scale.width, scale.length, 1.0);
  HandModel out = base;
  for (std::size_t b = 1; b < out.skeleton.bones.size(); ++b) {
    out.skeleton.bones[b].offset = out.skeleton.bones[b].offset.cwiseProduct(s);
  }
  for (Gaussian3D& g : out.gaussians) {
    g.mu = g.mu.cwiseProduct(s);
    g.sigma *= scale.sigma;
  }
  for (FingertipSite& tip : out.fingertips) tip.local = tip.local.cwiseProduct(s);
  return out;
}

PoseVector compose_root(const HandModel& model, const PoseVector& pose,
                        const Eigen::Isometry3d& transform) {
  const Skeleton& sk = model.skeleton;
  const Bone& root = sk.bones.front();
  const bool layout_ok = root.dofs.size() == 6 && root.rest_rotation.isZero() && [&] {
    for (int k = 0; k < 6; ++k) {
      const Dof& d = sk.dofs[root.dofs[k]];
      const bool kind_ok = (k < 3) == (d.kind == DofKind::Translation);
      if (!kind_ok || !d.axis.isApprox(Eigen::Vector3d::Unit(k % 3))) return false;
    }
    return true;
  }();
  if (!layout_ok) throw std::invalid_argument("compose_root: unsupported root DOF layout");

  const auto& ids = root.dofs;
  const Eigen::Vector3d t(pose[ids[0]], pose[ids[1]], pose[ids[2]]);
  const Eigen::Matrix3d r = (Eigen::AngleAxisd(pose[ids[3]], Eigen::Vector3d::UnitX()) *
                             Eigen::AngleAxisd(pose[ids[4]], Eigen::Vector3d::UnitY()) *
                             Eigen::AngleAxisd(pose[ids[5]], Eigen::Vector3d::UnitZ()))
                                .toRotationMatrix();
  const Eigen::Vector3d new_t = transform * (root.offset + t) - root.offset;
  const Eigen::Vector3d euler = (transform.linear() * r).eulerAngles(0, 1, 2);
  PoseVector out = pose;
  for (int k = 0; k < 3; ++k) {
    out[ids[k]] = new_t[k];
    out[ids[k + 3]] = euler[k];
  }
  return out;
}

namespace {

double parse_number(std::istringstream& ss, const std::string& what, int line_no) {
  std::string tok;
  if (!(ss >> tok)) {
    throw DataError("model line " + std::to_string(line_no) + ": missing " + what);
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("model line " + std::to_string(line_no) + ": bad " + what + " '" + tok + "'");
  }
}

Eigen::Vector3d parse_vec3(std::istringstream& ss, const std::string& what, int line_no) {
  Eigen::Vector3d v;
  for (int k = 0; k < 3; ++k) v[k] = parse_number(ss, what, line_no);
  return v;
}

int parse_bone_ref(const Skeleton& sk, std::istringstream& ss, int line_no) {
  std::string name;
  if (!(ss >> name)) throw DataError("model line " + std::to_string(line_no) + ": missing bone");
  const int idx = sk.bone_index(name);
  if (idx < 0) throw DataError("model line " + std::to_string(line_no) + ": unknown bone " + name);
  return idx;
}

}  // namespace

HandModel parse_hand_model(std::istream& in) {
  HandModel model;
  std::string line;
  int line_no = 0;
  bool header = false;
  std::array<bool, kNumFingertips> has_tip{};
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string kind;
    if (!(ss >> kind)) continue;
    if (!header) {
      int version = 0;
      if (kind != "handtrack-model" || !(ss >> version) || version != 1) {
        throw DataError("model file must start with 'handtrack-model 1'");
      }
      header = true;
      continue;
    }
    Skeleton& sk = model.skeleton;
    if (kind == "bone") {
      Bone bone;
      std::string parent;
      if (!(ss >> bone.name >> parent)) {
        throw DataError("model line " + std::to_string(line_no) + ": bone needs name and parent");
      }
      if (sk.bone_index(bone.name) >= 0) {
        throw DataError("model line " + std::to_string(line_no) + ": duplicate bone " + bone.name);
      }
      bone.parent = parent == "-" ? -1 : sk.bone_index(parent);
      if (parent != "-" && bone.parent < 0) {
        throw DataError("model line " + std::to_string(line_no) + ": unknown parent " + parent);
      }
      bone.offset = parse_vec3(ss, "offset", line_no);
      bone.rest_rotation = parse_vec3(ss, "rest rotation", line_no);
      sk.bones.push_back(std::move(bone));
    } else if (kind == "dof") {
      Dof dof;
      std::string k;
      if (!(ss >> dof.name)) throw DataError("model line " + std::to_string(line_no) + ": dof name");
      dof.bone = parse_bone_ref(sk, ss, line_no);
      if (!(ss >> k) || (k != "T" && k != "R")) {
        throw DataError("model line " + std::to_string(line_no) + ": dof kind must be T or R");
      }
      dof.kind = k == "T" ? DofKind::Translation : DofKind::Rotation;
      dof.axis = parse_vec3(ss, "axis", line_no);
      dof.lower = parse_number(ss, "lower limit", line_no);
      dof.upper = parse_number(ss, "upper limit", line_no);
      sk.bones[dof.bone].dofs.push_back(static_cast<int>(sk.dofs.size()));
      sk.dofs.push_back(std::move(dof));
    } else if (kind == "gaussian") {
      Gaussian3D g;
      g.bone = parse_bone_ref(sk, ss, line_no);
      g.mu = parse_vec3(ss, "mean", line_no);
      g.sigma = parse_number(ss, "sigma", line_no);
      g.weight = parse_number(ss, "weight", line_no);
      g.label = static_cast<int>(parse_number(ss, "label", line_no));
      model.gaussians.push_back(g);
    } else if (kind == "tip") {
      const int idx = static_cast<int>(parse_number(ss, "tip index", line_no));
      if (idx < 0 || idx >= kNumFingertips) {
        throw DataError("model line " + std::to_string(line_no) + ": tip index out of range");
      }
      model.fingertips[idx].bone = parse_bone_ref(sk, ss, line_no);
      model.fingertips[idx].local = parse_vec3(ss, "tip position", line_no);
      has_tip[idx] = true;
    } else {
      throw DataError("model line " + std::to_string(line_no) + ": unknown record " + kind);
    }
    std::string extra;
    if (ss >> extra) {
      throw DataError("model line " + std::to_string(line_no) + ": trailing token " + extra);
    }
  }
  if (!header) throw DataError("empty model file");
  if (!std::all_of(has_tip.begin(), has_tip.end(), [](bool b) { return b; })) {
    throw DataError("model file must define all 5 fingertip sites");
  }
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid hand model: ") + e.what());
  }
  return model;
}

HandModel load_hand_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path.string());
  return parse_hand_model(in);
}

void write_hand_model(std::ostream& out, const HandModel& model) {
  const Skeleton& sk = model.skeleton;
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  const auto vec = [&](const Eigen::Vector3d& v) {
    out << ' ' << v.x() << ' ' << v.y() << ' ' << v.z();
  };
  out << "handtrack-model 1\n";
  for (const Bone& b : sk.bones) {
    out << "bone " << b.name << ' ' << (b.parent < 0 ? "-" : sk.bones[b.parent].name);
    vec(b.offset);
    vec(b.rest_rotation);
    out << '\n';
  }
  for (const Dof& d : sk.dofs) {
    out << "dof " << d.name << ' ' << sk.bones[d.bone].name << ' '
        << (d.kind == DofKind::Translation ? 'T' : 'R');
    vec(d.axis);
    out << ' ' << d.lower << ' ' << d.upper << '\n';
  }
  for (const Gaussian3D& g : model.gaussians) {
    out << "gaussian " << sk.bones[g.bone].name;
    vec(g.mu);
    out << ' ' << g.sigma << ' ' << g.weight << ' ' << g.label << '\n';
  }
  for (int i = 0; i < kNumFingertips; ++i) {
    out << "tip " << i << ' ' << sk.bones[model.fingertips[i].bone].name;
    vec(model.fingertips[i].local);
    out << '\n';
  }
  out.precision(old_precision);
}

void save_hand_model(const std::filesystem::path& path, const HandModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  write_hand_model(out, model);
}

}  // namespace handtrack
