#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "handtrack/depth.hpp"
#include "handtrack/errors.hpp"
#include "handtrack/gaussian.hpp"

namespace handtrack {

inline constexpr int kNumDofs = 26;
inline constexpr int kNumFingertips = 5;

/// Pose parameters: 3 root translations (mm), 3 global rotations and 20 joint angles (rad).
using PoseVector = Eigen::Matrix<double, kNumDofs, 1>;
using FingertipPositions = std::array<Eigen::Vector3d, kNumFingertips>;

enum class DofKind { Translation, Rotation };

/// One scalar degree of freedom: a translation along, or an exponential-map rotation about,
/// a bone-local axis.
struct Dof {
  std::string name;
  int bone = 0;
  DofKind kind = DofKind::Rotation;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
  double lower = 0.0;
  double upper = 0.0;
};

/// Bone frame relative to its parent: translate by offset, rotate by the rest rotation
/// (a rotation vector), then apply the bone's own DOFs in order.
struct Bone {
  std::string name;
  int parent = -1;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d rest_rotation = Eigen::Vector3d::Zero();
  std::vector<int> dofs;
};

struct Skeleton {
  std::vector<Bone> bones;  // topologically ordered, parents first
  std::vector<Dof> dofs;    // kNumDofs entries once validated

  int bone_index(const std::string& name) const;
  /// Throws std::invalid_argument when the layout violates the 26-DOF hand contract.
  void validate() const;
};

struct FingertipSite {
  int bone = 0;
  Eigen::Vector3d local = Eigen::Vector3d::Zero();
};

/// Kinematic skeleton with 3D Gaussians in bone-local coordinates.
/// Fingertip sites are ordered thumb, index, middle, ring, pinky.
struct HandModel {
  Skeleton skeleton;
  Mixture<Gaussian3D> gaussians;
  std::array<FingertipSite, kNumFingertips> fingertips;

  void validate() const;
};

/// FK output: camera-space Gaussians plus the per-DOF world axes and pivots needed to
/// pull gradients back onto the pose.
struct PosedHand {
  Mixture<Gaussian3D> gaussians;
  std::vector<Eigen::Isometry3d> bone_frames;
  std::array<Eigen::Vector3d, kNumDofs> dof_axes;
  std::array<Eigen::Vector3d, kNumDofs> dof_origins;
};

PosedHand pose_hand(const HandModel& model, const PoseVector& pose);

Mixture<Gaussian3D> forward_kinematics(const HandModel& model, const PoseVector& pose);

FingertipPositions fingertip_positions(const HandModel& model, const PoseVector& pose);

/// Chain rule through FK: given dE/dmu for each posed Gaussian, returns dE/dtheta.
PoseVector pull_back_gradient(const HandModel& model, const PosedHand& posed,
                              std::span<const Eigen::Vector3d> dmu);

/// Raised when a Gaussian falls on or behind the camera plane.
class ProjectionError : public TrackingFailure {
 public:
  using TrackingFailure::TrackingFailure;
};

/// Projected model mixture. source_sigma keeps each Gaussian's unprojected sigma.
struct ProjectedHand {
  Mixture<Gaussian2D> gaussians;
  std::vector<double> source_sigma;
};

/// Perspective projection of the means, scaled-orthographic sigma (sigma f / z) and
/// camera-facing surface depth z - sigma. Throws ProjectionError for z <= 0.
ProjectedHand project_model(const Mixture<Gaussian3D>& posed, const Camera& camera);

/// User-specific scaling of the default model.
struct ScaleParams {
  double length = 1.0;
  double width = 1.0;
  double sigma = 1.0;
};

/// Applies diag(width, length, 1) to everything expressed in a bone's local frame
/// (child offsets, Gaussian means, fingertip sites; the root placement is left alone)
/// and multiplies every sigma by sigma_scale.
HandModel scale_model(const HandModel& base, const ScaleParams& scale);

/// Rewrites the root DOFs so the posed hand equals `transform` applied to FK(pose).
/// Requires the root layout tx, ty, tz, rx, ry, rz with no root rest rotation.
PoseVector compose_root(const HandModel& model, const PoseVector& pose,
                        const Eigen::Isometry3d& transform);

/// All joint angles zero: the model's rest placement.
inline PoseVector rest_pose() { return PoseVector::Zero(); }

// Model file: "handtrack-model 1" header, then bone / dof / gaussian / tip records.
HandModel parse_hand_model(std::istream& in);
HandModel load_hand_model(const std::filesystem::path& path);
void write_hand_model(std::ostream& out, const HandModel& model);
void save_hand_model(const std::filesystem::path& path, const HandModel& model);

}  // namespace handtrack
