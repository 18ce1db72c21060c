#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "handtrack/hand_model.hpp"

namespace handtrack {

/// One row of a trajectory CSV:
/// frame,status,theta0..theta25,tip0_x,tip0_y,tip0_z,...,tip4_z,mode[,time_ms]
struct TrajectoryRow {
  int frame = 0;
  std::string status = "tracked";
  PoseVector pose = PoseVector::Zero();
  FingertipPositions fingertips{};
  std::string mode = "depth_only";
  std::optional<double> time_ms;
};

/// One row of a ground-truth CSV: frame,theta0..theta25,tip0_x,...,tip4_z
struct TruthRow {
  int frame = 0;
  PoseVector pose = PoseVector::Zero();
  FingertipPositions fingertips{};
};

/// Lines starting with '#' are comments; both writers put provenance there.
std::string trajectory_header(bool with_time);
std::string format_row(const TrajectoryRow& row);
std::vector<TrajectoryRow> read_trajectory(std::istream& in);
std::vector<TrajectoryRow> load_trajectory(const std::filesystem::path& path);

std::string truth_header();
std::string format_row(const TruthRow& row);
std::vector<TruthRow> read_truth(std::istream& in);
std::vector<TruthRow> load_truth(const std::filesystem::path& path);

inline const std::vector<double> kDefaultThresholds = {15.0, 20.0, 25.0, 30.0};

struct EvalReport {
  double mean_error = 0.0;  // mm
  std::vector<double> per_frame_errors;
  std::map<double, double> pct_below;  // threshold (mm) -> percentage of frames
};

/// Mean Euclidean distance of the fingertips per frame, mean over frames, and the share
/// of frames strictly below each threshold. Frame counts and indices must match.
EvalReport eval_fingertip_error(const std::vector<FingertipPositions>& tracked,
                                const std::vector<FingertipPositions>& truth,
                                const std::vector<double>& thresholds = kDefaultThresholds);
EvalReport eval_fingertip_error(const std::vector<TrajectoryRow>& tracked,
                                const std::vector<TruthRow>& truth,
                                const std::vector<double>& thresholds = kDefaultThresholds);

double fingertip_error(const FingertipPositions& a, const FingertipPositions& b);

}  // namespace handtrack
