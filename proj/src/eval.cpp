#include "handtrack/eval.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "handtrack/errors.hpp"

namespace handtrack {

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  out += buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_double(const std::string& s, int line) {
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double v;
  if (!(in >> v) || !(in >> std::ws).eof()) {
    throw DataError("line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

int parse_int(const std::string& s, int line) {
  const double v = parse_double(s, line);
  if (v != static_cast<int>(v)) throw DataError("line " + std::to_string(line) + ": bad frame index");
  return static_cast<int>(v);
}

template <class Fn>
void for_each_data_line(std::istream& in, const std::string& header_start, Fn fn) {
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind(header_start, 0) != 0) {
        throw DataError("line " + std::to_string(line_no) + ": missing column header");
      }
      header_seen = true;
      continue;
    }
    fn(split_csv(line), line_no);
  }
  if (!header_seen) throw DataError("empty or headerless CSV");
}

void read_pose_and_tips(const std::vector<std::string>& f, std::size_t first, int line,
                        PoseVector& pose, FingertipPositions& tips) {
  for (int j = 0; j < kNumDofs; ++j) pose[j] = parse_double(f[first + j], line);
  for (int t = 0; t < kNumFingertips; ++t) {
    for (int k = 0; k < 3; ++k) {
      tips[t][k] = parse_double(f[first + kNumDofs + 3 * t + k], line);
    }
  }
}

std::string pose_columns() {
  std::string out;
  for (int j = 0; j < kNumDofs; ++j) out += ",theta" + std::to_string(j);
  for (int t = 0; t < kNumFingertips; ++t) {
    for (const char* axis : {"x", "y", "z"}) out += ",tip" + std::to_string(t) + "_" + axis;
  }
  return out;
}

void append_pose(std::string& out, const PoseVector& pose, const FingertipPositions& tips) {
  for (int j = 0; j < kNumDofs; ++j) {
    out += ',';
    append_number(out, pose[j]);
  }
  for (const auto& tip : tips) {
    for (int k = 0; k < 3; ++k) {
      out += ',';
      append_number(out, tip[k]);
    }
  }
}

constexpr std::size_t kPoseFields = kNumDofs + 3 * kNumFingertips;

}  // namespace

std::string trajectory_header(bool with_time) {
  return "frame,status" + pose_columns() + ",mode" + (with_time ? ",time_ms" : "");
}

std::string format_row(const TrajectoryRow& row) {
  std::string out = std::to_string(row.frame) + ',' + row.status;
  append_pose(out, row.pose, row.fingertips);
  out += ',' + row.mode;
  if (row.time_ms) {
    out += ',';
    append_number(out, *row.time_ms);
  }
  return out;
}

std::vector<TrajectoryRow> read_trajectory(std::istream& in) {
  std::vector<TrajectoryRow> rows;
  for_each_data_line(in, "frame,status", [&](const std::vector<std::string>& f, int line) {
    const std::size_t base = 2 + kPoseFields + 1;
    if (f.size() != base && f.size() != base + 1) {
      throw DataError("line " + std::to_string(line) + ": wrong trajectory column count");
    }
    TrajectoryRow row;
    row.frame = parse_int(f[0], line);
    row.status = f[1];
    read_pose_and_tips(f, 2, line, row.pose, row.fingertips);
    row.mode = f[2 + kPoseFields];
    if (f.size() == base + 1) row.time_ms = parse_double(f[base], line);
    rows.push_back(std::move(row));
  });
  return rows;
}

std::vector<TrajectoryRow> load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trajectory: " + path.string());
  return read_trajectory(in);
}

std::string truth_header() { return "frame" + pose_columns(); }

std::string format_row(const TruthRow& row) {
  std::string out = std::to_string(row.frame);
  append_pose(out, row.pose, row.fingertips);
  return out;
}

std::vector<TruthRow> read_truth(std::istream& in) {
  std::vector<TruthRow> rows;
  for_each_data_line(in, "frame,theta", [&](const std::vector<std::string>& f, int line) {
    if (f.size() != 1 + kPoseFields) {
      throw DataError("line " + std::to_string(line) + ": wrong ground-truth column count");
    }
    TruthRow row;
    row.frame = parse_int(f[0], line);
    read_pose_and_tips(f, 1, line, row.pose, row.fingertips);
    rows.push_back(std::move(row));
  });
  return rows;
}

std::vector<TruthRow> load_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ground truth: " + path.string());
  return read_truth(in);
}

double fingertip_error(const FingertipPositions& a, const FingertipPositions& b) {
  double sum = 0.0;
  for (int t = 0; t < kNumFingertips; ++t) sum += (a[t] - b[t]).norm();
  return sum / kNumFingertips;
}

EvalReport eval_fingertip_error(const std::vector<FingertipPositions>& tracked,
                                const std::vector<FingertipPositions>& truth,
                                const std::vector<double>& thresholds) {
  if (tracked.size() != truth.size()) {
    throw DataError("frame count mismatch: " + std::to_string(tracked.size()) + " tracked vs " +
                    std::to_string(truth.size()) + " ground truth");
  }
  if (tracked.empty()) throw DataError("no frames to evaluate");
  EvalReport report;
  double sum = 0.0;
  for (std::size_t i = 0; i < tracked.size(); ++i) {
    const double e = fingertip_error(tracked[i], truth[i]);
    report.per_frame_errors.push_back(e);
    sum += e;
  }
  report.mean_error = sum / static_cast<double>(tracked.size());
  for (double x : thresholds) {
    std::size_t below = 0;
    for (double e : report.per_frame_errors) below += e < x;
    report.pct_below[x] = 100.0 * static_cast<double>(below) / static_cast<double>(tracked.size());
  }
  return report;
}

EvalReport eval_fingertip_error(const std::vector<TrajectoryRow>& tracked,
                                const std::vector<TruthRow>& truth,
                                const std::vector<double>& thresholds) {
  if (tracked.size() != truth.size()) {
    throw DataError("frame count mismatch: " + std::to_string(tracked.size()) + " tracked vs " +
                    std::to_string(truth.size()) + " ground truth");
  }
  std::vector<FingertipPositions> a, b;
  for (std::size_t i = 0; i < tracked.size(); ++i) {
    if (tracked[i].frame != truth[i].frame) {
      throw DataError("frame index mismatch at row " + std::to_string(i));
    }
    a.push_back(tracked[i].fingertips);
    b.push_back(truth[i].fingertips);
  }
  return eval_fingertip_error(a, b, thresholds);
}

}  // namespace handtrack
