#pragma once

#include <filesystem>

#include "handtrack/hand_model.hpp"

namespace handtrack::testing {

inline std::filesystem::path data_path(const char* name) {
  return std::filesystem::path(HANDTRACK_DATA_DIR) / name;
}

inline const HandModel& default_model() {
  static const HandModel model = load_hand_model(data_path("hand_default.model"));
  return model;
}

// Scratch directory under the build tree, emptied on first use.
inline std::filesystem::path scratch_dir(const char* name) {
  const auto dir = std::filesystem::path(HANDTRACK_SCRATCH_DIR) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace handtrack::testing
