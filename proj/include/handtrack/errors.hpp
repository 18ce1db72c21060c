#pragma once

#include <stdexcept>

namespace handtrack {

/// Missing, unreadable, or malformed input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Frame-level failure: the current frame cannot support pose estimation.
class TrackingFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace handtrack
