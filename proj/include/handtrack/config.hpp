#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "handtrack/optimizer.hpp"

namespace handtrack {

/// Reads "key = value" lines ('#' starts a comment) over the defaults. Unknown keys and
/// malformed values throw DataError. The result is validated.
TrackerConfig parse_tracker_config(std::istream& in);
TrackerConfig load_tracker_config(const std::filesystem::path& path);

/// Canonical text form with every key, one per line in a fixed order.
std::string format_tracker_config(const TrackerConfig& cfg);

/// 64-bit FNV-1a of the canonical form, as 16 hex digits. The thread count is left out
/// since it does not affect results.
std::string config_hash(const TrackerConfig& cfg);

std::uint64_t fnv1a(const std::string& bytes);

}  // namespace handtrack
