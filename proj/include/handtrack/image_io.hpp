#pragma once

#include <filesystem>

#include "handtrack/depth.hpp"
#include "handtrack/errors.hpp"

namespace handtrack {

// Depth PNGs are 16-bit grayscale, one unit per millimeter, 0 = invalid. Depth is
// rounded to the nearest millimeter on write. Intrinsics live in a sidecar text file
// with f=, cx=, cy= lines.
void write_depth_png(const std::filesystem::path& path, const DepthFrame& frame);
DepthFrame read_depth_png(const std::filesystem::path& path, const Camera& camera);

void write_intrinsics(const std::filesystem::path& path, const Camera& camera);
Camera read_intrinsics(const std::filesystem::path& path);

/// Sidecar path for a depth PNG: same stem, ".txt" extension.
std::filesystem::path intrinsics_path_for(const std::filesystem::path& depth_png);

/// Depth PNG plus its intrinsics sidecar.
void write_depth_frame(const std::filesystem::path& depth_png, const DepthFrame& frame);
DepthFrame read_depth_frame(const std::filesystem::path& depth_png);

/// 8-bit grayscale label images, value = part id, 255 = background.
void write_label_png(const std::filesystem::path& path, const LabelImage& labels);
LabelImage read_label_png(const std::filesystem::path& path);

}  // namespace handtrack
