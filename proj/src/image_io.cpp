#include "handtrack/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include <png.h>

namespace handtrack {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void png_error_handler(png_structp, png_const_charp msg) { throw DataError(msg); }
void png_warning_handler(png_structp, png_const_charp) {}

// Writes a single-channel image; rows hold big-endian samples as the PNG format requires.
void write_gray_png(const std::filesystem::path& path, int width, int height, int bit_depth,
                    const std::vector<png_byte>& data) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw DataError("cannot open for writing: " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  if (!png) throw DataError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  try {
    if (!info) throw DataError("png_create_info_struct failed");
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(width) * (bit_depth / 8);
    for (int y = 0; y < height; ++y) {
      png_write_row(png, const_cast<png_bytep>(data.data() + y * stride));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
}

struct GrayImage {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  std::vector<png_byte> data;  // big-endian samples for 16-bit
};

GrayImage read_gray_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError("cannot open: " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw DataError("not a PNG file: " + path.string());
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler, png_warning_handler);
  if (!png) throw DataError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  GrayImage img;
  try {
    if (!info) throw DataError("png_create_info_struct failed");
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    img.bit_depth = png_get_bit_depth(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    if (color != PNG_COLOR_TYPE_GRAY || (img.bit_depth != 8 && img.bit_depth != 16)) {
      throw DataError("expected 8- or 16-bit grayscale PNG: " + path.string());
    }
    const std::size_t stride = static_cast<std::size_t>(img.width) * (img.bit_depth / 8);
    img.data.resize(stride * img.height);
    for (int y = 0; y < img.height; ++y) png_read_row(png, img.data.data() + y * stride, nullptr);
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace

void write_depth_png(const std::filesystem::path& path, const DepthFrame& frame) {
  std::vector<png_byte> data(frame.depth.size() * 2);
  for (std::size_t i = 0; i < frame.depth.size(); ++i) {
    const float d = frame.depth[i];
    const long mm = d > 0.0f ? std::lround(d) : 0;
    const auto v = static_cast<std::uint16_t>(std::clamp(mm, 0L, 65535L));
    data[2 * i] = static_cast<png_byte>(v >> 8);
    data[2 * i + 1] = static_cast<png_byte>(v & 0xff);
  }
  write_gray_png(path, frame.width, frame.height, 16, data);
}

DepthFrame read_depth_png(const std::filesystem::path& path, const Camera& camera) {
  const GrayImage img = read_gray_png(path);
  if (img.bit_depth != 16) throw DataError("depth PNG must be 16-bit: " + path.string());
  DepthFrame frame(img.width, img.height, camera);
  for (std::size_t i = 0; i < frame.depth.size(); ++i) {
    frame.depth[i] = static_cast<float>((img.data[2 * i] << 8) | img.data[2 * i + 1]);
  }
  return frame;
}

void write_intrinsics(const std::filesystem::path& path, const Camera& camera) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out.precision(17);
  out << "f=" << camera.f << "\ncx=" << camera.cx << "\ncy=" << camera.cy << "\n";
}

Camera read_intrinsics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open intrinsics: " + path.string());
  Camera cam;
  bool has_f = false, has_cx = false, has_cy = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("malformed intrinsics line: " + line);
    const std::string key = line.substr(0, eq);
    double value = 0.0;
    try {
      value = std::stod(line.substr(eq + 1));
    } catch (const std::exception&) {
      throw DataError("malformed intrinsics value: " + line);
    }
    if (key == "f") {
      cam.f = value;
      has_f = true;
    } else if (key == "cx") {
      cam.cx = value;
      has_cx = true;
    } else if (key == "cy") {
      cam.cy = value;
      has_cy = true;
    } else {
      throw DataError("unknown intrinsics key: " + key);
    }
  }
  if (!has_f || !has_cx || !has_cy) throw DataError("incomplete intrinsics: " + path.string());
  if (!(cam.f > 0.0)) throw DataError("focal length must be positive: " + path.string());
  return cam;
}

std::filesystem::path intrinsics_path_for(const std::filesystem::path& depth_png) {
  auto p = depth_png;
  p.replace_extension(".txt");
  return p;
}

void write_depth_frame(const std::filesystem::path& depth_png, const DepthFrame& frame) {
  write_depth_png(depth_png, frame);
  write_intrinsics(intrinsics_path_for(depth_png), frame.camera);
}

DepthFrame read_depth_frame(const std::filesystem::path& depth_png) {
  return read_depth_png(depth_png, read_intrinsics(intrinsics_path_for(depth_png)));
}

void write_label_png(const std::filesystem::path& path, const LabelImage& labels) {
  write_gray_png(path, labels.width, labels.height, 8,
                 std::vector<png_byte>(labels.labels.begin(), labels.labels.end()));
}

LabelImage read_label_png(const std::filesystem::path& path) {
  const GrayImage img = read_gray_png(path);
  if (img.bit_depth != 8) throw DataError("label PNG must be 8-bit: " + path.string());
  LabelImage labels(img.width, img.height);
  std::copy(img.data.begin(), img.data.end(), labels.labels.begin());
  return labels;
}

}  // namespace handtrack
