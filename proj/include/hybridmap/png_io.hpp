#pragma once

#include <filesystem>

#include "hybridmap/image.hpp"

namespace hybridmap {

/// 8-bit RGB PNG. Color values are quantized with round(v * 255).
void write_png_rgb8(const std::filesystem::path& path, const ImageRGB& img);
ImageRGB read_png_rgb8(const std::filesystem::path& path);

/// 16-bit grayscale PNG holding depth in millimeters (0 = invalid).
/// Values above 65.535 m saturate.
void write_png_depth16(const std::filesystem::path& path, const ImageDepth& img);
ImageDepth read_png_depth16(const std::filesystem::path& path);

}  // namespace hybridmap
