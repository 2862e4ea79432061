#pragma once

#include <filesystem>

#include "terracal/image.hpp"

namespace terracal {

/// PNG I/O. Writers always produce the same bytes for the same image
/// (fixed filter/compression settings, no ancillary chunks).

void write_png(const std::filesystem::path& path, const ImageU8& img);
void write_png(const std::filesystem::path& path, const ImageU16& img);
void write_png(const std::filesystem::path& path, const ImageRgb8& img);

/// Reads any 8/16-bit gray/rgb/rgba PNG and converts to 8-bit grayscale.
ImageU8 read_png_gray8(const std::filesystem::path& path);

/// Reads any PNG and converts to 8-bit RGB.
ImageRgb8 read_png_rgb8(const std::filesystem::path& path);

/// Reads a 16-bit grayscale PNG without precision loss.
ImageU16 read_png_gray16(const std::filesystem::path& path);

}  // namespace terracal
