#include "terracal/png_io.hpp"

#include <cstdio>
#include <cstring>
#include <memory>

#include <fmt/format.h>
#include <png.h>

#include "terracal/errors.hpp"

namespace terracal {

namespace {
constexpr const char* kModule = "image";

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) raise(errc::io_error, kModule, fmt::format("cannot open '{}'", path.string()));
  return f;
}

void write_png_impl(const std::filesystem::path& path, int width, int height, int bit_depth,
                    int color_type, const std::vector<png_bytep>& rows) {
  auto file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    raise(errc::io_error, kModule, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    raise(errc::io_error, kModule, fmt::format("error writing '{}'", path.string()));
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // image data is host little-endian
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct PngReader {
  FilePtr file;
  png_structp png = nullptr;
  png_infop info = nullptr;

  explicit PngReader(const std::filesystem::path& path) : file(open_file(path, "rb")) {
    unsigned char header[8];
    if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8))
      raise(errc::parse_error, kModule, fmt::format("'{}' is not a PNG file", path.string()));
    png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      png_destroy_read_struct(&png, &info, nullptr);
      raise(errc::io_error, kModule, "libpng initialization failed");
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
  }
  ~PngReader() { png_destroy_read_struct(&png, &info, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;
};

template <typename Pixel>
Image<Pixel> read_png_as(const std::filesystem::path& path, bool want_rgb, bool want_16bit) {
  PngReader r(path);
  if (setjmp(png_jmpbuf(r.png)))
    raise(errc::parse_error, kModule, fmt::format("error reading '{}'", path.string()));
  png_read_info(r.png, r.info);

  const int bit_depth = png_get_bit_depth(r.png, r.info);
  const int color_type = png_get_color_type(r.png, r.info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
  if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
  png_set_strip_alpha(r.png);
  if (want_rgb) {
    if (want_16bit) raise(errc::invalid_argument, kModule, "16-bit rgb read not supported");
    png_set_gray_to_rgb(r.png);
    png_set_strip_16(r.png);
  } else if (want_16bit) {
    if (color_type & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(r.png, 1, -1, -1);
    if (bit_depth < 16) png_set_expand_16(r.png);
    png_set_swap(r.png);
  } else {
    if (color_type & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(r.png, 1, -1, -1);
    png_set_strip_16(r.png);
  }
  png_read_update_info(r.png, r.info);

  const int width = static_cast<int>(png_get_image_width(r.png, r.info));
  const int height = static_cast<int>(png_get_image_height(r.png, r.info));
  Image<Pixel> img(width, height);
  const std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
  if (rowbytes != static_cast<std::size_t>(width) * sizeof(Pixel))
    raise(errc::parse_error, kModule, fmt::format("unexpected row size in '{}'", path.string()));
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * width);
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);
  return img;
}

}  // namespace

void write_png(const std::filesystem::path& path, const ImageU8& img) {
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.data.data() + static_cast<std::size_t>(y) * img.width);
  write_png_impl(path, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY, rows);
}

void write_png(const std::filesystem::path& path, const ImageU16& img) {
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(
        const_cast<std::uint16_t*>(img.data.data() + static_cast<std::size_t>(y) * img.width));
  write_png_impl(path, img.width, img.height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

void write_png(const std::filesystem::path& path, const ImageRgb8& img) {
  static_assert(sizeof(Rgb8) == 3);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y)
    rows[y] = reinterpret_cast<png_bytep>(
        const_cast<Rgb8*>(img.data.data() + static_cast<std::size_t>(y) * img.width));
  write_png_impl(path, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

ImageU8 read_png_gray8(const std::filesystem::path& path) {
  return read_png_as<std::uint8_t>(path, false, false);
}

ImageRgb8 read_png_rgb8(const std::filesystem::path& path) {
  return read_png_as<Rgb8>(path, true, false);
}

ImageU16 read_png_gray16(const std::filesystem::path& path) {
  return read_png_as<std::uint16_t>(path, false, true);
}

}  // namespace terracal
