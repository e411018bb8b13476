#include <png.h>

#include <bit>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

#include "superlime/error.hpp"
#include "superlime/imaging.hpp"

namespace superlime::imaging {

namespace {

enum class Layout { rgb8, gray8, gray16 };

struct Decoded {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  std::vector<std::uint8_t> bytes;
};

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct ErrorSink {
  char message[256] = {};
  bool unsupported_depth = false;
};

[[noreturn]] void on_png_error(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<ErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof(sink->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw IoError(IoError::Kind::io_failure,
                  "cannot open '" + path.string() + "': " + std::strerror(errno));
  }
  return f;
}

// Only trivially destructible locals live in this frame between setjmp and a
// possible longjmp; results are written through `out`.
bool decode(std::FILE* fp, Layout layout, Decoded& out, ErrorSink& sink) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink, on_png_error, on_png_warning);
  if (png == nullptr) {
    std::snprintf(sink.message, sizeof(sink.message), "out of memory");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    std::snprintf(sink.message, sizeof(sink.message), "out of memory");
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }

  png_init_io(png, fp);
  png_read_info(png, info);
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);

  if (layout == Layout::gray16) {
    if (depth != 16 || color != PNG_COLOR_TYPE_GRAY) {
      sink.unsupported_depth = true;
      std::snprintf(sink.message, sizeof(sink.message),
                    "expected 16-bit greyscale, got bit depth %d colour type %d", depth, color);
      png_destroy_read_struct(&png, &info, nullptr);
      return false;
    }
    if constexpr (std::endian::native == std::endian::little) png_set_swap(png);
  } else {
    if (depth == 16) {
      sink.unsupported_depth = true;
      std::snprintf(sink.message, sizeof(sink.message), "unsupported bit depth 16");
      png_destroy_read_struct(&png, &info, nullptr);
      return false;
    }
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    if (layout == Layout::rgb8) {
      if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    } else if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
               color == PNG_COLOR_TYPE_PALETTE) {
      png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
  }
  png_read_update_info(png, info);

  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * out.height);
  for (png_uint_32 y = 0; y < out.height; ++y) {
    png_read_row(png, out.bytes.data() + y * stride, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

Decoded read_file(const std::filesystem::path& path, Layout layout) {
  FilePtr fp = open_file(path, "rb");
  png_byte signature[8] = {};
  if (std::fread(signature, 1, 8, fp.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw IoError(IoError::Kind::malformed, "'" + path.string() + "' is not a PNG file");
  }
  std::rewind(fp.get());
  Decoded out;
  ErrorSink sink;
  if (!decode(fp.get(), layout, out, sink)) {
    const auto kind = sink.unsupported_depth ? IoError::Kind::unsupported_depth : IoError::Kind::malformed;
    throw IoError(kind, "'" + path.string() + "': " + sink.message);
  }
  if (out.width == 0 || out.height == 0) {
    throw IoError(IoError::Kind::malformed, "'" + path.string() + "': empty image");
  }
  return out;
}

bool encode(std::FILE* fp, png_uint_32 width, png_uint_32 height, int depth, int color,
            const std::uint8_t* rows, std::size_t stride, ErrorSink& sink) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink, on_png_error, on_png_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, depth, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (depth == 16 && std::endian::native == std::endian::little) png_set_swap(png);
  for (png_uint_32 y = 0; y < height; ++y) {
    png_write_row(png, rows + y * stride);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_file(const std::filesystem::path& path, std::size_t width, std::size_t height, int depth,
                int color, const std::uint8_t* rows, std::size_t stride) {
  FilePtr fp = open_file(path, "wb");
  ErrorSink sink;
  if (!encode(fp.get(), static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth,
              color, rows, stride, sink)) {
    throw IoError(IoError::Kind::io_failure, "cannot write '" + path.string() + "': " + sink.message);
  }
  if (std::fflush(fp.get()) != 0) {
    throw IoError(IoError::Kind::io_failure, "cannot write '" + path.string() + "'");
  }
}

}  // namespace

Image load_png(const std::filesystem::path& path) {
  Decoded d = read_file(path, Layout::rgb8);
  std::vector<Rgb> pixels(static_cast<std::size_t>(d.width) * d.height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = {d.bytes[3 * i], d.bytes[3 * i + 1], d.bytes[3 * i + 2]};
  }
  return Image(d.width, d.height, std::move(pixels));
}

void save_png(const Image& img, const std::filesystem::path& path) {
  static_assert(sizeof(Rgb) == 3);
  write_file(path, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB,
             reinterpret_cast<const std::uint8_t*>(img.pixels().data()), img.width() * 3);
}

BinaryMask load_mask_png(const std::filesystem::path& path) {
  Decoded d = read_file(path, Layout::gray8);
  std::vector<std::uint8_t> bits(d.bytes.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = d.bytes[i] != 0 ? 1 : 0;
  return BinaryMask(d.width, d.height, std::move(bits));
}

void save_mask_png(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(mask.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = mask[i] != 0 ? 255 : 0;
  write_file(path, mask.width(), mask.height(), 8, PNG_COLOR_TYPE_GRAY, bytes.data(), mask.width());
}

Raster<std::uint16_t> load_gray16_png(const std::filesystem::path& path) {
  Decoded d = read_file(path, Layout::gray16);
  std::vector<std::uint16_t> values(static_cast<std::size_t>(d.width) * d.height);
  std::memcpy(values.data(), d.bytes.data(), values.size() * sizeof(std::uint16_t));
  return Raster<std::uint16_t>(d.width, d.height, std::move(values));
}

void save_gray16_png(const Raster<std::uint16_t>& img, const std::filesystem::path& path) {
  write_file(path, img.width(), img.height(), 16, PNG_COLOR_TYPE_GRAY,
             reinterpret_cast<const std::uint8_t*>(img.pixels().data()), img.width() * 2);
}

}  // namespace superlime::imaging
