#include "omniflow/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <vector>

#include "omniflow/error.hpp"

namespace omniflow::io {
namespace {

constexpr char kFloMagic[4] = {'P', 'I', 'E', 'H'};

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(sizeof(T) == 4);
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t pos) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return std::bit_cast<T>(bits);
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

std::string encode_flo(const FlowGrid& flow) {
  std::string out(kFloMagic, 4);
  out.reserve(12 + 8 * flow.size());
  put_le<std::int32_t>(out, flow.width);
  put_le<std::int32_t>(out, flow.height);
  for (std::size_t i = 0; i < flow.size(); ++i) {
    put_le<float>(out, static_cast<float>(flow.du[i]));
    put_le<float>(out, static_cast<float>(flow.dv[i]));
  }
  return out;
}

FlowGrid decode_flo(const std::string& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kFloMagic, 4) != 0) {
    throw ConfigError("not a .flo stream (bad magic)");
  }
  const auto w = get_le<std::int32_t>(bytes, 4);
  const auto h = get_le<std::int32_t>(bytes, 8);
  if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) throw ConfigError(".flo has invalid dimensions");
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (bytes.size() != 12 + 8 * n) throw ConfigError(".flo length does not match its header");
  FlowGrid flow(w, h);
  for (std::size_t i = 0; i < n; ++i) {
    flow.du[i] = get_le<float>(bytes, 12 + 8 * i);
    flow.dv[i] = get_le<float>(bytes, 16 + 8 * i);
  }
  return flow;
}

void write_flo(const std::filesystem::path& path, const FlowGrid& flow) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_flo(flow);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw ConfigError("failed writing " + path.string());
}

FlowGrid read_flo(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_flo(bytes);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw ConfigError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw ConfigError(path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ConfigError("corrupt PNG " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int ch = png_get_channels(png, info);
  std::vector<png_byte> raw(static_cast<std::size_t>(w) * h * ch);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * w * ch;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  if (ch != 1 && ch != 3) throw ConfigError("unsupported PNG channel layout in " + path.string());
  std::vector<float> data(raw.size());
  std::transform(raw.begin(), raw.end(), data.begin(), [](png_byte b) { return b / 255.0f; });
  return Image(w, h, ch, std::move(data));
}

void write_png(const std::filesystem::path& path, const Image& img) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw ConfigError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ConfigError("failed writing PNG " + path.string());
  }
  png_init_io(png, fp.get());
  const int w = img.width(), h = img.height(), ch = img.channels();
  png_set_IHDR(png, info, w, h, 8, ch == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(w) * ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        const float s = std::clamp(img.at(x, y, c), 0.0f, 1.0f);
        row[static_cast<std::size_t>(x) * ch + c] = static_cast<png_byte>(std::lround(s * 255.0f));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace omniflow::io
