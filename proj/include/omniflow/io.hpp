#pragma once

#include <filesystem>
#include <string>

#include "omniflow/image.hpp"

namespace omniflow::io {

// Middlebury .flo: "PIEH", int32 width, int32 height, then row-major
// interleaved (du, dv) float32 pairs, all little-endian.
void write_flo(const std::filesystem::path& path, const FlowGrid& flow);
FlowGrid read_flo(const std::filesystem::path& path);

std::string encode_flo(const FlowGrid& flow);
FlowGrid decode_flo(const std::string& bytes);

// 8-bit PNG, gray or RGB (alpha dropped, palettes expanded). Samples map to [0, 1].
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace omniflow::io
