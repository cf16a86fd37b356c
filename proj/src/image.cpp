#include "omniflow/image.hpp"

#include <algorithm>
#include <cmath>

#include "omniflow/error.hpp"

namespace omniflow {

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0 || (channels != 1 && channels != 3)) {
    throw DimensionError("image needs positive size and 1 or 3 channels");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<float> data)
    : Image(width, height, channels) {
  if (data.size() != data_.size()) throw DimensionError("image data size does not match shape");
  data_ = std::move(data);
}

float Image::sample_clamped(double x, double y, int c) const {
  x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
  const int x0 = std::min(static_cast<int>(x), width_ - 1);
  const int y0 = std::min(static_cast<int>(y), height_ - 1);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * at(x0, y0, c) + fx * at(x1, y0, c);
  const double bot = (1.0 - fx) * at(x0, y1, c) + fx * at(x1, y1, c);
  return static_cast<float>((1.0 - fy) * top + fy * bot);
}

Image Image::to_luma() const {
  if (channels_ == 1) return *this;
  Image out(width_, height_, 1);
  const std::size_t n = static_cast<std::size_t>(width_) * height_;
  for (std::size_t i = 0; i < n; ++i) {
    out.data_[i] = 0.299f * data_[3 * i] + 0.587f * data_[3 * i + 1] + 0.114f * data_[3 * i + 2];
  }
  return out;
}

}  // namespace omniflow
