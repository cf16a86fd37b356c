#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace omniflow {

// Row-major raster of interleaved float channels, samples nominally in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);
  Image(int width, int height, int channels, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  float& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool same_shape(const Image& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }

  /// Bilinear sample with border clamping on both axes (no wrap).
  float sample_clamped(double x, double y, int c = 0) const;

  /// Single-channel luma (0.299 R + 0.587 G + 0.114 B); copies grayscale input.
  Image to_luma() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

// Dense per-pixel displacement grid (du along columns, dv along rows), row-major.
struct FlowGrid {
  FlowGrid() = default;
  FlowGrid(int w, int h)
      : width(w), height(h), du(static_cast<std::size_t>(w) * h, 0.0), dv(du.size(), 0.0) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  std::size_t size() const { return du.size(); }
  bool same_shape(const FlowGrid& o) const { return width == o.width && height == o.height; }

  friend bool operator==(const FlowGrid&, const FlowGrid&) = default;

  int width = 0;
  int height = 0;
  std::vector<double> du;
  std::vector<double> dv;
};

}  // namespace omniflow
