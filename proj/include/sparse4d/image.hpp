#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sparse4d {

/// Row-major raster with 1 or 3 interleaved channels, intensities in [0,1].
struct RasterImage {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<double> data;

  RasterImage() = default;
  RasterImage(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(c), fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }

  double& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
                    static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)];
  }
  double at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
                    static_cast<std::size_t>(channels) + static_cast<std::size_t>(c)];
  }

  bool same_shape(const RasterImage& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  bool operator==(const RasterImage&) const = default;
};

RasterImage extract_channel(const RasterImage& img, int c);

/// Stacks three single-channel images into an interleaved RGB image.
RasterImage merge_channels(const RasterImage& r, const RasterImage& g, const RasterImage& b);

/// Rounds every value to the nearest 1/255 level (half-up), the precision of
/// the on-disk PGM/PPM format.
RasterImage quantize8(const RasterImage& img);

/// ASCII PGM (1 channel) or PPM (3 channels), maxval 255.
std::string format_netpbm(const RasterImage& img);
void save_netpbm(const RasterImage& img, const std::filesystem::path& path);
RasterImage parse_netpbm(const std::string& text, const std::string& source);
RasterImage load_netpbm(const std::filesystem::path& path);

}  // namespace sparse4d
