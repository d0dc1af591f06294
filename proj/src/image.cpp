#include "sparse4d/image.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sparse4d/error.hpp"
#include "sparse4d/table_io.hpp"

namespace sparse4d {

RasterImage extract_channel(const RasterImage& img, int c) {
  if (c < 0 || c >= img.channels) throw InvalidArgument("channel out of range");
  RasterImage out(img.width, img.height, 1);
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i)
    out.data[i] = img.data[i * static_cast<std::size_t>(img.channels) + static_cast<std::size_t>(c)];
  return out;
}

RasterImage merge_channels(const RasterImage& r, const RasterImage& g, const RasterImage& b) {
  if (r.channels != 1 || !r.same_shape(g) || !r.same_shape(b))
    throw DimensionMismatch("merge_channels needs three equally sized single-channel images");
  RasterImage out(r.width, r.height, 3);
  const std::size_t n = r.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    out.data[3 * i] = r.data[i];
    out.data[3 * i + 1] = g.data[i];
    out.data[3 * i + 2] = b.data[i];
  }
  return out;
}

namespace {
int to_level(double v) {
  const double q = std::floor(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<int>(q);
}
}  // namespace

RasterImage quantize8(const RasterImage& img) {
  RasterImage out = img;
  for (auto& v : out.data) v = to_level(v) / 255.0;
  return out;
}

std::string format_netpbm(const RasterImage& img) {
  if (img.channels != 1 && img.channels != 3) throw InvalidArgument("netpbm needs 1 or 3 channels");
  std::string out = img.channels == 1 ? "P2\n" : "P3\n";
  out += std::to_string(img.width) + ' ' + std::to_string(img.height) + "\n255\n";
  const auto row_len = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (std::size_t i = 0; i < row_len; ++i) {
      if (i) out += ' ';
      out += std::to_string(to_level(img.data[static_cast<std::size_t>(y) * row_len + i]));
    }
    out += '\n';
  }
  return out;
}

void save_netpbm(const RasterImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, format_netpbm(img));
}

RasterImage parse_netpbm(const std::string& text, const std::string& source) {
  // Comments are stripped first; the remaining stream is whitespace separated.
  std::string cleaned;
  cleaned.reserve(text.size());
  bool in_comment = false;
  for (char ch : text) {
    if (ch == '#') in_comment = true;
    if (ch == '\n') in_comment = false;
    if (!in_comment) cleaned += ch;
  }
  std::istringstream in(cleaned);
  std::string magic;
  in >> magic;
  int channels = 0;
  if (magic == "P2") channels = 1;
  else if (magic == "P3") channels = 3;
  else throw UnsupportedFormat(source + ": only ASCII P2/P3 supported");
  long long w = 0, h = 0, maxval = 0;
  if (!(in >> w >> h >> maxval) || w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    throw MalformedFile(source + ": bad netpbm header");
  RasterImage img(static_cast<int>(w), static_cast<int>(h), channels);
  for (auto& v : img.data) {
    long long level = 0;
    if (!(in >> level) || level < 0 || level > maxval)
      throw MalformedFile(source + ": truncated or out-of-range pixel data");
    v = static_cast<double>(level) / static_cast<double>(maxval);
  }
  return img;
}

RasterImage load_netpbm(const std::filesystem::path& path) {
  return parse_netpbm(read_file(path), path.string());
}

}  // namespace sparse4d
