#include "sparse4d/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparse4d/error.hpp"

namespace sparse4d {

ChannelTrain::ChannelTrain(std::size_t capacity) : capacity_(capacity) {
  if (capacity < kBaseChannelCount) throw InvalidArgument("channel train capacity must be at least 6");
}

bool ChannelTrain::push(RasterImage img, ChannelTag tag) {
  if (img.channels != 1) throw DimensionMismatch("channel train holds single-channel images");
  if (!channels_.empty() && !img.same_shape(channels_.front()))
    throw DimensionMismatch("channel dimensions differ from the train");
  if (channels_.size() >= capacity_) {
    auto it = std::find_if(tags_.begin(), tags_.end(),
                           [](const ChannelTag& t) { return t.kind == ChannelKind::luminance; });
    if (tag.kind != ChannelKind::luminance) throw InvalidArgument("channel train is full");
    // A train with no room beyond the base channels retains no generations.
    if (it == tags_.end()) return false;
    const auto pos = it - tags_.begin();
    channels_.erase(channels_.begin() + pos);
    tags_.erase(it);
  }
  channels_.push_back(std::move(img));
  tags_.push_back(tag);
  return true;
}

void AugmentConfig::validate() const {
  if (capacity < kBaseChannelCount) throw InvalidArgument("augment capacity must be at least 6");
}

ChannelTrain build_channel_train(const RasterImage& texture, const RasterImage& depth,
                                 const RasterImage& depth_sharp, std::size_t capacity) {
  if (texture.channels != 3) throw DimensionMismatch("texture must have 3 channels");
  if (depth.channels != 1 || depth_sharp.channels != 1)
    throw DimensionMismatch("depth images must be single-channel");
  if (depth.width != texture.width || depth.height != texture.height || !depth.same_shape(depth_sharp))
    throw DimensionMismatch("texture and depth images differ in size");
  ChannelTrain train(capacity);
  train.push(extract_channel(texture, 0), {ChannelKind::texture_r, 0});
  train.push(extract_channel(texture, 1), {ChannelKind::texture_g, 0});
  train.push(extract_channel(texture, 2), {ChannelKind::texture_b, 0});
  train.push(luminance(texture, kStandardWeights), {ChannelKind::texture_gray, 0});
  train.push(depth, {ChannelKind::depth, 0});
  train.push(depth_sharp, {ChannelKind::depth_sharp, 0});
  return train;
}

AugmentedImage generate_augmented(const ChannelTrain& train, Rng& rng) {
  const std::size_t n = train.size();
  if (n < 3) throw TrainTooSmall("need at least 3 channels to composite");
  // Sequential draws without replacement give a uniform ordered triple.
  std::array<std::size_t, 3> pick{};
  pick[0] = static_cast<std::size_t>(rng.uniform_index(n));
  pick[1] = static_cast<std::size_t>(rng.uniform_index(n - 1));
  if (pick[1] >= pick[0]) ++pick[1];
  const auto lo = std::min(pick[0], pick[1]), hi = std::max(pick[0], pick[1]);
  pick[2] = static_cast<std::size_t>(rng.uniform_index(n - 2));
  if (pick[2] >= lo) ++pick[2];
  if (pick[2] >= hi) ++pick[2];
  return {merge_channels(train.channel(pick[0]), train.channel(pick[1]), train.channel(pick[2])), pick};
}

RasterImage luminance(const RasterImage& img, const LuminanceWeights& weights) {
  if (img.channels != 3) throw DimensionMismatch("luminance expects a 3-channel image");
  for (double a : weights)
    if (!(a >= 0.0)) throw NegativeWeight("luminance weights must be nonnegative");
  const auto [a1, a2, a3] = weights;
  // With weights summing to one, a gray pixel maps to itself bit-exactly.
  const bool affine = std::abs(a1 + a2 + a3 - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon();
  RasterImage out(img.width, img.height, 1);
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = img.data[3 * i], g = img.data[3 * i + 1], b = img.data[3 * i + 2];
    const double v = affine && r == g && g == b ? r : a1 * r + a2 * g + a3 * b;
    out.data[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

LuminanceWeights draw_weights(WeightMode mode, Rng& rng) {
  if (mode == WeightMode::standard) return kStandardWeights;
  LuminanceWeights w{};
  double sum = 0.0;
  do {
    sum = 0.0;
    for (auto& a : w) {
      a = rng.uniform01();
      sum += a;
    }
  } while (sum <= 0.0);
  for (auto& a : w) a /= sum;
  return w;
}

std::vector<RasterImage> augment_stream(ChannelTrain& train, Rng& rng, WeightMode mode, std::size_t count) {
  std::vector<RasterImage> out;
  out.reserve(count);
  int generation = 0;
  for (std::size_t i = 0; i < train.size(); ++i)
    generation = std::max(generation, train.tag(i).generation);
  for (std::size_t g = 0; g < count; ++g) {
    auto composite = generate_augmented(train, rng);
    const auto weights = draw_weights(mode, rng);
    train.push(luminance(composite.image, weights), {ChannelKind::luminance, ++generation});
    out.push_back(std::move(composite.image));
  }
  return out;
}

std::vector<RasterImage> augment_stream(const RasterImage& texture, const RasterImage& depth,
                                        const RasterImage& depth_sharp, const AugmentConfig& cfg) {
  cfg.validate();
  auto train = build_channel_train(texture, depth, depth_sharp, cfg.capacity);
  Rng rng(cfg.seed);
  return augment_stream(train, rng, cfg.weight_mode, cfg.count);
}

}  // namespace sparse4d
