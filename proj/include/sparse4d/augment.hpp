#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sparse4d/image.hpp"
#include "sparse4d/random.hpp"

namespace sparse4d {

enum class ChannelKind { texture_r, texture_g, texture_b, texture_gray, depth, depth_sharp, luminance };

struct ChannelTag {
  ChannelKind kind = ChannelKind::texture_r;
  int generation = 0;  // luminance generation, 0 for base channels

  bool operator==(const ChannelTag&) const = default;
};

inline constexpr std::size_t kBaseChannelCount = 6;

/// Pool of single-channel images from which augmented composites are drawn.
/// The six base channels are permanent; generated luminance channels are
/// evicted oldest-first once the train is at capacity.
class ChannelTrain {
 public:
  explicit ChannelTrain(std::size_t capacity);

  std::size_t size() const { return channels_.size(); }
  std::size_t capacity() const { return capacity_; }
  const RasterImage& channel(std::size_t i) const { return channels_.at(i); }
  const ChannelTag& tag(std::size_t i) const { return tags_.at(i); }
  const std::vector<RasterImage>& channels() const { return channels_; }

  /// Appends a channel. Luminance channels evict the oldest generated
  /// channel when the train is full; base channels are never evicted.
  /// Returns false when the channel could not be retained.
  bool push(RasterImage img, ChannelTag tag);

 private:
  std::size_t capacity_;
  std::vector<RasterImage> channels_;
  std::vector<ChannelTag> tags_;
};

using LuminanceWeights = std::array<double, 3>;

/// Standard RGB-to-gray weights.
inline constexpr LuminanceWeights kStandardWeights = {0.3, 0.59, 0.11};

enum class WeightMode { standard, random };

struct AugmentConfig {
  std::uint64_t seed = 0;
  WeightMode weight_mode = WeightMode::random;
  std::size_t capacity = 16;
  std::size_t count = 5;

  void validate() const;
};

/// [R, G, B, gray, depth, sharpened depth].
ChannelTrain build_channel_train(const RasterImage& texture, const RasterImage& depth,
                                 const RasterImage& depth_sharp, std::size_t capacity = 16);

struct AugmentedImage {
  RasterImage image;  // 3 channels
  std::array<std::size_t, 3> chosen{};
};

/// Composites an ordered triple of distinct channels drawn uniformly.
AugmentedImage generate_augmented(const ChannelTrain& train, Rng& rng);

/// Weighted channel sum, clamped to [0,1].
RasterImage luminance(const RasterImage& img, const LuminanceWeights& weights);

/// Per-draw weights: the standard triple, or three uniforms normalized to sum 1.
LuminanceWeights draw_weights(WeightMode mode, Rng& rng);

/// Runs `count` rounds of composite -> luminance -> feed back, returning the
/// composites.
std::vector<RasterImage> augment_stream(ChannelTrain& train, Rng& rng, WeightMode mode, std::size_t count);

std::vector<RasterImage> augment_stream(const RasterImage& texture, const RasterImage& depth,
                                        const RasterImage& depth_sharp, const AugmentConfig& cfg);

}  // namespace sparse4d
