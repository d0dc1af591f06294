#include <map>
#include <set>

#include "doctest.h"
#include "sparse4d/augment.hpp"
#include "sparse4d/error.hpp"
#include "test_util.hpp"

using namespace sparse4d;

namespace {

RasterImage random_image(Rng& rng, int w, int h, int c) {
  RasterImage img(w, h, c);
  for (auto& p : img.data) p = rng.uniform01();
  return img;
}

struct Inputs {
  RasterImage texture, depth, sharp;
};

Inputs random_inputs(std::uint64_t seed, int k = 12) {
  Rng rng(seed);
  return {random_image(rng, k, k, 3), random_image(rng, k, k, 1), random_image(rng, k, k, 1)};
}

}  // namespace

TEST_CASE("channel train construction") {
  const auto in = random_inputs(1);
  const auto train = build_channel_train(in.texture, in.depth, in.sharp, 16);
  REQUIRE(train.size() == 6);
  const ChannelKind order[] = {ChannelKind::texture_r, ChannelKind::texture_g, ChannelKind::texture_b,
                               ChannelKind::texture_gray, ChannelKind::depth, ChannelKind::depth_sharp};
  for (std::size_t i = 0; i < 6; ++i) CHECK(train.tag(i).kind == order[i]);
  CHECK(train.channel(4) == in.depth);
  CHECK(train.channel(1) == extract_channel(in.texture, 1));

  SUBCASE("gray texture gives a gray channel equal to R") {
    RasterImage gray(9, 9, 3);
    Rng rng(2);
    for (std::size_t i = 0; i < gray.pixel_count(); ++i) gray.data[3 * i] = gray.data[3 * i + 1] = gray.data[3 * i + 2] = rng.uniform01();
    const auto t = build_channel_train(gray, RasterImage(9, 9, 1), RasterImage(9, 9, 1), 16);
    CHECK(t.channel(3) == t.channel(0));
  }
  SUBCASE("pure red gives 0.3 gray") {
    RasterImage red(4, 4, 3);
    for (std::size_t i = 0; i < red.pixel_count(); ++i) red.data[3 * i] = 1.0;
    const auto t = build_channel_train(red, RasterImage(4, 4, 1), RasterImage(4, 4, 1), 16);
    for (double v : t.channel(3).data) CHECK(v == 0.3);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(build_channel_train(in.texture, RasterImage(5, 5, 1), in.sharp, 16), DimensionMismatch);
    CHECK_THROWS_AS(build_channel_train(in.depth, in.depth, in.sharp, 16), DimensionMismatch);
    CHECK_THROWS_AS(ChannelTrain(5), InvalidArgument);
  }
}

TEST_CASE("random composites") {
  const auto in = random_inputs(3);
  SUBCASE("three channels give a permutation") {
    ChannelTrain t(6);
    t.push(extract_channel(in.texture, 0), {ChannelKind::texture_r, 0});
    t.push(extract_channel(in.texture, 1), {ChannelKind::texture_g, 0});
    t.push(extract_channel(in.texture, 2), {ChannelKind::texture_b, 0});
    Rng rng(4);
    for (int i = 0; i < 20; ++i) {
      const auto g = generate_augmented(t, rng);
      std::set<std::size_t> s(g.chosen.begin(), g.chosen.end());
      CHECK(s == std::set<std::size_t>{0, 1, 2});
      for (int c = 0; c < 3; ++c) CHECK(extract_channel(g.image, c) == t.channel(g.chosen[static_cast<std::size_t>(c)]));
    }
  }
  SUBCASE("same seed, same composite") {
    const auto t = build_channel_train(in.texture, in.depth, in.sharp, 16);
    Rng a(99), b(99);
    for (int i = 0; i < 5; ++i) {
      const auto x = generate_augmented(t, a), y = generate_augmented(t, b);
      CHECK(x.chosen == y.chosen);
      CHECK(x.image == y.image);
    }
  }
  SUBCASE("ordered triples are uniform") {
    const auto t = build_channel_train(in.texture, in.depth, in.sharp, 16);
    Rng rng(17);
    std::map<std::array<std::size_t, 3>, int> counts;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) ++counts[generate_augmented(t, rng).chosen];
    CHECK(counts.size() == 120);
    const double p = 1.0 / 120, mean = draws * p, sd = std::sqrt(draws * p * (1 - p));
    double chi2 = 0.0;
    for (const auto& [_, c] : counts) {
      CHECK(std::abs(c - mean) < 5 * sd);
      chi2 += (c - mean) * (c - mean) / mean;
    }
    // 119 degrees of freedom; 5 standard deviations above the mean.
    CHECK(chi2 < 119 + 5 * std::sqrt(2.0 * 119));
  }
  SUBCASE("too small") {
    ChannelTrain t(6);
    t.push(in.depth, {ChannelKind::depth, 0});
    t.push(in.sharp, {ChannelKind::depth_sharp, 0});
    Rng rng(1);
    CHECK_THROWS_AS(generate_augmented(t, rng), TrainTooSmall);
  }
}

TEST_CASE("luminance") {
  Rng rng(5);
  const auto img = random_image(rng, 7, 5, 3);
  CHECK(luminance(img, {1, 0, 0}) == extract_channel(img, 0));
  CHECK(luminance(img, {0, 0, 1}) == extract_channel(img, 2));

  RasterImage gray(6, 6, 3);
  for (std::size_t i = 0; i < gray.pixel_count(); ++i)
    gray.data[3 * i] = gray.data[3 * i + 1] = gray.data[3 * i + 2] = rng.uniform01();
  CHECK(luminance(gray, kStandardWeights) == extract_channel(gray, 0));

  const RasterImage half(5, 5, 3, 0.5);
  for (int i = 0; i < 50; ++i) {
    const auto w = draw_weights(WeightMode::random, rng);
    CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0).epsilon(1e-15));
    for (double v : luminance(half, w).data) CHECK(v == 0.5);
  }
  const auto l = luminance(img, {0.2, 0.3, 0.4});
  for (std::size_t i = 0; i < l.data.size(); ++i)
    CHECK(l.data[i] == doctest::Approx(0.2 * img.data[3 * i] + 0.3 * img.data[3 * i + 1] + 0.4 * img.data[3 * i + 2]));
  CHECK_THROWS_AS(luminance(img, {0.5, -0.1, 0.6}), NegativeWeight);
  CHECK_THROWS_AS(luminance(extract_channel(img, 0), kStandardWeights), DimensionMismatch);
  CHECK(draw_weights(WeightMode::standard, rng) == kStandardWeights);
}

TEST_CASE("augment stream") {
  const auto in = random_inputs(7);
  SUBCASE("count zero leaves the train untouched") {
    auto train = build_channel_train(in.texture, in.depth, in.sharp, 16);
    Rng rng(1);
    CHECK(augment_stream(train, rng, WeightMode::random, 0).empty());
    CHECK(train.size() == 6);
  }
  SUBCASE("deterministic and in range") {
    AugmentConfig cfg;
    cfg.seed = 42;
    cfg.count = 5;
    const auto a = augment_stream(in.texture, in.depth, in.sharp, cfg);
    const auto b = augment_stream(in.texture, in.depth, in.sharp, cfg);
    REQUIRE(a.size() == 5);
    CHECK(a == b);
    for (const auto& img : a) {
      CHECK(img.channels == 3);
      for (double v : img.data) CHECK((v >= 0.0 && v <= 1.0));
    }
    cfg.seed = 43;
    CHECK(augment_stream(in.texture, in.depth, in.sharp, cfg) != a);
  }
  SUBCASE("eviction keeps base channels") {
    auto train = build_channel_train(in.texture, in.depth, in.sharp, 10);
    const auto base = train.channels();
    Rng rng(3);
    CHECK(augment_stream(train, rng, WeightMode::random, 7).size() == 7);
    CHECK(train.size() == 10);
    for (std::size_t i = 0; i < 6; ++i) CHECK(train.channel(i) == base[i]);
    // Generations 1..7 with capacity for four: the last four survive, in order.
    for (std::size_t i = 6; i < 10; ++i) {
      CHECK(train.tag(i).kind == ChannelKind::luminance);
      CHECK(train.tag(i).generation == static_cast<int>(i) - 2);
    }
  }
  SUBCASE("capacity six keeps only base channels") {
    auto train = build_channel_train(in.texture, in.depth, in.sharp, 6);
    Rng rng(3);
    CHECK(augment_stream(train, rng, WeightMode::standard, 4).size() == 4);
    CHECK(train.size() == 6);
  }
}
