#include <algorithm>

#include "doctest.h"
#include "sparse4d/error.hpp"
#include "sparse4d/image.hpp"
#include "sparse4d/render.hpp"
#include "test_util.hpp"

using namespace sparse4d;

namespace {

std::vector<std::pair<int, int>> lit_pixels(const RasterImage& img) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      bool lit = false;
      for (int c = 0; c < img.channels; ++c) lit = lit || img.at(x, y, c) != 0.0;
      if (lit) out.emplace_back(x, y);
    }
  return out;
}

Mesh colored(std::vector<Point3> v, std::vector<Point3> c) {
  Mesh m;
  m.vertices = std::move(v);
  m.colors = std::move(c);
  return m;
}

}  // namespace

TEST_CASE("texture projection") {
  SUBCASE("single white vertex") {
    const auto img = project_texture(colored({Point3(0, 0, 0)}, {Point3(1, 1, 1)}), 8);
    const auto lit = lit_pixels(img);
    REQUIRE(lit.size() == 1);
    for (int c = 0; c < 3; ++c) CHECK(img.at(lit[0].first, lit[0].second, c) == 1.0);
  }
  SUBCASE("z-buffer keeps the nearer vertex") {
    const auto img =
        project_texture(colored({Point3(0, 0, 0), Point3(0, 0, 1)}, {Point3(1, 0, 0), Point3(0, 0, 1)}), 8);
    const auto lit = lit_pixels(img);
    REQUIRE(lit.size() == 1);
    CHECK(img.at(lit[0].first, lit[0].second, 0) == 0.0);
    CHECK(img.at(lit[0].first, lit[0].second, 2) == 1.0);
  }
  SUBCASE("unit square at K=16") {
    // scale = 0.9*16 = 14.4 px/unit around centre (0.5, 0.5):
    // x=0 -> 8 - 7.2 = 0.8 -> col 0; x=1 -> 15.2 -> col 15; y flips rows.
    const auto img = project_texture(colored({Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0), Point3(1, 1, 0)},
                                             std::vector<Point3>(4, Point3(1, 1, 1))),
                                     16);
    auto lit = lit_pixels(img);
    std::sort(lit.begin(), lit.end());
    CHECK(lit == std::vector<std::pair<int, int>>{{0, 0}, {0, 15}, {15, 0}, {15, 15}});
    const Viewport vp = fit_viewport(colored({Point3(0, 0, 0), Point3(1, 1, 0)}, {Point3(1, 1, 1), Point3(1, 1, 1)}), 16);
    CHECK(vp.pixel_of(0, 0) == std::pair<int, int>{0, 15});
    CHECK(vp.pixel_of(1, 1) == std::pair<int, int>{15, 0});
  }
  SUBCASE("errors") {
    Mesh bare;
    bare.vertices = {Point3(0, 0, 0)};
    CHECK_THROWS_AS(project_texture(bare, 8), MissingColors);
    CHECK_THROWS_AS(project_texture(colored({Point3(0, 0, 0)}, {Point3(1, 1, 1)}), 4), InvalidArgument);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(project_depth(colored({Point3(0, 0, 0), Point3(inf, 0, 0)}, {Point3(1, 1, 1), Point3(1, 1, 1)}), 8),
                    DegenerateExtent);
  }
}

TEST_CASE("depth projection") {
  SUBCASE("flat mesh lights covered pixels at exactly 1") {
    Mesh m;
    m.vertices = {Point3(0, 0, 2), Point3(1, 0, 2), Point3(0, 1, 2)};
    const auto img = project_depth(m, 16);
    const auto lit = lit_pixels(img);
    CHECK(lit.size() == 3);
    for (auto [x, y] : lit) CHECK(img.at(x, y) == 1.0);
  }
  SUBCASE("endpoints and midpoint") {
    Mesh m;
    m.vertices = {Point3(0, 0, 0), Point3(1, 0, 1), Point3(2, 0, 2)};
    const Viewport vp = fit_viewport(m, 16);
    const auto img = project_depth(m, vp);
    for (int i = 0; i < 3; ++i) {
      const auto [x, y] = vp.pixel_of(m.vertices[static_cast<std::size_t>(i)].x(), 0.0);
      CHECK(img.at(x, y) == 0.5 * i);
    }
  }
  SUBCASE("monotone in z") {
    Rng rng(2);
    Mesh m;
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 10; ++j) m.vertices.emplace_back(i, j, rng.normal());
    const Viewport vp = fit_viewport(m, 64);
    const auto img = project_depth(m, vp);
    for (const auto& a : m.vertices)
      for (const auto& b : m.vertices) {
        if (a.z() <= b.z()) continue;
        const auto [xa, ya] = vp.pixel_of(a.x(), a.y());
        const auto [xb, yb] = vp.pixel_of(b.x(), b.y());
        CHECK(img.at(xa, ya) >= img.at(xb, yb));
      }
  }
  SUBCASE("translation covariance") {
    Mesh m;
    m.vertices = {Point3(0, 0, 0), Point3(0.25, 0.5, 1), Point3(1, 1, 0.3)};
    Mesh frame = m;
    frame.vertices.emplace_back(1.5, 0.0, 0.0);
    const Viewport vp = fit_viewport(frame, 32);
    Mesh moved = m;
    const double step = 3.0 / vp.scale;
    for (auto& v : moved.vertices) v.x() += step;
    const auto a = lit_pixels(project_depth(m, vp)), b = lit_pixels(project_depth(moved, vp));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == std::pair<int, int>{a[i].first + 3, a[i].second});
  }
}

TEST_CASE("CLAHE") {
  SUBCASE("two-level 8x8 fixture against the exact reference") {
    RasterImage img(8, 8, 1);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) img.at(x, y) = x < 3 ? 0.2 : 0.8;
    const auto out = sharpen_depth(img, ClaheConfig{2, 0.5, 4});
    // Columns from tests/oracles/clahe_oracle.py, identical on every row.
    const double expect[8] = {9.0 / 16, 9.0 / 16, 65.0 / 128, 1, 1, 1, 1, 1};
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) CHECK(out.at(x, y) == doctest::Approx(expect[x]).epsilon(1e-14));
  }
  SUBCASE("constant image stays constant") {
    for (double v : {0.0, 0.3, 1.0}) {
      const auto out = sharpen_depth(RasterImage(40, 24, 1, v));
      for (double p : out.data) CHECK(p == out.data.front());
    }
  }
  SUBCASE("output range") {
    Rng rng(4);
    RasterImage img(50, 37, 1);
    for (auto& p : img.data) p = rng.uniform01();
    const auto out = sharpen_depth(img);
    for (double p : out.data) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
  }
  SUBCASE("config validation") {
    CHECK_THROWS_AS(sharpen_depth(RasterImage(8, 8, 1), ClaheConfig{0, 0.1, 4}), InvalidArgument);
    CHECK_THROWS_AS(sharpen_depth(RasterImage(8, 8, 1), ClaheConfig{2, 0.0, 4}), InvalidArgument);
    CHECK_THROWS_AS(sharpen_depth(RasterImage(8, 8, 1), ClaheConfig{2, 0.1, 1}), InvalidArgument);
    CHECK_THROWS_AS(sharpen_depth(RasterImage(8, 8, 3)), DimensionMismatch);
  }
}

TEST_CASE("netpbm round trip") {
  Rng rng(8);
  RasterImage rgb(5, 4, 3);
  for (auto& p : rgb.data) p = rng.uniform01();
  const RasterImage q = quantize8(rgb);
  const auto dir = test::scratch("netpbm");
  save_netpbm(rgb, dir / "a.ppm");
  CHECK(load_netpbm(dir / "a.ppm") == q);
  CHECK(quantize8(q) == q);
  const auto gray = parse_netpbm("P2\n# comment\n2 1\n255\n0 255\n", "inline");
  CHECK(gray.channels == 1);
  CHECK(gray.at(1, 0) == 1.0);
  CHECK_THROWS_AS(parse_netpbm("P2\n2 1\n255\n0\n", "inline"), MalformedFile);
  CHECK_THROWS_AS(parse_netpbm("P5\n2 1\n255\n", "inline"), UnsupportedFormat);
}
