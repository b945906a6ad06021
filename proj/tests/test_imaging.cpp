#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "rd/error.hpp"
#include "rd/imaging.hpp"
#include "rd/rng.hpp"
#include "test_support.hpp"

using namespace rd;
using namespace rd::imaging;
using rd::test::code_of;

namespace {

Raster random_raster(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Plane a(w, h), b(w, h), c(w, h);
  for (auto* p : {&a, &b, &c}) {
    for (auto& v : p->data()) v = static_cast<float>(rng.uniform());
  }
  return Raster(a, b, c);
}

}  // namespace

TEST_CASE("make_grid default geometry") {
  const auto g = make_grid(320, 240, 15, 7);
  CHECK(g.win_w == 40);
  CHECK(g.win_h == 60);
  CHECK(g.stride_x == 20);
  CHECK(g.stride_y == 30);
  CHECK(g.count() == 105);
  CHECK(g.stride_x * (g.nx - 1) + g.win_w == 320);
  CHECK(g.stride_y * (g.ny - 1) + g.win_h == 240);
}

TEST_CASE("make_grid single window and errors") {
  const auto g = make_grid(4, 4, 1, 1);
  CHECK(g.count() == 1);
  CHECK(g.window(0) == Rect{0, 0, 4, 4});
  CHECK(code_of([] { make_grid(320, 240, 14, 7); }) == ErrorCode::NonDivisibleGeometry);
  CHECK(code_of([] { make_grid(320, 240, 15, 6); }) == ErrorCode::NonDivisibleGeometry);
}

TEST_CASE("window coverage: union is the raster, interior pixels lie in four windows") {
  for (auto [w, h, nx, ny] : {std::array{320, 240, 15, 7}, std::array{64, 48, 3, 5}, std::array{30, 30, 2, 2}}) {
    const auto g = make_grid(w, h, nx, ny);
    std::vector<int> cover(static_cast<std::size_t>(w) * h, 0);
    for (int i = 0; i < g.count(); ++i) {
      const auto r = g.window(i);
      for (int y = r.y; y < r.y + r.height; ++y)
        for (int x = r.x; x < r.x + r.width; ++x) ++cover[static_cast<std::size_t>(y) * w + x];
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int c = cover[static_cast<std::size_t>(y) * w + x];
        const bool border_x = x < g.stride_x || x >= w - g.stride_x;
        const bool border_y = y < g.stride_y || y >= h - g.stride_y;
        const int expected = (border_x ? 1 : 2) * (border_y ? 1 : 2);
        REQUIRE(c == expected);
      }
    }
  }
}

TEST_CASE("rgb_to_ycrcb") {
  auto black = rgb_to_ycrcb(0, 0, 0);
  CHECK(black.y == 0.0);
  CHECK(black.cr == 0.5);
  CHECK(black.cb == 0.5);
  auto white = rgb_to_ycrcb(1, 1, 1);
  CHECK(white.y == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(white.cr == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(white.cb == doctest::Approx(0.5).epsilon(1e-12));
  auto red = rgb_to_ycrcb(1, 0, 0);
  CHECK(red.y == doctest::Approx(0.299).epsilon(1e-12));
  CHECK(red.cr == doctest::Approx(0.5 + 0.713 * 0.701).epsilon(1e-12));
  CHECK(red.cb == doctest::Approx(0.5 - 0.564 * 0.299).epsilon(1e-12));
  CHECK(std::abs(red.cr - 0.99981) < 1e-5);
  CHECK(std::abs(red.cb - 0.33136) < 1e-5);
  // Out-of-range inputs are clamped rather than rejected.
  auto over = rgb_to_ycrcb(2.0, -1.0, 0.5);
  auto clamped = rgb_to_ycrcb(1.0, 0.0, 0.5);
  CHECK(over.y == clamped.y);
}

TEST_CASE("crop identity, corner, bounds, composition") {
  const auto r = random_raster(320, 240, 3);
  CHECK(crop(r, Rect{0, 0, 320, 240}) == r);

  const auto c = crop(r, Rect{0, 0, 40, 60});
  CHECK(c.width() == 40);
  CHECK(c.height() == 60);
  for (int y = 0; y < 60; ++y)
    for (int x = 0; x < 40; ++x) REQUIRE(c.luma().at(x, y) == r.luma().at(x, y));

  CHECK(code_of([&] { crop(r, Rect{300, 0, 40, 60}); }) == ErrorCode::OutOfBounds);
  CHECK(code_of([&] { crop(r, Rect{-1, 0, 4, 4}); }) == ErrorCode::OutOfBounds);

  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int aw = 2 + static_cast<int>(rng.below(100)), ah = 2 + static_cast<int>(rng.below(100));
    const Rect a{static_cast<int>(rng.below(320 - aw + 1)), static_cast<int>(rng.below(240 - ah + 1)), aw, ah};
    const int bw = 1 + static_cast<int>(rng.below(aw)), bh = 1 + static_cast<int>(rng.below(ah));
    const Rect b{static_cast<int>(rng.below(aw - bw + 1)), static_cast<int>(rng.below(ah - bh + 1)), bw, bh};
    REQUIRE(crop(crop(r, a), b) == crop(r, Rect{a.x + b.x, a.y + b.y, bw, bh}));
  }
}

TEST_CASE("raster validation") {
  CHECK(code_of([] { Raster(Plane(2, 2, 0.5f), Plane(2, 3, 0.5f), Plane(2, 2, 0.5f)); }) ==
        ErrorCode::DimensionMismatch);
  CHECK(code_of([] { Raster(Plane(2, 2, 1.5f), Plane(2, 2, 0.5f), Plane(2, 2, 0.5f)); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("YCCR and PPM files") {
  const auto dir = std::filesystem::temp_directory_path() / "rd_test_imaging";
  std::filesystem::create_directories(dir);
  const auto r = random_raster(33, 17, 5);
  write_yccr(dir / "a.yccr", r);
  CHECK(std::filesystem::file_size(dir / "a.yccr") == 16 + 33 * 17 * 3 * 4);
  CHECK(read_yccr(dir / "a.yccr") == r);

  // Gray levels survive the 8-bit RGB trip up to quantization.
  const auto gray = Raster::filled(8, 6, 0.4f);
  write_ppm(dir / "g.ppm", gray);
  const auto back = read_raster(dir / "g.ppm");
  CHECK(back.width() == 8);
  CHECK(back.luma().at(3, 3) == doctest::Approx(0.4).epsilon(0.005));
  CHECK(back.plane(Channel::Cr).at(1, 1) == doctest::Approx(0.5).epsilon(0.005));

  std::ofstream(dir / "bad.yccr") << "nope";
  CHECK(code_of([&] { read_yccr(dir / "bad.yccr"); }) == ErrorCode::FormatError);
  std::filesystem::remove_all(dir);
}
