#include <algorithm>
#include <cmath>
#include <numbers>

#include "rd/error.hpp"
#include "rd/rng.hpp"
#include "rd/simworld.hpp"

namespace rd::sim {

namespace {

double lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  const std::uint64_t h = mix_seed(seed ^ (static_cast<std::uint64_t>(ix) * 0xD6E8FEB86659FD93ULL),
                                   static_cast<std::uint64_t>(iy));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Smoothly interpolated lattice noise in [0, 1].
double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  double tx = x - fx, ty = y - fy;
  tx = tx * tx * (3.0 - 2.0 * tx);
  ty = ty * ty * (3.0 - 2.0 * ty);
  const double a = lattice(seed, ix, iy), b = lattice(seed, ix + 1, iy);
  const double c = lattice(seed, ix, iy + 1), d = lattice(seed, ix + 1, iy + 1);
  return (a + (b - a) * tx) * (1.0 - ty) + (c + (d - c) * tx) * ty;
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

struct Hit {
  int tree = -1;
  double dist = 0.0;
  double arc = 0.0;    // position along the trunk circumference, m
  double facing = 1.0; // |cos| between ray and surface normal
};

Hit cast(const World& world, double ox, double oy, double dx, double dy, double max_range) {
  Hit best;
  best.dist = max_range;
  for (std::size_t i = 0; i < world.trees.size(); ++i) {
    const auto& t = world.trees[i];
    const double cx = t.x - ox, cy = t.y - oy;
    const double along = cx * dx + cy * dy;
    if (along <= 0.0) continue;
    const double perp2 = cx * cx + cy * cy - along * along;
    const double r2 = t.r * t.r;
    if (perp2 >= r2) continue;
    const double d = along - std::sqrt(r2 - perp2);
    if (d <= 0.0 || d >= best.dist) continue;
    best.tree = static_cast<int>(i);
    best.dist = d;
    const double hx = ox + d * dx - t.x, hy = oy + d * dy - t.y;
    best.arc = std::atan2(hy, hx) * t.r;
    best.facing = std::abs(hx * dx + hy * dy) / t.r;
  }
  return best;
}

}  // namespace

double CameraModel::focal() const { return 0.5 * width / std::tan(0.5 * hfov); }

double CameraModel::column_angle(int col) const {
  return -hfov * (static_cast<double>(col) / (width - 1) - 0.5);
}

imaging::Raster render(const World& world, const DroneState& state, const CameraModel& cam) {
  if (!world.bounds.contains(state.x, state.y)) fail(ErrorCode::OutOfBounds, "drone outside the world bounds");
  if (!(cam.hfov > 0.0 && cam.hfov < std::numbers::pi)) fail(ErrorCode::InvalidArgument, "hfov must be in (0, pi)");

  const int W = cam.width, H = cam.height;
  imaging::Plane Y(W, H), Cr(W, H), Cb(W, H);
  const double cy = 0.5 * (H - 1);
  const double f = cam.focal();
  const std::uint64_t sky_seed = mix_seed(world.seed, 0x5C1);
  const std::uint64_t ground_seed = mix_seed(world.seed, 0x6D0);
  const std::uint64_t chroma_seed = mix_seed(world.seed, 0xC4A);

  for (int col = 0; col < W; ++col) {
    const double bearing = state.heading + cam.column_angle(col);
    const double dx = std::cos(bearing), dy = std::sin(bearing);
    const Hit hit = cast(world, state.x, state.y, dx, dy, cam.max_range);

    // Background keyed by world bearing so it stays put under translation.
    const double u = bearing * 40.0;
    for (int row = 0; row < H; ++row) {
      double y, cr, cb;
      const double n = value_noise(chroma_seed, u * 0.5, row * 0.1);
      if (row < cy) {
        const double elev = (cy - row) / cy;
        y = 0.55 + 0.25 * elev + 0.14 * (value_noise(sky_seed, u * 0.35, row * 0.08) - 0.5) * (1.0 - 0.6 * elev);
      } else {
        const double depth = (row - cy) / cy;
        y = 0.28 + 0.12 * depth + 0.06 * (value_noise(ground_seed, u * 0.5, row * 0.15) - 0.5);
      }
      cr = 0.45 + 0.02 * (2.0 * n - 1.0);
      cb = 0.55 - 0.02 * (2.0 * n - 1.0);
      Y.at(col, row) = clamp01(y);
      Cr.at(col, row) = clamp01(cr);
      Cb.at(col, row) = clamp01(cb);
    }
    if (hit.tree < 0) continue;

    const double d = hit.dist;
    const double h = std::clamp(cam.trunk_scale / d, 8.0, static_cast<double>(H));
    const double top = cy - 0.5 * h, bottom = cy + 0.5 * h;
    const std::uint64_t bark = mix_seed(world.seed, 0x7EE + static_cast<std::uint64_t>(hit.tree));
    const double fade = 1.0 / (1.0 + 0.05 * d);
    const double shade = 0.7 + 0.3 * hit.facing;
    for (int row = std::max(0, static_cast<int>(std::ceil(top))); row < H && row <= bottom; ++row) {
      const double z = (row - cy) * d / f;  // metres above/below the horizon line on the trunk
      const double coarse = value_noise(bark, hit.arc / 0.05, z / 0.3);
      const double fine = value_noise(bark ^ 0xABCDEFULL, hit.arc / 0.015, z / 0.08);
      const double y = (0.18 + 0.32 * coarse + 0.12 * fine) * shade * fade;
      const double n = value_noise(bark ^ 0x1234ULL, hit.arc / 0.03, z / 0.2);
      Y.at(col, row) = clamp01(y);
      Cr.at(col, row) = clamp01(0.55 + 0.02 * (2.0 * n - 1.0));
      Cb.at(col, row) = clamp01(0.45 - 0.02 * (2.0 * n - 1.0));
    }
  }
  return imaging::Raster(std::move(Y), std::move(Cr), std::move(Cb));
}

}  // namespace rd::sim
