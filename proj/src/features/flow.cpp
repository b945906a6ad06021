#include <algorithm>
#include <cmath>
#include <numbers>

#include "internal.hpp"
#include "rd/error.hpp"

namespace rd::features {

namespace {

struct Level {
  int w = 0;
  int h = 0;
  std::vector<double> img;

  double at(int x, int y) const { return img[static_cast<std::size_t>(y) * w + x]; }

  // Bilinear lookup with coordinates clamped to the image.
  double sample(double x, double y) const {
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = std::min(static_cast<int>(x), w - 1);
    const int y0 = std::min(static_cast<int>(y), h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double ax = x - x0;
    const double ay = y - y0;
    const double top = at(x0, y0) + ax * (at(x1, y0) - at(x0, y0));
    const double bot = at(x0, y1) + ax * (at(x1, y1) - at(x0, y1));
    return top + ay * (bot - top);
  }
};

Level from_plane(const imaging::Plane& p) {
  Level l{p.width(), p.height(), {}};
  l.img.assign(p.data().begin(), p.data().end());
  return l;
}

Level downsample(const Level& src) {
  Level l{std::max(src.w / 2, 1), std::max(src.h / 2, 1), {}};
  l.img.resize(static_cast<std::size_t>(l.w) * l.h);
  for (int y = 0; y < l.h; ++y) {
    for (int x = 0; x < l.w; ++x) {
      const int sx = std::min(2 * x, src.w - 1), sx1 = std::min(2 * x + 1, src.w - 1);
      const int sy = std::min(2 * y, src.h - 1), sy1 = std::min(2 * y + 1, src.h - 1);
      l.img[static_cast<std::size_t>(y) * l.w + x] =
          0.25 * (src.at(sx, sy) + src.at(sx1, sy) + src.at(sx, sy1) + src.at(sx1, sy1));
    }
  }
  return l;
}

struct Gradients {
  std::vector<double> gx;
  std::vector<double> gy;
};

// Central differences on the interior; border pixels are never used.
Gradients gradients(const Level& l) {
  Gradients g;
  g.gx.assign(l.img.size(), 0.0);
  g.gy.assign(l.img.size(), 0.0);
  for (int y = 1; y < l.h - 1; ++y) {
    for (int x = 1; x < l.w - 1; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * l.w + x;
      g.gx[i] = 0.5 * (l.img[i + 1] - l.img[i - 1]);
      g.gy[i] = 0.5 * (l.img[i + l.w] - l.img[i - l.w]);
    }
  }
  return g;
}

}  // namespace

FlowField dense_flow(const imaging::Plane& prev, const imaging::Plane& cur, const FlowParams& params) {
  if (prev.width() != cur.width() || prev.height() != cur.height()) {
    fail(ErrorCode::DimensionMismatch, "flow frames differ in size");
  }
  if (prev.width() < 16 || prev.height() < 16) fail(ErrorCode::DegenerateWindow, "flow needs at least 16x16");
  const int W = prev.width();
  const int H = prev.height();
  const int levels = std::max(1, params.levels);
  const int step = std::max(1, params.grid_step);
  const int pr = params.patch_radius;

  std::vector<Level> pyr_prev{from_plane(prev)};
  std::vector<Level> pyr_cur{from_plane(cur)};
  for (int l = 1; l < levels; ++l) {
    pyr_prev.push_back(downsample(pyr_prev.back()));
    pyr_cur.push_back(downsample(pyr_cur.back()));
  }
  std::vector<Gradients> grads;
  for (const auto& l : pyr_prev) grads.push_back(gradients(l));

  const int gnx = (W - 1) / step + 1;
  const int gny = (H - 1) / step + 1;
  std::vector<double> node_u(static_cast<std::size_t>(gnx) * gny, 0.0);
  std::vector<double> node_v(node_u.size(), 0.0);
  std::vector<unsigned char> node_ok(node_u.size(), 0);

  for (int j = 0; j < gny; ++j) {
    for (int i = 0; i < gnx; ++i) {
      double gu = 0.0, gv = 0.0;  // guess in the current level's pixel units
      bool ok = false;
      for (int l = levels - 1; l >= 0; --l) {
        const Level& P = pyr_prev[l];
        const Level& C = pyr_cur[l];
        const Gradients& G = grads[l];
        const double scale = std::ldexp(1.0, -l);
        const int cx = static_cast<int>(std::lround(i * step * scale));
        const int cy = static_cast<int>(std::lround(j * step * scale));
        const int x0 = std::max(cx - pr, 1), x1 = std::min(cx + pr, P.w - 2);
        const int y0 = std::max(cy - pr, 1), y1 = std::min(cy + pr, P.h - 2);

        double gxx = 0.0, gxy = 0.0, gyy = 0.0;
        for (int y = y0; y <= y1; ++y) {
          for (int x = x0; x <= x1; ++x) {
            const std::size_t k = static_cast<std::size_t>(y) * P.w + x;
            gxx += G.gx[k] * G.gx[k];
            gxy += G.gx[k] * G.gy[k];
            gyy += G.gy[k] * G.gy[k];
          }
        }
        const double tr = 0.5 * (gxx + gyy);
        const double disc = std::sqrt(std::max(0.0, 0.25 * (gxx - gyy) * (gxx - gyy) + gxy * gxy));
        const double lmin = tr - disc;
        const bool level_ok = x0 <= x1 && y0 <= y1 && lmin >= params.min_eigenvalue;
        double du = 0.0, dv = 0.0;
        if (level_ok) {
          const double det = gxx * gyy - gxy * gxy;
          for (int it = 0; it < params.iterations; ++it) {
            double bx = 0.0, by = 0.0;
            const double fx = gu + du, fy = gv + dv;
            if (!std::isfinite(fx) || !std::isfinite(fy)) break;
            const double ix = std::floor(fx), iy = std::floor(fy);
            const bool inside = x0 + ix >= 0 && x1 + ix + 1 <= C.w - 1 && y0 + iy >= 0 && y1 + iy + 1 <= C.h - 1;
            if (inside) {
              // Whole displaced patch is inside: one set of bilinear weights.
              const int ox = static_cast<int>(ix), oy = static_cast<int>(iy);
              const double ax = fx - ix, ay = fy - iy;
              const double w00 = (1 - ax) * (1 - ay), w01 = ax * (1 - ay), w10 = (1 - ax) * ay, w11 = ax * ay;
              for (int y = y0; y <= y1; ++y) {
                const double* c0 = C.img.data() + static_cast<std::size_t>(y + oy) * C.w + ox;
                const double* c1 = c0 + C.w;
                for (int x = x0; x <= x1; ++x) {
                  const std::size_t k = static_cast<std::size_t>(y) * P.w + x;
                  const double warped = w00 * c0[x] + w01 * c0[x + 1] + w10 * c1[x] + w11 * c1[x + 1];
                  const double diff = warped - P.img[k];
                  bx += diff * G.gx[k];
                  by += diff * G.gy[k];
                }
              }
            } else {
              for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                  const std::size_t k = static_cast<std::size_t>(y) * P.w + x;
                  const double diff = C.sample(x + fx, y + fy) - P.img[k];
                  bx += diff * G.gx[k];
                  by += diff * G.gy[k];
                }
              }
            }
            const double su = -(gyy * bx - gxy * by) / det;
            const double sv = -(gxx * by - gxy * bx) / det;
            du += su;
            dv += sv;
            if (su * su + sv * sv < params.convergence * params.convergence) break;
          }
        }
        gu += du;
        gv += dv;
        if (l == 0) {
          ok = level_ok;
        } else {
          gu *= 2.0;
          gv *= 2.0;
        }
      }
      const std::size_t n = static_cast<std::size_t>(j) * gnx + i;
      node_ok[n] = (ok && std::isfinite(gu) && std::isfinite(gv)) ? 1 : 0;
      node_u[n] = node_ok[n] ? gu : 0.0;
      node_v[n] = node_ok[n] ? gv : 0.0;
    }
  }

  FlowField f;
  f.width = W;
  f.height = H;
  const std::size_t total = static_cast<std::size_t>(W) * H;
  f.u.assign(total, 0.0f);
  f.v.assign(total, 0.0f);
  f.valid.assign(total, 0);
  for (int y = 0; y < H; ++y) {
    const int j0 = std::min(y / step, gny - 1);
    const int j1 = std::min(j0 + 1, gny - 1);
    const double ay = j1 == j0 ? 0.0 : std::min(1.0, static_cast<double>(y - j0 * step) / step);
    for (int x = 0; x < W; ++x) {
      const int i0 = std::min(x / step, gnx - 1);
      const int i1 = std::min(i0 + 1, gnx - 1);
      const double ax = i1 == i0 ? 0.0 : std::min(1.0, static_cast<double>(x - i0 * step) / step);
      const std::size_t n00 = static_cast<std::size_t>(j0) * gnx + i0, n01 = static_cast<std::size_t>(j0) * gnx + i1;
      const std::size_t n10 = static_cast<std::size_t>(j1) * gnx + i0, n11 = static_cast<std::size_t>(j1) * gnx + i1;
      bool valid = node_ok[n00] != 0;
      if (ax > 0.0) valid = valid && node_ok[n01];
      if (ay > 0.0) valid = valid && node_ok[n10];
      if (ax > 0.0 && ay > 0.0) valid = valid && node_ok[n11];
      if (!valid) continue;
      const double w00 = (1 - ax) * (1 - ay), w01 = ax * (1 - ay), w10 = (1 - ax) * ay, w11 = ax * ay;
      const std::size_t p = static_cast<std::size_t>(y) * W + x;
      f.u[p] = static_cast<float>(w00 * node_u[n00] + w01 * node_u[n01] + w10 * node_u[n10] + w11 * node_u[n11]);
      f.v[p] = static_cast<float>(w00 * node_v[n00] + w01 * node_v[n01] + w10 * node_v[n10] + w11 * node_v[n11]);
      f.valid[p] = 1;
    }
  }
  return f;
}

std::vector<double> flow_features(const FlowField& flow, const imaging::Rect& window) {
  if (window.x < 0 || window.y < 0 || window.width <= 0 || window.height <= 0 ||
      window.x + window.width > flow.width || window.y + window.height > flow.height) {
    fail(ErrorCode::OutOfBounds, "flow window outside field");
  }
  std::vector<double> out(kFlowDim, 0.0);
  double lo = INFINITY, hi = 0.0, sum = 0.0;
  std::size_t count = 0;
  std::array<std::size_t, 8> hist{};
  std::size_t moving = 0;
  for (int y = window.y; y < window.y + window.height; ++y) {
    for (int x = window.x; x < window.x + window.width; ++x) {
      const std::size_t p = flow.index(x, y);
      if (!flow.valid[p]) continue;
      const double u = flow.u[p], v = flow.v[p];
      const double m = std::sqrt(u * u + v * v);
      lo = std::min(lo, m);
      hi = std::max(hi, m);
      sum += m;
      ++count;
      if (m > 1e-3) {
        const double a = std::atan2(v, u);
        int bin = static_cast<int>(std::floor((a + std::numbers::pi) / (2.0 * std::numbers::pi) * 8.0));
        bin = std::clamp(bin, 0, 7);
        ++hist[static_cast<std::size_t>(bin)];
        ++moving;
      }
    }
  }
  if (count == 0) return out;
  const double mean = sum / static_cast<double>(count);
  double var = 0.0;
  for (int y = window.y; y < window.y + window.height; ++y) {
    for (int x = window.x; x < window.x + window.width; ++x) {
      const std::size_t p = flow.index(x, y);
      if (!flow.valid[p]) continue;
      const double u = flow.u[p], v = flow.v[p];
      const double d = std::sqrt(u * u + v * v) - mean;
      var += d * d;
    }
  }
  double entropy = 0.0;
  for (std::size_t c : hist) {
    if (c == 0) continue;
    const double q = static_cast<double>(c) / static_cast<double>(moving);
    entropy -= q * std::log(q);
  }
  out[0] = lo;
  out[1] = hi;
  out[2] = mean;
  out[3] = std::sqrt(var / static_cast<double>(count));
  out[4] = entropy;
  return out;
}

}  // namespace rd::features
