#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "rd/imaging.hpp"

// Independent reference implementations shared by the unit and acceptance
// tests. None of these share code with the library.
namespace rd::oracle {

using imaging::Plane;

using Matrix = std::vector<std::vector<double>>;

// Gauss-Jordan with partial pivoting; test oracle only.
inline Matrix dense_inverse(Matrix a) {
  const std::size_t n = a.size();
  Matrix inv(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    std::swap(a[p], a[c]);
    std::swap(inv[p], inv[c]);
    const double d = a[c][c];
    for (std::size_t k = 0; k < n; ++k) {
      a[c][k] /= d;
      inv[c][k] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c];
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] -= f * a[c][k];
        inv[r][k] -= f * inv[c][k];
      }
    }
  }
  return inv;
}

// (X^T X + diag(R))^-1 X^T t by explicit inverse.
inline std::vector<double> oracle_ridge(const Matrix& x, const std::vector<double>& t, const std::vector<double>& r) {
  const std::size_t d = r.size();
  Matrix a(d, std::vector<double>(d, 0.0));
  std::vector<double> rhs(d, 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    for (std::size_t i = 0; i < d; ++i) {
      rhs[i] += x[n][i] * t[n];
      for (std::size_t j = 0; j < d; ++j) a[i][j] += x[n][i] * x[n][j];
    }
  }
  for (std::size_t i = 0; i < d; ++i) a[i][i] += r[i];
  const auto inv = dense_inverse(a);
  std::vector<double> w(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) w[i] += inv[i][j] * rhs[j];
  return w;
}

// Direct per-pixel eigen-decomposition of the box-smoothed structure tensor;
// returns the trace mass per orientation bin.
inline std::vector<double> tensor_oracle(const Plane& p, int n_bins) {
  const int w = p.width(), h = p.height();
  auto I = [&](int x, int y) { return static_cast<double>(p.at(x, y)); };
  std::vector<double> hist(n_bins, 0.0);
  for (int y = 2; y < h - 2; ++y)
    for (int x = 2; x < w - 2; ++x) {
      double a = 0, b = 0, c = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const double gx = (I(x + dx + 1, y + dy) - I(x + dx - 1, y + dy)) / 2;
          const double gy = (I(x + dx, y + dy + 1) - I(x + dx, y + dy - 1)) / 2;
          a += gx * gx / 9;
          b += gx * gy / 9;
          c += gy * gy / 9;
        }
      const double mean = (a + c) / 2, rad = std::sqrt((a - c) * (a - c) / 4 + b * b);
      const double l1 = mean + rad, l2 = mean - rad;
      if (l1 + l2 <= 0) continue;
      // Eigenvector for l1: (b, l1 - a) or (l1 - c, b), whichever is larger.
      double ex = b, ey = l1 - a;
      if (std::hypot(ex, ey) < std::hypot(l1 - c, b)) {
        ex = l1 - c;
        ey = b;
      }
      double phi = std::atan2(ey, ex);
      while (phi < 0) phi += std::numbers::pi;
      while (phi >= std::numbers::pi) phi -= std::numbers::pi;
      const int bin = std::min(static_cast<int>(phi / std::numbers::pi * n_bins), n_bins - 1);
      hist[bin] += l1 + l2;
    }
  return hist;
}

// Brute-force 2-D convolution with the flipped 3x3 mask, valid region only.
inline double laws_oracle(const Plane& p, const double a[3], const double b[3]) {
  double sum = 0;
  for (int y = 1; y < p.height() - 1; ++y)
    for (int x = 1; x < p.width() - 1; ++x) {
      double r = 0;
      for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) r += a[1 - i] * b[1 - j] * p.at(x + j, y + i);
      sum += std::abs(r);
    }
  return sum / ((p.width() - 2.0) * (p.height() - 2.0));
}

inline Plane grating(int w, int h, double phi, double period = 6.0) {
  Plane p(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double t = x * std::cos(phi) + y * std::sin(phi);
      p.at(x, y) = static_cast<float>(0.5 + 0.4 * std::sin(2 * std::numbers::pi * t / period));
    }
  return p;
}

}  // namespace rd::oracle
