#include "rd/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "binio.hpp"
#include "rd/error.hpp"

namespace rd::imaging {

namespace {

constexpr char kYccrMagic[4] = {'Y', 'C', 'C', 'R'};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void check_plane_range(const Plane& p) {
  for (float v : p.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) fail(ErrorCode::InvalidArgument, "raster intensity outside [0,1]");
  }
}

}  // namespace

Plane::Plane(int width, int height, float fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
  if (width < 0 || height < 0) fail(ErrorCode::InvalidArgument, "negative plane size");
}

Plane::Plane(int width, int height, std::vector<float> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 0 || height < 0 ||
      data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    fail(ErrorCode::DimensionMismatch, "plane data size does not match width*height");
  }
}

Raster::Raster(Plane y, Plane cr, Plane cb) : planes_{std::move(y), std::move(cr), std::move(cb)} {
  for (const auto& p : planes_) {
    if (p.width() != planes_[0].width() || p.height() != planes_[0].height()) {
      fail(ErrorCode::DimensionMismatch, "raster planes differ in size");
    }
    check_plane_range(p);
  }
}

Raster Raster::filled(int width, int height, float y, float cr, float cb) {
  return Raster(Plane(width, height, y), Plane(width, height, cr), Plane(width, height, cb));
}

Rect WindowGrid::window(int index) const {
  if (index < 0 || index >= count()) fail(ErrorCode::OutOfBounds, "window index out of range");
  const int ix = index % nx;
  const int iy = index / nx;
  return Rect{ix * stride_x, iy * stride_y, win_w, win_h};
}

WindowGrid make_grid(int width, int height, int nx, int ny) {
  if (width <= 0 || height <= 0 || nx <= 0 || ny <= 0) {
    fail(ErrorCode::InvalidArgument, "grid extents and counts must be positive");
  }
  if ((2 * width) % (nx + 1) != 0 || (2 * height) % (ny + 1) != 0) {
    fail(ErrorCode::NonDivisibleGeometry,
         "window grid " + std::to_string(nx) + "x" + std::to_string(ny) + " does not tile " +
             std::to_string(width) + "x" + std::to_string(height) + " exactly");
  }
  WindowGrid g;
  g.image_width = width;
  g.image_height = height;
  g.nx = nx;
  g.ny = ny;
  g.win_w = 2 * width / (nx + 1);
  g.win_h = 2 * height / (ny + 1);
  // Odd window sizes cannot be split into integral half strides.
  if (g.win_w % 2 != 0 && nx > 1) fail(ErrorCode::NonDivisibleGeometry, "odd window width with overlap");
  if (g.win_h % 2 != 0 && ny > 1) fail(ErrorCode::NonDivisibleGeometry, "odd window height with overlap");
  g.stride_x = g.win_w / 2;
  g.stride_y = g.win_h / 2;
  return g;
}

YCrCb rgb_to_ycrcb(double r, double g, double b) {
  r = clamp01(r);
  g = clamp01(g);
  b = clamp01(b);
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return YCrCb{clamp01(y), clamp01((r - y) * 0.713 + 0.5), clamp01((b - y) * 0.564 + 0.5)};
}

Plane crop(const Plane& plane, const Rect& window) {
  if (window.x < 0 || window.y < 0 || window.width <= 0 || window.height <= 0 ||
      window.x + window.width > plane.width() || window.y + window.height > plane.height()) {
    fail(ErrorCode::OutOfBounds, "crop window outside raster bounds");
  }
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(window.width) * window.height);
  for (int y = 0; y < window.height; ++y) {
    const float* row = plane.data().data() + static_cast<std::size_t>(window.y + y) * plane.width() + window.x;
    out.insert(out.end(), row, row + window.width);
  }
  return Plane(window.width, window.height, std::move(out));
}

Raster crop(const Raster& raster, const Rect& window) {
  return Raster(crop(raster.plane(Channel::Y), window), crop(raster.plane(Channel::Cr), window),
                crop(raster.plane(Channel::Cb), window));
}

std::uint64_t raster_hash(const Raster& raster) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int c = 0; c < 3; ++c) {
    const auto& data = raster.plane(static_cast<Channel>(c)).data();
    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    for (std::size_t i = 0; i < data.size() * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::vector<std::uint8_t> encode_ppm(const Raster& raster) {
  const int w = raster.width();
  const int h = raster.height();
  std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + static_cast<std::size_t>(w) * h * 3);
  const auto& Y = raster.plane(Channel::Y).data();
  const auto& Cr = raster.plane(Channel::Cr).data();
  const auto& Cb = raster.plane(Channel::Cb).data();
  auto to8 = [](double v) { return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0)); };
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const double y = Y[i];
    const double r = y + (Cr[i] - 0.5) / 0.713;
    const double b = y + (Cb[i] - 0.5) / 0.564;
    const double g = (y - 0.299 * r - 0.114 * b) / 0.587;
    out.push_back(to8(r));
    out.push_back(to8(g));
    out.push_back(to8(b));
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const Raster& raster) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string());
  const auto bytes = encode_ppm(raster);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Raster read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  auto next_token = [&in]() {
    std::string tok;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(c);
    }
    return tok;
  };
  if (next_token() != "P6") fail(ErrorCode::FormatError, "not a binary PPM (P6)");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    fail(ErrorCode::FormatError, "malformed PPM header");
  }
  if (w <= 0 || h <= 0 || maxval != 255) fail(ErrorCode::FormatError, "unsupported PPM geometry or maxval");
  std::vector<unsigned char> pix(static_cast<std::size_t>(w) * h * 3);
  if (!in.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(pix.size()))) {
    fail(ErrorCode::FormatError, "truncated PPM pixel data");
  }
  Plane Y(w, h), Cr(w, h), Cb(w, h);
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const auto c = rgb_to_ycrcb(pix[3 * i] / 255.0, pix[3 * i + 1] / 255.0, pix[3 * i + 2] / 255.0);
    Y.data()[i] = static_cast<float>(c.y);
    Cr.data()[i] = static_cast<float>(c.cr);
    Cb.data()[i] = static_cast<float>(c.cb);
  }
  return Raster(std::move(Y), std::move(Cr), std::move(Cb));
}

void write_yccr(const std::filesystem::path& path, const Raster& raster) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string());
  out.write(kYccrMagic, 4);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(raster.width()));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(raster.height()));
  detail::put_le<std::uint32_t>(out, 0);
  for (int c = 0; c < 3; ++c) {
    for (float v : raster.plane(static_cast<Channel>(c)).data()) detail::put_le<float>(out, v);
  }
}

Raster read_yccr(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kYccrMagic, 4) != 0) {
    fail(ErrorCode::FormatError, "bad YCCR magic");
  }
  const auto w = detail::get_le<std::uint32_t>(in);
  const auto h = detail::get_le<std::uint32_t>(in);
  (void)detail::get_le<std::uint32_t>(in);
  if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) fail(ErrorCode::FormatError, "bad YCCR geometry");
  std::array<Plane, 3> planes;
  for (auto& p : planes) {
    std::vector<float> data(static_cast<std::size_t>(w) * h);
    for (auto& v : data) v = detail::get_le<float>(in);
    p = Plane(static_cast<int>(w), static_cast<int>(h), std::move(data));
  }
  return Raster(std::move(planes[0]), std::move(planes[1]), std::move(planes[2]));
}

Raster read_raster(const std::filesystem::path& path) {
  if (path.extension() == ".ppm") return read_ppm(path);
  return read_yccr(path);
}

}  // namespace rd::imaging
