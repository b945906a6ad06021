#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace rd::imaging {

// Single intensity plane, row-major, values in [0, 1].
class Plane {
public:
  Plane() = default;
  Plane(int width, int height, float fill = 0.0f);
  Plane(int width, int height, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }

  float at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  float& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  bool operator==(const Plane&) const = default;

private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

enum class Channel { Y = 0, Cr = 1, Cb = 2 };

// Three-plane YCrCb image. Construction validates plane sizes and range.
class Raster {
public:
  Raster() = default;
  Raster(Plane y, Plane cr, Plane cb);

  static Raster filled(int width, int height, float y, float cr = 0.5f, float cb = 0.5f);

  int width() const { return planes_[0].width(); }
  int height() const { return planes_[0].height(); }

  const Plane& plane(Channel c) const { return planes_[static_cast<int>(c)]; }
  const Plane& luma() const { return planes_[0]; }

  bool operator==(const Raster&) const = default;

private:
  std::array<Plane, 3> planes_;
};

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  bool operator==(const Rect&) const = default;
};

// Overlapping window grid with 50% overlap that tiles the raster exactly.
struct WindowGrid {
  int image_width = 0;
  int image_height = 0;
  int nx = 0;
  int ny = 0;
  int win_w = 0;
  int win_h = 0;
  int stride_x = 0;
  int stride_y = 0;

  int count() const { return nx * ny; }
  // Row-major window order: index = iy * nx + ix.
  Rect window(int index) const;

  bool operator==(const WindowGrid&) const = default;
};

WindowGrid make_grid(int width, int height, int nx, int ny);

struct YCrCb {
  double y;
  double cr;
  double cb;
};

// BT.601 full range; inputs and outputs clamped to [0, 1].
YCrCb rgb_to_ycrcb(double r, double g, double b);

Plane crop(const Plane& plane, const Rect& window);
Raster crop(const Raster& raster, const Rect& window);

// 64-bit FNV-1a over the raw float bytes of all planes.
std::uint64_t raster_hash(const Raster& raster);

// Binary PPM (P6, maxval 255) in RGB; converted to/from YCrCb on the fly.
Raster read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Raster& raster);
std::vector<std::uint8_t> encode_ppm(const Raster& raster);

// "YCCR" float file: 16-byte header then Y, Cr, Cb planes as LE float32.
Raster read_yccr(const std::filesystem::path& path);
void write_yccr(const std::filesystem::path& path, const Raster& raster);

// Dispatches on extension: .ppm -> PPM, anything else -> YCCR.
Raster read_raster(const std::filesystem::path& path);

}  // namespace rd::imaging
