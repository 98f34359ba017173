#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace gdqn {

// Binary W x H image, row-major, x rightward and y downward.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> cells;

  Raster() = default;
  Raster(int w, int h) : width(w), height(h), cells(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(int x, int y) const { return cells[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return cells[index(x, y)]; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  std::size_t size() const { return cells.size(); }

  // Number of foreground cells.
  std::size_t count() const;

  bool same_shape(const Raster& other) const {
    return width == other.width && height == other.height;
  }

  bool operator==(const Raster&) const = default;
};

// Row strings of '.' (background) and '#' (foreground).
std::vector<std::string> raster_to_rows(const Raster& r);
Raster raster_from_rows(const std::vector<std::string>& rows);

}  // namespace gdqn
