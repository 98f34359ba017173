#include "gdqn/raster.hpp"

#include <algorithm>

#include "gdqn/error.hpp"

namespace gdqn {

std::size_t Raster::count() const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [](std::uint8_t c) { return c != 0; }));
}

std::vector<std::string> raster_to_rows(const Raster& r) {
  std::vector<std::string> rows;
  rows.reserve(r.height);
  for (int y = 0; y < r.height; ++y) {
    std::string row(r.width, '.');
    for (int x = 0; x < r.width; ++x) {
      if (r.at(x, y)) row[x] = '#';
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Raster raster_from_rows(const std::vector<std::string>& rows) {
  if (rows.empty()) throw ShapeError("raster has no rows");
  const int w = static_cast<int>(rows.front().size());
  Raster r(w, static_cast<int>(rows.size()));
  for (int y = 0; y < r.height; ++y) {
    if (static_cast<int>(rows[y].size()) != w) {
      throw ShapeError("raster row " + std::to_string(y) + " has inconsistent width");
    }
    for (int x = 0; x < w; ++x) {
      const char c = rows[y][x];
      if (c == '#') {
        r.at(x, y) = 1;
      } else if (c != '.') {
        throw ShapeError(std::string("unexpected raster character '") + c + "'");
      }
    }
  }
  return r;
}

}  // namespace gdqn
