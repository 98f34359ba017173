#include "gdqn/shaping.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "gdqn/error.hpp"

namespace gdqn {
namespace {

constexpr double kUnreached = std::numeric_limits<double>::infinity();

void require_same_shape(const Raster& a, const Raster& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("raster dimensions differ: " + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                     std::to_string(b.height));
  }
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

// Squared Euclidean distance transform along one line. Only finite samples
// contribute parabolas; a line with none stays unreached.
void squared_edt_1d(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kUnreached) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kUnreached;
      z[1] = kUnreached;
      continue;
    }
    auto intersect = [&](int p) {
      return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
    };
    // z[0] is -inf, so this stops at k == 0 at the latest.
    double s = intersect(v[k]);
    while (s <= z[k]) s = intersect(v[--k]);
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kUnreached;
  }
  d.assign(n, kUnreached);
  if (k < 0) return;
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

double overlap_ratio(const Raster& s, const Raster& g) {
  require_same_shape(s, g);
  std::size_t target = 0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    if (!g.cells[i]) continue;
    ++target;
    if (s.cells[i]) ++hit;
  }
  if (target == 0) throw DomainError("overlap ratio undefined for an empty target");
  return static_cast<double>(hit) / static_cast<double>(target);
}

int overlap_reward(const Raster& s_prev, const Raster& s_next, const Raster& g) {
  return sign(overlap_ratio(s_next, g) - overlap_ratio(s_prev, g));
}

DistanceMap distance_transform(const Raster& g, DistanceMetric metric) {
  if (g.count() == 0) throw DomainError("distance transform of an empty target");
  DistanceMap map{g.width, g.height, metric, std::vector<double>(g.size(), kUnreached)};

  if (metric == DistanceMetric::manhattan) {
    std::deque<std::pair<int, int>> queue;
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        if (g.at(x, y)) {
          map.values[g.index(x, y)] = 0.0;
          queue.emplace_back(x, y);
        }
      }
    }
    constexpr int dx[] = {1, -1, 0, 0};
    constexpr int dy[] = {0, 0, 1, -1};
    while (!queue.empty()) {
      const auto [x, y] = queue.front();
      queue.pop_front();
      const double next = map.values[g.index(x, y)] + 1.0;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + dx[k];
        const int ny = y + dy[k];
        if (!g.in_bounds(nx, ny)) continue;
        double& v = map.values[g.index(nx, ny)];
        if (v == kUnreached) {
          v = next;
          queue.emplace_back(nx, ny);
        }
      }
    }
    return map;
  }

  // Columns first, then rows, on squared distances.
  std::vector<double> line;
  std::vector<double> out;
  std::vector<double> squared(g.size(), kUnreached);
  for (int x = 0; x < g.width; ++x) {
    line.assign(g.height, kUnreached);
    for (int y = 0; y < g.height; ++y) line[y] = g.at(x, y) ? 0.0 : kUnreached;
    squared_edt_1d(line, out);
    for (int y = 0; y < g.height; ++y) squared[g.index(x, y)] = out[y];
  }
  for (int y = 0; y < g.height; ++y) {
    line.assign(squared.begin() + g.index(0, y), squared.begin() + g.index(0, y) + g.width);
    squared_edt_1d(line, out);
    for (int x = 0; x < g.width; ++x) map.values[g.index(x, y)] = std::sqrt(out[x]);
  }
  return map;
}

double distance_sum(const Raster& s, const DistanceMap& d) {
  if (s.width != d.width || s.height != d.height) {
    throw ShapeError("raster and distance map dimensions differ");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    if (s.cells[i]) total += d.values[i];
  }
  return total;
}

int distance_reward(const Raster& s_prev, const Raster& s_next, const DistanceMap& d) {
  return -sign(distance_sum(s_next, d) - distance_sum(s_prev, d));
}

std::string_view to_string(Shaping s) {
  switch (s) {
    case Shaping::none: return "none";
    case Shaping::overlap: return "or";
    case Shaping::distance: return "dt";
  }
  return "none";
}

Shaping shaping_from_string(std::string_view name) {
  if (name == "none") return Shaping::none;
  if (name == "or") return Shaping::overlap;
  if (name == "dt") return Shaping::distance;
  throw InvalidConfig("unknown shaping '" + std::string(name) + "' (expected none, or, dt)");
}

}  // namespace gdqn
