#pragma once

#include <string_view>
#include <vector>

#include "gdqn/raster.hpp"

namespace gdqn {

enum class DistanceMetric { manhattan, euclidean };

// Per-cell distance to the nearest foreground cell of a target raster.
struct DistanceMap {
  int width = 0;
  int height = 0;
  DistanceMetric metric = DistanceMetric::manhattan;
  std::vector<double> values;  // row-major

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// |s ∩ g| / |g|. Throws DomainError when g has no foreground, ShapeError on
// dimension mismatch.
double overlap_ratio(const Raster& s, const Raster& g);

// Sign of the change in overlap ratio: +1 more overlap, -1 less, 0 equal.
int overlap_reward(const Raster& s_prev, const Raster& s_next, const Raster& g);

// Manhattan via multi-source BFS; Euclidean via the exact two-pass lower
// envelope transform. Throws DomainError when g has no foreground.
DistanceMap distance_transform(const Raster& g, DistanceMetric metric = DistanceMetric::manhattan);

// Sum of D over the foreground cells of s.
double distance_sum(const Raster& s, const DistanceMap& d);

// +1 if the summed distance decreased, -1 if it increased, 0 otherwise.
int distance_reward(const Raster& s_prev, const Raster& s_next, const DistanceMap& d);

enum class Shaping { none, overlap, distance };

std::string_view to_string(Shaping s);
Shaping shaping_from_string(std::string_view name);

}  // namespace gdqn
