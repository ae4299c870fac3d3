#pragma once

#include "volvar/types.hpp"

#include <array>
#include <cstdint>
#include <optional>

namespace volvar {

using CellIndex = std::int64_t;

/// Uniform axis-aligned cubic mesh anchored at the lower box corner.
class Mesh {
 public:
  Mesh() = default;
  /// Covers [lower, upper] with cubes of side `edge`; the upper side is
  /// extended to a whole number of cells.
  Mesh(Vec lower, Vec upper, double edge);

  /// Cube [-half_width, half_width]^n.
  static Mesh centered_box(int n, double half_width, double edge);

  int ambient() const { return static_cast<int>(lower_.size()); }
  double edge() const { return edge_; }
  /// Cell diameter h = edge * sqrt(n).
  double diameter() const;
  double cell_volume() const;
  const Vec& lower() const { return lower_; }
  Vec upper() const;
  const std::array<std::int64_t, kMaxAmbient>& counts() const { return counts_; }
  std::int64_t cell_count() const;

  bool contains(const Vec& x) const;
  /// Linear index of the cell holding x, or nullopt outside the box.
  std::optional<CellIndex> cell_of(const Vec& x) const;
  std::array<std::int64_t, kMaxAmbient> cell_coords(CellIndex index) const;
  Vec cell_lower(CellIndex index) const;
  Vec cell_center(CellIndex index) const;

 private:
  Vec lower_;
  double edge_ = 0.0;
  std::array<std::int64_t, kMaxAmbient> counts_{1, 1, 1};
};

}  // namespace volvar
