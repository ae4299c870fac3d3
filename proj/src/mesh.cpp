#include "volvar/mesh.hpp"

#include <cmath>

namespace volvar {

Mesh::Mesh(Vec lower, Vec upper, double edge) : lower_(std::move(lower)), edge_(edge) {
  const auto n = lower_.size();
  if (n < 1 || n > kMaxAmbient || upper.size() != n) {
    throw DimensionMismatch("Mesh: box corners must share an ambient dimension <= 3");
  }
  if (!(edge > 0.0)) throw InvalidArgument("Mesh: edge must be positive");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(upper(i) > lower_(i))) throw InvalidArgument("Mesh: empty box");
    counts_[i] = static_cast<std::int64_t>(std::ceil((upper(i) - lower_(i)) / edge - 1e-9));
    if (counts_[i] < 1) counts_[i] = 1;
  }
  double total = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) total *= static_cast<double>(counts_[i]);
  if (total > 9.0e18) throw InvalidArgument("Mesh: too many cells for 64-bit indexing");
}

Mesh Mesh::centered_box(int n, double half_width, double edge) {
  return Mesh(Vec::Constant(n, -half_width), Vec::Constant(n, half_width), edge);
}

double Mesh::diameter() const { return edge_ * std::sqrt(static_cast<double>(ambient())); }

double Mesh::cell_volume() const { return std::pow(edge_, ambient()); }

Vec Mesh::upper() const {
  Vec u = lower_;
  for (int i = 0; i < ambient(); ++i) u(i) += edge_ * static_cast<double>(counts_[i]);
  return u;
}

std::int64_t Mesh::cell_count() const {
  std::int64_t total = 1;
  for (int i = 0; i < ambient(); ++i) total *= counts_[i];
  return total;
}

bool Mesh::contains(const Vec& x) const { return cell_of(x).has_value(); }

std::optional<CellIndex> Mesh::cell_of(const Vec& x) const {
  if (x.size() != ambient()) throw DimensionMismatch("Mesh::cell_of: wrong point dimension");
  CellIndex index = 0;
  CellIndex stride = 1;
  for (int i = 0; i < ambient(); ++i) {
    const double t = (x(i) - lower_(i)) / edge_;
    if (!(t >= 0.0)) return std::nullopt;
    auto c = static_cast<std::int64_t>(std::floor(t));
    if (c >= counts_[i]) {
      // The closed upper face belongs to the last cell.
      if (t <= static_cast<double>(counts_[i])) {
        c = counts_[i] - 1;
      } else {
        return std::nullopt;
      }
    }
    index += c * stride;
    stride *= counts_[i];
  }
  return index;
}

std::array<std::int64_t, kMaxAmbient> Mesh::cell_coords(CellIndex index) const {
  std::array<std::int64_t, kMaxAmbient> coords{0, 0, 0};
  for (int i = 0; i < ambient(); ++i) {
    coords[i] = index % counts_[i];
    index /= counts_[i];
  }
  return coords;
}

Vec Mesh::cell_lower(CellIndex index) const {
  const auto coords = cell_coords(index);
  Vec out(ambient());
  for (int i = 0; i < ambient(); ++i) out(i) = lower_(i) + edge_ * static_cast<double>(coords[i]);
  return out;
}

Vec Mesh::cell_center(CellIndex index) const {
  return cell_lower(index) + Vec::Constant(ambient(), 0.5 * edge_);
}

}  // namespace volvar
