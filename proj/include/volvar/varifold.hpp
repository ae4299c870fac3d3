#pragma once

#include "volvar/geometry.hpp"
#include "volvar/mesh.hpp"

#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

namespace volvar {

/// Point mass m at x carrying the plane P.
struct Atom {
  Vec x;
  Plane plane;
  double mass = 0.0;
};

class PointCloudVarifold {
 public:
  PointCloudVarifold(int dim, int ambient) : dim_(dim), ambient_(ambient) {}
  /// Drops zero-mass atoms; rejects negative masses and mixed plane dimensions.
  PointCloudVarifold(int dim, int ambient, std::vector<Atom> atoms);

  int dim() const { return dim_; }
  int ambient() const { return ambient_; }
  const std::vector<Atom>& atoms() const { return atoms_; }

 private:
  int dim_;
  int ambient_;
  std::vector<Atom> atoms_;
};

/// Smooth varifold of a closed shape realized through its quadrature sample.
class SampledManifoldVarifold {
 public:
  explicit SampledManifoldVarifold(WeightedSample sample);

  int dim() const { return sample_.dim; }
  int ambient() const { return sample_.ambient; }
  const WeightedSample& sample() const { return sample_; }

 private:
  WeightedSample sample_;
};

struct VolumetricCell {
  CellIndex index = 0;
  double mass = 0.0;
  Plane plane;
};

/// sum_K (m_K / |K|) L^n|_K (x) delta_{P_K}
class VolumetricVarifold {
 public:
  /// Cells must have positive mass, distinct indices inside the mesh, and
  /// planes of dimension `dim`. They are stored sorted by index.
  VolumetricVarifold(int dim, Mesh mesh, std::vector<VolumetricCell> cells);

  int dim() const { return dim_; }
  int ambient() const { return mesh_.ambient(); }
  const Mesh& mesh() const { return mesh_; }
  const std::vector<VolumetricCell>& cells() const { return cells_; }
  /// Cell diameter bound.
  double h() const { return mesh_.diameter(); }

 private:
  int dim_;
  Mesh mesh_;
  std::vector<VolumetricCell> cells_;
};

using Varifold = std::variant<PointCloudVarifold, SampledManifoldVarifold, VolumetricVarifold>;

int varifold_dim(const Varifold& v);
int varifold_ambient(const Varifold& v);

/// Default per-axis subdivision of the midpoint rule on volumetric cells.
inline constexpr int kDefaultCellSubdivisions = 2;

/// Calls fn(x, plane, mass) for every quadrature atom of V. Point clouds and
/// samples yield their atoms; each volumetric cell yields s^n sub-cell
/// midpoints carrying m_K / s^n.
template <class Fn>
void for_each_quadrature_atom(const Varifold& v, int subdivisions, Fn&& fn);

/// Materialized quadrature atoms, same order as for_each_quadrature_atom.
std::vector<Atom> quadrature_atoms(const Varifold& v, int subdivisions = kDefaultCellSubdivisions);

/// ||V||(R^n)
double mass_total(const Varifold& v);

/// ||V||(phi)
double mass_apply(const Varifold& v, const ScalarField& phi,
                  int subdivisions = kDefaultCellSubdivisions);

using VarifoldField = std::function<double(const Vec&, const Plane&)>;

/// V(phi)
double varifold_apply(const Varifold& v, const VarifoldField& phi,
                      int subdivisions = kDefaultCellSubdivisions);

/// trace(P DX(x)), the divergence of X along the plane.
double tangential_divergence(const Plane& plane, const Mat& jacobian);

/// delta V(X) = int div_S X dV(x, S)
double first_variation(const Varifold& v, const VectorField& field,
                       int subdivisions = kDefaultCellSubdivisions);

/// Point cloud CSV: x1..xn, mass, then d tangent basis vectors of n entries.
void write_point_cloud_csv(std::ostream& out, const PointCloudVarifold& v);
PointCloudVarifold read_point_cloud_csv(std::istream& in);

/// Volumetric CSV: cell index, cell center, m_K, projector entries row-major.
void write_volumetric_csv(std::ostream& out, const VolumetricVarifold& v);

// ---------------------------------------------------------------------------

template <class Fn>
void for_each_quadrature_atom(const Varifold& v, int subdivisions, Fn&& fn) {
  if (const auto* pc = std::get_if<PointCloudVarifold>(&v)) {
    for (const auto& a : pc->atoms()) fn(a.x, a.plane, a.mass);
  } else if (const auto* sm = std::get_if<SampledManifoldVarifold>(&v)) {
    for (const auto& p : sm->sample().points) fn(p.x, p.tangent, p.weight);
  } else {
    const auto& vol = std::get<VolumetricVarifold>(v);
    if (subdivisions < 1) throw InvalidArgument("cell subdivisions must be >= 1");
    const int n = vol.ambient();
    const double sub = vol.mesh().edge() / subdivisions;
    int per_cell = 1;
    for (int i = 0; i < n; ++i) per_cell *= subdivisions;
    Vec x(n);
    for (const auto& cell : vol.cells()) {
      const Vec lower = vol.mesh().cell_lower(cell.index);
      const double m = cell.mass / per_cell;
      for (int k = 0; k < per_cell; ++k) {
        int rem = k;
        for (int i = 0; i < n; ++i) {
          x(i) = lower(i) + (static_cast<double>(rem % subdivisions) + 0.5) * sub;
          rem /= subdivisions;
        }
        fn(x, cell.plane, m);
      }
    }
  }
}

}  // namespace volvar
