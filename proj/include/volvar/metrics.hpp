#pragma once

#include "volvar/varifold.hpp"

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace volvar {

struct MeasureAtom {
  Vec x;
  double mass = 0.0;
};

/// Finite sum of weighted Dirac masses with positive weights.
class AtomicMeasure {
 public:
  AtomicMeasure() = default;
  /// Drops zero masses; throws on negative masses or mixed dimensions.
  explicit AtomicMeasure(std::vector<MeasureAtom> atoms);

  const std::vector<MeasureAtom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  double total_mass() const;

 private:
  std::vector<MeasureAtom> atoms_;
};

/// Sample/atom positions with their masses; volumetric cells become their
/// centers carrying m_K.
AtomicMeasure atomize(const Varifold& v);
AtomicMeasure atomize(const WeightedSample& sample);

struct DistanceOptions {
  /// Largest merged support accepted.
  std::size_t max_support = 2000;
  /// Stop when the cutting-plane model and the true value agree to this
  /// fraction of the total mass.
  double tolerance = 1e-14;
  int max_iterations = 200;
};

struct DistanceResult {
  double value = 0.0;
  /// Optimal split of the constraint budget: ||phi||_inf <= a, lip(phi) <= L.
  double a = 0.0;
  double lip = 0.0;
  /// Cutting-plane iterations (one transport solve each).
  int iterations = 0;
};

/// Delta(mu, nu) = sup { int phi d(mu - nu) : ||phi||_inf + lip(phi) <= 1 }.
///
/// For a fixed split (a, L = 1 - a) the supremum equals, by duality, a
/// min-cost transport in which moving mass costs L|x - y| and leaving mass
/// unmatched costs a per unit. That value is concave and piecewise linear in
/// a, and is maximized exactly by cutting planes.
DistanceResult bounded_lipschitz_distance(const AtomicMeasure& mu, const AtomicMeasure& nu,
                                          const DistanceOptions& options = {});

struct AhlforsResult {
  /// max over probes/radii of max(M(B)/r^d, r^d/M(B)); +inf for the sentinel.
  double c0 = 0.0;
  bool finite = true;
  /// Probe index and radius attaining the maximum (or the first empty ball).
  std::size_t witness_probe = 0;
  double witness_radius = 0.0;
  /// Ball mass at the witness pair.
  double witness_mass = 0.0;
  std::string note;
};

/// Ahlfors regularity constant over the given radii and probe points. Point
/// clouds with d >= 1 yield the sentinel: atomic measures are not d-regular
/// as r -> 0. Volumetric cells contribute the fraction of their quadrature
/// subpoints inside the ball.
AhlforsResult ahlfors_estimate(const Varifold& v, std::span<const double> radii,
                               std::span<const Vec> probes,
                               int subdivisions = 4);

/// Columns: label, delta, iterations.
struct DistanceRow {
  std::string label;
  DistanceResult result;
};
void write_distance_csv(std::ostream& out, std::span<const DistanceRow> rows);

}  // namespace volvar
