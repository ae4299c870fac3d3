#pragma once

#include "volvar/kernels.hpp"
#include "volvar/spatial_hash.hpp"
#include "volvar/varifold.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace volvar {

/// Thrown when ||V|| * xi_eps(y) <= tau * eps^(d - n): y is too far from the
/// support for the quotient to be meaningful.
class DenominatorTooSmall : public Error {
 public:
  using Error::Error;
};

struct CurvatureQuery {
  /// Requires 0 < epsilon <= 1 and tau > 0.
  CurvatureQuery(double epsilon, KernelPair kernel, double tau = 1e-14);

  double epsilon;
  KernelPair kernel;
  double tau;
};

enum class CurvatureStatus { ok, denominator_too_small };

const char* to_string(CurvatureStatus status);

struct CurvatureSample {
  Vec mean_curvature;    ///< zero when status != ok
  Vec first_variation;   ///< delta V * rho_eps (y)
  double denominator = 0.0;  ///< ||V|| * xi_eps (y)
  CurvatureStatus status = CurvatureStatus::ok;
};

/// Per-cell refinement of the volumetric midpoint rule for a given eps.
int curvature_subdivisions(const Varifold& v, double epsilon);

/// Quadrature atoms of V stored as flat arrays with a spatial hash of bucket
/// size eps. Reusable across many evaluation points.
class CurvatureEvaluator {
 public:
  CurvatureEvaluator(const Varifold& v, CurvatureQuery query);

  const CurvatureQuery& query() const { return query_; }
  std::size_t atom_count() const { return mass_.size(); }
  int subdivisions() const { return subdivisions_; }

  Vec first_variation(const Vec& y) const;
  double mass(const Vec& y) const;
  /// Never throws for a far point; reports the status instead.
  CurvatureSample evaluate(const Vec& y) const;
  /// Throws DenominatorTooSmall.
  Vec mean_curvature(const Vec& y) const;

 private:
  struct Sums {
    double fv[kMaxAmbient] = {0.0, 0.0, 0.0};
    double den = 0.0;
  };
  Sums accumulate(const Vec& y, bool want_fv) const;
  void check_point(const Vec& y) const;

  CurvatureQuery query_;
  int n_;
  int d_;
  int subdivisions_;
  std::vector<double> pos_;
  std::vector<double> proj_;
  std::vector<double> mass_;
  // Coefficients of xi and rho', padded to a common length, highest first.
  std::vector<double> xi_coeffs_;
  std::vector<double> drho_coeffs_;
  std::optional<SpatialHash> hash_;
};

/// delta V * rho_eps (y) = int S grad rho_eps(z - y) dV(z, S)
Vec regularized_first_variation(const Varifold& v, const CurvatureQuery& q, const Vec& y);

/// ||V|| * xi_eps (y)
double regularized_mass(const Varifold& v, const CurvatureQuery& q, const Vec& y);

/// H_eps(y) = -(C_xi / C_rho) (delta V * rho_eps)(y) / (||V|| * xi_eps)(y).
/// Throws DenominatorTooSmall below the guard.
Vec approx_mean_curvature(const Varifold& v, const CurvatureQuery& q, const Vec& y);

/// Batch evaluation in input order; points may be processed concurrently.
std::vector<CurvatureSample> curvature_field(const Varifold& v, const CurvatureQuery& q,
                                             std::span<const Vec> points);
std::vector<CurvatureSample> curvature_field(const CurvatureEvaluator& eval,
                                             std::span<const Vec> points);

/// Columns: y1..yn, H1..Hn, denominator, status.
void write_curvature_csv(std::ostream& out, std::span<const Vec> points,
                         std::span<const CurvatureSample> samples);

}  // namespace volvar
