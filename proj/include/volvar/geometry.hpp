#pragma once

#include "volvar/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace volvar {

/// A point of the Grassmannian G(d, n), stored as its orthogonal projector.
class Plane {
 public:
  Plane() = default;

  /// Plane spanned by the columns of `basis` (n x d, full column rank).
  static Plane from_basis(const Mat& basis);
  /// Validates symmetry, idempotence and trace before accepting `projector`.
  static Plane from_projector(const Mat& projector, int dim);

  const Mat& projector() const { return projector_; }
  int dim() const { return dim_; }
  int ambient() const { return static_cast<int>(projector_.rows()); }

  /// S(v): orthogonal projection of v onto the plane.
  Vec project(const Vec& v) const { return projector_ * v; }

 private:
  Plane(Mat projector, int dim) : projector_(std::move(projector)), dim_(dim) {}

  Mat projector_;
  int dim_ = 0;
};

/// Frobenius norm of P - Q.
double projector_distance(const Plane& p, const Plane& q);

struct Circle {
  Vec center;
  double radius = 1.0;
};

/// Axis-aligned ellipse with semi-axes a (x) and b (y).
struct Ellipse {
  Vec center;
  double a = 1.0;
  double b = 1.0;
};

struct Sphere {
  Vec center;
  double radius = 1.0;
};

/// Round torus about the z axis: major radius R, tube radius r < R.
struct Torus {
  Vec center;
  double major = 2.0;
  double minor = 1.0;
};

/// Closed analytic submanifold with exact tangent, curvature and measure oracles.
///
/// Parameters live in a box; for the circle, ellipse and torus every parameter
/// is 2*pi periodic. The sphere uses (z, azimuth) with z in [-r, r].
class AnalyticShape {
 public:
  using Variant = std::variant<Circle, Ellipse, Sphere, Torus>;

  explicit AnalyticShape(Variant shape);

  static AnalyticShape circle(double radius, Vec center = Vec::Zero(2));
  static AnalyticShape ellipse(double a, double b, Vec center = Vec::Zero(2));
  static AnalyticShape sphere(double radius, Vec center = Vec::Zero(3));
  static AnalyticShape torus(double major, double minor, Vec center = Vec::Zero(3));

  /// Builds a shape from a configuration record, e.g. name "circle" with
  /// {"radius": 1, "cx": 0, "cy": 0}.
  static AnalyticShape from_config(const std::string& name,
                                   const std::map<std::string, double>& params);

  const Variant& variant() const { return shape_; }
  std::string name() const;
  int dim() const;
  int ambient() const;

  Vec position(const Vec& params) const;
  /// Columns are the parameter derivatives of the position (n x d).
  Mat jacobian(const Vec& params) const;
  Plane tangent(const Vec& params) const;
  Vec mean_curvature(const Vec& params) const;

  /// Closest-point parameters and the distance to the shape.
  std::pair<Vec, double> locate(const Vec& y) const;

  /// Largest principal curvature over the whole shape.
  double max_principal_curvature() const;
  double total_measure() const;

  Vec center() const;
  /// Radius of a ball about center() containing the shape.
  double bounding_radius() const;

 private:
  Variant shape_;
};

struct SamplePoint {
  Vec x;
  Plane tangent;
  double weight = 0.0;
};

/// Quadrature representation of the d-dimensional Hausdorff measure on a shape.
struct WeightedSample {
  int dim = 0;
  int ambient = 0;
  std::vector<SamplePoint> points;

  double total_weight() const;
};

/// On-shape tolerance for exact_mean_curvature.
inline constexpr double kOnShapeTolerance = 1e-8;

/// Mean curvature vector at a point y on the shape; throws NotOnShape.
Vec exact_mean_curvature(const AnalyticShape& shape, const Vec& y);

/// Exact tangent plane at a point y on the shape; throws NotOnShape.
Plane exact_tangent(const AnalyticShape& shape, const Vec& y);

/// Product quadrature of the shape measure.
///
/// Periodic directions use the trapezoid rule with `resolution` nodes along
/// the longest direction. The sphere uses Gauss-Legendre in z (resolution/2
/// nodes) times the trapezoid rule in azimuth.
WeightedSample sample_surface(const AnalyticShape& shape, int resolution);

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int count);

}  // namespace volvar
