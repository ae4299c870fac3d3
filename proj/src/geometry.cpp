#include "volvar/geometry.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace volvar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void require_center(const Vec& c, int n, const char* what) {
  if (c.size() != n) {
    throw DimensionMismatch(std::string(what) + ": center must have " + std::to_string(n) +
                            " coordinates");
  }
}

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

// Closest point on the ellipse by a coarse scan followed by Newton on
// g(t) = (p(t) - y) . p'(t).
double ellipse_closest_parameter(const Ellipse& e, const Vec& rel) {
  auto dist2 = [&](double t) {
    const double dx = e.a * std::cos(t) - rel(0);
    const double dy = e.b * std::sin(t) - rel(1);
    return dx * dx + dy * dy;
  };
  double best_t = std::atan2(rel(1) / e.b, rel(0) / e.a);
  double best = dist2(best_t);
  constexpr int kScan = 256;
  for (int i = 0; i < kScan; ++i) {
    const double t = kTwoPi * i / kScan;
    const double v = dist2(t);
    if (v < best) {
      best = v;
      best_t = t;
    }
  }
  double t = best_t;
  for (int iter = 0; iter < 50; ++iter) {
    const double c = std::cos(t);
    const double s = std::sin(t);
    const double px = e.a * c - rel(0);
    const double py = e.b * s - rel(1);
    const double g = px * (-e.a * s) + py * (e.b * c);
    const double dg = (e.a * s) * (e.a * s) + (e.b * c) * (e.b * c) + px * (-e.a * c) +
                      py * (-e.b * s);
    if (dg <= 0.0) break;
    const double step = g / dg;
    t -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return dist2(t) <= best ? t : best_t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Plane

Plane Plane::from_basis(const Mat& basis) {
  const auto n = basis.rows();
  const auto d = basis.cols();
  if (n < 1 || n > kMaxAmbient || d < 1 || d > n) {
    throw DimensionMismatch("Plane::from_basis: basis must be n x d with 1 <= d <= n <= 3");
  }
  Eigen::HouseholderQR<Mat> qr(basis);
  const Mat r = qr.matrixQR().topRows(d).template triangularView<Eigen::Upper>();
  const double scale = std::max(basis.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (std::abs(r(i, i)) <= 1e-12 * scale) {
      throw InvalidArgument("Plane::from_basis: basis vectors are linearly dependent");
    }
  }
  const Mat q = qr.householderQ() * Mat::Identity(n, d);
  Mat p = q * q.transpose();
  p = 0.5 * (p + p.transpose()).eval();
  return Plane(std::move(p), static_cast<int>(d));
}

Plane Plane::from_projector(const Mat& projector, int dim) {
  const auto n = projector.rows();
  if (n != projector.cols() || n < 1 || n > kMaxAmbient) {
    throw DimensionMismatch("Plane::from_projector: projector must be square with n <= 3");
  }
  if (dim < 0 || dim > n) {
    throw DimensionMismatch("Plane::from_projector: dimension out of range");
  }
  if ((projector - projector.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InvalidArgument("Plane::from_projector: projector is not symmetric");
  }
  if ((projector * projector - projector).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidArgument("Plane::from_projector: projector is not idempotent");
  }
  if (std::abs(projector.trace() - dim) > 1e-10) {
    throw InvalidArgument("Plane::from_projector: trace does not match dimension");
  }
  return Plane(projector, dim);
}

double projector_distance(const Plane& p, const Plane& q) {
  if (p.dim() != q.dim() || p.ambient() != q.ambient()) {
    throw DimensionMismatch("projector_distance: planes differ in dimension or ambient space");
  }
  return (p.projector() - q.projector()).norm();
}

// ---------------------------------------------------------------------------
// AnalyticShape

AnalyticShape::AnalyticShape(Variant shape) : shape_(std::move(shape)) {
  std::visit(Overloaded{
                 [](const Circle& s) {
                   require_center(s.center, 2, "circle");
                   if (!(s.radius > 0)) throw InvalidArgument("circle: radius must be positive");
                 },
                 [](const Ellipse& s) {
                   require_center(s.center, 2, "ellipse");
                   if (!(s.a > 0 && s.b > 0)) {
                     throw InvalidArgument("ellipse: semi-axes must be positive");
                   }
                 },
                 [](const Sphere& s) {
                   require_center(s.center, 3, "sphere");
                   if (!(s.radius > 0)) throw InvalidArgument("sphere: radius must be positive");
                 },
                 [](const Torus& s) {
                   require_center(s.center, 3, "torus");
                   if (!(s.minor > 0 && s.major > s.minor)) {
                     throw InvalidArgument("torus: need 0 < minor < major");
                   }
                 },
             },
             shape_);
}

AnalyticShape AnalyticShape::circle(double radius, Vec center) {
  return AnalyticShape(Circle{std::move(center), radius});
}
AnalyticShape AnalyticShape::ellipse(double a, double b, Vec center) {
  return AnalyticShape(Ellipse{std::move(center), a, b});
}
AnalyticShape AnalyticShape::sphere(double radius, Vec center) {
  return AnalyticShape(Sphere{std::move(center), radius});
}
AnalyticShape AnalyticShape::torus(double major, double minor, Vec center) {
  return AnalyticShape(Torus{std::move(center), major, minor});
}

AnalyticShape AnalyticShape::from_config(const std::string& name,
                                         const std::map<std::string, double>& params) {
  static const std::map<std::string, std::vector<std::string>> known = {
      {"circle", {"radius", "cx", "cy"}},
      {"ellipse", {"a", "b", "cx", "cy"}},
      {"sphere", {"radius", "cx", "cy", "cz"}},
      {"torus", {"major", "minor", "cx", "cy", "cz"}},
  };
  const auto it = known.find(name);
  if (it == known.end()) throw InvalidArgument("unknown shape '" + name + "'");
  for (const auto& [key, _] : params) {
    if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
      throw InvalidArgument("shape '" + name + "' has no parameter '" + key + "'");
    }
  }
  const double cx = param_or(params, "cx", 0.0);
  const double cy = param_or(params, "cy", 0.0);
  const double cz = param_or(params, "cz", 0.0);
  if (name == "circle") {
    return circle(param_or(params, "radius", 1.0), make_vec({cx, cy}));
  }
  if (name == "ellipse") {
    return ellipse(param_or(params, "a", 1.0), param_or(params, "b", 1.0), make_vec({cx, cy}));
  }
  if (name == "sphere") {
    return sphere(param_or(params, "radius", 1.0), make_vec({cx, cy, cz}));
  }
  if (name == "torus") {
    return torus(param_or(params, "major", 2.0), param_or(params, "minor", 1.0),
                 make_vec({cx, cy, cz}));
  }
  throw InvalidArgument("unknown shape '" + name + "'");
}

std::string AnalyticShape::name() const {
  return std::visit(Overloaded{
                        [](const Circle&) { return std::string("circle"); },
                        [](const Ellipse&) { return std::string("ellipse"); },
                        [](const Sphere&) { return std::string("sphere"); },
                        [](const Torus&) { return std::string("torus"); },
                    },
                    shape_);
}

int AnalyticShape::dim() const {
  return std::holds_alternative<Circle>(shape_) || std::holds_alternative<Ellipse>(shape_) ? 1
                                                                                            : 2;
}

int AnalyticShape::ambient() const { return dim() + 1; }

Vec AnalyticShape::position(const Vec& p) const {
  return std::visit(
      Overloaded{
          [&](const Circle& s) -> Vec {
            return s.center + s.radius * make_vec({std::cos(p(0)), std::sin(p(0))});
          },
          [&](const Ellipse& s) -> Vec {
            return s.center + make_vec({s.a * std::cos(p(0)), s.b * std::sin(p(0))});
          },
          [&](const Sphere& s) -> Vec {
            const double z = p(0);
            const double rho = std::sqrt(std::max(0.0, s.radius * s.radius - z * z));
            return s.center + make_vec({rho * std::cos(p(1)), rho * std::sin(p(1)), z});
          },
          [&](const Torus& s) -> Vec {
            const double w = s.major + s.minor * std::cos(p(1));
            return s.center + make_vec({w * std::cos(p(0)), w * std::sin(p(0)),
                                        s.minor * std::sin(p(1))});
          },
      },
      shape_);
}

Mat AnalyticShape::jacobian(const Vec& p) const {
  return std::visit(
      Overloaded{
          [&](const Circle& s) -> Mat {
            Mat j(2, 1);
            j << -s.radius * std::sin(p(0)), s.radius * std::cos(p(0));
            return j;
          },
          [&](const Ellipse& s) -> Mat {
            Mat j(2, 1);
            j << -s.a * std::sin(p(0)), s.b * std::cos(p(0));
            return j;
          },
          [&](const Sphere& s) -> Mat {
            const double z = p(0);
            const double rho = std::sqrt(std::max(0.0, s.radius * s.radius - z * z));
            const double c = std::cos(p(1));
            const double sn = std::sin(p(1));
            Mat j(3, 2);
            j.col(0) << -z / rho * c, -z / rho * sn, 1.0;
            j.col(1) << -rho * sn, rho * c, 0.0;
            return j;
          },
          [&](const Torus& s) -> Mat {
            const double cu = std::cos(p(0));
            const double su = std::sin(p(0));
            const double cv = std::cos(p(1));
            const double sv = std::sin(p(1));
            const double w = s.major + s.minor * cv;
            Mat j(3, 2);
            j.col(0) << -w * su, w * cu, 0.0;
            j.col(1) << -s.minor * sv * cu, -s.minor * sv * su, s.minor * cv;
            return j;
          },
      },
      shape_);
}

Plane AnalyticShape::tangent(const Vec& p) const {
  if (const auto* s = std::get_if<Sphere>(&shape_)) {
    // The (z, azimuth) chart degenerates at the poles; use the normal instead.
    const Vec n = (position(p) - s->center) / s->radius;
    Mat proj = Mat::Identity(3, 3) - n * n.transpose();
    proj = 0.5 * (proj + proj.transpose()).eval();
    return Plane::from_projector(proj, 2);
  }
  return Plane::from_basis(jacobian(p));
}

Vec AnalyticShape::mean_curvature(const Vec& p) const {
  return std::visit(
      Overloaded{
          [&](const Circle& s) -> Vec {
            return -make_vec({std::cos(p(0)), std::sin(p(0))}) / s.radius;
          },
          [&](const Ellipse& s) -> Vec {
            const double c = std::cos(p(0));
            const double sn = std::sin(p(0));
            const double speed2 = s.a * s.a * sn * sn + s.b * s.b * c * c;
            const double kappa = s.a * s.b / std::pow(speed2, 1.5);
            const Vec inward = -make_vec({s.b * c, s.a * sn}) / std::sqrt(speed2);
            return kappa * inward;
          },
          [&](const Sphere& s) -> Vec {
            return -2.0 * (position(p) - s.center) / (s.radius * s.radius);
          },
          [&](const Torus& s) -> Vec {
            const double cu = std::cos(p(0));
            const double su = std::sin(p(0));
            const double cv = std::cos(p(1));
            const double sv = std::sin(p(1));
            const Vec outward = make_vec({cv * cu, cv * su, sv});
            const double k_tube = 1.0 / s.minor;
            const double k_ring = cv / (s.major + s.minor * cv);
            return -(k_tube + k_ring) * outward;
          },
      },
      shape_);
}

std::pair<Vec, double> AnalyticShape::locate(const Vec& y) const {
  if (y.size() != ambient()) {
    throw DimensionMismatch("locate: point has wrong ambient dimension");
  }
  return std::visit(
      Overloaded{
          [&](const Circle& s) -> std::pair<Vec, double> {
            const Vec rel = y - s.center;
            const double theta = std::atan2(rel(1), rel(0));
            return {make_vec({theta}), std::abs(rel.norm() - s.radius)};
          },
          [&](const Ellipse& s) -> std::pair<Vec, double> {
            const Vec rel = y - s.center;
            const double t = ellipse_closest_parameter(s, rel);
            Vec p = make_vec({t});
            return {p, (position(p) - y).norm()};
          },
          [&](const Sphere& s) -> std::pair<Vec, double> {
            const Vec rel = y - s.center;
            const double norm = rel.norm();
            const double z = norm > 0 ? rel(2) * s.radius / norm : s.radius;
            const double phi = std::atan2(rel(1), rel(0));
            return {make_vec({z, phi}), std::abs(norm - s.radius)};
          },
          [&](const Torus& s) -> std::pair<Vec, double> {
            const Vec rel = y - s.center;
            const double u = std::atan2(rel(1), rel(0));
            const double rho = std::hypot(rel(0), rel(1));
            const double v = std::atan2(rel(2), rho - s.major);
            const double dist = std::abs(std::hypot(rho - s.major, rel(2)) - s.minor);
            return {make_vec({u, v}), dist};
          },
      },
      shape_);
}

double AnalyticShape::max_principal_curvature() const {
  return std::visit(Overloaded{
                        [](const Circle& s) { return 1.0 / s.radius; },
                        [](const Ellipse& s) {
                          return std::max(s.a / (s.b * s.b), s.b / (s.a * s.a));
                        },
                        [](const Sphere& s) { return 1.0 / s.radius; },
                        [](const Torus& s) {
                          return std::max(1.0 / s.minor, 1.0 / (s.major - s.minor));
                        },
                    },
                    shape_);
}

double AnalyticShape::total_measure() const {
  return std::visit(Overloaded{
                        [](const Circle& s) { return kTwoPi * s.radius; },
                        [](const Ellipse& s) {
                          const double big = std::max(s.a, s.b);
                          const double small = std::min(s.a, s.b);
                          const double k = std::sqrt(1.0 - (small * small) / (big * big));
                          return 4.0 * big * std::comp_ellint_2(k);
                        },
                        [](const Sphere& s) {
                          return 4.0 * std::numbers::pi * s.radius * s.radius;
                        },
                        [](const Torus& s) {
                          return 4.0 * std::numbers::pi * std::numbers::pi * s.major * s.minor;
                        },
                    },
                    shape_);
}

Vec AnalyticShape::center() const {
  return std::visit([](const auto& s) -> Vec { return s.center; }, shape_);
}

double AnalyticShape::bounding_radius() const {
  return std::visit(Overloaded{
                        [](const Circle& s) { return s.radius; },
                        [](const Ellipse& s) { return std::max(s.a, s.b); },
                        [](const Sphere& s) { return s.radius; },
                        [](const Torus& s) { return s.major + s.minor; },
                    },
                    shape_);
}

// ---------------------------------------------------------------------------
// Oracles and sampling

double WeightedSample::total_weight() const {
  CompensatedSum sum;
  for (const auto& p : points) sum.add(p.weight);
  return sum.value();
}

namespace {

Vec on_shape_parameters(const AnalyticShape& shape, const Vec& y) {
  auto [params, dist] = shape.locate(y);
  if (!(dist <= kOnShapeTolerance)) {
    throw NotOnShape("point is " + std::to_string(dist) + " away from the " + shape.name());
  }
  return params;
}

}  // namespace

Vec exact_mean_curvature(const AnalyticShape& shape, const Vec& y) {
  return shape.mean_curvature(on_shape_parameters(shape, y));
}

Plane exact_tangent(const AnalyticShape& shape, const Vec& y) {
  return shape.tangent(on_shape_parameters(shape, y));
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int count) {
  if (count < 1) throw InvalidArgument("gauss_legendre: count must be positive");
  if (count == 1) return {{0.0}, {2.0}};
  // Legendre P_count and its derivative by the three-term recurrence.
  auto legendre = [count](double x) {
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= count; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, count * (x * p1 - p0) / (x * x - 1.0)};
  };
  std::vector<double> nodes(count);
  std::vector<double> weights(count);
  for (int i = 0; i < (count + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (count + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[count - 1 - i] = x;
    weights[i] = w;
    weights[count - 1 - i] = w;
  }
  return {nodes, weights};
}

WeightedSample sample_surface(const AnalyticShape& shape, int resolution) {
  if (resolution < 8) throw InvalidArgument("sample_surface: resolution must be >= 8");
  WeightedSample out;
  out.dim = shape.dim();
  out.ambient = shape.ambient();

  auto push = [&](const Vec& params, double weight) {
    out.points.push_back(SamplePoint{shape.position(params), shape.tangent(params), weight});
  };

  std::visit(
      Overloaded{
          [&](const Circle& s) {
            out.points.reserve(resolution);
            const double w = kTwoPi * s.radius / resolution;
            for (int j = 0; j < resolution; ++j) push(make_vec({kTwoPi * j / resolution}), w);
          },
          [&](const Ellipse&) {
            out.points.reserve(resolution);
            for (int j = 0; j < resolution; ++j) {
              const Vec p = make_vec({kTwoPi * j / resolution});
              push(p, shape.jacobian(p).norm() * kTwoPi / resolution);
            }
          },
          [&](const Sphere& s) {
            const int nz = std::max(4, resolution / 2);
            const auto [nodes, weights] = gauss_legendre(nz);
            out.points.reserve(static_cast<std::size_t>(nz) * resolution);
            for (int k = 0; k < nz; ++k) {
              for (int j = 0; j < resolution; ++j) {
                const Vec p = make_vec({s.radius * nodes[k], kTwoPi * j / resolution});
                push(p, s.radius * s.radius * weights[k] * kTwoPi / resolution);
              }
            }
          },
          [&](const Torus& s) {
            const int nu = resolution;
            const int nv = std::max(8, static_cast<int>(std::ceil(resolution * s.minor / s.major)));
            out.points.reserve(static_cast<std::size_t>(nu) * nv);
            for (int i = 0; i < nu; ++i) {
              for (int j = 0; j < nv; ++j) {
                const double u = kTwoPi * i / nu;
                const double v = kTwoPi * j / nv;
                const double w = s.minor * (s.major + s.minor * std::cos(v)) * (kTwoPi / nu) *
                                 (kTwoPi / nv);
                push(make_vec({u, v}), w);
              }
            }
          },
      },
      shape.variant());
  return out;
}

}  // namespace volvar
