#include "volvar/flow.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

namespace volvar {

Polyline regular_polygon(int count, double radius, Vec center) {
  if (count < 3) throw InvalidArgument("regular_polygon: need at least 3 vertices");
  if (!(radius > 0.0)) throw InvalidArgument("regular_polygon: radius must be positive");
  if (center.size() != 2) throw DimensionMismatch("regular_polygon: center must be planar");
  Polyline p;
  p.vertices.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double t = 2.0 * std::numbers::pi * i / count;
    p.vertices.push_back(center + radius * make_vec({std::cos(t), std::sin(t)}));
  }
  return p;
}

namespace {

void check_polyline(const Polyline& p) {
  if (p.vertices.size() < 3) throw InvalidArgument("polyline: need at least 3 vertices");
  for (const auto& v : p.vertices) {
    if (v.size() != 2) throw DimensionMismatch("polyline: vertices must be planar");
  }
}

std::vector<double> segment_lengths(const Polyline& p) {
  const std::size_t n = p.vertices.size();
  std::vector<double> l(n);
  for (std::size_t i = 0; i < n; ++i) l[i] = (p.vertices[(i + 1) % n] - p.vertices[i]).norm();
  return l;
}

double cross(const Vec& a, const Vec& b) { return a(0) * b(1) - a(1) * b(0); }

bool segments_intersect(const Vec& p1, const Vec& p2, const Vec& q1, const Vec& q2) {
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

}  // namespace

double polyline_length(const Polyline& p) {
  check_polyline(p);
  CompensatedSum s;
  for (double l : segment_lengths(p)) s.add(l);
  return s.value();
}

double polyline_area(const Polyline& p) {
  check_polyline(p);
  const std::size_t n = p.vertices.size();
  CompensatedSum s;
  for (std::size_t i = 0; i < n; ++i) s.add(cross(p.vertices[i], p.vertices[(i + 1) % n]));
  return 0.5 * s.value();
}

bool polyline_is_simple(const Polyline& p) {
  check_polyline(p);
  const std::size_t n = p.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;  // adjacent through the closing edge
      if (segments_intersect(p.vertices[i], p.vertices[(i + 1) % n], p.vertices[j],
                             p.vertices[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

Polyline reparametrize_arclength(const Polyline& p) {
  check_polyline(p);
  const std::size_t n = p.vertices.size();
  const auto l = segment_lengths(p);
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + l[i];
  const double total = cum[n];
  Polyline out;
  out.vertices.reserve(n);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(n);
    while (seg + 1 < n && cum[seg + 1] <= s) ++seg;
    const double u = l[seg] > 0.0 ? (s - cum[seg]) / l[seg] : 0.0;
    out.vertices.push_back(p.vertices[seg] + u * (p.vertices[(seg + 1) % n] - p.vertices[seg]));
  }
  return out;
}

WeightedSample sample_polyline(const Polyline& p, int per_segment) {
  check_polyline(p);
  if (per_segment < 1) throw InvalidArgument("sample_polyline: per_segment must be >= 1");
  const auto [nodes, weights] = gauss_legendre(per_segment);
  const std::size_t n = p.vertices.size();
  WeightedSample out{1, 2, {}};
  out.points.reserve(n * per_segment);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& a = p.vertices[i];
    const Vec& b = p.vertices[(i + 1) % n];
    const double len = (b - a).norm();
    if (len == 0.0) continue;
    Mat basis(2, 1);
    basis.col(0) = (b - a) / len;
    const Plane tangent = Plane::from_basis(basis);
    for (int q = 0; q < per_segment; ++q) {
      const double u = 0.5 * (nodes[q] + 1.0);
      out.points.push_back({a + u * (b - a), tangent, 0.5 * weights[q] * len});
    }
  }
  return out;
}

double extinction_time(double r0, int d) {
  if (!(r0 > 0.0) || d < 1) throw InvalidArgument("extinction_time: need r0 > 0 and d >= 1");
  return r0 * r0 / (2.0 * d);
}

double analytic_sphere_flow(double r0, int d, int n, double t) {
  if (n < d + 1) throw DimensionMismatch("analytic_sphere_flow: need n >= d + 1");
  if (t < 0.0) throw PreconditionViolated("analytic_sphere_flow: negative time");
  if (t >= extinction_time(r0, d)) {
    throw PreconditionViolated("analytic_sphere_flow: t is at or beyond the extinction time");
  }
  return std::sqrt(r0 * r0 - 2.0 * d * t);
}

Polyline curve_shortening_step(const Polyline& p, double dt) {
  check_polyline(p);
  if (!(dt > 0.0)) throw InvalidArgument("curve_shortening_step: dt must be positive");
  const std::size_t n = p.vertices.size();
  const auto l = segment_lengths(p);
  const double min_len = *std::min_element(l.begin(), l.end());
  if (dt > 0.25 * min_len * min_len) {
    throw PreconditionViolated("curve_shortening_step: dt exceeds 0.25 * (min segment)^2");
  }
  Polyline moved;
  moved.vertices.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t prev = (i + n - 1) % n;
    const std::size_t next = (i + 1) % n;
    const Vec fwd = (p.vertices[next] - p.vertices[i]) / l[i];
    const Vec back = (p.vertices[i] - p.vertices[prev]) / l[prev];
    const Vec kappa = (2.0 / (l[prev] + l[i])) * (fwd - back);
    moved.vertices.push_back(p.vertices[i] + dt * kappa);
  }
  Polyline out = reparametrize_arclength(moved);
  if (!polyline_is_simple(out)) {
    throw NumericalFailure("curve_shortening_step: polyline self-intersects; flow stopped");
  }
  return out;
}

FlowTrajectory::FlowTrajectory(int dim, int ambient, std::vector<FlowSnapshot> snapshots)
    : dim_(dim), ambient_(ambient), snapshots_(std::move(snapshots)) {}

namespace {

std::vector<double> uniform_grid(double t1, double t2, int count) {
  if (count < 2) throw InvalidArgument("trajectory: need at least 2 snapshots");
  if (!(t2 > t1) || t1 < 0.0) throw InvalidArgument("trajectory: need 0 <= t1 < t2");
  std::vector<double> t(count);
  for (int k = 0; k < count; ++k) t[k] = t1 + (t2 - t1) * k / (count - 1);
  t.back() = t2;
  return t;
}

}  // namespace

FlowTrajectory FlowTrajectory::shrinking_sphere(const AnalyticShape& initial, double t1,
                                                double t2, int count) {
  double r0 = 0.0;
  if (const auto* c = std::get_if<Circle>(&initial.variant())) {
    r0 = c->radius;
  } else if (const auto* s = std::get_if<Sphere>(&initial.variant())) {
    r0 = s->radius;
  } else {
    throw InvalidArgument("shrinking_sphere: initial shape must be a circle or a sphere");
  }
  const int d = initial.dim();
  const int n = initial.ambient();
  std::vector<FlowSnapshot> snaps;
  for (double t : uniform_grid(t1, t2, count)) {
    const double r = analytic_sphere_flow(r0, d, n, t);
    AnalyticShape shape = d == 1 ? AnalyticShape::circle(r, initial.center())
                                 : AnalyticShape::sphere(r, initial.center());
    const double mass = shape.total_measure();
    snaps.push_back({t, std::move(shape), mass});
  }
  return FlowTrajectory(d, n, std::move(snaps));
}

FlowTrajectory FlowTrajectory::curve_shortening(Polyline initial, double dt_max, double t_end,
                                                int count) {
  if (!(dt_max > 0.0)) throw InvalidArgument("curve_shortening: dt_max must be positive");
  const auto grid = uniform_grid(0.0, t_end, count);
  std::vector<FlowSnapshot> snaps;
  Polyline current = reparametrize_arclength(initial);
  snaps.push_back({0.0, current, polyline_length(current)});
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double span = grid[k] - grid[k - 1];
    const auto steps = static_cast<long>(std::ceil(span / dt_max - 1e-12));
    const double dt = span / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) current = curve_shortening_step(current, dt);
    snaps.push_back({grid[k], current, polyline_length(current)});
  }
  return FlowTrajectory(1, 2, std::move(snaps));
}

double FlowTrajectory::time_step() const {
  return (snapshots_.back().time - snapshots_.front().time) /
         static_cast<double>(snapshots_.size() - 1);
}

std::pair<Vec, Vec> FlowTrajectory::bounding_box() const {
  Vec lo = Vec::Constant(ambient_, std::numeric_limits<double>::infinity());
  Vec hi = Vec::Constant(ambient_, -std::numeric_limits<double>::infinity());
  for (const auto& s : snapshots_) {
    if (const auto* shape = std::get_if<AnalyticShape>(&s.shape)) {
      const Vec r = Vec::Constant(ambient_, shape->bounding_radius());
      lo = lo.cwiseMin(shape->center() - r);
      hi = hi.cwiseMax(shape->center() + r);
    } else {
      for (const auto& v : std::get<Polyline>(s.shape).vertices) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
      }
    }
  }
  return {lo, hi};
}

double trajectory_mass(const FlowTrajectory& traj, std::size_t index) {
  return traj.snapshot(index).mass;
}

WeightedSample snapshot_sample(const FlowSnapshot& snapshot, int resolution) {
  if (const auto* shape = std::get_if<AnalyticShape>(&snapshot.shape)) {
    return sample_surface(*shape, resolution);
  }
  return sample_polyline(std::get<Polyline>(snapshot.shape));
}

void write_trajectory_csv(std::ostream& out, const FlowTrajectory& traj) {
  out << std::setprecision(17);
  const bool analytic = std::holds_alternative<AnalyticShape>(traj.snapshot(0).shape);
  if (analytic) {
    out << "time,mass,radius\n";
    for (const auto& s : traj.snapshots()) {
      const auto& shape = std::get<AnalyticShape>(s.shape);
      out << s.time << ',' << s.mass << ',' << shape.bounding_radius() << '\n';
    }
    return;
  }
  out << "time,mass,vertex,x1,x2\n";
  for (const auto& s : traj.snapshots()) {
    const auto& p = std::get<Polyline>(s.shape);
    for (std::size_t i = 0; i < p.vertices.size(); ++i) {
      out << s.time << ',' << s.mass << ',' << i << ',' << p.vertices[i](0) << ','
          << p.vertices[i](1) << '\n';
    }
  }
}

}  // namespace volvar
