#pragma once

#include "volvar/geometry.hpp"

#include <iosfwd>
#include <variant>
#include <vector>

namespace volvar {

/// Closed planar polyline; the last vertex connects back to the first.
struct Polyline {
  std::vector<Vec> vertices;
};

Polyline regular_polygon(int count, double radius, Vec center = Vec::Zero(2));
double polyline_length(const Polyline& p);
/// Signed shoelace area (positive for counterclockwise orientation).
double polyline_area(const Polyline& p);
bool polyline_is_simple(const Polyline& p);
/// Equal arc-length resampling with the same vertex count, starting at vertex 0.
Polyline reparametrize_arclength(const Polyline& p);
/// Quadrature sample: `per_segment` Gauss-Legendre points on every segment.
WeightedSample sample_polyline(const Polyline& p, int per_segment = 4);

/// r(t) = sqrt(r0^2 - 2 d t) for a round d-sphere in R^n.
/// Throws PreconditionViolated at or beyond the extinction time r0^2 / (2d).
double analytic_sphere_flow(double r0, int d, int n, double t);
double extinction_time(double r0, int d);

/// One explicit Euler step of curve shortening followed by arc-length
/// reparametrization. Requires dt <= 0.25 (min segment length)^2; throws
/// NumericalFailure if the result self-intersects.
Polyline curve_shortening_step(const Polyline& p, double dt);

struct FlowSnapshot {
  double time = 0.0;
  std::variant<AnalyticShape, Polyline> shape;
  double mass = 0.0;
};

class FlowTrajectory {
 public:
  /// Shrinking circle or sphere at `count` uniform times on [t1, t2].
  static FlowTrajectory shrinking_sphere(const AnalyticShape& initial, double t1, double t2,
                                         int count);
  /// Curve shortening from `initial`, snapshots at `count` uniform times on
  /// [0, t_end]; the step is the largest value <= dt_max landing on the grid.
  static FlowTrajectory curve_shortening(Polyline initial, double dt_max, double t_end,
                                         int count);

  std::size_t size() const { return snapshots_.size(); }
  const FlowSnapshot& snapshot(std::size_t i) const { return snapshots_.at(i); }
  const std::vector<FlowSnapshot>& snapshots() const { return snapshots_; }
  int dim() const { return dim_; }
  int ambient() const { return ambient_; }
  double time_step() const;
  /// Axis-aligned box holding every snapshot.
  std::pair<Vec, Vec> bounding_box() const;

 private:
  FlowTrajectory(int dim, int ambient, std::vector<FlowSnapshot> snapshots);
  int dim_;
  int ambient_;
  std::vector<FlowSnapshot> snapshots_;
};

/// 2 pi r(t) for circles, 4 pi r(t)^2 for spheres, length for polylines.
double trajectory_mass(const FlowTrajectory& traj, std::size_t index);

/// Quadrature sample of one snapshot.
WeightedSample snapshot_sample(const FlowSnapshot& snapshot, int resolution);

/// Analytic: time,mass,radius. Polyline: time,mass,vertex,x1,x2 (one row per vertex).
void write_trajectory_csv(std::ostream& out, const FlowTrajectory& traj);

}  // namespace volvar
