#include "volvar/flow.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace volvar;

namespace {

constexpr double kPi = std::numbers::pi;

Polyline star(int count, int folds, double amplitude) {
  Polyline p;
  for (int i = 0; i < count; ++i) {
    const double t = 2.0 * kPi * i / count;
    const double r = 1.0 + amplitude * std::cos(folds * t);
    p.vertices.push_back(make_vec({r * std::cos(t), r * std::sin(t)}));
  }
  return p;
}

Polyline ellipse_polygon(int count, double a, double b) {
  Polyline p;
  for (int i = 0; i < count; ++i) {
    const double t = 2.0 * kPi * i / count;
    p.vertices.push_back(make_vec({a * std::cos(t), b * std::sin(t)}));
  }
  return reparametrize_arclength(p);
}

double min_segment(const Polyline& p) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.vertices.size(); ++i) {
    m = std::min(m, (p.vertices[(i + 1) % p.vertices.size()] - p.vertices[i]).norm());
  }
  return m;
}

}  // namespace

TEST(SphereFlow, RadiusLaw) {
  EXPECT_DOUBLE_EQ(analytic_sphere_flow(1.0, 1, 2, 0.0), 1.0);
  EXPECT_NEAR(analytic_sphere_flow(1.0, 1, 2, 0.25), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(analytic_sphere_flow(1.0, 2, 3, 0.2), std::sqrt(0.2), 1e-15);
  EXPECT_THROW(analytic_sphere_flow(1.0, 1, 2, 0.5), PreconditionViolated);
  EXPECT_THROW(analytic_sphere_flow(1.0, 2, 3, 0.3), PreconditionViolated);
  EXPECT_DOUBLE_EQ(extinction_time(1.0, 2), 0.25);
}

TEST(SphereFlow, RadiusLawSolvesOde) {
  // r' = -d / r by RK4 on a fine grid.
  const double r0 = 1.3;
  const int d = 2;
  double r = r0;
  const int steps = 20000;
  const double t_end = 0.3, dt = t_end / steps;
  auto f = [&](double x) { return -d / x; };
  for (int i = 0; i < steps; ++i) {
    const double k1 = f(r), k2 = f(r + 0.5 * dt * k1), k3 = f(r + 0.5 * dt * k2),
                 k4 = f(r + dt * k3);
    r += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  EXPECT_NEAR(analytic_sphere_flow(r0, d, 3, t_end), r, 1e-12);
}

TEST(TrajectoryMass, AnalyticExamples) {
  const auto circle = FlowTrajectory::shrinking_sphere(AnalyticShape::circle(1.0), 0.0, 0.25, 2);
  EXPECT_NEAR(trajectory_mass(circle, 0), 2.0 * kPi, 1e-14);
  EXPECT_NEAR(trajectory_mass(circle, 1), 2.0 * kPi * std::sqrt(0.5), 1e-14);
  const auto sphere = FlowTrajectory::shrinking_sphere(AnalyticShape::sphere(1.0), 0.0, 0.2, 3);
  EXPECT_NEAR(trajectory_mass(sphere, 2), 4.0 * kPi * 0.2, 1e-13);
  EXPECT_EQ(sphere.dim(), 2);
  EXPECT_EQ(sphere.ambient(), 3);
  EXPECT_NEAR(sphere.time_step(), 0.1, 1e-15);
  EXPECT_THROW(FlowTrajectory::shrinking_sphere(AnalyticShape::circle(1.0), 0.0, 0.5, 4),
               PreconditionViolated);
}

TEST(TrajectoryMass, MassDerivativeMatchesCurvatureIntegral) {
  const double dt = 1e-4;
  const auto traj = FlowTrajectory::shrinking_sphere(AnalyticShape::circle(1.0), 0.0, 0.1, 1001);
  ASSERT_NEAR(traj.time_step(), dt, 1e-15);
  for (std::size_t i = 1; i + 1 < traj.size(); i += 100) {
    const double fd = (trajectory_mass(traj, i + 1) - trajectory_mass(traj, i - 1)) / (2.0 * dt);
    const double r = analytic_sphere_flow(1.0, 1, 2, traj.snapshot(i).time);
    EXPECT_NEAR(fd, -2.0 * kPi / r, 1e-6);
  }
  for (std::size_t i = 1; i < traj.size(); ++i) {
    EXPECT_LT(trajectory_mass(traj, i), trajectory_mass(traj, i - 1));
  }
}

TEST(CurveShortening, PolygonTracksCircleFlow) {
  Polyline p = regular_polygon(256, 1.0);
  for (int i = 0; i < 1000; ++i) p = curve_shortening_step(p, 1e-4);
  Vec c = Vec::Zero(2);
  for (const auto& v : p.vertices) c += v;
  c /= static_cast<double>(p.vertices.size());
  double mean = 0.0;
  for (const auto& v : p.vertices) mean += (v - c).norm();
  mean /= static_cast<double>(p.vertices.size());
  EXPECT_NEAR(mean, std::sqrt(0.8), 1e-3);
}

TEST(CurveShortening, SymmetryPreserved) {
  const int folds = 3, count = 240;
  const Polyline p = curve_shortening_step(star(count, folds, 0.2), 1e-4);
  const double angle = 2.0 * kPi / folds;
  Mat rot(2, 2);
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  for (int i = 0; i < count; ++i) {
    const Vec rotated = rot * p.vertices[i];
    EXPECT_LT((rotated - p.vertices[(i + count / folds) % count]).norm(), 1e-12);
  }
}

TEST(CurveShortening, LengthAndIsoperimetricRatioDecrease) {
  Polyline p = ellipse_polygon(200, 1.5, 0.8);
  double length = polyline_length(p);
  double iso = length * length / (4.0 * kPi * polyline_area(p));
  for (int i = 0; i < 300; ++i) {
    const double dt = 0.2 * std::pow(min_segment(p), 2);
    p = curve_shortening_step(p, dt);
    const double l = polyline_length(p);
    const double q = l * l / (4.0 * kPi * polyline_area(p));
    EXPECT_LT(l, length) << "step " << i;
    EXPECT_LT(q, iso) << "step " << i;
    length = l;
    iso = q;
  }
}

TEST(CurveShortening, RejectsUnstableStep) {
  const Polyline p = regular_polygon(64, 1.0);
  const double seg = 2.0 * std::sin(kPi / 64);
  EXPECT_THROW(curve_shortening_step(p, 0.3 * seg * seg), PreconditionViolated);
  EXPECT_NO_THROW(curve_shortening_step(p, 0.25 * seg * seg * 0.999));
}

TEST(Polyline, BasicGeometry) {
  const Polyline sq{{make_vec({0, 0}), make_vec({1, 0}), make_vec({1, 1}), make_vec({0, 1})}};
  EXPECT_DOUBLE_EQ(polyline_length(sq), 4.0);
  EXPECT_DOUBLE_EQ(polyline_area(sq), 1.0);
  EXPECT_TRUE(polyline_is_simple(sq));
  const Polyline bow{{make_vec({0, 0}), make_vec({1, 1}), make_vec({1, 0}), make_vec({0, 1})}};
  EXPECT_FALSE(polyline_is_simple(bow));
  const auto s = sample_polyline(sq, 4);
  EXPECT_EQ(s.points.size(), 16u);
  EXPECT_NEAR(s.total_weight(), 4.0, 1e-14);
  const Polyline r = reparametrize_arclength(ellipse_polygon(50, 2.0, 0.5));
  EXPECT_EQ(r.vertices.size(), 50u);
  const double seg = polyline_length(r) / 50;
  for (std::size_t i = 0; i < r.vertices.size(); ++i) {
    EXPECT_NEAR((r.vertices[(i + 1) % 50] - r.vertices[i]).norm(), seg, 0.02 * seg);
  }
}

TEST(Trajectory, CurveShorteningGridAndBox) {
  const auto traj = FlowTrajectory::curve_shortening(ellipse_polygon(128, 1.2, 0.9), 1e-4, 0.05, 6);
  ASSERT_EQ(traj.size(), 6u);
  EXPECT_NEAR(traj.snapshot(5).time, 0.05, 1e-14);
  for (std::size_t i = 1; i < traj.size(); ++i) {
    EXPECT_LT(traj.snapshot(i).mass, traj.snapshot(i - 1).mass);
  }
  const auto [lo, hi] = traj.bounding_box();
  for (const auto& snap : traj.snapshots()) {
    for (const auto& v : std::get<Polyline>(snap.shape).vertices) {
      EXPECT_TRUE((v.array() >= lo.array()).all() && (v.array() <= hi.array()).all());
    }
  }
  std::stringstream ss;
  write_trajectory_csv(ss, traj);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "time,mass,vertex,x1,x2");
}

TEST(Trajectory, SnapshotSampleHasSnapshotMass) {
  const auto traj = FlowTrajectory::shrinking_sphere(AnalyticShape::sphere(1.0), 0.0, 0.1, 3);
  const auto s = snapshot_sample(traj.snapshot(2), 32);
  EXPECT_NEAR(s.total_weight(), traj.snapshot(2).mass, 1e-12);
  std::stringstream ss;
  write_trajectory_csv(ss, traj);
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "time,mass,radius");
}
