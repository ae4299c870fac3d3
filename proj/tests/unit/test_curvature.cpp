#include "volvar/brakke.hpp"
#include "volvar/curvature.hpp"
#include "volvar/discretization.hpp"
#include "volvar/metrics.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace volvar;

namespace {

Plane line(double angle) {
  Mat b(2, 1);
  b << std::cos(angle), std::sin(angle);
  return Plane::from_basis(b);
}

const KernelPair& kernel2() {
  static const KernelPair k = KernelPair::natural(2, 1);
  return k;
}

const Varifold& dense_circle() {
  static const Varifold v = SampledManifoldVarifold(sample_surface(AnalyticShape::circle(1.0), 4096));
  return v;
}

// Direct formula for one atom: m P grad rho_eps(x - y).
Vec single_atom_fv(const KernelPair& k, const Atom& a, const Vec& y, double eps) {
  const Vec w = a.x - y;
  const double r = w.norm();
  if (r == 0.0 || r >= eps) return Vec::Zero(y.size());
  const double g = std::pow(eps, -3) * k.rho().d1(r / eps);
  return a.mass * (a.plane.projector() * (g * w / r));
}

std::vector<double> circle_errors(std::span<const double> eps_list,
                                  const std::vector<Vec>& probes) {
  std::vector<double> out;
  for (double eps : eps_list) {
    const CurvatureEvaluator ev(dense_circle(), CurvatureQuery(eps, kernel2()));
    double worst = 0.0;
    for (const Vec& y : probes) worst = std::max(worst, (ev.mean_curvature(y) + y).norm());
    out.push_back(worst);
  }
  return out;
}

}  // namespace

TEST(Curvature, QueryValidation) {
  EXPECT_THROW(CurvatureQuery(0.0, kernel2()), InvalidArgument);
  EXPECT_THROW(CurvatureQuery(1.5, kernel2()), InvalidArgument);
  EXPECT_THROW(CurvatureQuery(0.1, kernel2(), 0.0), InvalidArgument);
  const Varifold sphere = SampledManifoldVarifold(sample_surface(AnalyticShape::sphere(1.0), 16));
  EXPECT_THROW(CurvatureEvaluator(sphere, CurvatureQuery(0.1, kernel2())), DimensionMismatch);
}

TEST(Curvature, FarPointIsZero) {
  const CurvatureQuery q(0.1, kernel2());
  const Vec y = make_vec({1.5, 0.0});
  EXPECT_EQ(regularized_first_variation(dense_circle(), q, y), Vec::Zero(2));
  EXPECT_EQ(regularized_mass(dense_circle(), q, y), 0.0);
  EXPECT_THROW(approx_mean_curvature(dense_circle(), q, y), DenominatorTooSmall);
  const CurvatureSample s = CurvatureEvaluator(dense_circle(), q).evaluate(y);
  EXPECT_EQ(s.status, CurvatureStatus::denominator_too_small);
}

TEST(Curvature, SingleAtomMatchesFormula) {
  const double eps = 0.2;
  const Atom a{make_vec({0.3, 0.1}), line(0.6), 1.7};
  const Varifold v = PointCloudVarifold(1, 2, {a});
  const CurvatureQuery q(eps, kernel2());
  for (const Vec& y : {make_vec({0.25, 0.0}), make_vec({0.4, 0.2}), make_vec({0.3, 0.1})}) {
    const Vec expected = single_atom_fv(kernel2(), a, y, eps);
    EXPECT_LT((regularized_first_variation(v, q, y) - expected).norm(),
              1e-12 * (1.0 + expected.norm()));
    const double r = (a.x - y).norm();
    EXPECT_NEAR(regularized_mass(v, q, y), a.mass * std::pow(eps, -2) * kernel2().xi().value(r / eps),
                1e-12);
  }
}

TEST(Curvature, MirrorSymmetryCancels) {
  const Varifold v = PointCloudVarifold(
      1, 2, {{make_vec({0.05, 0.0}), line(0.0), 1.0}, {make_vec({-0.05, 0.0}), line(0.0), 1.0}});
  const Vec fv = regularized_first_variation(v, CurvatureQuery(0.2, kernel2()), make_vec({0, 0}));
  EXPECT_NEAR(fv.norm(), 0.0, 1e-15);
}

TEST(Curvature, VanishingDenominatorThrows) {
  const double eps = 0.1;
  const Varifold v = PointCloudVarifold(1, 2, {{make_vec({0.0999, 0.0}), line(0.0), 1e-9}});
  const CurvatureQuery q(eps, kernel2());
  EXPECT_THROW(approx_mean_curvature(v, q, make_vec({0, 0})), DenominatorTooSmall);
}

TEST(Curvature, CircleWithinC1Eps) {
  const std::vector<double> eps_list{0.4, 0.2, 0.1};
  const double c1 = measure_C1(AnalyticShape::circle(1.0), kernel2(), eps_list);
  const Vec h = approx_mean_curvature(dense_circle(), CurvatureQuery(0.1, kernel2()), make_vec({1, 0}));
  EXPECT_LE((h - make_vec({-1, 0})).norm(), c1 * 0.1);
  EXPECT_LT(std::abs(std::atan2(h(1), -h(0))), 1e-3);
}

TEST(Curvature, RegularizedMassLowerBound) {
  const double eps = 0.2, c0 = 2.1;
  const auto& k = kernel2();
  const double c7 = k.beta(c0) / c0 * std::pow(2.0, -3);
  const CurvatureEvaluator ev(dense_circle(), CurvatureQuery(eps, k));
  for (const Vec& y : shape_probe_points(AnalyticShape::circle(1.0), 32)) {
    EXPECT_GE(eps * eps * ev.mass(y), c7 * eps);
  }
}

TEST(Curvature, OrderEpsConsistency) {
  const auto probes = shape_probe_points(AnalyticShape::circle(1.0), 32);
  const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
  const auto err = circle_errors(eps, probes);
  // Least-squares slope in log-log.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double x = std::log(eps[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nn = static_cast<double>(eps.size());
  const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  EXPECT_GE(slope, 0.8);
}

TEST(Curvature, NormalizedMatchesRawPairWithPrefactor) {
  const Profile rho = Profile::bump(4);
  const KernelPair raw(rho, natural_pair_from_rho(rho, 2), 2, 1);
  const KernelPair unit = normalize_pair(raw);
  for (const Vec& y : shape_probe_points(AnalyticShape::circle(1.0), 8)) {
    const Vec a = approx_mean_curvature(dense_circle(), CurvatureQuery(0.1, raw), y);
    const Vec b = approx_mean_curvature(dense_circle(), CurvatureQuery(0.1, unit), y);
    EXPECT_LT((a - b).norm(), 1e-12 * b.norm());
  }
}

TEST(Curvature, SupportLocalityIsBitwise) {
  const double eps = 0.1;
  const auto sample = sample_surface(AnalyticShape::ellipse(1.3, 0.9), 2048);
  const Vec y = sample.points[100].x;
  WeightedSample near = sample;
  std::erase_if(near.points, [&](const SamplePoint& p) { return (p.x - y).norm() >= eps; });
  ASSERT_LT(near.points.size(), sample.points.size());
  const CurvatureQuery q(eps, KernelPair::natural(2, 1));
  const CurvatureSample full = CurvatureEvaluator(SampledManifoldVarifold(sample), q).evaluate(y);
  const CurvatureSample local = CurvatureEvaluator(SampledManifoldVarifold(near), q).evaluate(y);
  EXPECT_EQ(full.mean_curvature, local.mean_curvature);
  EXPECT_EQ(full.denominator, local.denominator);
}

TEST(Curvature, FieldIsPureMap) {
  const CurvatureEvaluator ev(dense_circle(), CurvatureQuery(0.1, kernel2()));
  auto points = shape_probe_points(AnalyticShape::circle(1.0), 16);
  points.push_back(make_vec({3, 3}));
  const auto a = curvature_field(ev, points);
  ASSERT_EQ(a.size(), points.size());
  EXPECT_EQ(a.back().status, CurvatureStatus::denominator_too_small);
  EXPECT_EQ(a[0].mean_curvature, ev.mean_curvature(points[0]));
  std::vector<Vec> reversed(points.rbegin(), points.rend());
  const auto b = curvature_field(ev, reversed);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mean_curvature, b[a.size() - 1 - i].mean_curvature);
  }
  const std::vector<Vec> single{points[3]};
  EXPECT_EQ(curvature_field(ev, single)[0].mean_curvature, ev.mean_curvature(points[3]));
}

TEST(Curvature, TenThousandPointsUnderBudget) {
  const auto start = std::chrono::steady_clock::now();
  const CurvatureEvaluator ev(dense_circle(), CurvatureQuery(0.1, kernel2()));
  const auto points = shape_probe_points(AnalyticShape::circle(1.0), 10000);
  const auto out = curvature_field(ev, points);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  EXPECT_EQ(out.size(), 10000u);
  EXPECT_LT(secs, 5.0);
}

TEST(Curvature, BoundedByC5AndLipschitzByC6) {
  const double eps = 0.2;
  const auto& k = kernel2();
  const std::vector<double> radii{0.1, 0.25, 0.5, 1.0};
  const auto probes = shape_probe_points(AnalyticShape::circle(1.0), 32);
  const double c0 = ahlfors_estimate(dense_circle(), radii, probes).c0;
  const double beta = k.beta(c0);
  const double c5 = std::pow(c0, 2) * 16.0 * k.rho_d1_sup() / beta;
  const double c6 = c5 * (1.0 + std::pow(c0, 2) * 32.0 * k.xi_d1_sup() / beta);
  const CurvatureEvaluator ev(dense_circle(), CurvatureQuery(eps, k));
  std::vector<Vec> h;
  for (const Vec& y : probes) {
    h.push_back(ev.mean_curvature(y));
    EXPECT_LE(h.back().norm(), c5 / eps);
  }
  for (std::size_t i = 0; i + 1 < probes.size(); ++i) {
    const double q = (h[i + 1] - h[i]).norm() / (probes[i + 1] - probes[i]).norm();
    EXPECT_LE(q, c6 / (eps * eps));
  }
}

TEST(Curvature, VolumetricStability) {
  // 2h <= gamma eps is far out of reach at desk scale; the bound is still
  // checked with c10 from the ledger.
  const double eps = 0.2;
  const double edge = 0.02;
  const Mesh mesh = Mesh::centered_box(2, 1.5, edge);
  const auto sample = sample_surface(AnalyticShape::circle(1.0), 32 * 315);
  const Varifold vh = discretize(sample, mesh);
  const Varifold m = SampledManifoldVarifold(sample);
  const auto& k = kernel2();
  const auto in = ledger_inputs(k, 2.1, 0.03, 1.5, 1.0, 2.0 * std::numbers::pi, 1.0, 10.0);
  const ConstantsLedger led = constants_ledger(in);
  const CurvatureEvaluator a(vh, CurvatureQuery(eps, k));
  const CurvatureEvaluator b(m, CurvatureQuery(eps, k));
  double worst = 0.0;
  for (const Vec& y : shape_probe_points(AnalyticShape::circle(1.0), 32)) {
    worst = std::max(worst, (a.mean_curvature(y) - b.mean_curvature(y)).norm());
  }
  EXPECT_LE(worst, led.c10 * mesh.diameter() / (eps * eps));
  // The measured gap is much smaller than the worst-case constant.
  EXPECT_LT(worst, 0.1);
}

TEST(Curvature, CsvLayout) {
  const std::vector<Vec> pts{make_vec({1, 0}), make_vec({5, 5})};
  const auto s = curvature_field(dense_circle(), CurvatureQuery(0.1, kernel2()), pts);
  std::stringstream ss;
  write_curvature_csv(ss, pts, s);
  std::string header, row1, row2;
  std::getline(ss, header);
  std::getline(ss, row1);
  std::getline(ss, row2);
  EXPECT_EQ(header, "y1,y2,H1,H2,denominator,status");
  EXPECT_NE(row1.find(",ok"), std::string::npos);
  EXPECT_NE(row2.find("denominator_too_small"), std::string::npos);
}
