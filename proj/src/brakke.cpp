#include "volvar/brakke.hpp"

#include "volvar/discretization.hpp"
#include "volvar/spatial_hash.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

namespace volvar {

namespace {

// 1 - S(s) with S the quintic smoothstep, and its derivatives.
double blend(double s) {
  if (s <= 0.0) return 1.0;
  if (s >= 1.0) return 0.0;
  return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}
double blend_d1(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return -30.0 * s * s * (s - 1.0) * (s - 1.0);
}
double blend_d2(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return -60.0 * s * (2.0 * s - 1.0) * (s - 1.0);
}

}  // namespace

TestFunction::TestFunction(Vec center, double inner, double outer, double height)
    : center_(std::move(center)), inner_(inner), outer_(outer), height_(height) {
  const double span = outer_ * outer_ - inner_ * inner_;
  const double h = std::abs(height_);
  sup_ = h;
  // Radial profiles on r in [inner, outer], parametrized by u in [0, 1].
  auto radius = [&](double u) { return inner_ + u * (outer_ - inner_); };
  grad_sup_ = sampled_sup([&](double u) {
    const double r = radius(u);
    return h * std::abs(blend_d1(s_of(r * r))) * 2.0 * r / span;
  });
  hess_sup_ = sampled_sup([&](double u) {
    const double r = radius(u);
    const double s = s_of(r * r);
    const double radial = blend_d2(s) * 4.0 * r * r / (span * span) + blend_d1(s) * 2.0 / span;
    const double tangential = blend_d1(s) * 2.0 / span;
    return h * std::max(std::abs(radial), std::abs(tangential));
  });
}

TestFunction TestFunction::bump(Vec center, double inner_r, double outer_r, double height) {
  if (!(inner_r > 0.0 && inner_r < outer_r)) {
    throw InvalidArgument("bump: need 0 < inner_r < outer_r");
  }
  if (center.size() < 1 || center.size() > kMaxAmbient) {
    throw DimensionMismatch("bump: center must have 1 to 3 coordinates");
  }
  if (height < 0.0) throw InvalidArgument("bump: height must be nonnegative");
  return TestFunction(std::move(center), inner_r, outer_r, height);
}

bool TestFunction::in_support(const Vec& x) const {
  return (x - center_).squaredNorm() < outer_ * outer_;
}

double TestFunction::value(const Vec& x) const {
  return height_ * blend(s_of((x - center_).squaredNorm()));
}

Vec TestFunction::gradient(const Vec& x) const {
  const Vec w = x - center_;
  const double span = outer_ * outer_ - inner_ * inner_;
  return height_ * blend_d1(s_of(w.squaredNorm())) * (2.0 / span) * w;
}

Mat TestFunction::hessian(const Vec& x) const {
  const Vec w = x - center_;
  const double span = outer_ * outer_ - inner_ * inner_;
  const double s = s_of(w.squaredNorm());
  const Vec ds = (2.0 / span) * w;
  const auto n = w.size();
  return height_ *
         (blend_d2(s) * ds * ds.transpose() + blend_d1(s) * (2.0 / span) * Mat::Identity(n, n));
}

// ---------------------------------------------------------------------------

GammaBounds gamma_feasible(double c0, double lambda_max, double beta, double lip_xi, int d,
                           double floor, double strict_margin) {
  if (!(c0 > 0.0 && lambda_max > 0.0 && lip_xi > 0.0) || d < 1) {
    throw InvalidArgument("gamma_feasible: inputs must be positive");
  }
  if (!(strict_margin > 0.0 && strict_margin < 1.0)) {
    throw InvalidArgument("gamma_feasible: strict margin must lie in (0, 1)");
  }
  GammaBounds g;
  const double p3d = std::pow(2.0, 3 * d);
  g.ahlfors = 1.0 / (8.0 * (1.0 + std::pow(c0, 2.0 / d)));
  g.curvature = 1.0 / lambda_max;
  g.kernel = beta / (p3d * c0 * c0 * (lip_xi + 1.0));
  g.strict = strict_margin * beta / (c0 * c0 * 2.0 * p3d * lip_xi);
  const std::pair<double, const char*> all[] = {{g.ahlfors, "ahlfors"},
                                                {g.curvature, "curvature"},
                                                {g.kernel, "kernel"},
                                                {g.strict, "strict"}};
  g.gamma = std::numeric_limits<double>::infinity();
  for (const auto& [value, name] : all) {
    if (value < g.gamma) {
      g.gamma = value;
      g.binding = name;
    }
  }
  if (!(g.gamma >= floor)) {
    throw PreconditionViolated("gamma_feasible: gamma = " + std::to_string(g.gamma) +
                               " is below the floor (binding bound: " + g.binding + ")");
  }
  return g;
}

ConstantsLedger constants_ledger(const LedgerInputs& in) {
  if (!(in.c0 > 1.0)) throw PreconditionViolated("constants_ledger: need C0 > 1");
  if (!(in.beta > 0.0)) throw PreconditionViolated("constants_ledger: need beta > 0");
  if (in.d < 1) throw InvalidArgument("constants_ledger: need d >= 1");
  if (!(in.gamma > 0.0)) throw PreconditionViolated("constants_ledger: need gamma > 0");
  const int d = in.d;
  const double c0sq = in.c0 * in.c0;
  const double p3d = std::pow(2.0, 3 * d);
  if (in.gamma > 1.0 / (8.0 * (1.0 + std::pow(in.c0, 2.0 / d))) ||
      in.gamma * in.lambda_max > 1.0 || in.beta < in.gamma * p3d * c0sq * (in.lip_xi + 1.0)) {
    throw PreconditionViolated("constants_ledger: gamma violates the hypothesis bounds");
  }
  ConstantsLedger L;
  L.inputs = in;
  L.c3 = in.c1 * in.mass0 * (2.0 + in.c1);
  L.c5 = c0sq * 2.0 * p3d * in.rho_d1 / in.beta;
  L.c6 = L.c5 * (1.0 + c0sq * 4.0 * p3d * in.xi_d1 / in.beta);
  L.c4 = (2.0 / in.gamma * (L.c5 * L.c5 + L.c5) + 2.0 * L.c5 * L.c6 + L.c6) * in.mass0;
  L.c7 = in.beta / in.c0 * std::pow(2.0, -2 * d - 1);
  L.c9 = in.beta - in.gamma * c0sq * 2.0 * p3d * in.lip_xi;
  if (!(L.c9 > 0.0)) throw PreconditionViolated("constants_ledger: c9 <= 0 for this gamma");
  const double p2d = std::pow(2.0, 2 * d);
  const double pd = std::pow(2.0, d);
  L.c10 = in.rho_d1 * in.xi_d1 * p2d * c0sq / (L.c7 * L.c9) +
          pd * in.rho_d2 * (1.0 + 2.0 * in.c2) * in.c0 / L.c9;
  L.c8 = L.c10 * in.mass0 * in.phi_c1 * (2.0 * L.c5 + 1.0);
  L.big_c = L.c3 + L.c4 + L.c8;
  L.big_c_prime = in.mass0 * (2.0 + in.c1) + L.big_c * in.horizon;
  return L;
}

LedgerInputs ledger_inputs(const KernelPair& kernel, double c0, double c1, double c2,
                           double lambda_max, double mass0, double horizon, double phi_c1) {
  LedgerInputs in;
  in.d = kernel.dim();
  in.c0 = c0;
  in.c1 = c1;
  in.c2 = c2;
  in.beta = kernel.beta(c0);
  in.lambda_max = lambda_max;
  in.mass0 = mass0;
  in.rho_d1 = kernel.rho_d1_sup();
  in.rho_d2 = kernel.rho_d2_sup();
  in.xi_d1 = kernel.xi_d1_sup();
  in.lip_xi = kernel.lip_xi();
  in.horizon = horizon;
  in.phi_c1 = phi_c1;
  in.gamma = gamma_feasible(c0, lambda_max, in.beta, in.lip_xi, in.d).gamma;
  return in;
}

void write_ledger_csv(std::ostream& out, const ConstantsLedger& L) {
  const auto& in = L.inputs;
  out << "name,value\n" << std::setprecision(17);
  const std::pair<const char*, double> rows[] = {
      {"d", in.d},         {"C0", in.c0},         {"C1", in.c1},
      {"C2", in.c2},       {"gamma", in.gamma},   {"beta", in.beta},
      {"lambda_max", in.lambda_max},              {"mass0", in.mass0},
      {"rho_d1", in.rho_d1},                      {"rho_d2", in.rho_d2},
      {"xi_d1", in.xi_d1}, {"lip_xi", in.lip_xi}, {"T", in.horizon},
      {"phi_c1", in.phi_c1},                      {"c3", L.c3},
      {"c4", L.c4},        {"c5", L.c5},          {"c6", L.c6},
      {"c7", L.c7},        {"c8", L.c8},          {"c9", L.c9},
      {"c10", L.c10},      {"C", L.big_c},        {"C_prime", L.big_c_prime},
  };
  for (const auto& [name, value] : rows) out << name << ',' << value << '\n';
}

// ---------------------------------------------------------------------------

const char* to_string(ResidualMode mode) {
  switch (mode) {
    case ResidualMode::discrete:
      return "discrete";
    case ResidualMode::exact_measure:
      return "exact_measure";
    case ResidualMode::exact_curvature:
      return "exact_curvature";
  }
  return "unknown";
}

namespace {

struct SpaceTerms {
  double mass_phi = 0.0;
  double integral = 0.0;
};

std::string format_point(const Vec& y) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (i > 0) s += ", ";
    s += std::to_string(y(i));
  }
  return s + ")";
}

// ||V||(phi) and int phi |H|^2 - grad phi . H d||V|| over the quadrature
// atoms of V; `curvature` fills H for the atoms inside supp phi.
template <class CurvatureFn>
SpaceTerms space_terms(const std::vector<Atom>& atoms, const TestFunction& phi,
                       CurvatureFn&& curvature) {
  std::vector<Vec> points;
  std::vector<double> weights;
  for (const auto& a : atoms) {
    if (!phi.in_support(a.x)) continue;
    points.push_back(a.x);
    weights.push_back(a.mass);
  }
  const std::vector<Vec> h = curvature(points);
  CompensatedSum mass;
  CompensatedSum integral;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double f = phi.value(points[i]);
    mass.add(weights[i] * f);
    integral.add(weights[i] * (f * h[i].squaredNorm() - phi.gradient(points[i]).dot(h[i])));
  }
  return {mass.value(), integral.value()};
}

std::vector<Vec> approx_curvatures(const CurvatureEvaluator& eval, const std::vector<Vec>& points) {
  const auto samples = curvature_field(eval, points);
  std::vector<Vec> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].status != CurvatureStatus::ok) {
      throw DenominatorTooSmall("brakke_residual: regularized mass too small at " +
                                format_point(points[i]) + " inside supp phi");
    }
    out.push_back(samples[i].mean_curvature);
  }
  return out;
}

Mesh trajectory_mesh(const FlowTrajectory& traj, double edge, double epsilon) {
  const auto [lo, hi] = traj.bounding_box();
  const double margin = epsilon + 2.0 * edge;
  return Mesh(lo - Vec::Constant(lo.size(), margin), hi + Vec::Constant(hi.size(), margin), edge);
}

}  // namespace

ResidualReport brakke_residual(const FlowTrajectory& traj, const KernelPair& kernel,
                               const TestFunction& phi, const ResidualOptions& opt) {
  if (phi.center().size() != traj.ambient()) {
    throw DimensionMismatch("brakke_residual: test function and flow dimensions differ");
  }
  if (!(opt.t2 > opt.t1)) throw InvalidArgument("brakke_residual: need t1 < t2");
  // Snapshots in [t1, t2] on the trajectory's uniform grid.
  const double tol = 1e-12 * std::max(1.0, opt.t2);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.snapshot(i).time;
    if (t >= opt.t1 - tol && t <= opt.t2 + tol) idx.push_back(i);
  }
  if (idx.size() < 2 || std::abs(traj.snapshot(idx.front()).time - opt.t1) > tol ||
      std::abs(traj.snapshot(idx.back()).time - opt.t2) > tol) {
    throw InvalidArgument("brakke_residual: t1 and t2 must be trajectory snapshot times");
  }

  ResidualReport r;
  r.mode = opt.mode;
  r.epsilon = opt.epsilon;
  r.gamma = opt.gamma;
  r.nt = static_cast<int>(idx.size());
  r.t1 = opt.t1;
  r.t2 = opt.t2;
  const CurvatureQuery query(opt.epsilon, kernel);

  std::optional<Mesh> mesh;
  if (opt.mode == ResidualMode::discrete) {
    if (!(opt.mesh_edge > 0.0)) throw InvalidArgument("brakke_residual: mesh edge must be > 0");
    mesh = trajectory_mesh(traj, opt.mesh_edge, opt.epsilon);
    r.h = mesh->diameter();
    r.hypothesis_satisfied = 2.0 * r.h <= opt.gamma * opt.epsilon;
    if (opt.enforce_gamma && !r.hypothesis_satisfied) {
      throw PreconditionViolated("brakke_residual: 2h = " + std::to_string(2.0 * r.h) +
                                 " exceeds gamma eps = " +
                                 std::to_string(opt.gamma * opt.epsilon));
    }
  }

  for (std::size_t i : idx) {
    const FlowSnapshot& snap = traj.snapshot(i);
    SpaceTerms terms;
    if (opt.mode == ResidualMode::discrete) {
      const int resolution = std::max(
          64, static_cast<int>(std::ceil(opt.samples_per_cell * snap.mass / opt.mesh_edge)));
      const Varifold vh = discretize(snapshot_sample(snap, resolution), *mesh);
      const CurvatureEvaluator eval(vh, query);
      const auto atoms = quadrature_atoms(vh, eval.subdivisions());
      terms = space_terms(atoms, phi, [&](const std::vector<Vec>& pts) {
        return approx_curvatures(eval, pts);
      });
    } else {
      const WeightedSample sample = snapshot_sample(snap, opt.exact_resolution);
      const Varifold m = SampledManifoldVarifold(sample);
      const auto atoms = quadrature_atoms(m, 1);
      if (opt.mode == ResidualMode::exact_measure) {
        const CurvatureEvaluator eval(m, query);
        terms = space_terms(atoms, phi, [&](const std::vector<Vec>& pts) {
          return approx_curvatures(eval, pts);
        });
      } else {
        const auto* shape = std::get_if<AnalyticShape>(&snap.shape);
        if (!shape) {
          throw InvalidArgument("brakke_residual: exact curvature needs analytic snapshots");
        }
        terms = space_terms(atoms, phi, [&](const std::vector<Vec>& pts) {
          std::vector<Vec> h;
          h.reserve(pts.size());
          for (const auto& p : pts) h.push_back(exact_mean_curvature(*shape, p));
          return h;
        });
      }
    }
    r.space_integrals.push_back(terms.integral);
    if (i == idx.front()) r.mass_phi_t1 = terms.mass_phi;
    if (i == idx.back()) r.mass_phi_t2 = terms.mass_phi;
  }

  // Composite trapezoid on the uniform grid.
  const double dt = (opt.t2 - opt.t1) / static_cast<double>(idx.size() - 1);
  CompensatedSum integral;
  for (std::size_t k = 0; k < r.space_integrals.size(); ++k) {
    const bool end = k == 0 || k + 1 == r.space_integrals.size();
    integral.add((end ? 0.5 : 1.0) * dt * r.space_integrals[k]);
  }
  r.integral = integral.value();
  r.integral_phi_eps = -r.integral;
  r.residual = recompute_residual(r);

  r.mass_total_t1 = traj.snapshot(idx.front()).mass;
  r.mass_total_t2 = traj.snapshot(idx.back()).mass;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.delta_term = 2.0 * phi.lip() * r.h * std::max(r.mass_total_t1, r.mass_total_t2);
  const std::optional<double> c1 =
      opt.c1 ? opt.c1 : (opt.ledger ? std::optional<double>(opt.ledger->inputs.c1) : std::nullopt);
  r.mass_drop_term =
      c1 ? phi.sup_norm() * *c1 * opt.epsilon * (r.mass_total_t1 - r.mass_total_t2) : nan;
  const double scale = opt.epsilon + r.h / std::pow(opt.epsilon, 3);
  if (opt.ledger) {
    r.main_term = phi.c2_norm() * opt.ledger->big_c * (opt.t2 - opt.t1) * scale;
    r.weak_bound = phi.c2_norm() * opt.ledger->big_c_prime * scale;
  } else {
    r.main_term = nan;
    r.weak_bound = nan;
  }
  r.bound = r.delta_term + r.mass_drop_term + r.main_term;
  return r;
}

double recompute_residual(const ResidualReport& r) {
  return std::abs(r.mass_phi_t2 - r.mass_phi_t1 + r.integral);
}

void write_report_kv(std::ostream& out, const ResidualReport& r) {
  out << std::setprecision(17);
  out << "mode=" << to_string(r.mode) << '\n'
      << "epsilon=" << r.epsilon << '\n'
      << "h=" << r.h << '\n'
      << "gamma=" << r.gamma << '\n'
      << "nt=" << r.nt << '\n'
      << "t1=" << r.t1 << '\n'
      << "t2=" << r.t2 << '\n'
      << "hypothesis_2h_le_gamma_eps=" << (r.hypothesis_satisfied ? "true" : "false") << '\n'
      << "mass_phi_t1=" << r.mass_phi_t1 << '\n'
      << "mass_phi_t2=" << r.mass_phi_t2 << '\n'
      << "integral=" << r.integral << '\n'
      << "integral_phi_eps=" << r.integral_phi_eps << '\n'
      << "residual=" << r.residual << '\n'
      << "mass_total_t1=" << r.mass_total_t1 << '\n'
      << "mass_total_t2=" << r.mass_total_t2 << '\n'
      << "delta_term=" << r.delta_term << '\n'
      << "mass_drop_term=" << r.mass_drop_term << '\n'
      << "main_term=" << r.main_term << '\n'
      << "bound=" << r.bound << '\n'
      << "weak_bound=" << r.weak_bound << '\n';
}

void write_residual_csv_header(std::ostream& out) {
  out << "mode,epsilon,h,nt,residual,mass_phi_t1,mass_phi_t2,integral,delta_term,"
         "mass_drop_term,main_term,bound,weak_bound,hypothesis\n";
}

void write_residual_csv_row(std::ostream& out, const ResidualReport& r) {
  out << std::setprecision(17) << to_string(r.mode) << ',' << r.epsilon << ',' << r.h << ','
      << r.nt << ',' << r.residual << ',' << r.mass_phi_t1 << ',' << r.mass_phi_t2 << ','
      << r.integral << ',' << r.delta_term << ',' << r.mass_drop_term << ',' << r.main_term << ','
      << r.bound << ',' << r.weak_bound << ',' << (r.hypothesis_satisfied ? 1 : 0) << '\n';
}

// ---------------------------------------------------------------------------

std::vector<Vec> shape_probe_points(const AnalyticShape& shape, int count) {
  if (count < 1) throw InvalidArgument("shape_probe_points: count must be >= 1");
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  const double golden = kTwoPi * (1.0 - 1.0 / std::numbers::phi);
  std::vector<Vec> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double u = kTwoPi * (k + 0.37) / count;
    Vec params;
    if (shape.dim() == 1) {
      params = make_vec({u});
    } else if (const auto* s = std::get_if<Sphere>(&shape.variant())) {
      const double z = s->radius * (1.0 - 2.0 * (k + 0.5) / count);
      params = make_vec({z, std::fmod(golden * k, kTwoPi)});
    } else {
      params = make_vec({u, std::fmod(golden * k, kTwoPi)});
    }
    out.push_back(shape.position(params));
  }
  return out;
}

double measure_C1(const AnalyticShape& shape, const KernelPair& kernel,
                  std::span<const double> epsilons, int resolution, int probes) {
  if (!kernel.is_natural()) throw InvalidArgument("measure_C1: needs a natural kernel pair");
  const Varifold m = SampledManifoldVarifold(sample_surface(shape, resolution));
  const auto points = shape_probe_points(shape, probes);
  std::vector<Vec> exact;
  exact.reserve(points.size());
  for (const auto& p : points) exact.push_back(exact_mean_curvature(shape, p));
  double worst = 0.0;
  for (double eps : epsilons) {
    const CurvatureEvaluator eval(m, CurvatureQuery(eps, kernel));
    const auto approx = approx_curvatures(eval, points);
    for (std::size_t i = 0; i < points.size(); ++i) {
      worst = std::max(worst, (approx[i] - exact[i]).norm() / eps);
    }
  }
  return worst;
}

double measure_C2(const WeightedSample& sample, double max_distance) {
  if (!(max_distance > 0.0)) throw InvalidArgument("measure_C2: max distance must be > 0");
  const int n = sample.ambient;
  std::vector<double> pos;
  pos.reserve(sample.points.size() * n);
  for (const auto& p : sample.points) {
    for (int i = 0; i < n; ++i) pos.push_back(p.x(i));
  }
  const SpatialHash hash(pos, n, max_distance);
  double worst = 0.0;
  for (std::size_t i = 0; i < sample.points.size(); ++i) {
    const auto& a = sample.points[i];
    hash.for_each_candidate(a.x.data(), [&](std::uint32_t j) {
      if (j <= i) return;
      const auto& b = sample.points[j];
      const double dist = (a.x - b.x).norm();
      if (dist == 0.0 || dist > max_distance) return;
      worst = std::max(worst, projector_distance(a.tangent, b.tangent) / dist);
    });
  }
  return worst;
}

}  // namespace volvar
