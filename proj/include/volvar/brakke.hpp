#pragma once

#include "volvar/curvature.hpp"
#include "volvar/flow.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace volvar {

/// Nonnegative C^2 radial bump: `height` on B(center, inner_r), zero outside
/// B(center, outer_r), and height * (1 - S(s)) in between, where S is the
/// quintic smoothstep and s = (|x - c|^2 - inner_r^2) / (outer_r^2 - inner_r^2).
class TestFunction {
 public:
  static TestFunction bump(Vec center, double inner_r, double outer_r, double height = 1.0);

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  const Vec& center() const { return center_; }
  double inner_radius() const { return inner_; }
  double support_radius() const { return outer_; }
  double height() const { return height_; }
  bool nonnegative() const { return height_ >= 0.0; }
  /// True when x lies in the open support ball.
  bool in_support(const Vec& x) const;

  double sup_norm() const { return sup_; }
  double gradient_sup() const { return grad_sup_; }
  /// sup of the spectral norm of the Hessian.
  double hessian_sup() const { return hess_sup_; }
  double lip() const { return grad_sup_; }
  double c1_norm() const { return sup_ + grad_sup_; }
  double c2_norm() const { return sup_ + grad_sup_ + hess_sup_; }

 private:
  TestFunction(Vec center, double inner, double outer, double height);
  double s_of(double r2) const { return (r2 - inner_ * inner_) / (outer_ * outer_ - inner_ * inner_); }

  Vec center_;
  double inner_ = 0.0;
  double outer_ = 0.0;
  double height_ = 0.0;
  double sup_ = 0.0;
  double grad_sup_ = 0.0;
  double hess_sup_ = 0.0;
};

struct GammaBounds {
  double ahlfors = 0.0;     ///< (8(1 + C0^(2/d)))^-1
  double curvature = 0.0;   ///< 1 / lambda_max
  double kernel = 0.0;      ///< beta / (2^(3d) C0^2 (lip xi + 1))
  double strict = 0.0;      ///< margin * beta / (C0^2 2^(3d+1) lip xi)
  double gamma = 0.0;
  std::string binding;
};

/// Largest admissible gamma: the minimum of the three hypothesis bounds and
/// of `strict_margin` times the strict bound beta > gamma C0^2 2^(3d+1) lip xi
/// (the margin keeps c9 > 0). Throws PreconditionViolated below `floor`.
GammaBounds gamma_feasible(double c0, double lambda_max, double beta, double lip_xi, int d,
                           double floor = 1e-6, double strict_margin = 0.5);

struct LedgerInputs {
  int d = 1;
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double lambda_max = 0.0;
  double mass0 = 0.0;
  double rho_d1 = 0.0;  ///< ||rho'||_inf
  double rho_d2 = 0.0;  ///< ||rho''||_inf
  double xi_d1 = 0.0;   ///< ||xi'||_inf
  double lip_xi = 0.0;
  double horizon = 0.0;  ///< T
  double phi_c1 = 1.0;   ///< ||phi||_{C^1}, enters c8
};

struct ConstantsLedger {
  LedgerInputs inputs;
  double c3 = 0.0, c4 = 0.0, c5 = 0.0, c6 = 0.0, c7 = 0.0, c8 = 0.0, c9 = 0.0, c10 = 0.0;
  double big_c = 0.0;        ///< C = c3 + c4 + c8
  double big_c_prime = 0.0;  ///< C' = mass0 (2 + C1) + C T
};

/// Throws PreconditionViolated for C0 <= 1, beta <= 0, or gamma outside the
/// hypothesis bounds (including c9 <= 0).
ConstantsLedger constants_ledger(const LedgerInputs& in);

/// Ledger inputs from a kernel pair plus the measured geometric constants.
LedgerInputs ledger_inputs(const KernelPair& kernel, double c0, double c1, double c2,
                           double lambda_max, double mass0, double horizon, double phi_c1);

/// Rows: name,value.
void write_ledger_csv(std::ostream& out, const ConstantsLedger& ledger);

enum class ResidualMode {
  discrete,           ///< V_h(t) and H_eps(., V_h(t))
  exact_measure,      ///< sampled ||M(t)|| and H_eps(., M(t))
  exact_curvature,    ///< sampled ||M(t)|| and the exact H
};

const char* to_string(ResidualMode mode);

struct ResidualOptions {
  ResidualMode mode = ResidualMode::discrete;
  double epsilon = 0.2;
  /// Mesh edge for the discrete mode; h = edge * sqrt(n).
  double mesh_edge = 0.0;
  /// Source samples per mesh edge length in the discrete mode.
  int samples_per_cell = 32;
  /// Sample resolution for the exact-measure modes.
  int exact_resolution = 4096;
  double t1 = 0.0;
  double t2 = 0.0;
  /// gamma used in the 2h <= gamma eps check.
  double gamma = 0.0;
  /// Throw PreconditionViolated when 2h > gamma eps.
  bool enforce_gamma = true;
  /// Constants for the theoretical right side; the bound fields stay NaN without it.
  std::optional<ConstantsLedger> ledger;
  /// C1 used in the mass-drop term; defaults to ledger->inputs.c1.
  std::optional<double> c1;
};

struct ResidualReport {
  ResidualMode mode = ResidualMode::discrete;
  double epsilon = 0.0;
  double h = 0.0;
  double gamma = 0.0;
  int nt = 0;
  double t1 = 0.0;
  double t2 = 0.0;
  bool hypothesis_satisfied = true;

  double mass_phi_t1 = 0.0;  ///< ||V(t1)||(phi)
  double mass_phi_t2 = 0.0;  ///< ||V(t2)||(phi)
  /// int_t1^t2 int phi |H|^2 - grad phi . H d||V(t)|| dt
  double integral = 0.0;
  /// Same integral with the opposite sign convention, phi_eps = -phi |H|^2 + grad phi . H.
  double integral_phi_eps = 0.0;
  double residual = 0.0;
  std::vector<double> space_integrals;

  double mass_total_t1 = 0.0;  ///< ||M(t1)||(R^n)
  double mass_total_t2 = 0.0;
  double delta_term = 0.0;      ///< 2 lip(phi) h max ||M(t)||
  double mass_drop_term = 0.0;  ///< ||phi||_inf C1 eps (||M(t1)|| - ||M(t2)||)
  double main_term = 0.0;       ///< ||phi||_C2 C (t2 - t1)(eps + h / eps^3)
  double bound = 0.0;           ///< sum of the three terms
  double weak_bound = 0.0;      ///< ||phi||_C2 C' (eps + h / eps^3)
};

/// Left side of the approximate Brakke equality on [t1, t2], using every
/// trajectory snapshot in that window (uniform grid, trapezoid in time).
ResidualReport brakke_residual(const FlowTrajectory& traj, const KernelPair& kernel,
                               const TestFunction& phi, const ResidualOptions& options);

/// Residual recomputed from the stored terms.
double recompute_residual(const ResidualReport& r);

void write_report_kv(std::ostream& out, const ResidualReport& r);
void write_residual_csv_header(std::ostream& out);
void write_residual_csv_row(std::ostream& out, const ResidualReport& r);

/// `count` on-shape probe points on a uniform parameter grid (offset from the
/// sample nodes).
std::vector<Vec> shape_probe_points(const AnalyticShape& shape, int count);

/// max over eps and probe points of |H - H_eps| / eps, with M represented by
/// sample_surface(shape, resolution). Requires a natural pair.
double measure_C1(const AnalyticShape& shape, const KernelPair& kernel,
                  std::span<const double> epsilons, int resolution = 4096, int probes = 32);

/// max over sample pairs with 0 < |xi - xj| <= max_distance of
/// |P_i - P_j| / |xi - xj|.
double measure_C2(const WeightedSample& sample, double max_distance = 0.1);

}  // namespace volvar
