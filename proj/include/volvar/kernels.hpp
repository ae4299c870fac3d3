#pragma once

#include "volvar/types.hpp"

#include <string>
#include <vector>

namespace volvar {

/// Polynomial in r, coefficient i multiplies r^i.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients);

  double operator()(double r) const;
  Polynomial derivative() const;
  Polynomial scaled(double factor) const;
  /// r * p(r)
  Polynomial times_r() const;
  Polynomial operator+(const Polynomial& other) const;

  const std::vector<double>& coefficients() const { return coeffs_; }
  bool is_zero() const;

 private:
  std::vector<double> coeffs_;
};

/// Radial kernel profile supported on [0, 1]; every oracle returns 0 for r >= 1.
class Profile {
 public:
  Profile() = default;
  explicit Profile(Polynomial p);

  /// (1 - r^2)^exponent
  static Profile bump(int exponent);
  static Profile constant(double value);

  double value(double r) const { return inside(r) ? p_(r) : 0.0; }
  double d1(double r) const { return inside(r) ? dp_(r) : 0.0; }
  double d2(double r) const { return inside(r) ? ddp_(r) : 0.0; }

  Profile scaled(double factor) const { return Profile(p_.scaled(factor)); }
  const Polynomial& polynomial() const { return p_; }

 private:
  static bool inside(double r) { return r >= 0.0 && r < 1.0; }

  Polynomial p_;
  Polynomial dp_;
  Polynomial ddp_;
};

/// Volume of the unit ball of R^d.
double unit_ball_volume(int d);

/// d * omega_d * int_0^1 profile(r) r^(d-1) dr, adaptive Gauss-Kronrod to 1e-12.
double normalization_constant(const Profile& profile, int d);

/// xi(r) = -r rho'(r) / n. Throws InvalidArgument when rho' > 0 somewhere on
/// [0, 1] or when the result is not positive on (0, 1).
Profile natural_pair_from_rho(const Profile& rho, int n);

/// sup over [0, 1] of |f|, by dense sampling refined with golden-section search.
double sampled_sup(const std::function<double(double)>& f, int samples = 4096);

/// Kernel pair (rho, xi) for d-varifolds in R^n.
class KernelPair {
 public:
  /// Validates nonnegativity, support, xi > 0 on (0, 1) and rho'(0) = 0.
  KernelPair(Profile rho, Profile xi, int n, int d);

  /// rho = (1 - r^2)^exponent with its natural xi, normalized so C_rho = C_xi = 1.
  static KernelPair natural(int n, int d, int exponent = 4);
  /// rho = xi = (1 - r^2)^exponent, normalized; not a natural pair.
  static KernelPair independent(int n, int d, int exponent = 4);
  /// Kernel by configuration name: "natural" or "independent".
  static KernelPair from_name(const std::string& name, int n, int d, int exponent);

  const Profile& rho() const { return rho_; }
  const Profile& xi() const { return xi_; }
  int ambient() const { return n_; }
  int dim() const { return d_; }
  double c_rho() const { return c_rho_; }
  double c_xi() const { return c_xi_; }
  double rho_d1_sup() const { return rho_d1_sup_; }
  double rho_d2_sup() const { return rho_d2_sup_; }
  double xi_d1_sup() const { return xi_d1_sup_; }
  /// Lipschitz constant of xi, i.e. ||xi'||_inf.
  double lip_xi() const { return xi_d1_sup_; }
  bool is_natural() const { return natural_; }

  /// min of xi on [C0^(-2/d)/4, 1/2].
  double beta(double c0) const;

  /// rho_eps(r) = eps^-n rho(r / eps), likewise for xi.
  double rho_eps(double r, double eps) const;
  double xi_eps(double r, double eps) const;

  /// Max deviation of -n xi(r) from r rho'(r) over `samples` points of [0, 1].
  double natural_relation_error(int samples = 1000) const;

 private:
  Profile rho_;
  Profile xi_;
  int n_ = 0;
  int d_ = 0;
  double c_rho_ = 0.0;
  double c_xi_ = 0.0;
  double rho_d1_sup_ = 0.0;
  double rho_d2_sup_ = 0.0;
  double xi_d1_sup_ = 0.0;
  bool natural_ = false;
};

/// Rescales both profiles so that C_rho = C_xi = 1.
KernelPair normalize_pair(const KernelPair& pair);

}  // namespace volvar
