#include "volvar/kernels.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace volvar {

// ---------------------------------------------------------------------------
// Polynomial

Polynomial::Polynomial(std::vector<double> coefficients) : coeffs_(std::move(coefficients)) {
  while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

double Polynomial::operator()(double r) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * r + *it;
  return acc;
}

Polynomial Polynomial::derivative() const {
  if (coeffs_.size() <= 1) return Polynomial();
  std::vector<double> out(coeffs_.size() - 1);
  for (std::size_t i = 1; i < coeffs_.size(); ++i) out[i - 1] = static_cast<double>(i) * coeffs_[i];
  return Polynomial(std::move(out));
}

Polynomial Polynomial::scaled(double factor) const {
  std::vector<double> out = coeffs_;
  for (double& c : out) c *= factor;
  return Polynomial(std::move(out));
}

Polynomial Polynomial::times_r() const {
  if (coeffs_.empty()) return Polynomial();
  std::vector<double> out(coeffs_.size() + 1, 0.0);
  std::copy(coeffs_.begin(), coeffs_.end(), out.begin() + 1);
  return Polynomial(std::move(out));
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  std::vector<double> out(std::max(coeffs_.size(), other.coeffs_.size()), 0.0);
  for (std::size_t i = 0; i < coeffs_.size(); ++i) out[i] += coeffs_[i];
  for (std::size_t i = 0; i < other.coeffs_.size(); ++i) out[i] += other.coeffs_[i];
  return Polynomial(std::move(out));
}

bool Polynomial::is_zero() const { return coeffs_.empty(); }

// ---------------------------------------------------------------------------
// Profile

Profile::Profile(Polynomial p) : p_(std::move(p)), dp_(p_.derivative()), ddp_(dp_.derivative()) {}

Profile Profile::bump(int exponent) {
  if (exponent < 1) throw InvalidArgument("Profile::bump: exponent must be >= 1");
  // Binomial expansion of (1 - r^2)^k.
  std::vector<double> coeffs(2 * static_cast<std::size_t>(exponent) + 1, 0.0);
  double binom = 1.0;
  for (int j = 0; j <= exponent; ++j) {
    coeffs[2 * static_cast<std::size_t>(j)] = (j % 2 == 0 ? 1.0 : -1.0) * binom;
    binom = binom * (exponent - j) / (j + 1);
  }
  return Profile(Polynomial(std::move(coeffs)));
}

Profile Profile::constant(double value) { return Profile(Polynomial({value})); }

// ---------------------------------------------------------------------------
// Free helpers

namespace {

// Max of f on [lo, hi]: dense sampling, then golden-section refinement of every
// sampled local maximum.
double sampled_max(const std::function<double(double)>& f, double lo, double hi, int samples) {
  samples = std::max(samples, 2);
  std::vector<double> xs(samples + 1);
  std::vector<double> fs(samples + 1);
  for (int i = 0; i <= samples; ++i) {
    xs[i] = lo + (hi - lo) * i / samples;
    fs[i] = f(xs[i]);
  }
  double best = *std::max_element(fs.begin(), fs.end());
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i <= samples; ++i) {
    const bool left_ok = i == 0 || fs[i] >= fs[i - 1];
    const bool right_ok = i == samples || fs[i] >= fs[i + 1];
    if (!(left_ok && right_ok)) continue;
    double a = xs[std::max(i - 1, 0)];
    double b = xs[std::min(i + 1, samples)];
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int iter = 0; iter < 80; ++iter) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = f(d);
      }
    }
    best = std::max({best, fc, fd});
  }
  return best;
}

}  // namespace

double sampled_sup(const std::function<double(double)>& f, int samples) {
  const double hi = sampled_max(f, 0.0, 1.0, samples);
  const double lo = sampled_max([&](double r) { return -f(r); }, 0.0, 1.0, samples);
  return std::max({hi, lo, 0.0});
}

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double normalization_constant(const Profile& profile, int d) {
  if (d < 1) throw InvalidArgument("normalization_constant: d must be >= 1");
  auto integrand = [&](double r) { return profile.value(r) * std::pow(r, d - 1); };
  double error = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, 1.0, 15, 1e-12, &error);
  return d * unit_ball_volume(d) * integral;
}

Profile natural_pair_from_rho(const Profile& rho, int n) {
  if (n < 1) throw InvalidArgument("natural_pair_from_rho: n must be >= 1");
  constexpr int kChecks = 4096;
  for (int i = 0; i <= kChecks; ++i) {
    const double r = static_cast<double>(i) / kChecks;
    if (r < 1.0 && rho.d1(r) > 1e-14) {
      throw InvalidArgument("natural_pair_from_rho: rho' > 0 at r = " + std::to_string(r) +
                            ", xi would be negative");
    }
  }
  const Profile xi(rho.polynomial().derivative().times_r().scaled(-1.0 / n));
  for (int i = 1; i < kChecks; ++i) {
    const double r = static_cast<double>(i) / kChecks;
    if (!(xi.value(r) > 0.0)) {
      throw InvalidArgument("natural_pair_from_rho: xi must be positive on (0, 1)");
    }
  }
  return xi;
}

// ---------------------------------------------------------------------------
// KernelPair

KernelPair::KernelPair(Profile rho, Profile xi, int n, int d)
    : rho_(std::move(rho)), xi_(std::move(xi)), n_(n), d_(d) {
  if (n < 1 || n > kMaxAmbient || d < 1 || d > n) {
    throw DimensionMismatch("KernelPair: need 1 <= d <= n <= 3");
  }
  constexpr int kChecks = 4096;
  for (int i = 0; i <= kChecks; ++i) {
    const double r = static_cast<double>(i) / kChecks;
    if (rho_.value(r) < 0.0 || xi_.value(r) < 0.0) {
      throw InvalidArgument("KernelPair: profiles must be nonnegative");
    }
    if (i > 0 && i < kChecks && !(xi_.value(r) > 0.0)) {
      throw InvalidArgument("KernelPair: xi must be positive on (0, 1)");
    }
  }
  const double rho_scale = std::max(std::abs(rho_.value(0.0)), 1.0);
  if (std::abs(rho_.d1(0.0)) > 1e-14 * rho_scale) {
    throw InvalidArgument("KernelPair: rho'(0) must vanish");
  }
  c_rho_ = normalization_constant(rho_, d_);
  c_xi_ = normalization_constant(xi_, d_);
  if (!(c_rho_ > 0.0) || !(c_xi_ > 0.0)) {
    throw InvalidArgument("KernelPair: normalization constants must be positive");
  }
  rho_d1_sup_ = sampled_sup([this](double r) { return rho_.d1(r); });
  rho_d2_sup_ = sampled_sup([this](double r) { return rho_.d2(r); });
  xi_d1_sup_ = sampled_sup([this](double r) { return xi_.d1(r); });

  // Natural up to a positive factor: -n xi = lambda r rho'.
  const double r_ref = 0.5;
  const double denom = r_ref * rho_.d1(r_ref);
  if (denom < 0.0) {
    const double lambda = -n_ * xi_.value(r_ref) / denom;
    double worst = 0.0;
    for (int i = 0; i <= 1000; ++i) {
      const double r = i / 1000.0;
      worst = std::max(worst, std::abs(-n_ * xi_.value(r) - lambda * r * rho_.d1(r)));
    }
    natural_ = lambda > 0.0 && worst <= 1e-10 * std::max(1.0, rho_d1_sup_ * lambda);
  }
}

KernelPair KernelPair::natural(int n, int d, int exponent) {
  Profile rho = Profile::bump(exponent);
  Profile xi = natural_pair_from_rho(rho, n);
  return normalize_pair(KernelPair(std::move(rho), std::move(xi), n, d));
}

KernelPair KernelPair::independent(int n, int d, int exponent) {
  return normalize_pair(KernelPair(Profile::bump(exponent), Profile::bump(exponent), n, d));
}

KernelPair KernelPair::from_name(const std::string& name, int n, int d, int exponent) {
  if (name == "natural") return natural(n, d, exponent);
  if (name == "independent") return independent(n, d, exponent);
  throw InvalidArgument("unknown kernel '" + name + "' (expected natural or independent)");
}

double KernelPair::beta(double c0) const {
  if (!(c0 > 0.0)) throw InvalidArgument("KernelPair::beta: C0 must be positive");
  const double lo = std::pow(c0, -2.0 / d_) / 4.0;
  const double hi = 0.5;
  if (lo > hi) throw InvalidArgument("KernelPair::beta: empty interval, C0 too small");
  return -sampled_max([this](double r) { return -xi_.value(r); }, lo, hi, 2048);
}

double KernelPair::rho_eps(double r, double eps) const {
  return std::pow(eps, -n_) * rho_.value(r / eps);
}

double KernelPair::xi_eps(double r, double eps) const {
  return std::pow(eps, -n_) * xi_.value(r / eps);
}

double KernelPair::natural_relation_error(int samples) const {
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double r = samples == 1 ? 0.0 : static_cast<double>(i) / (samples - 1);
    worst = std::max(worst, std::abs(-n_ * xi_.value(r) - r * rho_.d1(r)));
  }
  return worst;
}

KernelPair normalize_pair(const KernelPair& pair) {
  if (!(pair.c_rho() > 0.0) || !(pair.c_xi() > 0.0)) {
    throw InvalidArgument("normalize_pair: zero normalization constant");
  }
  return KernelPair(pair.rho().scaled(1.0 / pair.c_rho()), pair.xi().scaled(1.0 / pair.c_xi()),
                    pair.ambient(), pair.dim());
}

}  // namespace volvar
