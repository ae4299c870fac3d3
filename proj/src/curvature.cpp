#include "volvar/curvature.hpp"

#include "volvar/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace volvar {

CurvatureQuery::CurvatureQuery(double epsilon_, KernelPair kernel_, double tau_)
    : epsilon(epsilon_), kernel(std::move(kernel_)), tau(tau_) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw InvalidArgument("CurvatureQuery: epsilon must lie in (0, 1]");
  }
  if (!(tau > 0.0)) throw InvalidArgument("CurvatureQuery: tau must be positive");
}

const char* to_string(CurvatureStatus status) {
  switch (status) {
    case CurvatureStatus::ok:
      return "ok";
    case CurvatureStatus::denominator_too_small:
      return "denominator_too_small";
  }
  return "unknown";
}

int curvature_subdivisions(const Varifold& v, double epsilon) {
  const auto* vol = std::get_if<VolumetricVarifold>(&v);
  if (!vol) return 1;
  return std::max(2, static_cast<int>(std::ceil(4.0 * vol->h() / epsilon)));
}

CurvatureEvaluator::CurvatureEvaluator(const Varifold& v, CurvatureQuery query)
    : query_(std::move(query)),
      n_(varifold_ambient(v)),
      d_(varifold_dim(v)),
      subdivisions_(curvature_subdivisions(v, query_.epsilon)) {
  if (query_.kernel.ambient() != n_ || query_.kernel.dim() != d_) {
    throw DimensionMismatch("CurvatureEvaluator: kernel and varifold dimensions differ");
  }
  for_each_quadrature_atom(v, subdivisions_, [&](const Vec& x, const Plane& p, double m) {
    for (int i = 0; i < n_; ++i) pos_.push_back(x(i));
    const Mat& pm = p.projector();
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) proj_.push_back(pm(i, j));
    }
    mass_.push_back(m);
  });
  hash_.emplace(std::span<const double>(pos_), n_, query_.epsilon);

  const auto& xi = query_.kernel.xi().polynomial().coefficients();
  const auto drho = query_.kernel.rho().polynomial().derivative().coefficients();
  const std::size_t len = std::max(xi.size(), drho.size());
  xi_coeffs_.assign(len, 0.0);
  drho_coeffs_.assign(len, 0.0);
  std::copy(xi.rbegin(), xi.rend(), xi_coeffs_.end() - static_cast<std::ptrdiff_t>(xi.size()));
  std::copy(drho.rbegin(), drho.rend(),
            drho_coeffs_.end() - static_cast<std::ptrdiff_t>(drho.size()));
}

void CurvatureEvaluator::check_point(const Vec& y) const {
  if (y.size() != n_) throw DimensionMismatch("curvature: evaluation point has wrong dimension");
}

CurvatureEvaluator::Sums CurvatureEvaluator::accumulate(const Vec& y, bool want_fv) const {
  const double eps = query_.epsilon;
  const double eps2 = eps * eps;
  const double inv_eps = 1.0 / eps;
  const double* xi_c = xi_coeffs_.data();
  const double* drho_c = drho_coeffs_.data();
  const std::size_t len = xi_coeffs_.size();
  const int n = n_;
  Sums s;
  hash_->for_each_candidate(y.data(), [&](std::uint32_t j) {
    const double* x = &pos_[static_cast<std::size_t>(j) * n];
    double w[kMaxAmbient];
    double r2 = 0.0;
    for (int i = 0; i < n; ++i) {
      w[i] = x[i] - y(i);
      r2 += w[i] * w[i];
    }
    if (r2 >= eps2) return;
    const double r = std::sqrt(r2);
    const double t = r * inv_eps;
    const double m = mass_[j];
    // Both profiles in one pass; t < 1 here, so the support cutoff is implicit.
    double xi_t = 0.0;
    double drho_t = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      xi_t = xi_t * t + xi_c[k];
      drho_t = drho_t * t + drho_c[k];
    }
    s.den += m * xi_t;
    if (!want_fv || r == 0.0) return;
    const double c = m * drho_t / r;
    const double* p = &proj_[static_cast<std::size_t>(j) * n * n];
    for (int a = 0; a < n; ++a) {
      double pw = 0.0;
      for (int b = 0; b < n; ++b) pw += p[a * n + b] * w[b];
      s.fv[a] += c * pw;
    }
  });
  return s;
}

Vec CurvatureEvaluator::first_variation(const Vec& y) const {
  check_point(y);
  const Sums s = accumulate(y, true);
  const double scale = std::pow(query_.epsilon, -n_ - 1);
  Vec out(n_);
  for (int i = 0; i < n_; ++i) out(i) = scale * s.fv[i];
  return out;
}

double CurvatureEvaluator::mass(const Vec& y) const {
  check_point(y);
  return std::pow(query_.epsilon, -n_) * accumulate(y, false).den;
}

CurvatureSample CurvatureEvaluator::evaluate(const Vec& y) const {
  check_point(y);
  const Sums s = accumulate(y, true);
  const double eps = query_.epsilon;
  CurvatureSample out;
  out.first_variation = Vec(n_);
  const double fv_scale = std::pow(eps, -n_ - 1);
  for (int i = 0; i < n_; ++i) out.first_variation(i) = fv_scale * s.fv[i];
  out.denominator = std::pow(eps, -n_) * s.den;
  out.mean_curvature = Vec::Zero(n_);
  // den > tau eps^(d-n)  <=>  raw sum > tau eps^d
  if (!(s.den > query_.tau * std::pow(eps, d_))) {
    out.status = CurvatureStatus::denominator_too_small;
    return out;
  }
  const double prefactor = -query_.kernel.c_xi() / query_.kernel.c_rho();
  for (int i = 0; i < n_; ++i) {
    out.mean_curvature(i) = prefactor * out.first_variation(i) / out.denominator;
  }
  return out;
}

Vec CurvatureEvaluator::mean_curvature(const Vec& y) const {
  CurvatureSample s = evaluate(y);
  if (s.status != CurvatureStatus::ok) {
    throw DenominatorTooSmall("approx_mean_curvature: regularized mass " +
                              std::to_string(s.denominator) + " below the guard");
  }
  return s.mean_curvature;
}

Vec regularized_first_variation(const Varifold& v, const CurvatureQuery& q, const Vec& y) {
  return CurvatureEvaluator(v, q).first_variation(y);
}

double regularized_mass(const Varifold& v, const CurvatureQuery& q, const Vec& y) {
  return CurvatureEvaluator(v, q).mass(y);
}

Vec approx_mean_curvature(const Varifold& v, const CurvatureQuery& q, const Vec& y) {
  return CurvatureEvaluator(v, q).mean_curvature(y);
}

std::vector<CurvatureSample> curvature_field(const CurvatureEvaluator& eval,
                                             std::span<const Vec> points) {
  std::vector<CurvatureSample> out(points.size());
  parallel_for(points.size(), [&](std::size_t i) { out[i] = eval.evaluate(points[i]); });
  return out;
}

std::vector<CurvatureSample> curvature_field(const Varifold& v, const CurvatureQuery& q,
                                             std::span<const Vec> points) {
  return curvature_field(CurvatureEvaluator(v, q), points);
}

void write_curvature_csv(std::ostream& out, std::span<const Vec> points,
                         std::span<const CurvatureSample> samples) {
  if (points.size() != samples.size()) {
    throw InvalidArgument("write_curvature_csv: points and samples differ in length");
  }
  if (points.empty()) {
    out << "denominator,status\n";
    return;
  }
  const auto n = points.front().size();
  for (Eigen::Index i = 0; i < n; ++i) out << 'y' << (i + 1) << ',';
  for (Eigen::Index i = 0; i < n; ++i) out << 'H' << (i + 1) << ',';
  out << "denominator,status\n" << std::setprecision(17);
  for (std::size_t k = 0; k < points.size(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) out << points[k](i) << ',';
    for (Eigen::Index i = 0; i < n; ++i) out << samples[k].mean_curvature(i) << ',';
    out << samples[k].denominator << ',' << to_string(samples[k].status) << '\n';
  }
}

}  // namespace volvar
