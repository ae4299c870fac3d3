#include "volvar/discretization.hpp"
#include "volvar/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

using namespace volvar;

namespace {

// Dense two-phase tableau simplex for
//   max c^T x  s.t.  A x <= b, x >= 0  (b of any sign).
// Dantzig pricing, switching to Bland's rule after a run of degenerate pivots.
class Simplex {
 public:
  Simplex(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
          const std::vector<double>& c)
      : m_(a.size()), n_(c.size()) {
    std::size_t art = 0;
    for (double v : b) art += v < 0.0 ? 1 : 0;
    cols_ = n_ + m_ + art;
    t_.assign(m_ + 2, std::vector<double>(cols_ + 1, 0.0));
    basis_.resize(m_);
    std::size_t next_art = n_ + m_;
    for (std::size_t i = 0; i < m_; ++i) {
      const double sign = b[i] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) t_[i][j] = sign * a[i][j];
      t_[i][n_ + i] = sign;
      t_[i][cols_] = sign * b[i];
      if (sign < 0.0) {
        t_[i][next_art] = 1.0;
        basis_[i] = next_art++;
      } else {
        basis_[i] = n_ + i;
      }
    }
    // Row m_: phase 2 objective; row m_ + 1: phase 1 (sum of artificials).
    for (std::size_t j = 0; j < n_; ++j) t_[m_][j] = -c[j];
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] >= n_ + m_) {
        for (std::size_t j = 0; j <= cols_; ++j) {
          if (j < n_ + m_ || j == cols_) t_[m_ + 1][j] -= t_[i][j];
        }
      }
    }
  }

  double solve() {
    run(m_ + 1, cols_);
    if (t_[m_ + 1][cols_] < -1e-9) throw std::runtime_error("infeasible");
    // Drive remaining artificials out of the basis where possible.
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_ + m_) continue;
      for (std::size_t j = 0; j < n_ + m_; ++j) {
        if (std::abs(t_[i][j]) > 1e-9) {
          pivot(i, j);
          break;
        }
      }
    }
    run(m_, n_ + m_);
    return t_[m_][cols_];
  }

 private:
  void run(std::size_t obj, std::size_t allowed) {
    const double tol = 1e-11;
    int degenerate = 0;
    for (int iter = 0; iter < 200000; ++iter) {
      const bool bland = degenerate > 50;
      std::size_t enter = allowed;
      double most = -tol;
      for (std::size_t j = 0; j < allowed; ++j) {
        if (t_[obj][j] < most) {
          enter = j;
          if (bland) break;
          most = t_[obj][j];
        }
      }
      if (enter == allowed) return;
      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        if (t_[i][enter] > tol) {
          const double ratio = t_[i][cols_] / t_[i][enter];
          if (ratio < best - 1e-13 ||
              (ratio <= best + 1e-13 && leave < m_ && basis_[i] < basis_[leave])) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave == m_) throw std::runtime_error("unbounded");
      degenerate = best <= 1e-13 ? degenerate + 1 : 0;
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex did not terminate");
  }

  void pivot(std::size_t row, std::size_t col) {
    const double piv = t_[row][col];
    for (auto& v : t_[row]) v /= piv;
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (i == row || t_[i][col] == 0.0) continue;
      const double f = t_[i][col];
      for (std::size_t j = 0; j <= cols_; ++j) t_[i][j] -= f * t_[row][j];
    }
    basis_[row] = col;
  }

  std::size_t m_, n_, cols_ = 0;
  std::vector<std::vector<double>> t_;
  std::vector<std::size_t> basis_;
};

// The bounded Lipschitz LP on the union support, with phi_i = u_i - a and
// variables (u_1..u_k, a, L) >= 0, solved through its dual
//   min b^T y  s.t.  A^T y >= c, y >= 0,
// which has k + 2 rows instead of O(k^2).
double lp_oracle(const AtomicMeasure& mu, const AtomicMeasure& nu) {
  std::vector<Vec> pts;
  std::vector<double> c;
  auto add = [&](const MeasureAtom& at, double sign) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i] == at.x) {
        c[i] += sign * at.mass;
        return;
      }
    }
    pts.push_back(at.x);
    c.push_back(sign * at.mass);
  };
  for (const auto& at : mu.atoms()) add(at, 1.0);
  for (const auto& at : nu.atoms()) add(at, -1.0);
  const std::size_t k = pts.size();
  const std::size_t nv = k + 2;
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> r(nv, 0.0);
    r[i] = 1.0;
    r[k] = -2.0;
    rows.push_back(r);
    rhs.push_back(0.0);
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      std::vector<double> q(nv, 0.0);
      q[i] = 1.0;
      q[j] = -1.0;
      q[k + 1] = -(pts[i] - pts[j]).norm();
      rows.push_back(q);
      rhs.push_back(0.0);
    }
  }
  std::vector<double> budget(nv, 0.0);
  budget[k] = budget[k + 1] = 1.0;
  rows.push_back(budget);
  rhs.push_back(1.0);
  std::vector<double> obj(nv, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    obj[i] = c[i];
    total += c[i];
  }
  obj[k] = -total;
  // Dual: max -b^T y  s.t.  -A^T y <= -obj.
  const std::size_t m = rows.size();
  std::vector<std::vector<double>> at(nv, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < nv; ++j) at[j][i] = -rows[i][j];
  }
  std::vector<double> dual_rhs(nv), dual_obj(m);
  for (std::size_t j = 0; j < nv; ++j) dual_rhs[j] = -obj[j];
  for (std::size_t i = 0; i < m; ++i) dual_obj[i] = -rhs[i];
  return -Simplex(at, dual_rhs, dual_obj).solve();
}

AtomicMeasure random_measure(std::mt19937_64& rng, int count, int n, double lattice = 0.0) {
  std::uniform_real_distribution<double> pos(-1.0, 1.0);
  std::uniform_real_distribution<double> mass(0.05, 1.0);
  std::vector<MeasureAtom> atoms;
  for (int i = 0; i < count; ++i) {
    Vec x(n);
    for (int j = 0; j < n; ++j) {
      x(j) = pos(rng);
      if (lattice > 0.0) x(j) = std::round(x(j) / lattice) * lattice;
    }
    atoms.push_back({x, mass(rng)});
  }
  return AtomicMeasure(atoms);
}

double delta(const AtomicMeasure& a, const AtomicMeasure& b) {
  return bounded_lipschitz_distance(a, b).value;
}

}  // namespace

TEST(Distance, IdenticalMeasuresGiveZero) {
  std::mt19937_64 rng(1);
  const auto mu = random_measure(rng, 20, 2);
  EXPECT_NEAR(delta(mu, mu), 0.0, 1e-14);
}

TEST(Distance, TwoDiracs) {
  const AtomicMeasure a({{make_vec({0, 0}), 1.0}});
  const AtomicMeasure b({{make_vec({1, 0}), 1.0}});
  // max_a min(2a, (1 - a)) over a in [0, 1] = 2/3
  const auto r = bounded_lipschitz_distance(a, b);
  EXPECT_NEAR(r.value, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.a, 1.0 / 3.0, 1e-9);
  EXPECT_NEAR(lp_oracle(a, b), 2.0 / 3.0, 1e-12);
}

TEST(Distance, DiracVersusZero) {
  const AtomicMeasure a({{make_vec({0, 0}), 1.0}});
  EXPECT_NEAR(delta(a, AtomicMeasure()), 1.0, 1e-14);
  EXPECT_NEAR(lp_oracle(a, AtomicMeasure()), 1.0, 1e-12);
}

TEST(Distance, MatchesSimplexOracle) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 3;
    const int ka = 1 + trial % 20, kb = 1 + (trial * 7) % 25;
    // Lattice positions exercise merged supports.
    const double lattice = trial % 4 == 3 ? 0.5 : 0.0;
    const auto mu = random_measure(rng, ka, n, lattice);
    const auto nu = random_measure(rng, kb, n, lattice);
    EXPECT_NEAR(delta(mu, nu), lp_oracle(mu, nu), 1e-6) << "trial " << trial;
  }
}

TEST(Distance, MatchesSimplexOracleFiftyAtoms) {
  std::mt19937_64 rng(3);
  const auto mu = random_measure(rng, 25, 2);
  const auto nu = random_measure(rng, 25, 2);
  EXPECT_NEAR(delta(mu, nu), lp_oracle(mu, nu), 1e-6);
}

TEST(Distance, MetricProperties) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_measure(rng, 15, 2);
    const auto b = random_measure(rng, 12, 2);
    const auto c = random_measure(rng, 18, 2);
    const double ab = delta(a, b), ba = delta(b, a), bc = delta(b, c), ac = delta(a, c);
    EXPECT_NEAR(ab, ba, 1e-10);
    EXPECT_LE(ac, ab + bc + 1e-8);
    // phi = +-1 is feasible, so Delta <= |mu - nu|(R^n).
    double tv = 0.0;
    for (const auto& x : a.atoms()) tv += x.mass;
    for (const auto& x : b.atoms()) tv += x.mass;
    EXPECT_LE(ab, tv + 1e-12);
    EXPECT_GE(ab, std::abs(a.total_mass() - b.total_mass()) - 1e-12);
  }
}

TEST(Distance, TotalVariationBoundWithSharedSupport) {
  std::mt19937_64 rng(5);
  const auto a = random_measure(rng, 30, 2, 0.25);
  const auto b = random_measure(rng, 30, 2, 0.25);
  std::map<std::pair<double, double>, double> diff;
  for (const auto& x : a.atoms()) diff[{x.x(0), x.x(1)}] += x.mass;
  for (const auto& x : b.atoms()) diff[{x.x(0), x.x(1)}] -= x.mass;
  double tv = 0.0;
  for (const auto& [k, v] : diff) tv += std::abs(v);
  EXPECT_LE(delta(a, b), tv + 1e-12);
}

TEST(Distance, RejectsOversizedSupport) {
  std::mt19937_64 rng(9);
  const auto a = random_measure(rng, 30, 2);
  DistanceOptions opts;
  opts.max_support = 10;
  EXPECT_THROW(bounded_lipschitz_distance(a, AtomicMeasure(), opts), InvalidArgument);
  const AtomicMeasure b({{make_vec({0, 0, 0}), 1.0}});
  EXPECT_THROW(bounded_lipschitz_distance(a, b), DimensionMismatch);
  EXPECT_THROW(AtomicMeasure({{make_vec({0, 0}), -1.0}}), InvalidArgument);
}

TEST(Atomize, PointCloudIsIdentity) {
  Mat b(2, 1);
  b << 1, 0;
  const Plane p = Plane::from_basis(b);
  const Varifold v = PointCloudVarifold(1, 2, {{make_vec({0, 1}), p, 2.0}, {make_vec({3, 1}), p, 0.5}});
  const auto m = atomize(v);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.atoms()[0].x, make_vec({0, 1}));
  EXPECT_EQ(m.atoms()[1].mass, 0.5);
}

TEST(Atomize, VolumetricAgainstSample) {
  const auto sample = sample_surface(AnalyticShape::circle(1.0), 32 * 63);
  const Mesh mesh = Mesh::centered_box(2, 1.5, 0.1 / std::sqrt(2.0));
  const Varifold vh = discretize(sample, mesh);
  const auto cells = atomize(vh);
  EXPECT_NEAR(cells.total_mass(), mass_total(vh), 1e-13);
  const auto thin = sample_surface(AnalyticShape::circle(1.0), 500);
  const double d = delta(cells, atomize(thin));
  EXPECT_LE(d, mesh.diameter() * 2.0 * std::numbers::pi);
}

TEST(Ahlfors, UnitCircle) {
  const std::vector<double> radii{0.1, 0.25, 0.5, 1.0};
  const Varifold v = SampledManifoldVarifold(sample_surface(AnalyticShape::circle(1.0), 4096));
  std::vector<Vec> probes;
  for (int k = 0; k < 16; ++k) {
    const double t = 2.0 * std::numbers::pi * (k + 0.5) / 16;
    probes.push_back(make_vec({std::cos(t), std::sin(t)}));
  }
  const auto r = ahlfors_estimate(v, radii, probes);
  EXPECT_TRUE(r.finite);
  // Arc length inside B(x, r) on the unit circle is 4 arcsin(r / 2).
  double oracle = 0.0;
  for (double rad : radii) {
    const double m = 4.0 * std::asin(rad / 2.0);
    oracle = std::max({oracle, m / rad, rad / m});
  }
  EXPECT_GE(r.c0, 2.0);
  EXPECT_LE(r.c0, 2.2);
  EXPECT_NEAR(r.c0, oracle, 5e-3);
}

TEST(Ahlfors, UnitSphere) {
  const std::vector<double> radii{0.25, 0.5, 1.0};
  const Varifold v = SampledManifoldVarifold(sample_surface(AnalyticShape::sphere(1.0), 512));
  std::vector<Vec> probes{make_vec({1, 0, 0}), make_vec({0, 0, 1}), make_vec({0, -1, 0}),
                          make_vec({0.6, 0.0, 0.8})};
  const auto r = ahlfors_estimate(v, radii, probes);
  // A chord ball of radius r cuts a cap of area pi r^2 from the unit sphere.
  EXPECT_LE(r.c0, std::numbers::pi + 0.1);
  EXPECT_NEAR(r.c0, std::numbers::pi, 0.05);
}

TEST(Ahlfors, PointCloudSentinel) {
  Mat b(2, 1);
  b << 1, 0;
  const Varifold v = PointCloudVarifold(1, 2, {{make_vec({0, 0}), Plane::from_basis(b), 1.0}});
  const std::vector<double> radii{0.5};
  const std::vector<Vec> probes{make_vec({0, 0})};
  const auto r = ahlfors_estimate(v, radii, probes);
  EXPECT_FALSE(r.finite);
  EXPECT_TRUE(std::isinf(r.c0));
  EXPECT_FALSE(r.note.empty());
}

TEST(Ahlfors, EmptyBallReportsWitness) {
  const Varifold v = SampledManifoldVarifold(sample_surface(AnalyticShape::circle(1.0), 64));
  const std::vector<double> radii{0.1, 0.5};
  const std::vector<Vec> probes{make_vec({1, 0}), make_vec({5, 5})};
  const auto r = ahlfors_estimate(v, radii, probes);
  EXPECT_FALSE(r.finite);
  EXPECT_EQ(r.witness_probe, 1u);
  EXPECT_EQ(r.witness_radius, 0.1);
}

TEST(Distance, CsvLayout) {
  const std::vector<DistanceRow> rows{{"h=0.1", {0.25, 0.3, 0.7, 4}}};
  std::stringstream ss;
  write_distance_csv(ss, rows);
  EXPECT_EQ(ss.str(), "label,delta,iterations\nh=0.1,0.25,4\n");
}
