#include "volvar/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>

namespace volvar {

AtomicMeasure::AtomicMeasure(std::vector<MeasureAtom> atoms) {
  atoms_.reserve(atoms.size());
  for (auto& a : atoms) {
    if (a.mass < 0.0) throw InvalidArgument("AtomicMeasure: negative mass");
    if (!atoms_.empty() && a.x.size() != atoms_.front().x.size()) {
      throw DimensionMismatch("AtomicMeasure: atoms of different dimension");
    }
    if (a.mass > 0.0) atoms_.push_back(std::move(a));
  }
}

double AtomicMeasure::total_mass() const {
  CompensatedSum s;
  for (const auto& a : atoms_) s.add(a.mass);
  return s.value();
}

AtomicMeasure atomize(const Varifold& v) {
  std::vector<MeasureAtom> atoms;
  if (const auto* vol = std::get_if<VolumetricVarifold>(&v)) {
    atoms.reserve(vol->cells().size());
    for (const auto& c : vol->cells()) atoms.push_back({vol->mesh().cell_center(c.index), c.mass});
  } else {
    for_each_quadrature_atom(v, 1, [&](const Vec& x, const Plane&, double m) {
      atoms.push_back({x, m});
    });
  }
  return AtomicMeasure(std::move(atoms));
}

AtomicMeasure atomize(const WeightedSample& sample) {
  std::vector<MeasureAtom> atoms;
  atoms.reserve(sample.points.size());
  for (const auto& p : sample.points) atoms.push_back({p.x, p.weight});
  return AtomicMeasure(std::move(atoms));
}

namespace {

// Net signed mass on the merged support, in first-appearance order.
struct SignedSupport {
  std::vector<Vec> x;
  std::vector<double> f;
};

SignedSupport merge(const AtomicMeasure& mu, const AtomicMeasure& nu) {
  auto key = [](const Vec& x) {
    std::array<double, kMaxAmbient> k{0.0, 0.0, 0.0};
    for (Eigen::Index i = 0; i < x.size(); ++i) k[i] = x(i);
    return k;
  };
  std::map<std::array<double, kMaxAmbient>, std::size_t> index;
  std::vector<Vec> xs;
  std::vector<CompensatedSum> sums;
  auto add = [&](const MeasureAtom& a, double sign) {
    auto [it, inserted] = index.try_emplace(key(a.x), xs.size());
    if (inserted) {
      xs.push_back(a.x);
      sums.emplace_back();
    }
    sums[it->second].add(sign * a.mass);
  };
  for (const auto& a : mu.atoms()) add(a, 1.0);
  for (const auto& a : nu.atoms()) add(a, -1.0);
  if (!mu.atoms().empty() && !nu.atoms().empty() &&
      mu.atoms().front().x.size() != nu.atoms().front().x.size()) {
    throw DimensionMismatch("bounded_lipschitz_distance: measures live in different spaces");
  }
  SignedSupport out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = sums[i].value();
    if (f != 0.0) {
      out.x.push_back(xs[i]);
      out.f.push_back(f);
    }
  }
  return out;
}

// Min-cost flow by successive shortest paths with potentials and a binary
// heap Dijkstra. All original costs are nonnegative.
class MinCostFlow {
 public:
  explicit MinCostFlow(std::size_t nodes) : adj_(nodes) {}

  /// Returns the arc id; the flow on it is residual(id ^ 1).
  std::size_t add_arc(std::size_t u, std::size_t v, double capacity, double cost) {
    const std::size_t id = to_.size();
    to_.push_back(v);
    cap_.push_back(capacity);
    cost_.push_back(cost);
    adj_[u].push_back(id);
    to_.push_back(u);
    cap_.push_back(0.0);
    cost_.push_back(-cost);
    adj_[v].push_back(id + 1);
    return id;
  }

  double flow(std::size_t arc) const { return cap_[arc ^ 1]; }

  void run(std::size_t s, std::size_t t, double negligible) {
    const std::size_t n = adj_.size();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> potential(n, 0.0);
    std::vector<double> dist(n);
    std::vector<std::size_t> via(n);
    std::vector<char> done(n);
    using Entry = std::pair<double, std::size_t>;
    std::vector<Entry> heap;
    while (true) {
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(done.begin(), done.end(), 0);
      dist[s] = 0.0;
      heap.assign(1, {0.0, s});
      while (!heap.empty()) {
        std::pop_heap(heap.begin(), heap.end(), std::greater<>{});
        const auto [du, u] = heap.back();
        heap.pop_back();
        if (done[u]) continue;
        done[u] = 1;
        if (u == t) break;
        for (std::size_t e : adj_[u]) {
          const std::size_t v = to_[e];
          if (done[v] || cap_[e] <= negligible) continue;
          // Reduced costs are nonnegative up to rounding; the clamp keeps Dijkstra sound.
          const double nd = du + std::max(0.0, cost_[e] + potential[u] - potential[v]);
          if (nd < dist[v]) {
            dist[v] = nd;
            via[v] = e;
            heap.push_back({nd, v});
            std::push_heap(heap.begin(), heap.end(), std::greater<>{});
          }
        }
      }
      if (dist[t] == kInf) return;
      for (std::size_t v = 0; v < n; ++v) potential[v] += std::min(dist[v], dist[t]);
      double push = kInf;
      for (std::size_t v = t; v != s; v = to_[via[v] ^ 1]) push = std::min(push, cap_[via[v]]);
      for (std::size_t v = t; v != s; v = to_[via[v] ^ 1]) {
        cap_[via[v]] -= push;
        cap_[via[v] ^ 1] += push;
      }
    }
  }

 private:
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<std::size_t> to_;
  std::vector<double> cap_;
  std::vector<double> cost_;
};

// Cost of the optimal transport plan at split a: (1 - a) T + a U, with T the
// matched transport length and U the unmatched mass.
struct Line {
  double transport = 0.0;
  double unmatched = 0.0;
  double at(double a) const { return (1.0 - a) * transport + a * unmatched; }
};

Line solve_split(const SignedSupport& sup, double a, double negligible) {
  const std::size_t k = sup.f.size();
  constexpr std::size_t s = 0, t = 1, g_in = 2, g_out = 3, first = 4;
  MinCostFlow flow(k + first);
  const double lip = 1.0 - a;
  CompensatedSum supply;
  CompensatedSum demand;
  for (std::size_t i = 0; i < k; ++i) (sup.f[i] > 0.0 ? supply : demand).add(std::abs(sup.f[i]));
  flow.add_arc(s, g_in, demand.value(), 0.0);
  flow.add_arc(g_in, g_out, demand.value() + supply.value(), 0.0);
  flow.add_arc(g_out, t, supply.value(), 0.0);
  struct Match {
    std::size_t arc;
    double length;
  };
  std::vector<Match> matches;
  std::vector<std::size_t> dumps;
  for (std::size_t i = 0; i < k; ++i) {
    if (sup.f[i] > 0.0) {
      flow.add_arc(s, first + i, sup.f[i], 0.0);
      dumps.push_back(flow.add_arc(first + i, g_out, sup.f[i], a));
      for (std::size_t j = 0; j < k; ++j) {
        if (sup.f[j] >= 0.0) continue;
        const double length = (sup.x[i] - sup.x[j]).norm();
        // Otherwise leaving both ends unmatched is at least as cheap.
        if (lip * length < 2.0 * a) {
          matches.push_back({flow.add_arc(first + i, first + j, sup.f[i], lip * length), length});
        }
      }
    } else {
      dumps.push_back(flow.add_arc(g_in, first + i, -sup.f[i], a));
      flow.add_arc(first + i, t, -sup.f[i], 0.0);
    }
  }
  flow.run(s, t, negligible);
  CompensatedSum transport;
  CompensatedSum unmatched;
  for (const auto& m : matches) transport.add(flow.flow(m.arc) * m.length);
  for (std::size_t arc : dumps) unmatched.add(flow.flow(arc));
  return Line{transport.value(), unmatched.value()};
}

// argmax over [0, 1] of min_l l(a); ties resolved toward smaller a.
std::pair<double, double> model_max(const std::vector<Line>& lines) {
  auto model = [&](double a) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& l : lines) m = std::min(m, l.at(a));
    return m;
  };
  std::vector<double> candidates{0.0, 1.0};
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const double si = lines[i].unmatched - lines[i].transport;
      const double sj = lines[j].unmatched - lines[j].transport;
      if (si == sj) continue;
      const double a = (lines[j].transport - lines[i].transport) / (si - sj);
      if (a > 0.0 && a < 1.0) candidates.push_back(a);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  double best_a = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (double a : candidates) {
    const double m = model(a);
    if (m > best) {
      best = m;
      best_a = a;
    }
  }
  return {best_a, best};
}

}  // namespace

DistanceResult bounded_lipschitz_distance(const AtomicMeasure& mu, const AtomicMeasure& nu,
                                          const DistanceOptions& options) {
  const SignedSupport sup = merge(mu, nu);
  if (sup.f.size() > options.max_support) {
    throw InvalidArgument("bounded_lipschitz_distance: merged support of " +
                          std::to_string(sup.f.size()) + " atoms exceeds the cap of " +
                          std::to_string(options.max_support));
  }
  DistanceResult result;
  if (sup.f.empty()) return result;

  double total = 0.0;
  for (double f : sup.f) total += std::abs(f);
  const double negligible = 1e-15 * total;

  // Leaving everything unmatched is feasible for every split.
  std::vector<Line> lines{Line{0.0, total}};
  double best_value = -1.0;
  double best_a = 0.0;
  auto evaluate = [&](double a) {
    const Line line = solve_split(sup, a, negligible);
    lines.push_back(line);
    ++result.iterations;
    const double v = line.at(a);
    if (v > best_value) {
      best_value = v;
      best_a = a;
    }
  };
  evaluate(1.0);
  while (result.iterations < options.max_iterations) {
    const auto [a, bound] = model_max(lines);
    if (bound - best_value <= options.tolerance * total) break;
    evaluate(a);
  }
  if (result.iterations >= options.max_iterations) {
    const auto [a, bound] = model_max(lines);
    (void)a;
    if (bound - best_value > 1e-9 * total) {
      throw NumericalFailure("bounded_lipschitz_distance: cutting planes did not converge");
    }
  }
  result.value = std::max(0.0, best_value);
  result.a = best_a;
  result.lip = 1.0 - best_a;
  return result;
}

AhlforsResult ahlfors_estimate(const Varifold& v, std::span<const double> radii,
                               std::span<const Vec> probes, int subdivisions) {
  AhlforsResult out;
  const int d = varifold_dim(v);
  if (radii.empty() || probes.empty()) {
    throw InvalidArgument("ahlfors_estimate: need at least one radius and one probe");
  }
  for (double r : radii) {
    if (!(r > 0.0)) throw InvalidArgument("ahlfors_estimate: radii must be positive");
  }
  if (std::holds_alternative<PointCloudVarifold>(v) && d >= 1) {
    out.c0 = std::numeric_limits<double>::infinity();
    out.finite = false;
    out.witness_radius = *std::min_element(radii.begin(), radii.end());
    out.note = "atomic measure is not d-Ahlfors regular (ratio r^d / mass unbounded as r -> 0)";
    return out;
  }
  std::vector<Vec> xs;
  std::vector<double> ms;
  for_each_quadrature_atom(v, subdivisions, [&](const Vec& x, const Plane&, double m) {
    xs.push_back(x);
    ms.push_back(m);
  });
  for (std::size_t p = 0; p < probes.size(); ++p) {
    if (probes[p].size() != varifold_ambient(v)) {
      throw DimensionMismatch("ahlfors_estimate: probe dimension mismatch");
    }
    for (double r : radii) {
      CompensatedSum ball;
      for (std::size_t j = 0; j < xs.size(); ++j) {
        if ((xs[j] - probes[p]).norm() <= r) ball.add(ms[j]);
      }
      const double mass = ball.value();
      const double rd = std::pow(r, d);
      if (!(mass > 0.0)) {
        out.c0 = std::numeric_limits<double>::infinity();
        out.finite = false;
        out.witness_probe = p;
        out.witness_radius = r;
        out.witness_mass = 0.0;
        out.note = "empty ball";
        return out;
      }
      const double ratio = std::max(mass / rd, rd / mass);
      if (ratio > out.c0) {
        out.c0 = ratio;
        out.witness_probe = p;
        out.witness_radius = r;
        out.witness_mass = mass;
      }
    }
  }
  return out;
}

void write_distance_csv(std::ostream& out, std::span<const DistanceRow> rows) {
  out << "label,delta,iterations\n" << std::setprecision(17);
  for (const auto& row : rows) {
    out << row.label << ',' << row.result.value << ',' << row.result.iterations << '\n';
  }
}

}  // namespace volvar
