#include "volvar/experiment.hpp"

#include "volvar/discretization.hpp"
#include "volvar/metrics.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#ifndef VOLVAR_VERSION
#define VOLVAR_VERSION "unknown"
#endif

namespace volvar {

namespace fs = std::filesystem;
using boost::property_tree::ptree;

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::curvature_convergence: return "curvature-convergence";
    case ExperimentKind::discretization_stability: return "discretization-stability";
    case ExperimentKind::brakke_residual: return "brakke-residual";
    case ExperimentKind::distance_check: return "distance-check";
    case ExperimentKind::ahlfors_scan: return "ahlfors-scan";
    case ExperimentKind::constants_ledger: return "constants-ledger";
  }
  return "?";
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// --- config reading --------------------------------------------------------

class Reader {
 public:
  explicit Reader(const ptree& root) : root_(root) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    const auto sec = root_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    used_.insert(section + "." + key);
    return trim(*v);
  }

  std::string text(const std::string& s, const std::string& k, const std::string& def) {
    return raw(s, k).value_or(def);
  }

  std::optional<double> number(const std::string& s, const std::string& k) {
    const auto v = raw(s, k);
    if (!v) return std::nullopt;
    return parse_number(*v, s, k);
  }
  double number(const std::string& s, const std::string& k, double def) {
    return number(s, k).value_or(def);
  }

  int integer(const std::string& s, const std::string& k, int def) {
    const auto v = number(s, k);
    if (!v) return def;
    if (*v != std::floor(*v) || std::abs(*v) > 1e9) {
      throw ConfigError("[" + s + "] " + k + ": expected an integer");
    }
    return static_cast<int>(*v);
  }

  std::optional<std::vector<double>> list(const std::string& s, const std::string& k) {
    const auto v = raw(s, k);
    if (!v) return std::nullopt;
    std::vector<double> out;
    std::string item;
    std::istringstream in(*v);
    while (std::getline(in, item, ',')) out.push_back(parse_number(trim(item), s, k));
    if (out.empty()) throw ConfigError("[" + s + "] " + k + ": empty list");
    return out;
  }

  bool boolean(const std::string& s, const std::string& k, bool def) {
    const auto v = raw(s, k);
    if (!v) return def;
    if (*v == "true" || *v == "yes" || *v == "1" || *v == "on") return true;
    if (*v == "false" || *v == "no" || *v == "0" || *v == "off") return false;
    throw ConfigError("[" + s + "] " + k + ": expected true or false, got '" + *v + "'");
  }

  /// number, or nullopt for "auto" / absent.
  std::optional<double> number_or_auto(const std::string& s, const std::string& k) {
    const auto v = raw(s, k);
    if (!v || *v == "auto") return std::nullopt;
    return parse_number(*v, s, k);
  }

  void mark_section(const std::string& s) {
    if (const auto sec = root_.get_child_optional(s)) {
      for (const auto& [k, _] : *sec) used_.insert(s + "." + k);
    }
  }

  void reject_unknown() const {
    for (const auto& [section, child] : root_) {
      if (child.empty() && !child.data().empty()) {
        throw ConfigError("key '" + section + "' outside a section");
      }
      for (const auto& [key, _] : child) {
        if (!used_.count(section + "." + key)) {
          throw ConfigError("unknown key [" + section + "] " + key);
        }
      }
    }
  }

  static double parse_number(const std::string& v, const std::string& s, const std::string& k) {
    double x = 0.0;
    const char* first = v.data();
    const char* last = v.data() + v.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || ptr != last || !std::isfinite(x)) {
      throw ConfigError("[" + s + "] " + k + ": '" + v + "' is not a number");
    }
    return x;
  }

 private:
  const ptree& root_;
  std::set<std::string> used_;
};

ExperimentKind parse_kind(const std::string& name) {
  for (auto k : {ExperimentKind::curvature_convergence, ExperimentKind::discretization_stability,
                 ExperimentKind::brakke_residual, ExperimentKind::distance_check,
                 ExperimentKind::ahlfors_scan, ExperimentKind::constants_ledger}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown experiment kind '" + name + "'");
}

ResidualMode parse_mode(const std::string& name) {
  for (auto m : {ResidualMode::discrete, ResidualMode::exact_measure,
                 ResidualMode::exact_curvature}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown residual mode '" + name + "'");
}

void require_positive(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!(x > 0.0)) throw ConfigError(std::string(what) + " values must be > 0");
  }
}

std::string serialize(const ptree& root) {
  std::ostringstream os;
  boost::property_tree::ini_parser::write_ini(os, root);
  return os.str();
}

ExperimentConfig from_tree(const ptree& root) {
  Reader r(root);
  ExperimentConfig c;
  const auto kind = r.raw("experiment", "kind");
  if (!kind) throw ConfigError("missing [experiment] kind");
  c.kind = parse_kind(*kind);
  {
    const auto seed = r.raw("experiment", "seed");
    if (seed) {
      std::uint64_t s = 0;
      const auto [ptr, ec] = std::from_chars(seed->data(), seed->data() + seed->size(), s);
      if (ec != std::errc() || ptr != seed->data() + seed->size()) {
        throw ConfigError("[experiment] seed: expected a nonnegative integer");
      }
      c.seed = s;
    }
  }
  c.output = r.text("experiment", "output", "");

  c.shape_name = r.text("shape", "name", "circle");
  if (const auto sec = root.get_child_optional("shape")) {
    for (const auto& [key, value] : *sec) {
      if (key == "name") continue;
      c.shape_params[key] = Reader::parse_number(trim(value.data()), "shape", key);
    }
  }
  r.mark_section("shape");

  c.kernel_name = r.text("kernel", "name", "natural");
  c.kernel_exponent = r.integer("kernel", "exponent", 4);
  c.half_width = r.number("domain", "half_width");

  const bool brakke = c.kind == ExperimentKind::brakke_residual;
  const bool stability = c.kind == ExperimentKind::discretization_stability;
  std::vector<double> default_eps;
  if (c.kind == ExperimentKind::curvature_convergence) default_eps = {0.4, 0.2, 0.1, 0.05};
  if (brakke) default_eps = {0.4, 0.3, 0.2};
  if (stability) default_eps = {0.2};
  c.epsilons = r.list("sweep", "epsilons").value_or(default_eps);
  for (double e : c.epsilons) {
    if (!(e > 0.0 && e <= 1.0)) throw ConfigError("[sweep] epsilons must lie in (0, 1]");
  }
  c.coupling_power = r.number("sweep", "coupling_power");
  if (c.coupling_power && !(*c.coupling_power > 0.0)) {
    throw ConfigError("[sweep] coupling_power must be > 0");
  }
  c.h_values = r.list("sweep", "h").value_or(std::vector<double>{});
  c.edges = r.list("sweep", "edges").value_or(std::vector<double>{0.1, 0.05, 0.025});
  c.stability_h = r.list("sweep", "stability_h").value_or(std::vector<double>{});
  require_positive(c.h_values, "[sweep] h");
  require_positive(c.edges, "[sweep] edges");
  require_positive(c.stability_h, "[sweep] stability_h");
  if (c.coupling_power && !c.h_values.empty()) {
    throw ConfigError("[sweep] give either h or coupling_power, not both");
  }
  if (brakke) {
    if (c.h_values.empty() && !c.coupling_power) c.coupling_power = 4.0;
    if (!c.h_values.empty() && c.h_values.size() != 1 && c.h_values.size() != c.epsilons.size()) {
      throw ConfigError("[sweep] h must have one value or one per epsilon");
    }
  }
  if (c.kind == ExperimentKind::distance_check && c.h_values.empty()) c.h_values = {0.1};
  if (stability) {
    if (c.epsilons.size() != 1) {
      throw ConfigError("discretization-stability takes exactly one epsilon");
    }
    if (c.h_values.empty()) c.h_values = {0.1, 0.05, 0.025};
    if (c.stability_h.empty()) {
      const double e = c.epsilons[0];
      c.stability_h = {e / 16, e / 32, e / 64};
    }
  }
  if (c.kind == ExperimentKind::curvature_convergence && c.epsilons.size() < 2) {
    throw ConfigError("curvature-convergence needs at least two epsilons");
  }

  c.resolution = r.integer("sampling", "resolution", 4096);
  c.probes = r.integer("sampling", "probes", 32);
  c.samples_per_cell = r.integer("sampling", "samples_per_cell", 32);
  if (c.resolution < 8 || c.probes < 1 || c.samples_per_cell < 1) {
    throw ConfigError("[sampling] resolution >= 8, probes >= 1, samples_per_cell >= 1");
  }

  c.t1 = r.number("brakke", "t1", 0.0);
  c.t2 = r.number("brakke", "t2", 0.125);
  c.nt = r.integer("brakke", "nt", 64);
  c.mode = parse_mode(r.text("brakke", "mode", "discrete"));
  c.enforce_gamma = r.boolean("brakke", "enforce_gamma", true);
  c.control = r.boolean("brakke", "control", true);
  c.phi_center = r.list("brakke", "phi_center");
  c.phi_inner = r.number("brakke", "phi_inner");
  c.phi_outer = r.number("brakke", "phi_outer");
  c.phi_height = r.number("brakke", "phi_height", 1.0);
  if (!(c.t2 > c.t1) || c.t1 < 0.0) throw ConfigError("[brakke] need 0 <= t1 < t2");
  if (c.nt < 2) throw ConfigError("[brakke] nt must be >= 2");

  c.c0 = r.number_or_auto("ledger", "c0");
  c.c1 = r.number_or_auto("ledger", "c1");
  c.c2 = r.number_or_auto("ledger", "c2");
  c.lambda_max = r.number_or_auto("ledger", "lambda_max");
  c.mass0 = r.number_or_auto("ledger", "mass0");
  c.phi_c1 = r.number_or_auto("ledger", "phi_c1");
  c.horizon = r.number("ledger", "horizon", brakke ? c.t2 : 0.125);
  c.c1_epsilons = r.list("ledger", "c1_epsilons").value_or(c.c1_epsilons);
  require_positive(c.c1_epsilons, "[ledger] c1_epsilons");

  c.radii = r.list("ahlfors", "radii").value_or(c.radii);
  require_positive(c.radii, "[ahlfors] radii");
  c.ahlfors_probes = r.integer("ahlfors", "probes", 16);
  if (c.ahlfors_probes < 1) throw ConfigError("[ahlfors] probes must be >= 1");

  c.atoms = r.integer("distance", "atoms", 500);
  if (c.atoms < 8) throw ConfigError("[distance] atoms must be >= 8");
  c.test_functions = r.integer("measure", "test_functions", 20);
  if (c.test_functions < 1) throw ConfigError("[measure] test_functions must be >= 1");

  r.reject_unknown();
  c.canonical = serialize(root);
  return c;
}

// --- shared computations ---------------------------------------------------

AnalyticShape make_shape(const ExperimentConfig& c) {
  try {
    return AnalyticShape::from_config(c.shape_name, c.shape_params);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("[shape] ") + e.what());
  }
}

KernelPair make_kernel(const ExperimentConfig& c, const AnalyticShape& shape) {
  try {
    return KernelPair::from_name(c.kernel_name, shape.ambient(), shape.dim(), c.kernel_exponent);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("[kernel] ") + e.what());
  }
}

double half_width_of(const ExperimentConfig& c, const AnalyticShape& shape) {
  if (c.half_width) return *c.half_width;
  const double e = c.epsilons.empty() ? 0.0 : *std::max_element(c.epsilons.begin(), c.epsilons.end());
  return shape.bounding_radius() + e + 0.25;
}

Mesh box_mesh(const ExperimentConfig& c, const AnalyticShape& shape, double edge) {
  const double w = half_width_of(c, shape);
  const int n = shape.ambient();
  const Vec center = shape.center();
  return Mesh(center - Vec::Constant(n, w), center + Vec::Constant(n, w), edge);
}

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  if (m < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double md = static_cast<double>(m);
  return (md * sxy - sx * sy) / (md * sxx - sx * sx);
}

TestFunction default_phi(const ExperimentConfig& c, const AnalyticShape& shape) {
  const double r0 = shape.bounding_radius();
  Vec center = shape.center();
  if (c.phi_center) {
    if (static_cast<int>(c.phi_center->size()) != shape.ambient()) {
      throw ConfigError("[brakke] phi_center needs one coordinate per ambient dimension");
    }
    for (int i = 0; i < shape.ambient(); ++i) center(i) = (*c.phi_center)[i];
  }
  try {
    return TestFunction::bump(center, c.phi_inner.value_or(1.2 * r0),
                              c.phi_outer.value_or(1.6 * r0), c.phi_height);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("[brakke] ") + e.what());
  }
}

struct Measured {
  double c0, c1, c2, lambda_max, mass0, phi_c1;
  GammaBounds gamma;
  ConstantsLedger ledger;
};

Measured measure_constants(const ExperimentConfig& c, const AnalyticShape& shape,
                           const KernelPair& kernel, double phi_c1) {
  Measured m{};
  std::optional<WeightedSample> sample;
  auto get_sample = [&]() -> const WeightedSample& {
    if (!sample) sample = sample_surface(shape, c.resolution);
    return *sample;
  };
  if (c.c0) {
    m.c0 = *c.c0;
  } else {
    const Varifold v = SampledManifoldVarifold(get_sample());
    const auto probes = shape_probe_points(shape, c.ahlfors_probes);
    const auto a = ahlfors_estimate(v, c.radii, probes);
    if (!a.finite) throw NumericalFailure("Ahlfors estimate is infinite: " + a.note);
    m.c0 = a.c0;
  }
  m.c1 = c.c1 ? *c.c1 : measure_C1(shape, kernel, c.c1_epsilons, c.resolution, c.probes);
  m.c2 = c.c2 ? *c.c2 : measure_C2(get_sample());
  m.lambda_max = c.lambda_max ? *c.lambda_max : shape.max_principal_curvature();
  m.mass0 = c.mass0 ? *c.mass0 : shape.total_measure();
  m.phi_c1 = c.phi_c1 ? *c.phi_c1 : phi_c1;
  LedgerInputs in = ledger_inputs(kernel, m.c0, m.c1, m.c2, m.lambda_max, m.mass0, c.horizon,
                                  m.phi_c1);
  m.gamma = gamma_feasible(m.c0, m.lambda_max, in.beta, in.lip_xi, in.d);
  in.gamma = m.gamma.gamma;
  m.ledger = constants_ledger(in);
  return m;
}

std::vector<double> brakke_h(const ExperimentConfig& c) {
  std::vector<double> h;
  for (std::size_t i = 0; i < c.epsilons.size(); ++i) {
    if (c.coupling_power) {
      h.push_back(std::pow(c.epsilons[i], *c.coupling_power));
    } else {
      h.push_back(c.h_values.size() == 1 ? c.h_values[0] : c.h_values[i]);
    }
  }
  return h;
}

/// Portable uniform in [0, 1).
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// --- output ----------------------------------------------------------------

class OutputDir {
 public:
  OutputDir(fs::path dir, ExperimentOutcome& outcome) : dir_(std::move(dir)), outcome_(outcome) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) {
      throw ConfigError("cannot create output directory " + dir_.string());
    }
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    f << content;
    if (!f) throw ConfigError("cannot write " + (dir_ / name).string());
    files_.emplace_back(name, content);
    outcome_.files.push_back(name);
  }

  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

 private:
  fs::path dir_;
  ExperimentOutcome& outcome_;
  std::vector<std::pair<std::string, std::string>> files_;
};

void check(ExperimentOutcome& o, bool ok, const std::string& what) {
  o.checks.push_back(std::string(ok ? "[PASS] " : "[FAIL] ") + what);
  o.passed = o.passed && ok;
}

void note(ExperimentOutcome& o, const std::string& what) { o.checks.push_back("[NOTE] " + what); }

// --- kinds -----------------------------------------------------------------

std::optional<Measured> run_curvature(const ExperimentConfig& c, OutputDir& out,
                                      ExperimentOutcome& o) {
  const AnalyticShape shape = make_shape(c);
  const KernelPair kernel = make_kernel(c, shape);
  const Varifold m = SampledManifoldVarifold(sample_surface(shape, c.resolution));
  const auto probes = shape_probe_points(shape, c.probes);
  std::vector<Vec> exact;
  for (const auto& p : probes) exact.push_back(exact_mean_curvature(shape, p));

  std::vector<double> errors;
  std::vector<CurvatureSample> last;
  for (double eps : c.epsilons) {
    const CurvatureEvaluator eval(m, CurvatureQuery(eps, kernel));
    auto samples = curvature_field(eval, probes);
    double worst = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      if (samples[i].status != CurvatureStatus::ok) {
        throw DenominatorTooSmall("regularized mass too small at an on-shape probe");
      }
      worst = std::max(worst, (samples[i].mean_curvature - exact[i]).norm());
    }
    errors.push_back(worst);
    last = std::move(samples);
  }
  const double slope = loglog_slope(c.epsilons, errors);
  double fitted = 0.0;
  for (std::size_t i = 0; i < errors.size(); ++i) fitted = std::max(fitted, errors[i] / c.epsilons[i]);
  const double c1 = c.c1.value_or(fitted);

  std::ostringstream csv;
  csv << "epsilon,max_error,ratio,bound,fitted_slope\n" << std::setprecision(17);
  for (std::size_t i = 0; i < errors.size(); ++i) {
    csv << c.epsilons[i] << ',' << errors[i] << ',' << errors[i] / c.epsilons[i] << ','
        << c1 * c.epsilons[i] << ',' << slope << '\n';
  }
  out.write("convergence.csv", csv.str());
  std::ostringstream field;
  write_curvature_csv(field, probes, last);
  out.write("curvature_field.csv", field.str());

  check(o, slope >= 0.8, "log-log slope " + num(slope) + " >= 0.8");
  bool within = true;
  for (std::size_t i = 0; i < errors.size(); ++i) within = within && errors[i] <= c1 * c.epsilons[i] * (1 + 1e-12);
  check(o, within, "max error <= C1 eps with C1 = " + num(c1));
  note(o, "fitted C1 = " + num(fitted));
  return std::nullopt;
}

std::optional<Measured> run_stability(const ExperimentConfig& c, OutputDir& out,
                                      ExperimentOutcome& o) {
  const AnalyticShape shape = make_shape(c);
  const KernelPair kernel = make_kernel(c, shape);
  const int n = shape.ambient();
  const double mass_exact = shape.total_measure();

  // Mass bookkeeping: sum m_K against the sample it was built from.
  {
    std::ostringstream csv;
    csv << "edge,h,cells,sum_mK,sample_mass,relative_error\n" << std::setprecision(17);
    double worst = 0.0;
    for (double edge : c.edges) {
      const Mesh mesh = box_mesh(c, shape, edge);
      const int res = std::max(c.resolution,
                               static_cast<int>(std::ceil(c.samples_per_cell * mass_exact / edge)));
      const WeightedSample s = sample_surface(shape, res);
      const VolumetricVarifold v = discretize(s, mesh);
      CompensatedSum sum;
      for (const auto& cell : v.cells()) sum.add(cell.mass);
      const double rel = std::abs(sum.value() - s.total_weight()) / s.total_weight();
      worst = std::max(worst, rel);
      csv << edge << ',' << mesh.diameter() << ',' << v.cells().size() << ',' << sum.value() << ','
          << s.total_weight() << ',' << rel << '\n';
    }
    out.write("mass.csv", csv.str());
    check(o, worst <= 1e-12, "sum m_K matches sampled mass, worst relative error " + num(worst));
  }

  // |M(phi) - V_h(phi)| <= h lip(phi) M(R^n) for seeded Lipschitz phi.
  {
    std::mt19937_64 rng(c.seed);
    struct Wave {
      double a, b;
      Vec w;
    };
    std::vector<std::vector<Wave>> fields;
    std::vector<double> lips;
    for (int f = 0; f < c.test_functions; ++f) {
      std::vector<Wave> waves;
      double lip = 0.0;
      for (int j = 0; j < 3; ++j) {
        Wave wv{2.0 * uniform01(rng) - 1.0, 2.0 * std::numbers::pi * uniform01(rng), Vec(n)};
        for (int i = 0; i < n; ++i) wv.w(i) = 6.0 * uniform01(rng) - 3.0;
        lip += std::abs(wv.a) * wv.w.norm();
        waves.push_back(wv);
      }
      fields.push_back(std::move(waves));
      lips.push_back(lip);
    }
    std::ostringstream csv;
    csv << "h,function,lip,mass_M,mass_Vh,gap,bound\n" << std::setprecision(17);
    int violations = 0;
    for (double h : c.h_values) {
      const double edge = h / std::sqrt(static_cast<double>(n));
      const Mesh mesh = box_mesh(c, shape, edge);
      const int res = std::max(c.resolution,
                               static_cast<int>(std::ceil(c.samples_per_cell * mass_exact / edge)));
      const WeightedSample s = sample_surface(shape, res);
      const Varifold mv = SampledManifoldVarifold(s);
      const Varifold vh = discretize(s, mesh);
      for (int f = 0; f < c.test_functions; ++f) {
        const auto& waves = fields[f];
        const ScalarField phi = [&waves](const Vec& x) {
          double v = 0.0;
          for (const auto& wv : waves) v += wv.a * std::sin(wv.w.dot(x) + wv.b);
          return v;
        };
        const double a = mass_apply(mv, phi), b = mass_apply(vh, phi);
        const double bound = mesh.diameter() * lips[f] * s.total_weight();
        if (std::abs(a - b) > bound) ++violations;
        csv << mesh.diameter() << ',' << f << ',' << lips[f] << ',' << a << ',' << b << ','
            << std::abs(a - b) << ',' << bound << '\n';
      }
    }
    out.write("measure_bound.csv", csv.str());
    check(o, violations == 0,
          "measure bound h lip(phi) mass, " + std::to_string(violations) + " violations");
  }

  // |H_eps(V_h) - H_eps(M)| <= c10 h / eps^2.
  const Measured led = measure_constants(c, shape, kernel, 1.0);
  {
    const double eps = c.epsilons[0];
    const Varifold m = SampledManifoldVarifold(sample_surface(shape, c.resolution));
    const auto probes = shape_probe_points(shape, c.probes);
    const auto ref = curvature_field(CurvatureEvaluator(m, CurvatureQuery(eps, kernel)), probes);
    std::vector<double> hs, diffs;
    for (double h : c.stability_h) {
      const double edge = h / std::sqrt(static_cast<double>(n));
      const Mesh mesh = box_mesh(c, shape, edge);
      const int res = std::max(c.resolution,
                               static_cast<int>(std::ceil(c.samples_per_cell * mass_exact / edge)));
      const Varifold vh = discretize(sample_surface(shape, res), mesh);
      const auto got = curvature_field(CurvatureEvaluator(vh, CurvatureQuery(eps, kernel)), probes);
      double worst = 0.0;
      for (std::size_t i = 0; i < probes.size(); ++i) {
        if (got[i].status != CurvatureStatus::ok || ref[i].status != CurvatureStatus::ok) {
          throw DenominatorTooSmall("regularized mass too small at an on-shape probe");
        }
        worst = std::max(worst, (got[i].mean_curvature - ref[i].mean_curvature).norm());
      }
      hs.push_back(mesh.diameter());
      diffs.push_back(worst);
    }
    const double slope = loglog_slope(hs, diffs);
    std::ostringstream csv;
    csv << "epsilon,h,max_diff,c10_bound,fitted_slope\n" << std::setprecision(17);
    bool within = true;
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const double bound = led.ledger.c10 * hs[i] / (eps * eps);
      within = within && diffs[i] <= bound;
      csv << eps << ',' << hs[i] << ',' << diffs[i] << ',' << bound << ',' << slope << '\n';
    }
    out.write("stability.csv", csv.str());
    check(o, within, "max |H_eps(V_h) - H_eps(M)| <= c10 h / eps^2 (c10 = " + num(led.ledger.c10) + ")");
    if (hs.size() >= 2) check(o, slope >= 0.8, "stability slope in h " + num(slope) + " >= 0.8");
    for (double h : hs) {
      if (2.0 * h > led.gamma.gamma * eps) {
        note(o, "hypothesis 2h <= gamma eps not satisfied at h = " + num(h));
        break;
      }
    }
  }
  return led;
}

std::optional<Measured> run_brakke(const ExperimentConfig& c, OutputDir& out,
                                   ExperimentOutcome& o) {
  const AnalyticShape shape = make_shape(c);
  if (shape.name() != "circle" && shape.name() != "sphere") {
    throw ConfigError("brakke-residual needs a circle or sphere (exact flow)");
  }
  const KernelPair kernel = make_kernel(c, shape);
  const TestFunction phi = default_phi(c, shape);
  const Measured led = measure_constants(c, shape, kernel, phi.c1_norm());
  const auto traj = FlowTrajectory::shrinking_sphere(shape, c.t1, c.t2, c.nt);

  if (c.control) {
    ResidualOptions opt;
    opt.mode = ResidualMode::exact_curvature;
    opt.t1 = c.t1;
    opt.t2 = c.t2;
    opt.exact_resolution = c.resolution;
    const auto coarse = brakke_residual(traj, kernel, phi, opt);
    const auto fine = brakke_residual(
        FlowTrajectory::shrinking_sphere(shape, c.t1, c.t2, 2 * c.nt), kernel, phi, opt);
    std::ostringstream csv;
    write_residual_csv_header(csv);
    write_residual_csv_row(csv, coarse);
    write_residual_csv_row(csv, fine);
    out.write("control.csv", csv.str());
    check(o, coarse.residual <= 1e-6,
          "exact control residual " + num(coarse.residual) + " <= 1e-6 at nt = " + std::to_string(c.nt));
    const double ratio = coarse.residual / fine.residual;
    check(o, ratio >= 3.5, "control residual decreases " + num(ratio) + "x >= 3.5x when nt doubles");
  }

  const auto hs = brakke_h(c);
  std::vector<ResidualReport> reports;
  std::ostringstream kv;
  for (std::size_t i = 0; i < c.epsilons.size(); ++i) {
    ResidualOptions opt;
    opt.mode = c.mode;
    opt.epsilon = c.epsilons[i];
    opt.mesh_edge = hs[i] / std::sqrt(static_cast<double>(shape.ambient()));
    opt.samples_per_cell = c.samples_per_cell;
    opt.exact_resolution = c.resolution;
    opt.t1 = c.t1;
    opt.t2 = c.t2;
    opt.gamma = led.gamma.gamma;
    opt.enforce_gamma = c.enforce_gamma;
    opt.ledger = led.ledger;
    opt.c1 = led.c1;
    reports.push_back(brakke_residual(traj, kernel, phi, opt));
    if (c.mode != ResidualMode::discrete) reports.back().h = hs[i];
    write_report_kv(kv, reports.back());
    kv << '\n';
  }
  std::ostringstream csv;
  write_residual_csv_header(csv);
  for (const auto& r : reports) write_residual_csv_row(csv, r);
  out.write("residual.csv", csv.str());
  out.write("report.txt", kv.str());

  // C' fitted at the first (largest) eps, checked at the others.
  const auto rate = [](const ResidualReport& r) {
    return r.epsilon + r.h / (r.epsilon * r.epsilon * r.epsilon);
  };
  const double c_fit = reports[0].residual / rate(reports[0]);
  std::ostringstream fit;
  fit << "epsilon,h,residual,fitted_bound,weak_bound,within\n" << std::setprecision(17);
  int violations = 0;
  bool monotone = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const double b = c_fit * rate(r);
    const bool ok = r.residual <= b * (1 + 1e-12);
    if (!ok) ++violations;
    if (i > 0 && c.epsilons[i] < c.epsilons[i - 1] && !(r.residual < reports[i - 1].residual)) {
      monotone = false;
    }
    fit << r.epsilon << ',' << r.h << ',' << r.residual << ',' << b << ',' << r.weak_bound << ','
        << (ok ? 1 : 0) << '\n';
  }
  out.write("fit.csv", fit.str());
  if (reports.size() >= 2) {
    check(o, monotone, "residual decreases monotonically with eps");
    check(o, violations == 0, "residual <= fitted C' (eps + h/eps^3), C' = " + num(c_fit) + ", " +
                                  std::to_string(violations) + " violations");
  }
  bool under_theory = true;
  for (const auto& r : reports) under_theory = under_theory && r.residual <= r.bound;
  check(o, under_theory, "residual <= theoretical bound with ledger constants");
  for (const auto& r : reports) {
    if (!r.hypothesis_satisfied) {
      note(o, "hypothesis 2h <= gamma eps not satisfied (enforce_gamma = false)");
      break;
    }
  }
  return led;
}

std::optional<Measured> run_distance(const ExperimentConfig& c, OutputDir& out,
                                     ExperimentOutcome& o) {
  std::vector<DistanceRow> rows;
  std::ostringstream bounds;
  bounds << "label,delta,expected,bound,within\n" << std::setprecision(17);
  auto record = [&](const std::string& label, const DistanceResult& res, double expected,
                    double bound, bool ok) {
    rows.push_back({label, res});
    bounds << label << ',' << res.value << ',' << expected << ',' << bound << ',' << (ok ? 1 : 0)
           << '\n';
  };

  {
    const AtomicMeasure a({{make_vec({0.0, 0.0}), 1.0}});
    const AtomicMeasure b({{make_vec({1.0, 0.0}), 1.0}});
    const auto r = bounded_lipschitz_distance(a, b);
    const bool ok = std::abs(r.value - 2.0 / 3.0) <= 1e-9;
    record("dirac_shift", r, 2.0 / 3.0, std::numeric_limits<double>::quiet_NaN(), ok);
    check(o, ok, "Delta(delta_0, delta_x), |x| = 1, equals 2/3 (" + num(r.value) + ")");
    const auto u = bounded_lipschitz_distance(a, AtomicMeasure());
    const bool ok2 = std::abs(u.value - 1.0) <= 1e-9;
    record("unmatched_unit", u, 1.0, std::numeric_limits<double>::quiet_NaN(), ok2);
    check(o, ok2, "unmatched unit atom gives 1 (" + num(u.value) + ")");
  }

  const AnalyticShape shape = make_shape(c);
  const WeightedSample s = sample_surface(shape, c.atoms);
  const AtomicMeasure mu = atomize(s);
  for (double h : c.h_values) {
    const Mesh mesh = box_mesh(c, shape, h / std::sqrt(static_cast<double>(shape.ambient())));
    const Varifold vh = discretize(s, mesh);
    const AtomicMeasure nu = atomize(vh);
    DistanceOptions opt;
    opt.max_support = std::max<std::size_t>(opt.max_support, mu.size() + nu.size());
    const auto r = bounded_lipschitz_distance(mu, nu, opt);
    const double bound = mesh.diameter() * s.total_weight();
    const bool ok = r.value <= bound;
    record("h=" + num(mesh.diameter()), r, std::numeric_limits<double>::quiet_NaN(), bound, ok);
    check(o, ok, "Delta(M, V_h) = " + num(r.value) + " <= h mass = " + num(bound) + " (" +
                     std::to_string(mu.size()) + " + " + std::to_string(nu.size()) + " atoms)");
  }
  std::ostringstream csv;
  write_distance_csv(csv, rows);
  out.write("distance.csv", csv.str());
  out.write("distance_bounds.csv", bounds.str());
  return std::nullopt;
}

/// Closed-form ball mass ratio M(B(x, r)) / r^d for x on a circle or sphere.
std::optional<double> exact_density(const AnalyticShape& shape, double r) {
  if (const auto* ci = std::get_if<Circle>(&shape.variant())) {
    if (r > 2.0 * ci->radius) return std::nullopt;
    return 4.0 * ci->radius * std::asin(r / (2.0 * ci->radius)) / r;
  }
  if (const auto* sp = std::get_if<Sphere>(&shape.variant())) {
    if (r > 2.0 * sp->radius) return std::nullopt;
    return std::numbers::pi;
  }
  return std::nullopt;
}

std::optional<Measured> run_ahlfors(const ExperimentConfig& c, OutputDir& out,
                                    ExperimentOutcome& o) {
  const AnalyticShape shape = make_shape(c);
  const WeightedSample s = sample_surface(shape, c.resolution);
  const auto probes = shape_probe_points(shape, c.ahlfors_probes);
  const int d = shape.dim();
  std::ostringstream csv;
  csv << "radius,min_density,max_density,c0,exact_c0\n" << std::setprecision(17);
  double worst_dev = 0.0;
  bool have_oracle = true;
  double exact_total = 0.0;
  for (double r : c.radii) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& p : probes) {
      CompensatedSum m;
      for (const auto& sp : s.points) {
        if ((sp.x - p).norm() < r) m.add(sp.weight);
      }
      const double density = m.value() / std::pow(r, d);
      lo = std::min(lo, density);
      hi = std::max(hi, density);
    }
    const double c0 = std::max(hi, lo > 0.0 ? 1.0 / lo : std::numeric_limits<double>::infinity());
    const auto ex = exact_density(shape, r);
    double exact_c0 = std::numeric_limits<double>::quiet_NaN();
    if (ex) {
      exact_c0 = std::max(*ex, 1.0 / *ex);
      exact_total = std::max(exact_total, exact_c0);
      worst_dev = std::max(worst_dev, std::abs(c0 - exact_c0) / exact_c0);
    } else {
      have_oracle = false;
    }
    csv << r << ',' << lo << ',' << hi << ',' << c0 << ',' << exact_c0 << '\n';
  }
  out.write("ahlfors.csv", csv.str());
  const auto a = ahlfors_estimate(SampledManifoldVarifold(s), c.radii, probes);
  check(o, a.finite, "C0 estimate finite: " + num(a.c0));
  if (have_oracle) {
    check(o, worst_dev <= 0.02,
          "within 2% of the closed-form ball mass (C0 exact = " + num(exact_total) + ")");
  }
  return std::nullopt;
}

std::optional<Measured> run_ledger(const ExperimentConfig& c, OutputDir& out,
                                   ExperimentOutcome& o) {
  const AnalyticShape shape = make_shape(c);
  const KernelPair kernel = make_kernel(c, shape);
  const Measured led = measure_constants(c, shape, kernel, 1.0);
  std::ostringstream csv;
  write_ledger_csv(csv, led.ledger);
  out.write("ledger.csv", csv.str());
  const auto& L = led.ledger;
  bool ok = true;
  for (double v : {L.c3, L.c4, L.c5, L.c6, L.c7, L.c8, L.c9, L.c10, L.big_c, L.big_c_prime}) {
    ok = ok && std::isfinite(v) && v > 0.0;
  }
  check(o, ok, "c3..c10, C, C' finite and positive");
  note(o, "gamma = " + num(led.gamma.gamma) + " (binding: " + led.gamma.binding + ")");
  return led;
}

std::string manifest_text(const ExperimentConfig& c, const std::optional<Measured>& led,
                          const std::vector<std::pair<std::string, std::string>>& files) {
  std::ostringstream m;
  m << std::setprecision(17);
  m << "version=" << VOLVAR_VERSION << '\n'
    << "kind=" << to_string(c.kind) << '\n'
    << "seed=" << c.seed << '\n'
    << "config_fnv1a64=" << hex64(fnv1a64(c.canonical)) << '\n';
  if (led) {
    const auto& L = led->ledger;
    const auto& in = L.inputs;
    const std::pair<const char*, double> entries[] = {
        {"C0", in.c0},   {"C1", in.c1},   {"C2", in.c2},   {"gamma", in.gamma},
        {"beta", in.beta}, {"c3", L.c3},  {"c4", L.c4},    {"c5", L.c5},
        {"c6", L.c6},    {"c7", L.c7},    {"c8", L.c8},    {"c9", L.c9},
        {"c10", L.c10},  {"C", L.big_c},  {"C_prime", L.big_c_prime}};
    for (const auto& [k, v] : entries) m << "ledger." << k << '=' << v << '\n';
  }
  for (const auto& [name, content] : files) {
    m << "file." << name << '=' << hex64(fnv1a64(content)) << '\n';
  }
  return m.str();
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return from_tree(root);
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  return parse_config(f);
}

void override_seed(ExperimentConfig& config, std::uint64_t seed) {
  std::istringstream in(config.canonical);
  ptree root;
  boost::property_tree::ini_parser::read_ini(in, root);
  root.put("experiment.seed", std::to_string(seed));
  config.seed = seed;
  config.canonical = serialize(root);
}

std::vector<Diagnostic> validate(const ExperimentConfig& c) {
  std::vector<Diagnostic> out;
  const AnalyticShape shape = make_shape(c);
  const KernelPair kernel = make_kernel(c, shape);

  const bool meshed = c.kind == ExperimentKind::discretization_stability ||
                      c.kind == ExperimentKind::distance_check;
  if (meshed && !c.epsilons.empty()) {
    const double margin = half_width_of(c, shape) - shape.bounding_radius();
    const double eps = *std::max_element(c.epsilons.begin(), c.epsilons.end());
    if (margin < eps) {
      out.push_back({true, "mesh box margin " + num(margin) + " around the shape is below eps = " +
                               num(eps)});
    }
  }

  std::vector<std::pair<double, double>> pairs;  // (eps, h)
  if (c.kind == ExperimentKind::brakke_residual && c.mode == ResidualMode::discrete) {
    const auto hs = brakke_h(c);
    for (std::size_t i = 0; i < hs.size(); ++i) pairs.emplace_back(c.epsilons[i], hs[i]);
  } else if (c.kind == ExperimentKind::discretization_stability) {
    for (double h : c.stability_h) pairs.emplace_back(c.epsilons[0], h);
  }
  if (!pairs.empty()) {
    const double phi_c1 =
        c.kind == ExperimentKind::brakke_residual ? default_phi(c, shape).c1_norm() : 1.0;
    const Measured led = measure_constants(c, shape, kernel, phi_c1);
    for (const auto& [eps, h] : pairs) {
      if (2.0 * h > led.gamma.gamma * eps) {
        out.push_back({c.enforce_gamma, "2h > gamma eps: h = " + num(h) + ", eps = " + num(eps) +
                                            ", gamma = " + num(led.gamma.gamma)});
      }
    }
  }
  return out;
}

ExperimentOutcome run_experiment(const ExperimentConfig& c, const fs::path& out_dir) {
  for (const auto& d : validate(c)) {
    if (d.fatal) throw PreconditionViolated(d.message);
  }
  ExperimentOutcome outcome;
  OutputDir out(out_dir, outcome);
  std::optional<Measured> led;
  switch (c.kind) {
    case ExperimentKind::curvature_convergence: led = run_curvature(c, out, outcome); break;
    case ExperimentKind::discretization_stability: led = run_stability(c, out, outcome); break;
    case ExperimentKind::brakke_residual: led = run_brakke(c, out, outcome); break;
    case ExperimentKind::distance_check: led = run_distance(c, out, outcome); break;
    case ExperimentKind::ahlfors_scan: led = run_ahlfors(c, out, outcome); break;
    case ExperimentKind::constants_ledger: led = run_ledger(c, out, outcome); break;
  }
  const auto data_files = out.files();
  std::ostringstream summary;
  summary << "kind: " << to_string(c.kind) << '\n' << "seed: " << c.seed << '\n';
  for (const auto& line : outcome.checks) summary << line << '\n';
  summary << "result: " << (outcome.passed ? "PASS" : "FAIL") << '\n';
  out.write("summary.txt", summary.str());
  out.write("config.ini", c.canonical);
  out.write("manifest.txt", manifest_text(c, led, data_files));
  return outcome;
}

int exit_status_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
      dynamic_cast<const DimensionMismatch*>(&e)) {
    return 2;
  }
  if (dynamic_cast<const PreconditionViolated*>(&e) ||
      dynamic_cast<const DenominatorTooSmall*>(&e)) {
    return 3;
  }
  if (dynamic_cast<const NumericalFailure*>(&e)) return 4;
  return 1;
}

}  // namespace volvar
