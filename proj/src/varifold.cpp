#include "volvar/varifold.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace volvar {

PointCloudVarifold::PointCloudVarifold(int dim, int ambient, std::vector<Atom> atoms)
    : dim_(dim), ambient_(ambient) {
  if (ambient < 1 || ambient > kMaxAmbient || dim < 0 || dim > ambient) {
    throw DimensionMismatch("PointCloudVarifold: need 0 <= d <= n <= 3");
  }
  atoms_.reserve(atoms.size());
  for (auto& a : atoms) {
    if (a.mass < 0.0) throw InvalidArgument("PointCloudVarifold: negative mass");
    if (a.x.size() != ambient || a.plane.ambient() != ambient || a.plane.dim() != dim) {
      throw DimensionMismatch("PointCloudVarifold: atom dimension mismatch");
    }
    if (a.mass > 0.0) atoms_.push_back(std::move(a));
  }
}

SampledManifoldVarifold::SampledManifoldVarifold(WeightedSample sample)
    : sample_(std::move(sample)) {
  for (const auto& p : sample_.points) {
    if (!(p.weight > 0.0)) throw InvalidArgument("SampledManifoldVarifold: weights must be > 0");
    if (p.x.size() != sample_.ambient || p.tangent.dim() != sample_.dim) {
      throw DimensionMismatch("SampledManifoldVarifold: sample dimension mismatch");
    }
  }
}

VolumetricVarifold::VolumetricVarifold(int dim, Mesh mesh, std::vector<VolumetricCell> cells)
    : dim_(dim), mesh_(std::move(mesh)), cells_(std::move(cells)) {
  std::sort(cells_.begin(), cells_.end(),
            [](const VolumetricCell& a, const VolumetricCell& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const auto& c = cells_[i];
    if (!(c.mass > 0.0)) throw InvalidArgument("VolumetricVarifold: cell masses must be > 0");
    if (c.index < 0 || c.index >= mesh_.cell_count()) {
      throw InvalidArgument("VolumetricVarifold: cell index outside the mesh");
    }
    if (i > 0 && cells_[i - 1].index == c.index) {
      throw InvalidArgument("VolumetricVarifold: duplicate cell index");
    }
    if (c.plane.dim() != dim || c.plane.ambient() != mesh_.ambient()) {
      throw DimensionMismatch("VolumetricVarifold: cell plane dimension mismatch");
    }
  }
}

int varifold_dim(const Varifold& v) {
  return std::visit([](const auto& x) { return x.dim(); }, v);
}

int varifold_ambient(const Varifold& v) {
  return std::visit([](const auto& x) { return x.ambient(); }, v);
}

std::vector<Atom> quadrature_atoms(const Varifold& v, int subdivisions) {
  std::vector<Atom> out;
  for_each_quadrature_atom(v, subdivisions, [&](const Vec& x, const Plane& p, double m) {
    out.push_back(Atom{x, p, m});
  });
  return out;
}

double mass_total(const Varifold& v) {
  CompensatedSum sum;
  if (const auto* vol = std::get_if<VolumetricVarifold>(&v)) {
    for (const auto& c : vol->cells()) sum.add(c.mass);
  } else {
    for_each_quadrature_atom(v, 1, [&](const Vec&, const Plane&, double m) { sum.add(m); });
  }
  return sum.value();
}

double mass_apply(const Varifold& v, const ScalarField& phi, int subdivisions) {
  CompensatedSum sum;
  for_each_quadrature_atom(v, subdivisions,
                           [&](const Vec& x, const Plane&, double m) { sum.add(m * phi(x)); });
  return sum.value();
}

double varifold_apply(const Varifold& v, const VarifoldField& phi, int subdivisions) {
  CompensatedSum sum;
  for_each_quadrature_atom(v, subdivisions, [&](const Vec& x, const Plane& p, double m) {
    sum.add(m * phi(x, p));
  });
  return sum.value();
}

double tangential_divergence(const Plane& plane, const Mat& jacobian) {
  // sum_i <D(X . tau_i), tau_i> = trace(P DX) for an orthonormal basis tau of S.
  return (plane.projector() * jacobian).trace();
}

double first_variation(const Varifold& v, const VectorField& field, int subdivisions) {
  CompensatedSum sum;
  for_each_quadrature_atom(v, subdivisions, [&](const Vec& x, const Plane& p, double m) {
    sum.add(m * tangential_divergence(p, field.jacobian(x)));
  });
  return sum.value();
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("CSV: cannot parse number '" + s + "'");
  }
  if (used != s.size() && s.find_first_not_of(" \t\r", used) != std::string::npos) {
    throw InvalidArgument("CSV: trailing characters in '" + s + "'");
  }
  return value;
}

}  // namespace

void write_point_cloud_csv(std::ostream& out, const PointCloudVarifold& v) {
  const int n = v.ambient();
  const int d = v.dim();
  for (int i = 0; i < n; ++i) out << 'x' << (i + 1) << ',';
  out << "mass";
  for (int k = 0; k < d; ++k) {
    for (int i = 0; i < n; ++i) out << ",t" << (k + 1) << '_' << (i + 1);
  }
  out << '\n';
  out << std::setprecision(17);
  for (const auto& a : v.atoms()) {
    for (int i = 0; i < n; ++i) out << a.x(i) << ',';
    out << a.mass;
    // Orthonormal basis of the plane: top-d eigenvectors of the projector.
    Eigen::SelfAdjointEigenSolver<Mat> eig(a.plane.projector());
    for (int k = 0; k < d; ++k) {
      const auto col = eig.eigenvectors().col(n - 1 - k);
      for (int i = 0; i < n; ++i) out << ',' << col(i);
    }
    out << '\n';
  }
}

PointCloudVarifold read_point_cloud_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("point cloud CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  int n = 0;
  while (n < static_cast<int>(header.size()) && header[n] == "x" + std::to_string(n + 1)) ++n;
  if (n < 1 || n > kMaxAmbient || n >= static_cast<int>(header.size()) || header[n] != "mass") {
    throw InvalidArgument("point cloud CSV: header must be x1..xn,mass,t1_1,...");
  }
  const int tangent_cols = static_cast<int>(header.size()) - n - 1;
  if (tangent_cols % n != 0) {
    throw InvalidArgument("point cloud CSV: tangent column count is not a multiple of n");
  }
  const int d = tangent_cols / n;
  std::vector<Atom> atoms;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw InvalidArgument("point cloud CSV: wrong field count on line " +
                            std::to_string(line_no));
    }
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = parse_double(fields[i]);
    const double mass = parse_double(fields[n]);
    Mat basis(n, d);
    for (int k = 0; k < d; ++k) {
      for (int i = 0; i < n; ++i) basis(i, k) = parse_double(fields[n + 1 + k * n + i]);
    }
    Plane plane = d == 0 ? Plane::from_projector(Mat::Zero(n, n), 0) : Plane::from_basis(basis);
    atoms.push_back(Atom{x, std::move(plane), mass});
  }
  return PointCloudVarifold(d, n, std::move(atoms));
}

void write_volumetric_csv(std::ostream& out, const VolumetricVarifold& v) {
  const int n = v.ambient();
  out << "cell";
  for (int i = 0; i < n; ++i) out << ",c" << (i + 1);
  out << ",mass";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out << ",p" << (i + 1) << (j + 1);
  }
  out << '\n';
  out << std::setprecision(17);
  for (const auto& cell : v.cells()) {
    out << cell.index;
    const Vec c = v.mesh().cell_center(cell.index);
    for (int i = 0; i < n; ++i) out << ',' << c(i);
    out << ',' << cell.mass;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) out << ',' << cell.plane.projector()(i, j);
    }
    out << '\n';
  }
}

}  // namespace volvar
