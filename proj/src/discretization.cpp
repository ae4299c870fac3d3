#include "volvar/discretization.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>

namespace volvar {

namespace {

std::vector<CellIndex> cell_indices(const WeightedSample& source, const Mesh& mesh) {
  if (source.ambient != mesh.ambient()) {
    throw DimensionMismatch("discretize: sample and mesh ambient dimensions differ");
  }
  std::vector<CellIndex> idx(source.points.size());
  for (std::size_t j = 0; j < source.points.size(); ++j) {
    const auto cell = mesh.cell_of(source.points[j].x);
    if (!cell) {
      throw InvalidArgument("discretize: sample point " + std::to_string(j) +
                            " lies outside the mesh box");
    }
    idx[j] = *cell;
  }
  return idx;
}

std::vector<std::size_t> order_by_cell(const std::vector<CellIndex>& idx) {
  std::vector<std::size_t> order(idx.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return idx[a] < idx[b]; });
  return order;
}

Plane top_eigen_plane(const Mat& mean_projector, int dim) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(mean_projector);
  // Eigenvalues ascend; the last d eigenvectors span the fitted plane.
  const Mat basis = eig.eigenvectors().rightCols(dim);
  return Plane::from_basis(basis);
}

}  // namespace

Plane mean_projector_plane(std::span<const SamplePoint> samples, int dim) {
  if (samples.empty()) throw InvalidArgument("mean_projector_plane: empty cell");
  const auto n = samples.front().x.size();
  Mat acc = Mat::Zero(n, n);
  double weight = 0.0;
  for (const auto& s : samples) {
    acc += s.weight * s.tangent.projector();
    weight += s.weight;
  }
  return top_eigen_plane(acc / weight, dim);
}

double tangent_fit_quality(std::span<const SamplePoint> samples, const Plane& plane) {
  if (samples.empty()) throw InvalidArgument("tangent_fit_quality: empty cell");
  CompensatedSum num;
  CompensatedSum den;
  for (const auto& s : samples) {
    num.add(s.weight * projector_distance(s.tangent, plane));
    den.add(s.weight);
  }
  return num.value() / den.value();
}

std::vector<std::pair<CellIndex, std::vector<SamplePoint>>> bin_samples(
    const WeightedSample& source, const Mesh& mesh) {
  const auto idx = cell_indices(source, mesh);
  const auto order = order_by_cell(idx);
  std::vector<std::pair<CellIndex, std::vector<SamplePoint>>> out;
  for (std::size_t k : order) {
    if (out.empty() || out.back().first != idx[k]) out.emplace_back(idx[k], std::vector<SamplePoint>{});
    out.back().second.push_back(source.points[k]);
  }
  return out;
}

VolumetricVarifold discretize(const WeightedSample& source, const Mesh& mesh) {
  const auto idx = cell_indices(source, mesh);
  const auto order = order_by_cell(idx);
  const int n = mesh.ambient();
  const int d = source.dim;

  std::vector<VolumetricCell> cells;
  std::size_t k = 0;
  while (k < order.size()) {
    const CellIndex cell = idx[order[k]];
    CompensatedSum mass;
    std::vector<CompensatedSum> proj(static_cast<std::size_t>(n * n));
    for (; k < order.size() && idx[order[k]] == cell; ++k) {
      const auto& s = source.points[order[k]];
      mass.add(s.weight);
      const Mat& p = s.tangent.projector();
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) proj[i * n + j].add(s.weight * p(i, j));
      }
    }
    const double m = mass.value();
    if (!(m > 0.0)) continue;
    Mat mean(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) mean(i, j) = proj[i * n + j].value() / m;
    }
    cells.push_back(VolumetricCell{cell, m, top_eigen_plane(mean, d)});
  }
  return VolumetricVarifold(d, mesh, std::move(cells));
}

}  // namespace volvar
