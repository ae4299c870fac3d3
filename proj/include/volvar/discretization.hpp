#pragma once

#include "volvar/varifold.hpp"

#include <span>

namespace volvar {

/// Volumetric discretization of a sampled shape on a uniform mesh.
///
/// m_K is the sum of the sample weights falling in K (compensated sum).
/// P_K spans the top-d eigenvectors of the mass-weighted mean projector of
/// the cell, which minimizes the squared Frobenius objective.
/// Throws InvalidArgument if a sample lies outside the mesh box.
VolumetricVarifold discretize(const WeightedSample& source, const Mesh& mesh);

/// Plane spanned by the top-`dim` eigenvectors of the weighted mean projector.
Plane mean_projector_plane(std::span<const SamplePoint> samples, int dim);

/// sum_j w_j |P_j - plane| / sum_j w_j over the samples of one cell.
double tangent_fit_quality(std::span<const SamplePoint> samples, const Plane& plane);

/// Samples of `source` grouped by cell, in increasing cell index.
std::vector<std::pair<CellIndex, std::vector<SamplePoint>>> bin_samples(
    const WeightedSample& source, const Mesh& mesh);

}  // namespace volvar
