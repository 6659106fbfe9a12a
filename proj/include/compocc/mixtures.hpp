#pragma once

#include <compocc/types.hpp>

#include <cstdint>
#include <vector>

namespace compocc {

/// Symmetric N x N affinity between detection maps.
struct AffinityMatrix {
    std::size_t size = 0;
    std::vector<double> entries;  // row-major
    double sigma = 1.0;           // kernel bandwidth used to build it

    double operator()(std::size_t i, std::size_t j) const { return entries[i * size + j]; }
    double& operator()(std::size_t i, std::size_t j) { return entries[i * size + j]; }
};

/// Fraction of differing bits between two maps of identical shape.
double hamming_distance(const PartDetectionMap& a, const PartDetectionMap& b);

/// a(i,j) = exp(-d(i,j) / sigma) with d the normalized Hamming distance and sigma the
/// median off-diagonal distance. Requires N >= 2.
AffinityMatrix hamming_affinity(const std::vector<PartDetectionMap>& maps);

/// Ng-Jordan-Weiss spectral clustering on the symmetric normalized Laplacian.
std::vector<int> spectral_cluster(const AffinityMatrix& affinity, int clusters, std::uint64_t seed);

struct MixtureModel {
    std::vector<BernoulliGrid> components;
    std::vector<int> assignments;
    int class_label = 0;
    /// sum_n log_likelihood(B_n, alpha^{nu_n}) after the initial fit and after every
    /// reassignment step.
    std::vector<double> objective_history;
};

struct MixtureOptions {
    int components = 4;
    int iterations = 10;
    std::uint64_t seed = 0;
};

/// Hard-assignment mixture of Bernoulli grids: spectral initialization followed by
/// alternating ML estimation and reassignment. Inputs are processed in source_id order so
/// the result does not depend on input order.
MixtureModel fit_mixture(const std::vector<PartDetectionMap>& maps, const MixtureOptions& options,
                         int class_label = 0);

}  // namespace compocc
