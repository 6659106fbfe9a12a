#pragma once

#include <compocc/types.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace compocc {

/// K unit-norm part centroids of dimension C, grouped by the class that produced them.
struct PartDictionary {
    std::uint32_t dim = 0;
    std::vector<double> centroids;  // K x dim, row-major
    std::vector<int> class_of_part;
    int k_per_class = 0;

    std::size_t parts() const { return class_of_part.size(); }
    std::span<const double> centroid(std::size_t k) const {
        return {centroids.data() + k * dim, dim};
    }
};

/// Throws ValidationError if centroids are not unit norm (1 +- 1e-6), the part count
/// is not classes * k_per_class, or class_of_part is inconsistent.
void validate(const PartDictionary& dict, int num_classes);

/// Dense row-major point set used by k-means.
struct PointSet {
    std::size_t dim = 0;
    std::vector<double> values;

    std::size_t size() const { return dim == 0 ? 0 : values.size() / dim; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

struct KMeansOptions {
    std::size_t k = 1;
    std::uint64_t seed = 0;
    int max_iters = 100;
};

struct KMeansResult {
    PointSet centroids;
    std::vector<int> labels;
    /// Objective (sum of squared distances to the assigned centroid) after every
    /// assignment step, starting with the k-means++ seeding.
    std::vector<double> inertia_history;
    int iterations = 0;
};

/// Lloyd's k-means with k-means++ seeding. Ties resolve to the lowest centroid index;
/// an emptied cluster is reseeded with the point farthest from its centroid. Stops
/// after max_iters or when assignments no longer change. Requires k <= number of points.
KMeansResult kmeans(const PointSet& points, const KMeansOptions& options);

/// Number of distinct rows (exact comparison).
std::size_t count_distinct(const PointSet& points);

struct DictionaryOptions {
    int k_per_class = 50;
    std::uint64_t seed = 0;
    int max_iters = 100;
};

/// Clusters the L2-normalized feature vectors of each class separately and concatenates
/// the renormalized centroids in class order. Throws InsufficientDataError when a class
/// has fewer distinct vectors than k_per_class.
PartDictionary learn_dictionary(const LabeledSet& training, const DictionaryOptions& options);

/// Same as learn_dictionary, also returning each class's k-means trace.
PartDictionary learn_dictionary(const LabeledSet& training, const DictionaryOptions& options,
                                std::vector<KMeansResult>* per_class_runs);

/// Binarizes a feature map: b_{p,k} = 1 iff cos(f_p, d_k) > delta. A position where no
/// part clears delta activates only its most similar part (lowest index on ties); a zero
/// feature vector activates part 0.
PartDetectionMap encode(const FeatureMap& map, const PartDictionary& dict, double delta);

std::vector<PartDetectionMap> encode_all(const std::vector<FeatureMap>& maps,
                                         const PartDictionary& dict, double delta);

}  // namespace compocc
