#include <compocc/dictionary.hpp>

#include <compocc/errors.hpp>
#include <compocc/random.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace compocc {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// k-means++ seeding: first center uniform, then proportional to squared distance.
// Falls back to a uniform pick among unchosen points once every distance is zero.
PointSet seed_centroids(const PointSet& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.size();
    PointSet centroids{points.dim, {}};
    centroids.values.reserve(k * points.dim);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::vector<char> chosen(n, 0);

    auto take = [&](std::size_t i) {
        chosen[i] = 1;
        auto row = points.row(i);
        centroids.values.insert(centroids.values.end(), row.begin(), row.end());
        for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], squared_distance(points.row(j), row));
    };

    take(rng.index(n));
    while (centroids.size() < k) {
        const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cumulative = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (nearest[j] <= 0.0) continue;
                cumulative += nearest[j];
                pick = j;
                if (cumulative > target) break;
            }
        } else {
            std::vector<std::size_t> free;
            for (std::size_t j = 0; j < n; ++j)
                if (!chosen[j]) free.push_back(j);
            pick = free[rng.index(free.size())];
        }
        take(pick);
    }
    return centroids;
}

double assign(const PointSet& points, const PointSet& centroids, std::vector<int>& labels,
              std::vector<double>& cost) {
    const std::size_t n = points.size();
    const std::size_t k = centroids.size();
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            const double d = squared_distance(points.row(i), centroids.row(c));
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        labels[i] = best;
        cost[i] = best_d;
        inertia += best_d;
    }
    return inertia;
}

void update_centroids(const PointSet& points, PointSet& centroids, std::vector<int>& labels) {
    const std::size_t n = points.size();
    const std::size_t k = centroids.size();
    const std::size_t dim = points.dim;
    std::vector<std::size_t> counts(k, 0);
    std::vector<double> sums(k * dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        ++counts[c];
        auto row = points.row(i);
        for (std::size_t d = 0; d < dim; ++d) sums[c * dim + d] += row[d];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) continue;
        for (std::size_t d = 0; d < dim; ++d)
            centroids.values[c * dim + d] = sums[c * dim + d] / static_cast<double>(counts[c]);
    }
    // Reseed each empty cluster with the point farthest from its own centroid, taken
    // only from clusters that keep at least one member.
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) continue;
        std::size_t far = n;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto owner = static_cast<std::size_t>(labels[i]);
            if (counts[owner] < 2) continue;
            const double d = squared_distance(points.row(i), centroids.row(owner));
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        if (far == n) continue;
        --counts[static_cast<std::size_t>(labels[far])];
        labels[far] = static_cast<int>(c);
        counts[c] = 1;
        auto row = points.row(far);
        std::copy(row.begin(), row.end(), centroids.values.begin() + static_cast<std::ptrdiff_t>(c * dim));
    }
}

}  // namespace

void validate(const PartDictionary& dict, int num_classes) {
    if (dict.dim == 0) throw ValidationError("dictionary dimension is zero");
    if (dict.k_per_class <= 0) throw ValidationError("k_per_class must be positive");
    const auto K = dict.parts();
    if (K != static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(dict.k_per_class))
        throw ValidationError("dictionary has " + std::to_string(K) + " parts, expected " +
                              std::to_string(num_classes) + " x " + std::to_string(dict.k_per_class));
    if (dict.centroids.size() != K * dict.dim) throw ValidationError("centroid storage size mismatch");
    for (std::size_t k = 0; k < K; ++k) {
        const int expected = static_cast<int>(k) / dict.k_per_class;
        if (dict.class_of_part[k] != expected)
            throw ValidationError("part " + std::to_string(k) + " belongs to class " +
                                  std::to_string(dict.class_of_part[k]) + ", expected " +
                                  std::to_string(expected));
        const double n = norm(dict.centroid(k));
        if (!(std::abs(n - 1.0) <= 1e-6))
            throw ValidationError("centroid " + std::to_string(k) + " has norm " + std::to_string(n));
    }
}

std::size_t count_distinct(const PointSet& points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
        auto ra = points.row(a), rb = points.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    };
    std::sort(order.begin(), order.end(), less);
    std::size_t distinct = order.empty() ? 0 : 1;
    for (std::size_t i = 1; i < order.size(); ++i)
        if (less(order[i - 1], order[i])) ++distinct;
    return distinct;
}

KMeansResult kmeans(const PointSet& points, const KMeansOptions& options) {
    const std::size_t n = points.size();
    if (options.k == 0 || options.k > n)
        throw ParameterError("k-means needs 1 <= k <= n (k = " + std::to_string(options.k) +
                             ", n = " + std::to_string(n) + ")");
    if (options.max_iters <= 0) throw ParameterError("max_iters must be positive");

    Rng rng(options.seed);
    KMeansResult result;
    result.centroids = seed_centroids(points, options.k, rng);
    result.labels.assign(n, 0);
    std::vector<double> cost(n);
    result.inertia_history.push_back(assign(points, result.centroids, result.labels, cost));

    std::vector<int> previous;
    for (int it = 0; it < options.max_iters; ++it) {
        previous = result.labels;
        update_centroids(points, result.centroids, result.labels);
        result.inertia_history.push_back(assign(points, result.centroids, result.labels, cost));
        result.iterations = it + 1;
        if (result.labels == previous) break;
    }
    return result;
}

PartDictionary learn_dictionary(const LabeledSet& training, const DictionaryOptions& options) {
    return learn_dictionary(training, options, nullptr);
}

PartDictionary learn_dictionary(const LabeledSet& training, const DictionaryOptions& options,
                                std::vector<KMeansResult>* per_class_runs) {
    if (options.k_per_class <= 0) throw ParameterError("k_per_class must be positive");
    if (training.size() == 0) throw InsufficientDataError("training set is empty");
    if (training.labels.size() != training.maps.size())
        throw InputError("training set has mismatched map and label counts");
    const auto num_classes = training.class_names.size();
    const std::uint32_t dim = training.maps.front().channels;
    for (const auto& m : training.maps)
        if (m.channels != dim) throw ShapeError("training maps have different channel counts");

    PartDictionary dict;
    dict.dim = dim;
    dict.k_per_class = options.k_per_class;
    if (per_class_runs) per_class_runs->clear();

    for (std::size_t y = 0; y < num_classes; ++y) {
        PointSet pool{dim, {}};
        for (std::size_t i = 0; i < training.size(); ++i) {
            if (training.labels[i] != static_cast<int>(y)) continue;
            const auto& m = training.maps[i];
            for (std::size_t p = 0; p < m.positions(); ++p) {
                auto f = m.at(p);
                double s = 0.0;
                for (float v : f) s += double{v} * v;
                if (s == 0.0) continue;
                const double inv = 1.0 / std::sqrt(s);
                for (float v : f) pool.values.push_back(v * inv);
            }
        }
        const auto distinct = count_distinct(pool);
        if (distinct < static_cast<std::size_t>(options.k_per_class))
            throw InsufficientDataError("class " + training.class_names[y] + " has " +
                                        std::to_string(distinct) + " distinct feature vectors, needs " +
                                        std::to_string(options.k_per_class));

        auto run = kmeans(pool, {static_cast<std::size_t>(options.k_per_class),
                                 derive_seed(options.seed, {y}), options.max_iters});
        for (std::size_t c = 0; c < run.centroids.size(); ++c) {
            auto row = run.centroids.row(c);
            double n = norm(row);
            std::vector<double> v(row.begin(), row.end());
            if (n == 0.0) {
                // Antipodal members cancelled out; fall back to the first member.
                const auto member = std::find(run.labels.begin(), run.labels.end(), static_cast<int>(c));
                auto r = pool.row(static_cast<std::size_t>(member - run.labels.begin()));
                v.assign(r.begin(), r.end());
                n = norm(v);
            }
            for (double& x : v) x /= n;
            dict.centroids.insert(dict.centroids.end(), v.begin(), v.end());
            dict.class_of_part.push_back(static_cast<int>(y));
        }
        if (per_class_runs) per_class_runs->push_back(std::move(run));
    }
    return dict;
}

PartDetectionMap encode(const FeatureMap& map, const PartDictionary& dict, double delta) {
    if (map.channels != dict.dim)
        throw ShapeError("feature map has " + std::to_string(map.channels) +
                         " channels, dictionary expects " + std::to_string(dict.dim));
    if (map.data.size() != map.positions() * map.channels)
        throw ShapeError("feature map data length does not match H*W*C");
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0,1)");
    const auto K = dict.parts();
    if (K == 0) throw ShapeError("dictionary is empty");

    PartDetectionMap out(map.height, map.width, static_cast<std::uint32_t>(K), map.source_id);
    for (std::size_t p = 0; p < map.positions(); ++p) {
        auto f = map.at(p);
        auto bits = out.at(p);
        double sq = 0.0;
        for (float v : f) sq += double{v} * v;
        if (sq == 0.0) {
            bits[0] = 1;
            continue;
        }
        const double inv = 1.0 / std::sqrt(sq);
        bool any = false;
        std::size_t best = 0;
        double best_s = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
            auto d = dict.centroid(k);
            double dot = 0.0;
            for (std::size_t c = 0; c < f.size(); ++c) dot += double{f[c]} * d[c];
            const double s = dot * inv;
            if (s > delta) {
                bits[k] = 1;
                any = true;
            }
            if (s > best_s) {
                best_s = s;
                best = k;
            }
        }
        if (!any) bits[best] = 1;
    }
    return out;
}

std::vector<PartDetectionMap> encode_all(const std::vector<FeatureMap>& maps, const PartDictionary& dict,
                                         double delta) {
    std::vector<PartDetectionMap> out;
    out.reserve(maps.size());
    for (const auto& m : maps) out.push_back(encode(m, dict, delta));
    return out;
}

}  // namespace compocc
