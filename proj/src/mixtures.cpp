#include <compocc/mixtures.hpp>

#include <compocc/compmodel.hpp>
#include <compocc/dictionary.hpp>
#include <compocc/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace compocc {

double hamming_distance(const PartDetectionMap& a, const PartDetectionMap& b) {
    if (a.height != b.height || a.width != b.width || a.parts != b.parts || a.bits.size() != b.bits.size())
        throw ShapeError("hamming_distance: maps have different shapes");
    if (a.bits.empty()) return 0.0;
    std::size_t diff = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) diff += (a.bits[i] != b.bits[i]) ? 1 : 0;
    return static_cast<double>(diff) / static_cast<double>(a.bits.size());
}

AffinityMatrix hamming_affinity(const std::vector<PartDetectionMap>& maps) {
    const std::size_t n = maps.size();
    if (n < 2) throw InputError("hamming_affinity needs at least two maps");

    std::vector<double> dist(n * n, 0.0);
    std::vector<double> off_diagonal;
    off_diagonal.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = hamming_distance(maps[i], maps[j]);
            dist[i * n + j] = dist[j * n + i] = d;
            off_diagonal.push_back(d);
        }

    std::sort(off_diagonal.begin(), off_diagonal.end());
    const std::size_t half = off_diagonal.size() / 2;
    double sigma = off_diagonal.size() % 2 == 1 ? off_diagonal[half]
                                                : 0.5 * (off_diagonal[half - 1] + off_diagonal[half]);
    if (sigma <= 0.0) {
        // More than half the pairs are identical; use the mean positive distance instead.
        double sum = 0.0;
        std::size_t count = 0;
        for (double d : off_diagonal)
            if (d > 0.0) {
                sum += d;
                ++count;
            }
        sigma = count > 0 ? sum / static_cast<double>(count) : 1.0;
    }

    AffinityMatrix a;
    a.size = n;
    a.sigma = sigma;
    a.entries.resize(n * n);
    for (std::size_t i = 0; i < n * n; ++i) a.entries[i] = std::exp(-dist[i] / sigma);
    return a;
}

std::vector<int> spectral_cluster(const AffinityMatrix& affinity, int clusters, std::uint64_t seed) {
    const auto n = affinity.size;
    if (clusters <= 0 || static_cast<std::size_t>(clusters) > n)
        throw ParameterError("spectral_cluster needs 1 <= m <= N (m = " + std::to_string(clusters) +
                             ", N = " + std::to_string(n) + ")");
    if (affinity.entries.size() != n * n) throw ShapeError("affinity matrix storage size mismatch");

    Eigen::MatrixXd A(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) A(i, j) = affinity(i, j);

    Eigen::VectorXd degree = A.rowwise().sum();
    if ((degree.array() <= 0.0).any()) {
        A.diagonal().array() += 1e-12;
        degree = A.rowwise().sum();
    }
    const Eigen::VectorXd inv_sqrt = degree.array().rsqrt();
    Eigen::MatrixXd L = -(inv_sqrt.asDiagonal() * A * inv_sqrt.asDiagonal());
    L.diagonal().array() += 1.0;
    L = 0.5 * (L + L.transpose());

    // Eigenvalues come back in ascending order.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(L);
    if (solver.info() != Eigen::Success) throw Error("spectral_cluster: eigensolver failed");
    const Eigen::MatrixXd U = solver.eigenvectors().leftCols(clusters);

    PointSet embedding{static_cast<std::size_t>(clusters), {}};
    embedding.values.resize(n * static_cast<std::size_t>(clusters));
    for (std::size_t i = 0; i < n; ++i) {
        const double norm = U.row(static_cast<Eigen::Index>(i)).norm();
        for (int c = 0; c < clusters; ++c)
            embedding.values[i * clusters + c] = norm > 0.0 ? U(static_cast<Eigen::Index>(i), c) / norm : 0.0;
    }
    return kmeans(embedding, {static_cast<std::size_t>(clusters), seed, 100}).labels;
}

namespace {

double objective(const std::vector<const PartDetectionMap*>& maps, const std::vector<BernoulliGrid>& comps,
                 const std::vector<int>& assignments) {
    double total = 0.0;
    for (std::size_t n = 0; n < maps.size(); ++n) total += log_likelihood(*maps[n], comps[assignments[n]]);
    return total;
}

// ML step with empty-component repair: an empty component takes the map that fits its
// own (non-singleton) component worst.
std::vector<BernoulliGrid> estimate_components(const std::vector<const PartDetectionMap*>& maps,
                                               std::vector<int>& assignments, int m) {
    const auto M = static_cast<std::size_t>(m);
    auto members = [&](std::size_t c) {
        std::vector<const PartDetectionMap*> out;
        for (std::size_t n = 0; n < maps.size(); ++n)
            if (assignments[n] == static_cast<int>(c)) out.push_back(maps[n]);
        return out;
    };
    std::vector<std::size_t> counts(M, 0);
    for (int a : assignments) ++counts[static_cast<std::size_t>(a)];

    std::vector<BernoulliGrid> comps(M);
    for (std::size_t c = 0; c < M; ++c)
        if (counts[c] > 0) comps[c] = estimate_bernoulli(members(c));

    for (std::size_t c = 0; c < M; ++c) {
        if (counts[c] > 0) continue;
        std::size_t worst = maps.size();
        double worst_ll = std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n < maps.size(); ++n) {
            const auto owner = static_cast<std::size_t>(assignments[n]);
            if (counts[owner] < 2) continue;
            const double ll = log_likelihood(*maps[n], comps[owner]);
            if (ll < worst_ll) {
                worst_ll = ll;
                worst = n;
            }
        }
        const auto donor = static_cast<std::size_t>(assignments[worst]);
        assignments[worst] = static_cast<int>(c);
        --counts[donor];
        counts[c] = 1;
        comps[donor] = estimate_bernoulli(members(donor));
        comps[c] = estimate_bernoulli(members(c));
    }
    for (std::size_t c = 0; c < M; ++c) comps[c].mixture_index = static_cast<int>(c);
    return comps;
}

std::vector<int> reassign(const std::vector<const PartDetectionMap*>& maps, const std::vector<BernoulliGrid>& comps) {
    std::vector<int> out(maps.size(), 0);
    for (std::size_t n = 0; n < maps.size(); ++n) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < comps.size(); ++c) {
            const double ll = log_likelihood(*maps[n], comps[c]);
            if (ll > best) {
                best = ll;
                out[n] = static_cast<int>(c);
            }
        }
    }
    return out;
}

}  // namespace

MixtureModel fit_mixture(const std::vector<PartDetectionMap>& maps, const MixtureOptions& options, int class_label) {
    const int m = options.components;
    if (m <= 0) throw ParameterError("mixture needs at least one component");
    if (options.iterations <= 0) throw ParameterError("mixture needs at least one iteration");
    if (static_cast<std::size_t>(m) > maps.size())
        throw InputError("mixture with " + std::to_string(m) + " components needs at least as many maps (got " +
                         std::to_string(maps.size()) + ")");

    // Canonical order: by source_id, ties by input position.
    std::vector<std::size_t> order(maps.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return maps[a].source_id < maps[b].source_id; });
    std::vector<const PartDetectionMap*> sorted;
    sorted.reserve(maps.size());
    for (auto i : order) sorted.push_back(&maps[i]);

    std::vector<int> assignments(maps.size(), 0);
    if (m > 1) {
        std::vector<PartDetectionMap> canonical;
        canonical.reserve(maps.size());
        for (const auto* p : sorted) canonical.push_back(*p);
        assignments = spectral_cluster(hamming_affinity(canonical), m, options.seed);
    }

    MixtureModel model;
    model.class_label = class_label;
    auto comps = estimate_components(sorted, assignments, m);
    model.objective_history.push_back(objective(sorted, comps, assignments));
    bool converged = false;
    for (int it = 0; it < options.iterations && !converged; ++it) {
        auto next = reassign(sorted, comps);
        model.objective_history.push_back(objective(sorted, comps, next));
        converged = next == assignments;
        assignments = std::move(next);
        if (!converged) comps = estimate_components(sorted, assignments, m);
    }
    if (!converged) model.objective_history.push_back(objective(sorted, comps, assignments));

    for (auto& c : comps) c.class_label = class_label;
    model.components = std::move(comps);
    model.assignments.assign(maps.size(), 0);
    for (std::size_t i = 0; i < order.size(); ++i) model.assignments[order[i]] = assignments[i];
    return model;
}

}  // namespace compocc
