#include <compocc/compmodel.hpp>

#include <compocc/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace compocc {

namespace {

double clamp_probability(double p) { return std::clamp(p, kEpsilon, 1.0 - kEpsilon); }

void check_grid(const BernoulliGrid& model) {
    if (model.alpha.size() != model.positions() * model.parts)
        throw ShapeError("alpha tensor length does not match H*W*K");
}

}  // namespace

void check_same_shape(const PartDetectionMap& map, const BernoulliGrid& model) {
    if (map.height != model.height || map.width != model.width || map.parts != model.parts)
        throw ShapeError("detection map " + std::to_string(map.height) + "x" + std::to_string(map.width) +
                         "x" + std::to_string(map.parts) + " does not match model " +
                         std::to_string(model.height) + "x" + std::to_string(model.width) + "x" +
                         std::to_string(model.parts));
    if (map.bits.size() != map.positions() * map.parts)
        throw ShapeError("detection map bit count does not match H*W*K");
    check_grid(model);
}

BernoulliGrid estimate_bernoulli(const std::vector<const PartDetectionMap*>& maps) {
    if (maps.empty()) throw InputError("estimate_bernoulli needs at least one map");
    const auto& first = *maps.front();
    BernoulliGrid g;
    g.height = first.height;
    g.width = first.width;
    g.parts = first.parts;
    std::vector<std::size_t> counts(first.bits.size(), 0);
    for (const auto* m : maps) {
        if (m->height != g.height || m->width != g.width || m->parts != g.parts ||
            m->bits.size() != counts.size())
            throw ShapeError("estimate_bernoulli: maps have different shapes");
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += m->bits[i];
    }
    const double n = static_cast<double>(maps.size());
    g.alpha.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) g.alpha[i] = clamp_probability(static_cast<double>(counts[i]) / n);
    return g;
}

BernoulliGrid estimate_bernoulli(const std::vector<PartDetectionMap>& maps) {
    std::vector<const PartDetectionMap*> ptrs;
    ptrs.reserve(maps.size());
    for (const auto& m : maps) ptrs.push_back(&m);
    return estimate_bernoulli(ptrs);
}

double position_log_likelihood(std::span<const std::uint8_t> bits, std::span<const double> probs) {
    double s = 0.0;
    for (std::size_t k = 0; k < bits.size(); ++k) s += bits[k] ? std::log(probs[k]) : std::log1p(-probs[k]);
    return s;
}

double log_likelihood(const PartDetectionMap& map, const BernoulliGrid& model) {
    check_same_shape(map, model);
    double total = 0.0;
    for (std::size_t p = 0; p < map.positions(); ++p) total += position_log_likelihood(map.at(p), model.at(p));
    return total;
}

BackgroundModel estimate_background(const std::vector<std::vector<std::uint8_t>>& vectors,
                                    std::string occluder_kind) {
    if (vectors.empty()) throw InputError("estimate_background needs at least one vector");
    const auto K = vectors.front().size();
    std::vector<std::size_t> counts(K, 0);
    for (const auto& v : vectors) {
        if (v.size() != K) throw ShapeError("background vectors have different lengths");
        for (std::size_t k = 0; k < K; ++k) counts[k] += v[k] ? 1 : 0;
    }
    BackgroundModel bg{std::vector<double>(K), std::move(occluder_kind)};
    const double J = static_cast<double>(vectors.size());
    for (std::size_t k = 0; k < K; ++k) bg.beta[k] = clamp_probability(static_cast<double>(counts[k]) / J);
    return bg;
}

BackgroundModel estimate_background(const std::vector<PartDetectionMap>& maps, std::string occluder_kind) {
    std::vector<std::vector<std::uint8_t>> vectors;
    for (const auto& m : maps)
        for (std::size_t p = 0; p < m.positions(); ++p) {
            auto b = m.at(p);
            vectors.emplace_back(b.begin(), b.end());
        }
    return estimate_background(vectors, std::move(occluder_kind));
}

BackgroundModel pool_backgrounds(const std::vector<BackgroundModel>& models, std::string occluder_kind) {
    if (models.empty()) throw InputError("pool_backgrounds needs at least one model");
    const auto K = models.front().beta.size();
    BackgroundModel out{std::vector<double>(K, 0.0), std::move(occluder_kind)};
    for (const auto& m : models) {
        if (m.beta.size() != K) throw ShapeError("background models have different lengths");
        for (std::size_t k = 0; k < K; ++k) out.beta[k] += m.beta[k];
    }
    for (double& b : out.beta) b = clamp_probability(b / static_cast<double>(models.size()));
    return out;
}

OcclusionResult log_likelihood_occluded(const PartDetectionMap& map, const BernoulliGrid& model,
                                        const BackgroundModel& background, double prior) {
    if (!(prior > 0.0 && prior <= 1.0)) throw ParameterError("occlusion prior must lie in (0,1]");
    check_same_shape(map, model);
    if (background.beta.size() != map.parts)
        throw ShapeError("background model length " + std::to_string(background.beta.size()) +
                         " does not match K = " + std::to_string(map.parts));

    const double log_fg_prior = std::log(prior);
    const double log_bg_prior =
        prior == 1.0 ? -std::numeric_limits<double>::infinity() : std::log1p(-prior);

    const auto P = map.positions();
    OcclusionResult r;
    r.height = map.height;
    r.width = map.width;
    r.visible.resize(P);
    r.ratio_map.resize(P);
    r.object_scores.resize(P);
    for (std::size_t p = 0; p < P; ++p) {
        const auto bits = map.at(p);
        const double fg = position_log_likelihood(bits, model.at(p)) + log_fg_prior;
        const double bg = prior == 1.0 ? log_bg_prior : position_log_likelihood(bits, background.beta) + log_bg_prior;
        r.visible[p] = fg >= bg ? 1 : 0;
        r.ratio_map[p] = bg - fg;
        r.object_scores[p] = fg;
        r.log_likelihood += std::max(fg, bg);
    }
    return r;
}

Classification classify_single(const PartDetectionMap& map, const std::vector<std::vector<BernoulliGrid>>& models,
                               const BackgroundModel& background, double prior, bool use_occlusion) {
    if (models.empty()) throw InputError("classify_single needs at least one class");
    Classification c;
    c.scores.resize(models.size());
    c.best_mixture.resize(models.size());
    std::optional<OcclusionResult> winner;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < models.size(); ++y) {
        if (models[y].empty()) throw InputError("class " + std::to_string(y) + " has no mixture components");
        double class_best = -std::numeric_limits<double>::infinity();
        std::optional<OcclusionResult> class_result;
        for (std::size_t m = 0; m < models[y].size(); ++m) {
            double score;
            std::optional<OcclusionResult> occ;
            if (use_occlusion) {
                occ = log_likelihood_occluded(map, models[y][m], background, prior);
                score = occ->log_likelihood;
            } else {
                score = log_likelihood(map, models[y][m]);
            }
            if (m == 0 || score > class_best) {
                class_best = score;
                c.best_mixture[y] = static_cast<int>(m);
                class_result = std::move(occ);
            }
        }
        c.scores[y] = class_best;
        if (y == 0 || class_best > best) {
            best = class_best;
            c.label = static_cast<int>(y);
            winner = std::move(class_result);
        }
    }
    c.occlusion = std::move(winner);
    return c;
}

}  // namespace compocc
