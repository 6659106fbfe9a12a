#pragma once

#include <compocc/types.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace compocc {

/// ML estimate of one position-wise Bernoulli grid: the clamped mean of the maps.
BernoulliGrid estimate_bernoulli(const std::vector<PartDetectionMap>& maps);
BernoulliGrid estimate_bernoulli(const std::vector<const PartDetectionMap*>& maps);

/// sum_{p,k} b ln(alpha) + (1 - b) ln(1 - alpha), accumulated position by position.
double log_likelihood(const PartDetectionMap& map, const BernoulliGrid& model);

/// Log-probability of one position's detection vector under a Bernoulli vector.
double position_log_likelihood(std::span<const std::uint8_t> bits, std::span<const double> probs);

/// beta = clamped mean of J detection vectors of length K.
BackgroundModel estimate_background(const std::vector<std::vector<std::uint8_t>>& vectors,
                                    std::string occluder_kind = "background");

/// Pools every position vector of every map as one background sample.
BackgroundModel estimate_background(const std::vector<PartDetectionMap>& maps,
                                    std::string occluder_kind = "background");

/// Element-wise mean of several background models (the "pooled" model).
BackgroundModel pool_backgrounds(const std::vector<BackgroundModel>& models,
                                 std::string occluder_kind = "pooled");

struct OcclusionResult {
    double log_likelihood = 0.0;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    /// 1 = object visible at the position, 0 = occluder.
    std::vector<std::uint8_t> visible;
    /// Per-position background score minus object score; positive marks an occluder.
    std::vector<double> ratio_map;
    /// Per-position object-branch score, including ln(prior).
    std::vector<double> object_scores;
};

/// Occlusion-aware likelihood: every position is explained by the object model (weight
/// prior) or by the background model (weight 1 - prior), whichever scores higher; ties
/// go to the object. prior must lie in (0, 1]; prior = 1 reduces exactly to
/// log_likelihood.
OcclusionResult log_likelihood_occluded(const PartDetectionMap& map, const BernoulliGrid& model,
                                        const BackgroundModel& background, double prior);

struct Classification {
    int label = 0;
    std::vector<double> scores;        // best score per class
    std::vector<int> best_mixture;     // argmax mixture per class
    std::optional<OcclusionResult> occlusion;  // winner's result when occlusion is on
};

/// argmax_y max_m score(B | class y, mixture m); lowest index wins exact ties.
Classification classify_single(const PartDetectionMap& map,
                               const std::vector<std::vector<BernoulliGrid>>& models,
                               const BackgroundModel& background, double prior,
                               bool use_occlusion);

/// Throws ShapeError unless the map and the grid have identical H, W, K.
void check_same_shape(const PartDetectionMap& map, const BernoulliGrid& model);

}  // namespace compocc
