#pragma once

// Synthetic generators and enumeration oracles for exercising the models without any
// network features. Randomness: std::mt19937_64 seeded with
// derive_seed(spec.seed, {class, mode, stream}); one engine per call, consumed in
// (map, row, col, part) order.

#include <compocc/random.hpp>
#include <compocc/types.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace compocc {

struct SyntheticSpec {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t parts = 0;
    /// [class][mode] -> H*W*K alpha* tensor.
    std::vector<std::vector<std::vector<double>>> class_modes;
    std::vector<double> background;  // beta*, length K
    Region region;
    std::uint64_t seed = 0;
};

/// Throws ParameterError unless every alpha*/beta* lies in (0,1), shapes agree and the
/// region is within the grid.
void validate(const SyntheticSpec& spec);

/// n i.i.d. maps with b_{p,k} ~ Bernoulli(alpha*_{p,k}); all-zero positions get the
/// argmax(alpha*_p) bit. `stream` selects an independent sample stream.
std::vector<PartDetectionMap> sample_maps(const SyntheticSpec& spec, int cls, int mode,
                                          std::size_t n, std::uint64_t stream = 0);

/// Same sampling rule from an explicit parameter tensor.
PartDetectionMap sample_map(std::uint32_t height, std::uint32_t width, std::uint32_t parts,
                            std::span<const double> alpha, Rng& rng);

/// Replaces the bits inside region with Bernoulli(beta*) draws (with the >=1-bit repair).
PartDetectionMap occlude_region(const PartDetectionMap& map, const Region& region,
                                std::span<const double> beta_star, std::uint64_t seed);

/// Random rectangle whose area fraction of the grid lies in [min_fraction, max_fraction];
/// the (rows, cols) shape is drawn uniformly among admissible shapes, then its position.
/// Throws ParameterError when no rectangle fits the band.
Region random_region(std::uint32_t height, std::uint32_t width, double min_fraction,
                     double max_fraction, Rng& rng);

/// Random alpha* tensor: at every position `active` distinct parts get probability
/// `high`, all others `low`.
std::vector<double> random_alpha(std::uint32_t height, std::uint32_t width, std::uint32_t parts,
                                 std::uint32_t active, double high, double low, Rng& rng);

inline constexpr std::size_t kMaxEnumerationBits = 20;

/// sum over all 2^(H*W*K) maps of exp(log_likelihood(B, model)).
double brute_force_likelihood_sum(const BernoulliGrid& model);

/// sum over all maps of p(B | z, alpha, beta) with a fixed visibility grid z: each
/// position is scored by the object model where visible and by beta elsewhere.
double brute_force_conditional_sum(const BernoulliGrid& model, std::span<const double> beta,
                                   std::span<const std::uint8_t> visible);

/// Parses a JSON synthesis spec (see README) into a SyntheticSpec plus per-class sample
/// counts and whether to occlude.
struct SynthJob {
    SyntheticSpec spec;
    std::vector<std::size_t> samples_per_class;
    bool occlude = false;
};
SynthJob parse_synth_job(const std::string& json_text);

struct SynthOutput {
    std::vector<PartDetectionMap> maps;
    std::vector<int> labels;
};
SynthOutput run_synth_job(const SynthJob& job);

}  // namespace compocc
