#include <compocc/synthlab.hpp>

#include <compocc/compmodel.hpp>
#include <compocc/errors.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace compocc {

namespace {

void check_open_unit(std::span<const double> v, const char* what) {
    for (double x : v)
        if (!(x > 0.0 && x < 1.0)) throw ParameterError(std::string(what) + " entries must lie in (0,1)");
}

void check_region(const Region& r, std::uint32_t height, std::uint32_t width) {
    if (r.top > r.bottom || r.left > r.right || r.bottom > height || r.right > width)
        throw ParameterError("region [" + std::to_string(r.top) + "," + std::to_string(r.bottom) + ")x[" +
                             std::to_string(r.left) + "," + std::to_string(r.right) + ") is outside the " +
                             std::to_string(height) + "x" + std::to_string(width) + " grid");
}

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void draw_position(std::span<std::uint8_t> bits, std::span<const double> probs, Rng& rng) {
    bool any = false;
    for (std::size_t k = 0; k < bits.size(); ++k) {
        bits[k] = rng.bernoulli(probs[k]) ? 1 : 0;
        any = any || bits[k];
    }
    if (!any && !bits.empty()) bits[argmax(probs)] = 1;
}

}  // namespace

void validate(const SyntheticSpec& spec) {
    if (spec.height == 0 || spec.width == 0 || spec.parts == 0) throw ParameterError("grid dimensions must be positive");
    const std::size_t size = std::size_t{spec.height} * spec.width * spec.parts;
    if (spec.class_modes.empty()) throw ParameterError("spec has no classes");
    for (const auto& modes : spec.class_modes) {
        if (modes.empty()) throw ParameterError("class without modes");
        for (const auto& alpha : modes) {
            if (alpha.size() != size) throw ParameterError("alpha* tensor length does not match H*W*K");
            check_open_unit(alpha, "alpha*");
        }
    }
    if (spec.background.size() != spec.parts) throw ParameterError("beta* length does not match K");
    check_open_unit(spec.background, "beta*");
    check_region(spec.region, spec.height, spec.width);
}

PartDetectionMap sample_map(std::uint32_t height, std::uint32_t width, std::uint32_t parts,
                            std::span<const double> alpha, Rng& rng) {
    PartDetectionMap m(height, width, parts);
    for (std::size_t p = 0; p < m.positions(); ++p) draw_position(m.at(p), alpha.subspan(p * parts, parts), rng);
    return m;
}

std::vector<PartDetectionMap> sample_maps(const SyntheticSpec& spec, int cls, int mode, std::size_t n,
                                          std::uint64_t stream) {
    validate(spec);
    if (cls < 0 || static_cast<std::size_t>(cls) >= spec.class_modes.size())
        throw ParameterError("class index out of range");
    const auto& modes = spec.class_modes[static_cast<std::size_t>(cls)];
    if (mode < 0 || static_cast<std::size_t>(mode) >= modes.size()) throw ParameterError("mode index out of range");
    const auto& alpha = modes[static_cast<std::size_t>(mode)];

    Rng rng(derive_seed(spec.seed, {static_cast<std::uint64_t>(cls), static_cast<std::uint64_t>(mode), stream}));
    std::vector<PartDetectionMap> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto m = sample_map(spec.height, spec.width, spec.parts, alpha, rng);
        m.source_id = "c" + std::to_string(cls) + "m" + std::to_string(mode) + "s" + std::to_string(stream) + "_" +
                      std::to_string(i);
        out.push_back(std::move(m));
    }
    return out;
}

PartDetectionMap occlude_region(const PartDetectionMap& map, const Region& region, std::span<const double> beta_star,
                                std::uint64_t seed) {
    check_region(region, map.height, map.width);
    if (beta_star.size() != map.parts) throw ShapeError("beta* length does not match K");
    check_open_unit(beta_star, "beta*");
    PartDetectionMap out = map;
    Rng rng(seed);
    for (std::uint32_t r = region.top; r < region.bottom; ++r)
        for (std::uint32_t c = region.left; c < region.right; ++c)
            draw_position(out.at(std::size_t{r} * map.width + c), beta_star, rng);
    return out;
}

Region random_region(std::uint32_t height, std::uint32_t width, double min_fraction, double max_fraction, Rng& rng) {
    const double total = static_cast<double>(height) * width;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes;
    for (std::uint32_t h = 0; h <= height; ++h)
        for (std::uint32_t w = 0; w <= width; ++w) {
            const double f = static_cast<double>(h) * w / total;
            if (f >= min_fraction && f <= max_fraction) shapes.emplace_back(h, w);
        }
    if (shapes.empty()) throw ParameterError("no rectangle covers the requested area fraction");
    const auto [h, w] = shapes[rng.index(shapes.size())];
    const auto top = static_cast<std::uint32_t>(rng.index(height - h + 1));
    const auto left = static_cast<std::uint32_t>(rng.index(width - w + 1));
    return {top, left, top + h, left + w};
}

std::vector<double> random_alpha(std::uint32_t height, std::uint32_t width, std::uint32_t parts, std::uint32_t active,
                                 double high, double low, Rng& rng) {
    if (active > parts) throw ParameterError("more active parts than parts");
    std::vector<double> alpha(std::size_t{height} * width * parts, low);
    std::vector<std::uint32_t> ids(parts);
    for (std::size_t p = 0; p < std::size_t{height} * width; ++p) {
        std::iota(ids.begin(), ids.end(), 0u);
        // Partial Fisher-Yates.
        for (std::uint32_t i = 0; i < active; ++i) {
            const auto j = i + static_cast<std::uint32_t>(rng.index(parts - i));
            std::swap(ids[i], ids[j]);
            alpha[p * parts + ids[i]] = high;
        }
    }
    return alpha;
}

double brute_force_likelihood_sum(const BernoulliGrid& model) {
    const std::size_t bits = model.positions() * model.parts;
    if (bits > kMaxEnumerationBits)
        throw ParameterError("grid has " + std::to_string(bits) + " bits; enumeration is limited to " +
                             std::to_string(kMaxEnumerationBits));
    PartDetectionMap m(model.height, model.width, model.parts);
    double sum = 0.0;
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << bits); ++code) {
        for (std::size_t i = 0; i < bits; ++i) m.bits[i] = (code >> i) & 1u;
        sum += std::exp(log_likelihood(m, model));
    }
    return sum;
}

double brute_force_conditional_sum(const BernoulliGrid& model, std::span<const double> beta,
                                   std::span<const std::uint8_t> visible) {
    const std::size_t positions = model.positions();
    const std::size_t K = model.parts;
    const std::size_t bits = positions * K;
    if (bits > kMaxEnumerationBits)
        throw ParameterError("grid has " + std::to_string(bits) + " bits; enumeration is limited to " +
                             std::to_string(kMaxEnumerationBits));
    if (beta.size() != K || visible.size() != positions) throw ShapeError("beta or visibility grid has the wrong size");
    PartDetectionMap m(model.height, model.width, model.parts);
    double sum = 0.0;
    for (std::uint64_t code = 0; code < (std::uint64_t{1} << bits); ++code) {
        for (std::size_t i = 0; i < bits; ++i) m.bits[i] = (code >> i) & 1u;
        double log_p = 0.0;
        for (std::size_t p = 0; p < positions; ++p)
            log_p += position_log_likelihood(m.at(p), visible[p] ? model.at(p) : beta);
        sum += std::exp(log_p);
    }
    return sum;
}

// -- JSON jobs ------------------------------------------------------------------------

namespace {

using json = nlohmann::json;

std::vector<double> tensor_from_json(const json& node, std::uint32_t h, std::uint32_t w, std::uint32_t k, Rng& rng) {
    if (node.is_array()) return node.get<std::vector<double>>();
    if (node.is_object() && node.contains("random")) {
        const auto& r = node["random"];
        return random_alpha(h, w, k, r.value("active_parts", 2u), r.value("high", 0.85), r.value("low", 0.05), rng);
    }
    if (node.is_object() && node.contains("alpha")) return node["alpha"].get<std::vector<double>>();
    throw FormatError("tensor must be an array, {\"alpha\": [...]} or {\"random\": {...}}");
}

}  // namespace

SynthJob parse_synth_job(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("synth job is not valid JSON: ") + e.what());
    }
    try {
        SynthJob job;
        auto& s = job.spec;
        s.height = doc.at("height").get<std::uint32_t>();
        s.width = doc.at("width").get<std::uint32_t>();
        s.parts = doc.at("parts").get<std::uint32_t>();
        s.seed = doc.value("seed", std::uint64_t{0});
        Rng gen(derive_seed(s.seed, {0xA17A}));
        for (const auto& cls : doc.at("classes")) {
            std::vector<std::vector<double>> modes;
            for (const auto& mode : cls.at("modes")) modes.push_back(tensor_from_json(mode, s.height, s.width, s.parts, gen));
            job.samples_per_class.push_back(cls.value("samples", std::size_t{100}));
            s.class_modes.push_back(std::move(modes));
        }
        const auto& bg = doc.at("background");
        s.background = tensor_from_json(bg, 1, 1, s.parts, gen);
        if (doc.contains("region")) {
            const auto& r = doc["region"];
            s.region = {r.at("top").get<std::uint32_t>(), r.at("left").get<std::uint32_t>(),
                        r.at("bottom").get<std::uint32_t>(), r.at("right").get<std::uint32_t>()};
        }
        job.occlude = doc.value("occlude", false);
        validate(s);
        return job;
    } catch (const json::exception& e) {
        throw FormatError(std::string("synth job: ") + e.what());
    }
}

SynthOutput run_synth_job(const SynthJob& job) {
    validate(job.spec);
    SynthOutput out;
    std::size_t serial = 0;
    for (std::size_t y = 0; y < job.spec.class_modes.size(); ++y) {
        const auto modes = job.spec.class_modes[y].size();
        const auto n = job.samples_per_class[y];
        for (std::size_t m = 0; m < modes; ++m) {
            const std::size_t count = n / modes + (m < n % modes ? 1 : 0);
            auto maps = sample_maps(job.spec, static_cast<int>(y), static_cast<int>(m), count);
            for (auto& map : maps) {
                if (job.occlude)
                    map = occlude_region(map, job.spec.region, job.spec.background,
                                         derive_seed(job.spec.seed, {0x0CC1, serial}));
                map.source_id = "synth" + std::to_string(serial++);
                out.maps.push_back(std::move(map));
                out.labels.push_back(static_cast<int>(y));
            }
        }
    }
    return out;
}

}  // namespace compocc
