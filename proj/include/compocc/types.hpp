#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace compocc {

/// Smoothing floor applied to every Bernoulli parameter (alpha and beta).
inline constexpr double kEpsilon = 1e-3;

/// H x W x C grid of feature vectors produced by an external extractor for one image.
/// Storage is row-major in (row, col, channel) order.
struct FeatureMap {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t channels = 0;
    std::vector<float> data;
    std::string source_id;

    std::size_t positions() const { return std::size_t{height} * width; }

    std::span<const float> at(std::size_t row, std::size_t col) const {
        return {data.data() + (row * width + col) * channels, channels};
    }
    std::span<const float> at(std::size_t position) const {
        return {data.data() + position * channels, channels};
    }
};

/// Feature maps paired with class labels (indices into class_names).
struct LabeledSet {
    std::vector<FeatureMap> maps;
    std::vector<int> labels;
    std::vector<std::string> class_names;

    std::size_t size() const { return maps.size(); }
};

/// Binary H x W x K tensor recording which dictionary parts fire at each grid position.
/// One byte per element (0 or 1), row-major in (row, col, part) order; packing to bits
/// happens only on disk.
struct PartDetectionMap {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t parts = 0;
    std::vector<std::uint8_t> bits;
    std::string source_id;

    PartDetectionMap() = default;
    PartDetectionMap(std::uint32_t h, std::uint32_t w, std::uint32_t k, std::string id = {})
        : height(h), width(w), parts(k), bits(std::size_t{h} * w * k, 0), source_id(std::move(id)) {}

    std::size_t positions() const { return std::size_t{height} * width; }

    std::uint8_t bit(std::size_t row, std::size_t col, std::size_t part) const {
        return bits[(row * width + col) * parts + part];
    }
    void set(std::size_t row, std::size_t col, std::size_t part, bool on) {
        bits[(row * width + col) * parts + part] = on ? 1 : 0;
    }
    std::span<const std::uint8_t> at(std::size_t position) const {
        return {bits.data() + position * parts, parts};
    }
    std::span<std::uint8_t> at(std::size_t position) {
        return {bits.data() + position * parts, parts};
    }
};

/// Per-position Bernoulli parameters of one mixture component of one class.
struct BernoulliGrid {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t parts = 0;
    std::vector<double> alpha;  // (row, col, part) row-major
    int class_label = 0;
    int mixture_index = 0;

    std::size_t positions() const { return std::size_t{height} * width; }
    std::span<const double> at(std::size_t position) const {
        return {alpha.data() + position * parts, parts};
    }
};

/// Position-independent Bernoulli model of part activations caused by occluders.
struct BackgroundModel {
    std::vector<double> beta;
    std::string occluder_kind;
};

/// Axis-aligned rectangle [top, bottom) x [left, right) in grid coordinates.
struct Region {
    std::uint32_t top = 0;
    std::uint32_t left = 0;
    std::uint32_t bottom = 0;
    std::uint32_t right = 0;

    std::size_t area() const {
        return bottom > top && right > left ? std::size_t{bottom - top} * (right - left) : 0;
    }
    bool contains(std::size_t row, std::size_t col) const {
        return row >= top && row < bottom && col >= left && col < right;
    }
};

}  // namespace compocc
