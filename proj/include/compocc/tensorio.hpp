#pragma once

// File formats shared by the library, the CLI and the Python feature scripts.
//
//   FMAP  "FMAP" u32 version=1, u32 N H W C, then N*H*W*C little-endian binary32
//         values in (image, row, col, channel) order.
//   BMAP  "BMAP" u32 version=1, u32 N H W K, then ceil(N*H*W*K / 8) bytes; bit i of
//         the stream is element i in (image, row, col, part) order, LSB first.
//   CSV   labels "source_id,label_index"; probabilities "source_id,p_class0,...".
//   Model JSON document with an explicit format version.
//
// FMAP and BMAP carry no identifiers: the i-th map gets source_id "i" unless an
// optional "<file>.ids" sidecar (one id per line) is present next to it.

#include <compocc/dictionary.hpp>
#include <compocc/errors.hpp>
#include <compocc/types.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace compocc {

inline constexpr std::uint32_t kFmapVersion = 1;
inline constexpr std::uint32_t kBmapVersion = 1;
inline constexpr int kModelFormatVersion = 1;

// -- feature maps ---------------------------------------------------------------

std::vector<FeatureMap> read_feature_maps(const std::filesystem::path& path);
void write_feature_maps(const std::vector<FeatureMap>& maps, const std::filesystem::path& path);

std::vector<FeatureMap> decode_feature_maps(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_feature_maps(const std::vector<FeatureMap>& maps);

// -- detection maps -------------------------------------------------------------

std::vector<PartDetectionMap> read_detection_maps(const std::filesystem::path& path);
void write_detection_maps(const std::vector<PartDetectionMap>& maps,
                          const std::filesystem::path& path);

std::vector<PartDetectionMap> decode_detection_maps(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_detection_maps(const std::vector<PartDetectionMap>& maps);

// -- id sidecars ----------------------------------------------------------------

std::filesystem::path ids_sidecar_path(const std::filesystem::path& tensor_file);
void write_source_ids(const std::vector<std::string>& ids, const std::filesystem::path& path);
std::vector<std::string> read_source_ids(const std::filesystem::path& path);

/// Replaces the default positional ids with those from "<file>.ids" when that file
/// exists. Count mismatch is a FormatError.
template <class Map>
void apply_ids_sidecar(std::vector<Map>& maps, const std::filesystem::path& tensor_file) {
    const auto sidecar = ids_sidecar_path(tensor_file);
    if (!std::filesystem::exists(sidecar)) return;
    auto ids = read_source_ids(sidecar);
    if (ids.size() != maps.size())
        throw FormatError(sidecar.string() + ": " + std::to_string(ids.size()) +
                          " ids for " + std::to_string(maps.size()) + " maps");
    for (std::size_t i = 0; i < maps.size(); ++i) maps[i].source_id = std::move(ids[i]);
}

// -- labels, probabilities, predictions -------------------------------------------

/// Rows of a labels CSV in file order.
struct LabelTable {
    std::vector<std::string> source_ids;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    int num_classes() const;
    std::map<std::string, int> index() const;
};

/// Pairs every map with its label by source_id. Maps without a label are an
/// InputError. Class names default to "class<i>".
LabeledSet make_labeled_set(std::vector<FeatureMap> maps, const LabelTable& labels,
                            std::vector<std::string> class_names = {});

LabelTable read_labels(const std::filesystem::path& path);
void write_labels(const LabelTable& labels, const std::filesystem::path& path);

struct ProbabilityRow {
    std::string source_id;
    std::vector<double> probs;
};
std::vector<ProbabilityRow> read_probabilities(const std::filesystem::path& path);
void write_probabilities(const std::vector<ProbabilityRow>& rows, const std::filesystem::path& path);

/// source_id -> condition tag ("source_id,condition").
std::map<std::string, std::string> read_conditions(const std::filesystem::path& path);

/// Generic CSV helpers (no quoting; fields may not contain commas or newlines).
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               std::vector<std::string>* header = nullptr);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// -- model file -------------------------------------------------------------------

struct Hyperparameters {
    double delta = 0.45;
    int mixtures = 4;
    int k_per_class = 50;
    double occlusion_prior = 0.7;
    double tau = 0.6;
};

/// Everything needed to encode and classify: dictionary, per-class mixture
/// components, named background models and the hyperparameters used to build them.
struct ModelFile {
    PartDictionary dictionary;
    std::vector<std::string> class_names;
    std::vector<std::vector<BernoulliGrid>> class_models;  // [class][mixture]
    std::vector<BackgroundModel> background_models;
    Hyperparameters hyperparameters;

    const BackgroundModel& background(const std::string& kind) const;
};

/// Throws ValidationError on any invariant violation.
void validate(const ModelFile& model);

void save_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

std::string model_to_text(const ModelFile& model);
ModelFile model_from_text(const std::string& text);

/// A dictionary-only document ("model fragment") written by build-dict.
struct DictionaryFile {
    PartDictionary dictionary;
    std::vector<std::string> class_names;
    Hyperparameters hyperparameters;
};

void save_dictionary(const DictionaryFile& dict, const std::filesystem::path& path);
/// Accepts both dictionary fragments and full model files.
DictionaryFile load_dictionary(const std::filesystem::path& path);

// -- raw bytes --------------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace compocc
