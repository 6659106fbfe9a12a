#include <compocc/tensorio.hpp>

#include <compocc/errors.hpp>

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace compocc {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr std::size_t kHeaderBytes = 24;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in[offset + i]} << (8 * i);
    return v;
}

struct TensorHeader {
    std::uint32_t n, h, w, c;
    std::uint64_t elements() const { return std::uint64_t{n} * h * w * c; }
};

TensorHeader parse_header(const std::vector<std::uint8_t>& bytes, const char (&magic)[5],
                          std::uint32_t version) {
    if (bytes.size() < 4 || !std::equal(magic, magic + 4, bytes.begin()))
        throw FormatError(std::string("bad magic: expected \"") + magic + "\"");
    if (bytes.size() < kHeaderBytes)
        throw CorruptionError("truncated header: " + std::to_string(bytes.size()) + " bytes");
    const auto found = get_u32(bytes, 4);
    if (found != version)
        throw VersionError(std::string(magic) + " version " + std::to_string(found) +
                           " is not supported (expected " + std::to_string(version) + ")");
    TensorHeader h{get_u32(bytes, 8), get_u32(bytes, 12), get_u32(bytes, 16), get_u32(bytes, 20)};
    if (h.n > 0 && (h.h == 0 || h.w == 0 || h.c == 0))
        throw FormatError(std::string(magic) + " header declares a zero dimension");
    return h;
}

void check_payload(std::uint64_t have, std::uint64_t want) {
    if (have < want)
        throw CorruptionError("truncated payload: " + std::to_string(have) + " of " +
                              std::to_string(want) + " bytes");
    if (have > want)
        throw CorruptionError("trailing bytes: payload has " + std::to_string(have) +
                              " bytes, header declares " + std::to_string(want));
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

int parse_int(const std::string& s, const std::string& what) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw FormatError("cannot parse " + what + " '" + s + "' as an integer");
    return v;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw FormatError("cannot parse " + what + " '" + s + "' as a number");
    }
}

void check_field(const std::string& s) {
    if (s.find_first_of(",\n\r") != std::string::npos)
        throw InputError("CSV field contains a separator: '" + s + "'");
}

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

// -- raw bytes --------------------------------------------------------------------

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

// -- FMAP ---------------------------------------------------------------------------

std::vector<std::uint8_t> encode_feature_maps(const std::vector<FeatureMap>& maps) {
    std::uint32_t h = 0, w = 0, c = 0;
    if (!maps.empty()) {
        h = maps.front().height;
        w = maps.front().width;
        c = maps.front().channels;
    }
    for (const auto& m : maps) {
        if (m.height != h || m.width != w || m.channels != c)
            throw ShapeError("feature maps have heterogeneous shapes");
        if (m.data.size() != std::size_t{h} * w * c)
            throw ShapeError("feature map '" + m.source_id + "' data length does not match H*W*C");
    }
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + maps.size() * std::size_t{h} * w * c * 4);
    out.insert(out.end(), {'F', 'M', 'A', 'P'});
    put_u32(out, kFmapVersion);
    put_u32(out, static_cast<std::uint32_t>(maps.size()));
    put_u32(out, h);
    put_u32(out, w);
    put_u32(out, c);
    for (const auto& m : maps)
        for (float v : m.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

std::vector<FeatureMap> decode_feature_maps(const std::vector<std::uint8_t>& bytes) {
    const auto hdr = parse_header(bytes, "FMAP", kFmapVersion);
    check_payload(bytes.size() - kHeaderBytes, hdr.elements() * 4);
    const std::size_t per_map = std::size_t{hdr.h} * hdr.w * hdr.c;
    std::vector<FeatureMap> maps(hdr.n);
    std::size_t offset = kHeaderBytes;
    for (std::uint32_t i = 0; i < hdr.n; ++i) {
        auto& m = maps[i];
        m.height = hdr.h;
        m.width = hdr.w;
        m.channels = hdr.c;
        m.source_id = std::to_string(i);
        m.data.resize(per_map);
        for (std::size_t j = 0; j < per_map; ++j, offset += 4) {
            const float v = std::bit_cast<float>(get_u32(bytes, offset));
            if (!std::isfinite(v))
                throw DataError("non-finite value at element " + std::to_string(i * per_map + j) +
                                " (map " + std::to_string(i) + ", offset " + std::to_string(j) + ")");
            m.data[j] = v;
        }
    }
    return maps;
}

std::vector<FeatureMap> read_feature_maps(const fs::path& path) {
    return decode_feature_maps(read_file_bytes(path));
}

void write_feature_maps(const std::vector<FeatureMap>& maps, const fs::path& path) {
    write_file_bytes(path, encode_feature_maps(maps));
}

// -- BMAP ---------------------------------------------------------------------------

std::vector<std::uint8_t> encode_detection_maps(const std::vector<PartDetectionMap>& maps) {
    std::uint32_t h = 0, w = 0, k = 0;
    if (!maps.empty()) {
        h = maps.front().height;
        w = maps.front().width;
        k = maps.front().parts;
    }
    for (const auto& m : maps) {
        if (m.height != h || m.width != w || m.parts != k)
            throw ShapeError("detection maps have heterogeneous shapes");
        if (m.bits.size() != std::size_t{h} * w * k)
            throw ShapeError("detection map '" + m.source_id + "' bit count does not match H*W*K");
    }
    const std::uint64_t total = std::uint64_t{maps.size()} * h * w * k;
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + (total + 7) / 8);
    out.insert(out.end(), {'B', 'M', 'A', 'P'});
    put_u32(out, kBmapVersion);
    put_u32(out, static_cast<std::uint32_t>(maps.size()));
    put_u32(out, h);
    put_u32(out, w);
    put_u32(out, k);
    out.resize(kHeaderBytes + (total + 7) / 8, 0);
    std::uint64_t i = 0;
    for (const auto& m : maps)
        for (auto b : m.bits) {
            if (b) out[kHeaderBytes + i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
            ++i;
        }
    return out;
}

std::vector<PartDetectionMap> decode_detection_maps(const std::vector<std::uint8_t>& bytes) {
    const auto hdr = parse_header(bytes, "BMAP", kBmapVersion);
    check_payload(bytes.size() - kHeaderBytes, (hdr.elements() + 7) / 8);
    std::vector<PartDetectionMap> maps;
    maps.reserve(hdr.n);
    std::uint64_t i = 0;
    for (std::uint32_t n = 0; n < hdr.n; ++n) {
        PartDetectionMap m(hdr.h, hdr.w, hdr.c, std::to_string(n));
        for (auto& b : m.bits) {
            b = (bytes[kHeaderBytes + i / 8] >> (i % 8)) & 1u;
            ++i;
        }
        maps.push_back(std::move(m));
    }
    return maps;
}

std::vector<PartDetectionMap> read_detection_maps(const fs::path& path) {
    return decode_detection_maps(read_file_bytes(path));
}

void write_detection_maps(const std::vector<PartDetectionMap>& maps, const fs::path& path) {
    write_file_bytes(path, encode_detection_maps(maps));
}

// -- ids ----------------------------------------------------------------------------

fs::path ids_sidecar_path(const fs::path& tensor_file) {
    auto p = tensor_file;
    p += ".ids";
    return p;
}

void write_source_ids(const std::vector<std::string>& ids, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& id : ids) {
        if (id.find_first_of("\n\r") != std::string::npos)
            throw InputError("source id contains a newline");
        out << id << '\n';
    }
}

std::vector<std::string> read_source_ids(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> ids;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ids.push_back(line);
    }
    return ids;
}

// -- CSV ----------------------------------------------------------------------------

std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::vector<std::string>* header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header line");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header) *header = split(line);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(split(line));
    }
    return rows;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    auto emit = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            check_field(fields[i]);
            if (i) out << ',';
            out << fields[i];
        }
        out << '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
}

int LabelTable::num_classes() const {
    return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

std::map<std::string, int> LabelTable::index() const {
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < size(); ++i) {
        if (!out.emplace(source_ids[i], labels[i]).second)
            throw InputError("duplicate source_id in labels: " + source_ids[i]);
    }
    return out;
}

LabelTable read_labels(const fs::path& path) {
    LabelTable table;
    for (const auto& row : read_csv(path)) {
        if (row.size() != 2) throw FormatError(path.string() + ": expected 2 columns per row");
        const int label = parse_int(row[1], "label_index");
        if (label < 0) throw FormatError(path.string() + ": negative label for " + row[0]);
        table.source_ids.push_back(row[0]);
        table.labels.push_back(label);
    }
    return table;
}

void write_labels(const LabelTable& labels, const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
        rows.push_back({labels.source_ids[i], std::to_string(labels.labels[i])});
    write_csv(path, {"source_id", "label_index"}, rows);
}

LabeledSet make_labeled_set(std::vector<FeatureMap> maps, const LabelTable& labels,
                            std::vector<std::string> class_names) {
    const auto lookup = labels.index();
    LabeledSet set;
    set.labels.reserve(maps.size());
    for (const auto& m : maps) {
        auto it = lookup.find(m.source_id);
        if (it == lookup.end()) throw InputError("no label for feature map '" + m.source_id + "'");
        set.labels.push_back(it->second);
    }
    set.maps = std::move(maps);
    if (class_names.empty()) {
        const int n = labels.num_classes();
        for (int i = 0; i < n; ++i) class_names.push_back("class" + std::to_string(i));
    }
    for (int y : set.labels)
        if (y >= static_cast<int>(class_names.size()))
            throw InputError("label " + std::to_string(y) + " has no class name");
    set.class_names = std::move(class_names);
    return set;
}

std::vector<ProbabilityRow> read_probabilities(const fs::path& path) {
    std::vector<std::string> header;
    auto rows = read_csv(path, &header);
    if (header.size() < 2) throw FormatError(path.string() + ": no probability columns");
    std::vector<ProbabilityRow> out;
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw FormatError(path.string() + ": row for '" + (row.empty() ? "" : row[0]) +
                              "' has " + std::to_string(row.size()) + " columns");
        ProbabilityRow r{row[0], {}};
        for (std::size_t i = 1; i < row.size(); ++i) r.probs.push_back(parse_double(row[i], "probability"));
        out.push_back(std::move(r));
    }
    return out;
}

void write_probabilities(const std::vector<ProbabilityRow>& rows, const fs::path& path) {
    std::vector<std::string> header{"source_id"};
    const std::size_t n = rows.empty() ? 0 : rows.front().probs.size();
    for (std::size_t i = 0; i < n; ++i) header.push_back("p_class" + std::to_string(i));
    std::vector<std::vector<std::string>> out;
    for (const auto& r : rows) {
        if (r.probs.size() != n) throw ShapeError("probability rows have different lengths");
        std::vector<std::string> fields{r.source_id};
        for (double p : r.probs) fields.push_back(format_double(p));
        out.push_back(std::move(fields));
    }
    write_csv(path, header, out);
}

std::map<std::string, std::string> read_conditions(const fs::path& path) {
    std::map<std::string, std::string> out;
    for (const auto& row : read_csv(path)) {
        if (row.size() != 2) throw FormatError(path.string() + ": expected 2 columns per row");
        out[row[0]] = row[1];
    }
    return out;
}

// -- model documents ------------------------------------------------------------------

namespace {

constexpr const char* kFormatName = "compocc-model";

json hyper_to_json(const Hyperparameters& h) {
    return {{"delta", h.delta},
            {"mixtures", h.mixtures},
            {"k_per_class", h.k_per_class},
            {"occlusion_prior", h.occlusion_prior},
            {"tau", h.tau}};
}

template <class T>
T require(const json& node, const char* key) {
    if (!node.is_object() || !node.contains(key))
        throw ValidationError(std::string("missing field '") + key + "'");
    try {
        return node.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("field '") + key + "': " + e.what());
    }
}

Hyperparameters hyper_from_json(const json& j) {
    Hyperparameters h;
    h.delta = require<double>(j, "delta");
    h.mixtures = require<int>(j, "mixtures");
    h.k_per_class = require<int>(j, "k_per_class");
    h.occlusion_prior = require<double>(j, "occlusion_prior");
    h.tau = require<double>(j, "tau");
    return h;
}

json dict_to_json(const PartDictionary& d) {
    json centroids = json::array();
    for (std::size_t k = 0; k < d.parts(); ++k) {
        auto c = d.centroid(k);
        centroids.push_back(std::vector<double>(c.begin(), c.end()));
    }
    return {{"dim", d.dim},
            {"k_per_class", d.k_per_class},
            {"class_of_part", d.class_of_part},
            {"centroids", std::move(centroids)}};
}

PartDictionary dict_from_json(const json& j) {
    PartDictionary d;
    d.dim = require<std::uint32_t>(j, "dim");
    d.k_per_class = require<int>(j, "k_per_class");
    d.class_of_part = require<std::vector<int>>(j, "class_of_part");
    auto rows = require<std::vector<std::vector<double>>>(j, "centroids");
    if (rows.size() != d.class_of_part.size())
        throw ValidationError("dictionary has " + std::to_string(rows.size()) + " centroids but " +
                              std::to_string(d.class_of_part.size()) + " class_of_part entries");
    for (const auto& r : rows) {
        if (r.size() != d.dim) throw ValidationError("centroid dimension does not match 'dim'");
        d.centroids.insert(d.centroids.end(), r.begin(), r.end());
    }
    return d;
}

json document_header(const char* kind) {
    return {{"format", kFormatName}, {"version", kModelFormatVersion}, {"kind", kind}};
}

json parse_document(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("model document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != kFormatName)
        throw FormatError("not a compocc model document");
    if (!doc.contains("version") || !doc["version"].is_number_integer())
        throw FormatError("model document has no integer version");
    const int version = doc["version"].get<int>();
    if (version != kModelFormatVersion)
        throw VersionError("model format version " + std::to_string(version) +
                           " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");
    return doc;
}

void check_open_interval(const std::vector<double>& v, const std::string& what) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!(v[i] > 0.0 && v[i] < 1.0))
            throw ValidationError(what + " entry " + std::to_string(i) + " = " + format_double(v[i]) +
                                  " is outside (0,1)");
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

const BackgroundModel& ModelFile::background(const std::string& kind) const {
    for (const auto& b : background_models)
        if (b.occluder_kind == kind) return b;
    throw InputError("model has no background model named '" + kind + "'");
}

void validate(const ModelFile& model) {
    const int classes = static_cast<int>(model.class_names.size());
    if (classes == 0) throw ValidationError("model has no classes");
    validate(model.dictionary, classes);
    const auto K = model.dictionary.parts();
    if (model.class_models.size() != model.class_names.size())
        throw ValidationError("class_models count does not match class_names");
    std::uint32_t h = 0, w = 0;
    bool have_grid = false;
    for (std::size_t y = 0; y < model.class_models.size(); ++y) {
        if (model.class_models[y].empty())
            throw ValidationError("class " + std::to_string(y) + " has no mixture components");
        for (const auto& g : model.class_models[y]) {
            if (g.parts != K)
                throw ValidationError("alpha K = " + std::to_string(g.parts) +
                                      " differs from dictionary K = " + std::to_string(K));
            if (!have_grid) {
                h = g.height;
                w = g.width;
                have_grid = true;
            }
            if (g.height != h || g.width != w)
                throw ValidationError("mixture components have different grid sizes");
            if (g.alpha.size() != g.positions() * g.parts)
                throw ValidationError("alpha tensor length does not match H*W*K");
            check_open_interval(g.alpha, "alpha");
        }
    }
    if (model.background_models.empty()) throw ValidationError("model has no background models");
    for (const auto& b : model.background_models) {
        if (b.beta.size() != K)
            throw ValidationError("beta '" + b.occluder_kind + "' length differs from dictionary K");
        check_open_interval(b.beta, "beta");
    }
    const auto& hp = model.hyperparameters;
    if (!(hp.occlusion_prior > 0.0 && hp.occlusion_prior <= 1.0))
        throw ValidationError("occlusion_prior outside (0,1]");
    if (!(hp.tau >= 0.0 && hp.tau <= 1.0)) throw ValidationError("tau outside [0,1]");
    if (!(hp.delta > 0.0 && hp.delta < 1.0)) throw ValidationError("delta outside (0,1)");
}

std::string model_to_text(const ModelFile& model) {
    validate(model);
    json doc = document_header("model");
    doc["hyperparameters"] = hyper_to_json(model.hyperparameters);
    doc["class_names"] = model.class_names;
    doc["dictionary"] = dict_to_json(model.dictionary);
    const auto& first = model.class_models.front().front();
    doc["grid"] = {{"height", first.height}, {"width", first.width}, {"parts", first.parts}};
    json classes = json::array();
    for (std::size_t y = 0; y < model.class_models.size(); ++y) {
        json comps = json::array();
        for (const auto& g : model.class_models[y])
            comps.push_back({{"mixture", g.mixture_index}, {"alpha", g.alpha}});
        classes.push_back({{"class", y}, {"components", std::move(comps)}});
    }
    doc["class_models"] = std::move(classes);
    json bgs = json::array();
    for (const auto& b : model.background_models)
        bgs.push_back({{"kind", b.occluder_kind}, {"beta", b.beta}});
    doc["background_models"] = std::move(bgs);
    return doc.dump(1) + "\n";
}

ModelFile model_from_text(const std::string& text) {
    const json doc = parse_document(text);
    if (doc.value("kind", "") != "model") throw ValidationError("document is not a full model");
    ModelFile m;
    m.hyperparameters = hyper_from_json(require<json>(doc, "hyperparameters"));
    m.class_names = require<std::vector<std::string>>(doc, "class_names");
    m.dictionary = dict_from_json(require<json>(doc, "dictionary"));
    const json grid = require<json>(doc, "grid");
    const auto h = require<std::uint32_t>(grid, "height");
    const auto w = require<std::uint32_t>(grid, "width");
    const auto k = require<std::uint32_t>(grid, "parts");
    for (const auto& cls : require<json>(doc, "class_models")) {
        const int y = require<int>(cls, "class");
        if (y != static_cast<int>(m.class_models.size()))
            throw ValidationError("class_models must be listed in class order");
        std::vector<BernoulliGrid> comps;
        for (const auto& c : require<json>(cls, "components")) {
            BernoulliGrid g;
            g.height = h;
            g.width = w;
            g.parts = k;
            g.class_label = y;
            g.mixture_index = require<int>(c, "mixture");
            g.alpha = require<std::vector<double>>(c, "alpha");
            comps.push_back(std::move(g));
        }
        m.class_models.push_back(std::move(comps));
    }
    if (!doc.contains("background_models")) throw ValidationError("missing background_models section");
    for (const auto& b : doc["background_models"])
        m.background_models.push_back({require<std::vector<double>>(b, "beta"), require<std::string>(b, "kind")});
    validate(m);
    return m;
}

void save_model(const ModelFile& model, const fs::path& path) { write_text(path, model_to_text(model)); }

ModelFile load_model(const fs::path& path) { return model_from_text(read_text(path)); }

void save_dictionary(const DictionaryFile& dict, const fs::path& path) {
    validate(dict.dictionary, static_cast<int>(dict.class_names.size()));
    json doc = document_header("dictionary");
    doc["hyperparameters"] = hyper_to_json(dict.hyperparameters);
    doc["class_names"] = dict.class_names;
    doc["dictionary"] = dict_to_json(dict.dictionary);
    write_text(path, doc.dump(1) + "\n");
}

DictionaryFile load_dictionary(const fs::path& path) {
    const json doc = parse_document(read_text(path));
    const auto kind = doc.value("kind", "");
    if (kind != "dictionary" && kind != "model")
        throw ValidationError("unknown document kind '" + kind + "'");
    DictionaryFile d;
    d.hyperparameters = hyper_from_json(require<json>(doc, "hyperparameters"));
    d.class_names = require<std::vector<std::string>>(doc, "class_names");
    d.dictionary = dict_from_json(require<json>(doc, "dictionary"));
    validate(d.dictionary, static_cast<int>(d.class_names.size()));
    return d;
}

}  // namespace compocc
