#include <compocc/errors.hpp>
#include <compocc/random.hpp>
#include <compocc/tensorio.hpp>

#include <json.hpp>

#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace compocc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "compocc_test_tensorio";
    fs::create_directories(dir);
    return dir / name;
}

FeatureMap make_map(std::uint32_t h, std::uint32_t w, std::uint32_t c, Rng& rng) {
    FeatureMap m{h, w, c, std::vector<float>(std::size_t{h} * w * c), ""};
    for (auto& v : m.data) v = static_cast<float>(rng.uniform(-3.0, 3.0));
    return m;
}

std::vector<std::uint8_t> header(const char* magic, std::uint32_t version, std::uint32_t n, std::uint32_t h,
                                 std::uint32_t w, std::uint32_t c) {
    std::vector<std::uint8_t> out(magic, magic + 4);
    for (auto v : {version, n, h, w, c})
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return out;
}

void append_float(std::vector<std::uint8_t>& out, float f) {
    const auto u = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

ModelFile random_model(Rng& rng, int classes = 2, int k_per_class = 3, std::uint32_t dim = 4) {
    ModelFile m;
    m.dictionary.dim = dim;
    m.dictionary.k_per_class = k_per_class;
    for (int y = 0; y < classes; ++y) {
        m.class_names.push_back("class" + std::to_string(y));
        for (int k = 0; k < k_per_class; ++k) {
            std::vector<double> v(dim);
            double n = 0.0;
            for (auto& x : v) {
                x = rng.uniform(-1.0, 1.0);
                n += x * x;
            }
            for (auto& x : v) x /= std::sqrt(n);
            m.dictionary.centroids.insert(m.dictionary.centroids.end(), v.begin(), v.end());
            m.dictionary.class_of_part.push_back(y);
        }
    }
    const auto K = static_cast<std::uint32_t>(classes * k_per_class);
    for (int y = 0; y < classes; ++y) {
        std::vector<BernoulliGrid> comps;
        for (int mix = 0; mix < 2; ++mix) {
            BernoulliGrid g{3, 2, K, {}, y, mix};
            g.alpha.resize(g.positions() * K);
            for (auto& a : g.alpha) a = rng.uniform(kEpsilon, 1.0 - kEpsilon);
            comps.push_back(std::move(g));
        }
        m.class_models.push_back(std::move(comps));
    }
    for (const char* kind : {"noise", "white"}) {
        BackgroundModel b{std::vector<double>(K), kind};
        for (auto& x : b.beta) x = rng.uniform(kEpsilon, 1.0 - kEpsilon);
        m.background_models.push_back(std::move(b));
    }
    m.hyperparameters.k_per_class = k_per_class;
    m.hyperparameters.mixtures = 2;
    return m;
}

void require_equal(const ModelFile& a, const ModelFile& b) {
    CHECK(a.class_names == b.class_names);
    CHECK(a.dictionary.dim == b.dictionary.dim);
    CHECK(a.dictionary.k_per_class == b.dictionary.k_per_class);
    CHECK(a.dictionary.class_of_part == b.dictionary.class_of_part);
    CHECK(a.dictionary.centroids == b.dictionary.centroids);
    REQUIRE(a.class_models.size() == b.class_models.size());
    for (std::size_t y = 0; y < a.class_models.size(); ++y) {
        REQUIRE(a.class_models[y].size() == b.class_models[y].size());
        for (std::size_t m = 0; m < a.class_models[y].size(); ++m) {
            const auto& ga = a.class_models[y][m];
            const auto& gb = b.class_models[y][m];
            CHECK(ga.alpha == gb.alpha);
            CHECK(ga.height == gb.height);
            CHECK(ga.width == gb.width);
            CHECK(ga.parts == gb.parts);
            CHECK(ga.class_label == gb.class_label);
            CHECK(ga.mixture_index == gb.mixture_index);
        }
    }
    REQUIRE(a.background_models.size() == b.background_models.size());
    for (std::size_t i = 0; i < a.background_models.size(); ++i) {
        CHECK(a.background_models[i].beta == b.background_models[i].beta);
        CHECK(a.background_models[i].occluder_kind == b.background_models[i].occluder_kind);
    }
    CHECK(a.hyperparameters.delta == b.hyperparameters.delta);
    CHECK(a.hyperparameters.mixtures == b.hyperparameters.mixtures);
    CHECK(a.hyperparameters.k_per_class == b.hyperparameters.k_per_class);
    CHECK(a.hyperparameters.occlusion_prior == b.hyperparameters.occlusion_prior);
    CHECK(a.hyperparameters.tau == b.hyperparameters.tau);
}

}  // namespace

TEST_CASE("FMAP minimal well-formed file") {
    auto bytes = header("FMAP", 1, 1, 2, 2, 3);
    for (int i = 0; i < 12; ++i) append_float(bytes, static_cast<float>(i) * 0.5f);
    const auto maps = decode_feature_maps(bytes);
    REQUIRE(maps.size() == 1);
    CHECK(maps[0].height == 2);
    CHECK(maps[0].width == 2);
    CHECK(maps[0].channels == 3);
    CHECK(maps[0].source_id == "0");
    CHECK(maps[0].at(1, 0)[2] == doctest::Approx(4.0));
}

TEST_CASE("FMAP malformed inputs map to distinct errors") {
    auto good = header("FMAP", 1, 1, 2, 2, 3);
    for (int i = 0; i < 12; ++i) append_float(good, 1.0f);

    SUBCASE("truncated payload") {
        auto bytes = good;
        bytes.resize(bytes.size() - 4);
        CHECK_THROWS_AS(decode_feature_maps(bytes), CorruptionError);
    }
    SUBCASE("trailing bytes") {
        auto bytes = good;
        bytes.push_back(0);
        CHECK_THROWS_AS(decode_feature_maps(bytes), CorruptionError);
    }
    SUBCASE("bad magic") {
        auto bytes = good;
        bytes[0] = 'X';
        CHECK_THROWS_AS(decode_feature_maps(bytes), FormatError);
        CHECK_THROWS_AS(decode_feature_maps({'F', 'M'}), FormatError);
    }
    SUBCASE("version") {
        auto bytes = good;
        bytes[4] = 2;
        CHECK_THROWS_AS(decode_feature_maps(bytes), VersionError);
    }
    SUBCASE("non-finite value names the index") {
        auto bytes = header("FMAP", 1, 1, 2, 2, 3);
        for (int i = 0; i < 12; ++i)
            append_float(bytes, i == 7 ? std::numeric_limits<float>::quiet_NaN() : 1.0f);
        try {
            decode_feature_maps(bytes);
            FAIL("expected DataError");
        } catch (const DataError& e) {
            CHECK(std::string(e.what()).find("element 7") != std::string::npos);
        }
        auto inf = header("FMAP", 1, 1, 1, 1, 1);
        append_float(inf, std::numeric_limits<float>::infinity());
        CHECK_THROWS_AS(decode_feature_maps(inf), DataError);
    }
    SUBCASE("header shorter than 24 bytes") {
        auto bytes = good;
        bytes.resize(10);
        CHECK_THROWS_AS(decode_feature_maps(bytes), CorruptionError);
    }
}

TEST_CASE("FMAP writer") {
    SUBCASE("empty list is a bare header") {
        const auto bytes = encode_feature_maps({});
        CHECK(bytes == header("FMAP", 1, 0, 0, 0, 0));
        CHECK(decode_feature_maps(bytes).empty());
    }
    SUBCASE("payload bytes are the little-endian IEEE encodings") {
        std::vector<FeatureMap> maps{{1, 1, 1, {0.0f}, "a"}, {1, 1, 1, {1.0f}, "b"}};
        const auto bytes = encode_feature_maps(maps);
        REQUIRE(bytes.size() == 24 + 8);
        const std::vector<std::uint8_t> payload(bytes.begin() + 24, bytes.end());
        CHECK(payload == std::vector<std::uint8_t>{0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x80, 0x3F});
    }
    SUBCASE("heterogeneous shapes") {
        std::vector<FeatureMap> maps{{1, 1, 1, {0.0f}, "a"}, {1, 1, 2, {1.0f, 2.0f}, "b"}};
        CHECK_THROWS_AS(encode_feature_maps(maps), ShapeError);
    }
}

TEST_CASE("FMAP write/read/write is byte-identical on random inputs") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const auto h = static_cast<std::uint32_t>(1 + rng.index(4));
        const auto w = static_cast<std::uint32_t>(1 + rng.index(4));
        const auto c = static_cast<std::uint32_t>(1 + rng.index(6));
        std::vector<FeatureMap> maps;
        for (std::size_t n = rng.index(4); n > 0; --n) maps.push_back(make_map(h, w, c, rng));
        const auto path = scratch("rt.fmap");
        write_feature_maps(maps, path);
        const auto back = read_feature_maps(path);
        REQUIRE(back.size() == maps.size());
        for (std::size_t i = 0; i < maps.size(); ++i) CHECK(back[i].data == maps[i].data);
        const auto first = read_file_bytes(path);
        write_feature_maps(back, path);
        CHECK(read_file_bytes(path) == first);
    }
}

TEST_CASE("BMAP packs LSB-first in (image,row,col,part) order") {
    PartDetectionMap a(1, 2, 5, "a");
    a.set(0, 0, 0, true);  // element 0
    a.set(0, 1, 3, true);  // element 8
    PartDetectionMap b(1, 2, 5, "b");
    b.set(0, 1, 4, true);  // element 10 + 9 = 19
    const auto bytes = encode_detection_maps({a, b});
    REQUIRE(bytes.size() == 24 + 3);
    CHECK(std::equal(bytes.begin(), bytes.begin() + 4, "BMAP"));
    CHECK(bytes[24] == 0x01);
    CHECK(bytes[25] == 0x01);
    CHECK(bytes[26] == 0x08);

    const auto back = decode_detection_maps(bytes);
    REQUIRE(back.size() == 2);
    CHECK(back[0].bits == a.bits);
    CHECK(back[1].bits == b.bits);
    CHECK(back[1].source_id == "1");

    auto truncated = bytes;
    truncated.pop_back();
    CHECK_THROWS_AS(decode_detection_maps(truncated), CorruptionError);
    auto wrong_magic = bytes;
    wrong_magic[0] = 'F';
    CHECK_THROWS_AS(decode_detection_maps(wrong_magic), FormatError);
}

TEST_CASE("BMAP round trip under random inputs") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto h = static_cast<std::uint32_t>(1 + rng.index(5));
        const auto w = static_cast<std::uint32_t>(1 + rng.index(5));
        const auto k = static_cast<std::uint32_t>(1 + rng.index(13));
        std::vector<PartDetectionMap> maps;
        for (std::size_t n = 1 + rng.index(4); n > 0; --n) {
            PartDetectionMap m(h, w, k);
            for (auto& bit : m.bits) bit = rng.bernoulli(0.3);
            maps.push_back(std::move(m));
        }
        const auto bytes = encode_detection_maps(maps);
        CHECK(bytes.size() == 24 + (maps.size() * h * w * k + 7) / 8);
        const auto back = decode_detection_maps(bytes);
        REQUIRE(back.size() == maps.size());
        for (std::size_t i = 0; i < maps.size(); ++i) CHECK(back[i].bits == maps[i].bits);
        CHECK(encode_detection_maps(back) == bytes);
    }
}

TEST_CASE("ids sidecar replaces positional ids") {
    const auto path = scratch("ids.bmap");
    std::vector<PartDetectionMap> maps{PartDetectionMap(1, 1, 1, "x"), PartDetectionMap(1, 1, 1, "y")};
    maps[0].bits[0] = maps[1].bits[0] = 1;
    write_detection_maps(maps, path);
    fs::remove(ids_sidecar_path(path));
    CHECK(read_detection_maps(path)[1].source_id == "1");
    write_source_ids({"img_a", "img_b"}, ids_sidecar_path(path));
    auto back = read_detection_maps(path);
    apply_ids_sidecar(back, path);
    CHECK(back[0].source_id == "img_a");
    CHECK(back[1].source_id == "img_b");
    write_source_ids({"only_one"}, ids_sidecar_path(path));
    CHECK_THROWS_AS(apply_ids_sidecar(back, path), FormatError);
    fs::remove(ids_sidecar_path(path));
}

TEST_CASE("labels and probability CSVs") {
    const auto labels_path = scratch("labels.csv");
    write_labels({{"a", "b", "c"}, {0, 2, 1}}, labels_path);
    const auto labels = read_labels(labels_path);
    CHECK(labels.source_ids == std::vector<std::string>{"a", "b", "c"});
    CHECK(labels.labels == std::vector<int>{0, 2, 1});
    CHECK(labels.num_classes() == 3);

    const auto probs_path = scratch("probs.csv");
    write_probabilities({{"a", {0.25, 0.75}}, {"b", {1.0, 0.0}}}, probs_path);
    const auto probs = read_probabilities(probs_path);
    REQUIRE(probs.size() == 2);
    CHECK(probs[0].probs == std::vector<double>{0.25, 0.75});

    {
        std::ofstream bad(labels_path);
        bad << "source_id,label_index\na,zero\n";
    }
    CHECK_THROWS_AS(read_labels(labels_path), FormatError);
    CHECK_THROWS_AS(write_labels({{"has,comma"}, {0}}, labels_path), InputError);
}

TEST_CASE("make_labeled_set pairs maps and labels by id") {
    std::vector<FeatureMap> maps{{1, 1, 1, {1.0f}, "b"}, {1, 1, 1, {2.0f}, "a"}};
    const auto set = make_labeled_set(maps, {{"a", "b"}, {1, 0}});
    CHECK(set.labels == std::vector<int>{0, 1});
    CHECK(set.class_names == std::vector<std::string>{"class0", "class1"});
    maps.push_back({1, 1, 1, {3.0f}, "zzz"});
    CHECK_THROWS_AS(make_labeled_set(maps, {{"a", "b"}, {1, 0}}), InputError);
}

TEST_CASE("model save/load round trip on random valid models") {
    Rng rng(2024);
    for (int trial = 0; trial < 5; ++trial) {
        const auto model = random_model(rng, 2 + trial % 2, 2 + trial % 3);
        const auto path = scratch("model.json");
        save_model(model, path);
        const auto back = load_model(path);
        require_equal(model, back);
    }
}

TEST_CASE("model loader validation") {
    Rng rng(7);
    const auto model = random_model(rng);
    const auto doc = nlohmann::json::parse(model_to_text(model));

    SUBCASE("alpha entry equal to 0.0") {
        auto broken = doc;
        broken["class_models"][1]["components"][0]["alpha"][3] = 0.0;
        CHECK_THROWS_AS(model_from_text(broken.dump()), ValidationError);
    }
    SUBCASE("beta entry equal to 1.0") {
        auto broken = doc;
        broken["background_models"][0]["beta"][0] = 1.0;
        CHECK_THROWS_AS(model_from_text(broken.dump()), ValidationError);
    }
    SUBCASE("missing background model section") {
        auto broken = doc;
        broken.erase("background_models");
        CHECK_THROWS_AS(model_from_text(broken.dump()), ValidationError);
        broken["background_models"] = nlohmann::json::array();
        CHECK_THROWS_AS(model_from_text(broken.dump()), ValidationError);
    }
    SUBCASE("version mismatch") {
        auto broken = doc;
        broken["version"] = 99;
        CHECK_THROWS_AS(model_from_text(broken.dump()), VersionError);
    }
    SUBCASE("dictionary K differs from alpha K") {
        auto broken = doc;
        broken["grid"]["parts"] = 5;
        CHECK_THROWS_AS(model_from_text(broken.dump()), ValidationError);
    }
    SUBCASE("non-unit centroid") {
        auto broken = doc;
        broken["dictionary"]["centroids"][0][0] = 3.0;
        CHECK_THROWS_AS(model_from_text(broken.dump()), ValidationError);
    }
    SUBCASE("not JSON") { CHECK_THROWS_AS(model_from_text("{ nope"), FormatError); }
    SUBCASE("save refuses invalid models") {
        auto broken = model;
        broken.background_models.clear();
        CHECK_THROWS_AS(save_model(broken, scratch("bad.json")), ValidationError);
    }
}

TEST_CASE("dictionary fragments load through either document kind") {
    Rng rng(3);
    const auto model = random_model(rng);
    const auto frag = scratch("dict.json");
    save_dictionary({model.dictionary, model.class_names, model.hyperparameters}, frag);
    const auto d = load_dictionary(frag);
    CHECK(d.dictionary.centroids == model.dictionary.centroids);
    CHECK_THROWS_AS(load_model(frag), ValidationError);

    const auto full = scratch("full.json");
    save_model(model, full);
    CHECK(load_dictionary(full).class_names == model.class_names);
}
