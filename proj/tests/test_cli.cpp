#include <compocc/random.hpp>
#include <compocc/tensorio.hpp>

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace compocc;
namespace fs = std::filesystem;

namespace {

struct Workdir {
    fs::path path = fs::temp_directory_path() / ("compocc_cli_" + std::to_string(::getpid()));
    Workdir() { fs::create_directories(path); }
    ~Workdir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
    const std::string cmd = std::string(COMPOCC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// Class y puts direction (2y + (row+col) % 2) at every position; clutter points anywhere.
FeatureMap class_map(int y, Rng& rng, const std::string& id) {
    FeatureMap m{4, 4, 6, {}, id};
    for (std::uint32_t r = 0; r < 4; ++r)
        for (std::uint32_t c = 0; c < 4; ++c)
            for (std::uint32_t ch = 0; ch < 6; ++ch) {
                const bool on = ch == static_cast<std::uint32_t>(2 * y) + (r + c) % 2;
                m.data.push_back(static_cast<float>((on ? 1.0 : 0.0) + rng.uniform(-0.15, 0.15)));
            }
    return m;
}

FeatureMap clutter_map(Rng& rng, const std::string& id) {
    FeatureMap m{4, 4, 6, {}, id};
    for (int i = 0; i < 96; ++i) m.data.push_back(static_cast<float>(rng.uniform(0.0, 1.0)));
    return m;
}

}  // namespace

TEST_CASE("end-to-end pipeline") {
    Workdir dir;
    Rng rng(31);
    std::vector<FeatureMap> train, test, clutter;
    LabelTable train_labels, test_labels;
    for (int i = 0; i < 60; ++i) {
        const int y = i % 3;
        train.push_back(class_map(y, rng, "tr" + std::to_string(i)));
        train_labels.source_ids.push_back(train.back().source_id);
        train_labels.labels.push_back(y);
    }
    for (int i = 0; i < 30; ++i) {
        const int y = i % 3;
        test.push_back(class_map(y, rng, "te" + std::to_string(i)));
        test_labels.source_ids.push_back(test.back().source_id);
        test_labels.labels.push_back(y);
    }
    for (int i = 0; i < 10; ++i) clutter.push_back(clutter_map(rng, "bg" + std::to_string(i)));

    auto store = [&](const std::vector<FeatureMap>& maps, const std::string& name) {
        write_feature_maps(maps, dir / name);
        std::vector<std::string> ids;
        for (const auto& m : maps) ids.push_back(m.source_id);
        write_source_ids(ids, ids_sidecar_path(dir / name));
    };
    store(train, "train.fmap");
    store(test, "test.fmap");
    store(clutter, "clutter.fmap");
    write_labels(train_labels, dir / "train.csv");
    write_labels(test_labels, dir / "test.csv");

    REQUIRE(run("build-dict --features " + dir / "train.fmap" + " --labels " + dir / "train.csv" +
                " --k-per-class 2 --seed 3 --out " + dir / "dict.json") == 0);
    REQUIRE(run("encode --features " + dir / "test.fmap" + " --dict " + dir / "dict.json" + " --out " +
                dir / "test.bmap") == 0);
    CHECK(read_source_ids(ids_sidecar_path(dir / "test.bmap")).front() == "te0");

    REQUIRE(run("train --features " + dir / "train.fmap" + " --labels " + dir / "train.csv" + " --dict " +
                dir / "dict.json" + " --mixtures 2 --iters 5 --seed 1 --bg-features " + dir / "clutter.fmap" +
                " --bg-kind clutter --out " + dir / "model.json") == 0);
    const auto model = load_model(dir / "model.json");
    CHECK(model.class_models.size() == 3);
    CHECK(model.class_models[0].size() == 2);
    CHECK(model.background_models.at(0).occluder_kind == "clutter");

    SUBCASE("classify and evaluate") {
        REQUIRE(run("classify --features " + dir / "test.fmap" + " --model " + dir / "model.json" +
                    " --occlusion on --out " + dir / "pred.csv") == 0);
        std::vector<std::string> header;
        const auto rows = read_csv(dir / "pred.csv", &header);
        CHECK(header == std::vector<std::string>{"source_id", "predicted_label", "score_class0", "score_class1",
                                                 "score_class2"});
        CHECK(rows.size() == 30);

        REQUIRE(run("classify --maps " + dir / "test.bmap" + " --model " + dir / "model.json" +
                    " --occlusion off --out " + dir / "pred_off.csv") == 0);
        CHECK(read_csv(dir / "pred_off.csv").size() == 30);

        std::ofstream cond(dir / "cond.csv");
        cond << "source_id,condition\n";
        for (int i = 0; i < 30; ++i) cond << "te" << i << ',' << (i < 15 ? "clean" : "other") << '\n';
        cond.close();
        REQUIRE(run("eval --pred " + dir / "pred.csv" + " --labels " + dir / "test.csv" + " --conditions " +
                    dir / "cond.csv" + " --out " + dir / "report.json") == 0);
        const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
        CHECK(report["conditions"].size() == 2);
        CHECK(report["total"] == 30);
        CHECK(report["overall_accuracy"].get<double>() >= 0.9);

        std::vector<ProbabilityRow> probs;
        for (int i = 0; i < 30; ++i) {
            const double c = i % 2 ? 0.9 : 0.4;
            probs.push_back({"te" + std::to_string(i), {c, (1 - c) / 2, (1 - c) / 2}});
        }
        write_probabilities(probs, dir / "dcnn.csv");
        REQUIRE(run("fuse --dcnn-probs " + dir / "dcnn.csv" + " --comp-pred " + dir / "pred.csv" + " --tau 0.6 --out " +
                    dir / "fused.csv") == 0);
        header.clear();
        const auto fused = read_csv(dir / "fused.csv", &header);
        CHECK(header == std::vector<std::string>{"source_id", "predicted_label", "branch", "dcnn_confidence"});
        REQUIRE(fused.size() == 30);
        CHECK(fused[1][1] == "0");
        CHECK(fused[1][2] == "external");
        CHECK(fused[0][2] == "compositional");
        CHECK(fused[0][1] == rows[0][1]);

        REQUIRE(run("eval --pred " + dir / "fused.csv" + " --labels " + dir / "test.csv" + " --out " +
                    dir / "fused.json") == 0);
        const auto fused_report = nlohmann::json::parse(slurp(dir / "fused.json"));
        CHECK(fused_report["branch_usage"]["external"] == 0.5);
    }
    SUBCASE("explain") {
        REQUIRE(run("explain --features " + dir / "test.fmap" + " --model " + dir / "model.json" +
                    " --index 4 --out-prefix " + dir / "x") == 0);
        const auto pgm = slurp(dir / "x_ratio.pgm");
        CHECK(pgm.rfind("P5\n4 4\n255\n", 0) == 0);
        CHECK(pgm.size() == 11 + 16);
        std::vector<std::string> header;
        const auto parts = read_csv(dir / "x_parts.csv", &header);
        CHECK(header.at(0) == "position");
        CHECK(parts.size() == 5);
        CHECK(run("explain --features " + dir / "test.fmap" + " --model " + dir / "model.json" +
                  " --index 30 --out-prefix " + dir / "x") != 0);
    }
    SUBCASE("bad inputs fail with a non-zero status") {
        CHECK(run("classify --features " + dir / "missing.fmap" + " --model " + dir / "model.json" + " --out " +
                  dir / "p.csv") != 0);
        CHECK(run("classify --features " + dir / "test.fmap" + " --model " + dir / "model.json" +
                  " --background nothere --out " + dir / "p.csv") != 0);
        CHECK(run("classify --features " + dir / "test.fmap" + " --model " + dir / "train.csv" + " --out " +
                  dir / "p.csv") != 0);
        CHECK(run("encode --features " + dir / "test.fmap") != 0);
        CHECK(run("") != 0);
    }
}

TEST_CASE("synth writes maps and labels") {
    Workdir dir;
    std::ofstream job(dir / "job.json");
    job << R"({"height": 4, "width": 4, "parts": 5, "seed": 2,
               "classes": [{"samples": 6, "modes": [{"random": {}}]}, {"samples": 4, "modes": [{"random": {}}]}],
               "background": {"random": {}}})";
    job.close();
    REQUIRE(run("synth --spec " + dir / "job.json" + " --out " + dir / "s.bmap" + " --labels-out " + dir / "s.csv") == 0);
    auto maps = read_detection_maps(dir / "s.bmap");
    apply_ids_sidecar(maps, dir / "s.bmap");
    CHECK(maps.size() == 10);
    const auto labels = read_labels(dir / "s.csv");
    CHECK(labels.source_ids == std::vector<std::string>{maps[0].source_id, maps[1].source_id, maps[2].source_id,
                                                        maps[3].source_id, maps[4].source_id, maps[5].source_id,
                                                        maps[6].source_id, maps[7].source_id, maps[8].source_id,
                                                        maps[9].source_id});
    CHECK(labels.labels.back() == 1);
}
