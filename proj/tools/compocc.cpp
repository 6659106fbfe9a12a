#include <compocc/compmodel.hpp>
#include <compocc/dictionary.hpp>
#include <compocc/errors.hpp>
#include <compocc/fusion.hpp>
#include <compocc/mixtures.hpp>
#include <compocc/random.hpp>
#include <compocc/synthlab.hpp>
#include <compocc/tensorio.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

using namespace compocc;
namespace fs = std::filesystem;

namespace {

std::vector<FeatureMap> load_features(const fs::path& path) {
    auto maps = read_feature_maps(path);
    apply_ids_sidecar(maps, path);
    return maps;
}

std::vector<PartDetectionMap> load_detections(const fs::path& path) {
    auto maps = read_detection_maps(path);
    apply_ids_sidecar(maps, path);
    return maps;
}

void store_detections(const std::vector<PartDetectionMap>& maps, const fs::path& path) {
    write_detection_maps(maps, path);
    bool positional = true;
    for (std::size_t i = 0; i < maps.size(); ++i) positional = positional && maps[i].source_id == std::to_string(i);
    if (!positional) {
        std::vector<std::string> ids;
        for (const auto& m : maps) ids.push_back(m.source_id);
        write_source_ids(ids, ids_sidecar_path(path));
    } else if (fs::exists(ids_sidecar_path(path))) {
        fs::remove(ids_sidecar_path(path));
    }
}

std::string num(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

// Maps to classify: either encoded from features with the model dictionary or read as-is.
std::vector<PartDetectionMap> model_inputs(const std::string& features, const std::string& maps, const ModelFile& model) {
    if (!features.empty() == !maps.empty()) throw InputError("give exactly one of --features or --maps");
    if (!maps.empty()) return load_detections(maps);
    return encode_all(load_features(features), model.dictionary, model.hyperparameters.delta);
}

const BackgroundModel& pick_background(const ModelFile& model, const std::string& name) {
    if (!name.empty()) return model.background(name);
    for (const auto& b : model.background_models)
        if (b.occluder_kind == "pooled") return b;
    return model.background_models.front();
}

struct Options {
    std::string features, maps, labels, dict, model, out, out_prefix, spec, labels_out, pred, conditions, dcnn, comp,
        background, occlusion = "on";
    std::vector<std::string> bg_features, bg_kinds;
    int k_per_class = 50, mixtures = 4, iters = 10;
    std::size_t index = 0;
    double delta = 0.45, tau = 0.6;
    std::optional<double> prior;
    std::uint64_t seed = 0;
};

void build_dict(const Options& o) {
    auto set = make_labeled_set(load_features(o.features), read_labels(o.labels));
    DictionaryFile file;
    file.dictionary = learn_dictionary(set, {o.k_per_class, o.seed, 100});
    file.class_names = set.class_names;
    file.hyperparameters.k_per_class = o.k_per_class;
    file.hyperparameters.delta = o.delta;
    save_dictionary(file, o.out);
    std::cerr << "dictionary: " << file.dictionary.parts() << " parts for " << set.class_names.size() << " classes\n";
}

void encode_cmd(const Options& o) {
    const auto dict = load_dictionary(o.dict);
    store_detections(encode_all(load_features(o.features), dict.dictionary, dict.hyperparameters.delta), o.out);
}

void train(const Options& o) {
    const auto dict = load_dictionary(o.dict);
    const auto set = make_labeled_set(load_features(o.features), read_labels(o.labels), dict.class_names);
    if (o.bg_features.empty()) throw InputError("train needs at least one --bg-features file");
    if (!o.bg_kinds.empty() && o.bg_kinds.size() != o.bg_features.size())
        throw InputError("--bg-kind must be given once per --bg-features");

    ModelFile model;
    model.dictionary = dict.dictionary;
    model.class_names = dict.class_names;
    model.hyperparameters = dict.hyperparameters;
    model.hyperparameters.mixtures = o.mixtures;
    model.hyperparameters.occlusion_prior = o.prior.value_or(0.7);

    const auto maps = encode_all(set.maps, dict.dictionary, dict.hyperparameters.delta);
    for (std::size_t y = 0; y < set.class_names.size(); ++y) {
        std::vector<PartDetectionMap> members;
        for (std::size_t i = 0; i < maps.size(); ++i)
            if (set.labels[i] == static_cast<int>(y)) members.push_back(maps[i]);
        if (members.empty()) throw InsufficientDataError("class " + set.class_names[y] + " has no training maps");
        const MixtureOptions mo{o.mixtures, o.iters, derive_seed(o.seed, {y})};
        model.class_models.push_back(fit_mixture(members, mo, static_cast<int>(y)).components);
    }
    for (std::size_t i = 0; i < o.bg_features.size(); ++i) {
        const auto kind = o.bg_kinds.empty() ? (o.bg_features.size() == 1 ? std::string("background")
                                                                           : "background" + std::to_string(i))
                                             : o.bg_kinds[i];
        const auto bg = encode_all(load_features(o.bg_features[i]), dict.dictionary, dict.hyperparameters.delta);
        model.background_models.push_back(estimate_background(bg, kind));
    }
    if (model.background_models.size() > 1) model.background_models.push_back(pool_backgrounds(model.background_models));
    save_model(model, o.out);
}

bool occlusion_flag(const std::string& v) {
    if (v == "on") return true;
    if (v == "off") return false;
    throw ParameterError("--occlusion must be on or off");
}

void classify(const Options& o) {
    const auto model = load_model(o.model);
    const auto maps = model_inputs(o.features, o.maps, model);
    const auto& bg = pick_background(model, o.background);
    const double prior = o.prior.value_or(model.hyperparameters.occlusion_prior);
    const bool occ = occlusion_flag(o.occlusion);

    std::vector<std::string> header{"source_id", "predicted_label"};
    for (std::size_t y = 0; y < model.class_names.size(); ++y) header.push_back("score_class" + std::to_string(y));
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : maps) {
        const auto c = classify_single(m, model.class_models, bg, prior, occ);
        std::vector<std::string> row{m.source_id, std::to_string(c.label)};
        for (double s : c.scores) row.push_back(num(s));
        rows.push_back(std::move(row));
    }
    write_csv(o.out, header, rows);
}

void explain(const Options& o) {
    const auto model = load_model(o.model);
    const auto maps = model_inputs(o.features, o.maps, model);
    if (o.index >= maps.size())
        throw InputError("--index " + std::to_string(o.index) + " out of range for " + std::to_string(maps.size()) + " maps");
    const auto& map = maps[o.index];
    const auto& bg = pick_background(model, o.background);
    const auto c = classify_single(map, model.class_models, bg, o.prior.value_or(model.hyperparameters.occlusion_prior), true);
    const auto& occ = *c.occlusion;
    const auto& grid = model.class_models[static_cast<std::size_t>(c.label)][static_cast<std::size_t>(c.best_mixture[static_cast<std::size_t>(c.label)])];

    double scale = 0.0;
    for (double r : occ.ratio_map) scale = std::max(scale, std::abs(r));
    std::ofstream pgm(o.out_prefix + "_ratio.pgm", std::ios::binary);
    if (!pgm) throw IoError("cannot write " + o.out_prefix + "_ratio.pgm");
    pgm << "P5\n" << occ.width << ' ' << occ.height << "\n255\n";
    for (double r : occ.ratio_map) {
        const double v = scale > 0.0 ? 128.0 + 127.0 * r / scale : 128.0;
        pgm.put(static_cast<char>(static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L))));
    }

    struct Marker {
        std::size_t position;
        std::uint32_t part;
        double agreement;
    };
    std::vector<Marker> markers;
    for (std::size_t p = 0; p < map.positions(); ++p) {
        const auto bits = map.at(p);
        const auto alpha = grid.at(p);
        std::optional<Marker> best;
        for (std::uint32_t k = 0; k < map.parts; ++k) {
            if (!bits[k]) continue;
            const double a = std::log(alpha[k]) - std::log(bg.beta[k]);
            if (!best || a > best->agreement) best = Marker{p, k, a};
        }
        if (best) markers.push_back(*best);
    }
    std::stable_sort(markers.begin(), markers.end(), [](const Marker& a, const Marker& b) { return a.agreement > b.agreement; });
    markers.resize(std::min<std::size_t>(markers.size(), 5));
    std::vector<std::vector<std::string>> rows;
    for (const auto& m : markers)
        rows.push_back({std::to_string(m.position), std::to_string(m.position / map.width), std::to_string(m.position % map.width),
                        std::to_string(m.part), std::to_string(model.dictionary.class_of_part[m.part]), num(m.agreement),
                        num(occ.object_scores[m.position])});
    write_csv(o.out_prefix + "_parts.csv", {"position", "row", "col", "part", "part_class", "agreement", "fg_score"}, rows);
    std::cout << map.source_id << ": predicted " << c.label << " (" << model.class_names[static_cast<std::size_t>(c.label)]
              << "), occluded positions " << std::count(occ.visible.begin(), occ.visible.end(), 0) << "/" << map.positions()
              << "\n";
}

std::size_t column(const std::vector<std::string>& header, const std::string& name, const fs::path& path) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError(path.string() + ": missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
}

int parse_label(const std::string& text, const fs::path& path) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(text, &used);
        if (used == text.size() && v >= 0) return v;
    } catch (const std::exception&) {
    }
    throw FormatError(path.string() + ": bad label '" + text + "'");
}

void eval_cmd(const Options& o) {
    std::vector<std::string> header;
    const auto rows = read_csv(o.pred, &header);
    const auto id = column(header, "source_id", o.pred);
    const auto label = column(header, "predicted_label", o.pred);
    const auto branch = std::find(header.begin(), header.end(), "branch");
    std::vector<Prediction> preds;
    for (const auto& r : rows) {
        if (r.size() != header.size()) throw FormatError(o.pred + ": row width differs from header");
        Prediction p{r[id], parse_label(r[label], o.pred), {}};
        if (branch != header.end()) p.branch = branch_from_string(r[static_cast<std::size_t>(branch - header.begin())]);
        preds.push_back(std::move(p));
    }
    const auto tags = o.conditions.empty() ? std::map<std::string, std::string>{} : read_conditions(o.conditions);
    const auto report = evaluate(preds, read_labels(o.labels), tags);
    std::ofstream out(o.out);
    if (!out) throw IoError("cannot write " + o.out);
    out << report.to_json() << '\n';
    for (const auto& c : report.conditions) std::cout << c.condition << ": " << c.accuracy << " (" << c.total << ")\n";
    std::cout << "mean: " << report.mean_accuracy << "\n";
}

void fuse_cmd(const Options& o) {
    std::vector<std::string> header;
    const auto comp_rows = read_csv(o.comp, &header);
    const auto id = column(header, "source_id", o.comp);
    const auto label = column(header, "predicted_label", o.comp);
    std::map<std::string, int> comp;
    for (const auto& r : comp_rows) {
        if (r.size() != header.size()) throw FormatError(o.comp + ": row width differs from header");
        comp[r[id]] = parse_label(r[label], o.comp);
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : read_probabilities(o.dcnn)) {
        const auto it = comp.find(p.source_id);
        if (it == comp.end()) throw InputError("no compositional prediction for " + p.source_id);
        const auto d = fuse(p.probs, it->second, o.tau);
        rows.push_back({p.source_id, std::to_string(d.label), to_string(d.branch), num(d.dcnn_confidence)});
    }
    write_csv(o.out, {"source_id", "predicted_label", "branch", "dcnn_confidence"}, rows);
}

void synth(const Options& o) {
    const auto bytes = read_file_bytes(o.spec);
    const auto out = run_synth_job(parse_synth_job(std::string(bytes.begin(), bytes.end())));
    store_detections(out.maps, o.out);
    if (!o.labels_out.empty()) {
        LabelTable t;
        for (std::size_t i = 0; i < out.maps.size(); ++i) {
            t.source_ids.push_back(out.maps[i].source_id);
            t.labels.push_back(out.labels[i]);
        }
        write_labels(t, o.labels_out);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compositional part models with occlusion-aware classification"};
    app.require_subcommand(1);
    Options o;

    auto* bd = app.add_subcommand("build-dict", "learn a part dictionary from labeled feature maps");
    bd->add_option("--features", o.features, "FMAP file")->required();
    bd->add_option("--labels", o.labels, "labels CSV")->required();
    bd->add_option("--k-per-class", o.k_per_class, "parts per class")->capture_default_str();
    bd->add_option("--delta", o.delta, "binarization threshold")->capture_default_str();
    bd->add_option("--seed", o.seed)->capture_default_str();
    bd->add_option("--out", o.out, "dictionary file")->required();
    bd->callback([&] { build_dict(o); });

    auto* en = app.add_subcommand("encode", "binarize feature maps against a dictionary");
    en->add_option("--features", o.features, "FMAP file")->required();
    en->add_option("--dict", o.dict, "dictionary or model file")->required();
    en->add_option("--out", o.out, "BMAP file")->required();
    en->callback([&] { encode_cmd(o); });

    auto* tr = app.add_subcommand("train", "fit per-class mixtures and background models");
    tr->add_option("--features", o.features, "FMAP file")->required();
    tr->add_option("--labels", o.labels, "labels CSV")->required();
    tr->add_option("--dict", o.dict, "dictionary file")->required();
    tr->add_option("--mixtures", o.mixtures)->capture_default_str();
    tr->add_option("--iters", o.iters)->capture_default_str();
    tr->add_option("--prior", o.prior, "occlusion prior stored in the model (default 0.7)");
    tr->add_option("--seed", o.seed)->capture_default_str();
    tr->add_option("--bg-features", o.bg_features, "FMAP of background features (repeatable)")->required();
    tr->add_option("--bg-kind", o.bg_kinds, "name for each --bg-features");
    tr->add_option("--out", o.out, "model file")->required();
    tr->callback([&] { train(o); });

    for (auto [name, help] : {std::pair{"classify", "classify maps with a trained model"},
                              std::pair{"explain", "occlusion heatmap and top part detections for one map"}}) {
        auto* c = app.add_subcommand(name, help);
        c->add_option("--features", o.features, "FMAP file");
        c->add_option("--maps", o.maps, "BMAP file (already encoded)");
        c->add_option("--model", o.model)->required();
        c->add_option("--prior", o.prior, "occlusion prior (default from the model)");
        c->add_option("--background", o.background, "background model name");
        if (std::string(name) == "classify") {
            c->add_option("--occlusion", o.occlusion)->check(CLI::IsMember({"on", "off"}))->capture_default_str();
            c->add_option("--out", o.out, "predictions CSV")->required();
            c->callback([&] { classify(o); });
        } else {
            c->add_option("--index", o.index)->required();
            c->add_option("--out-prefix", o.out_prefix)->required();
            c->callback([&] { explain(o); });
        }
    }

    auto* ev = app.add_subcommand("eval", "per-condition accuracy report");
    ev->add_option("--pred", o.pred, "predictions CSV")->required();
    ev->add_option("--labels", o.labels, "labels CSV")->required();
    ev->add_option("--conditions", o.conditions, "condition tags CSV");
    ev->add_option("--out", o.out, "JSON report")->required();
    ev->callback([&] { eval_cmd(o); });

    auto* fu = app.add_subcommand("fuse", "gate between an external classifier and the compositional model");
    fu->add_option("--dcnn-probs", o.dcnn, "probabilities CSV")->required();
    fu->add_option("--comp-pred", o.comp, "compositional predictions CSV")->required();
    fu->add_option("--tau", o.tau)->capture_default_str();
    fu->add_option("--out", o.out)->required();
    fu->callback([&] { fuse_cmd(o); });

    auto* sy = app.add_subcommand("synth", "sample synthetic detection maps from a JSON job");
    sy->add_option("--spec", o.spec, "job file")->required();
    sy->add_option("--out", o.out, "BMAP file")->required();
    sy->add_option("--labels-out", o.labels_out, "labels CSV");
    sy->callback([&] { synth(o); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
