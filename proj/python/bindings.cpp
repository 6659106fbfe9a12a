#include <compocc/compmodel.hpp>
#include <compocc/dictionary.hpp>
#include <compocc/errors.hpp>
#include <compocc/fusion.hpp>
#include <compocc/mixtures.hpp>
#include <compocc/random.hpp>
#include <compocc/synthlab.hpp>
#include <compocc/tensorio.hpp>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace compocc;

namespace {

template <class T>
py::array_t<T> to_array(const std::vector<T>& v, std::vector<py::ssize_t> shape) {
    py::array_t<T> a(shape);
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
}

template <class T>
std::vector<T> from_array(const py::array_t<T, py::array::c_style | py::array::forcecast>& a, py::ssize_t ndim,
                          const char* what) {
    if (a.ndim() != ndim) throw ShapeError(std::string(what) + " must have " + std::to_string(ndim) + " dimensions");
    return {a.data(), a.data() + a.size()};
}

std::uint32_t dim(const py::array& a, int i) { return static_cast<std::uint32_t>(a.shape(i)); }

FeatureMap make_feature_map(const py::array_t<float, py::array::c_style | py::array::forcecast>& data,
                            std::string source_id) {
    auto values = from_array<float>(data, 3, "feature map");
    return {dim(data, 0), dim(data, 1), dim(data, 2), std::move(values), std::move(source_id)};
}

PartDetectionMap make_detection_map(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& bits,
                                    std::string source_id) {
    PartDetectionMap m(dim(bits, 0), dim(bits, 1), dim(bits, 2), std::move(source_id));
    m.bits = from_array<std::uint8_t>(bits, 3, "detection map");
    for (auto& b : m.bits) b = b != 0;
    return m;
}

BernoulliGrid make_grid(const py::array_t<double, py::array::c_style | py::array::forcecast>& alpha, int class_label,
                        int mixture_index) {
    return {dim(alpha, 0), dim(alpha, 1), dim(alpha, 2), from_array<double>(alpha, 3, "alpha"), class_label,
            mixture_index};
}

std::vector<py::ssize_t> grid_shape(std::uint32_t h, std::uint32_t w) { return {h, w}; }

}  // namespace

PYBIND11_MODULE(_compocc, m) {
    m.doc() = "Compositional part models with occlusion-aware inference";
    m.attr("EPSILON") = kEpsilon;

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", base);
    py::register_exception<VersionError>(m, "VersionError", base);
    py::register_exception<CorruptionError>(m, "CorruptionError", base);
    py::register_exception<DataError>(m, "DataError", base);
    py::register_exception<ShapeError>(m, "ShapeError", base);
    py::register_exception<ValidationError>(m, "ValidationError", base);
    py::register_exception<InsufficientDataError>(m, "InsufficientDataError", base);
    py::register_exception<ParameterError>(m, "ParameterError", base);
    py::register_exception<InputError>(m, "InputError", base);
    py::register_exception<IoError>(m, "IoError", base);

    py::class_<FeatureMap>(m, "FeatureMap")
        .def(py::init(&make_feature_map), py::arg("data"), py::arg("source_id") = "")
        .def_readonly("height", &FeatureMap::height)
        .def_readonly("width", &FeatureMap::width)
        .def_readonly("channels", &FeatureMap::channels)
        .def_readwrite("source_id", &FeatureMap::source_id)
        .def_property_readonly("data", [](const FeatureMap& f) {
            return to_array(f.data, {f.height, f.width, f.channels});
        })
        .def("__repr__", [](const FeatureMap& f) {
            return "<FeatureMap " + f.source_id + " " + std::to_string(f.height) + "x" + std::to_string(f.width) + "x" +
                   std::to_string(f.channels) + ">";
        });

    py::class_<PartDetectionMap>(m, "PartDetectionMap")
        .def(py::init(&make_detection_map), py::arg("bits"), py::arg("source_id") = "")
        .def_readonly("height", &PartDetectionMap::height)
        .def_readonly("width", &PartDetectionMap::width)
        .def_readonly("parts", &PartDetectionMap::parts)
        .def_readwrite("source_id", &PartDetectionMap::source_id)
        .def_property_readonly("bits", [](const PartDetectionMap& b) {
            return to_array(b.bits, {b.height, b.width, b.parts});
        })
        .def("__repr__", [](const PartDetectionMap& b) {
            return "<PartDetectionMap " + b.source_id + " " + std::to_string(b.height) + "x" + std::to_string(b.width) +
                   "x" + std::to_string(b.parts) + ">";
        });

    py::class_<BernoulliGrid>(m, "BernoulliGrid")
        .def(py::init(&make_grid), py::arg("alpha"), py::arg("class_label") = 0, py::arg("mixture_index") = 0)
        .def_readonly("height", &BernoulliGrid::height)
        .def_readonly("width", &BernoulliGrid::width)
        .def_readonly("parts", &BernoulliGrid::parts)
        .def_readwrite("class_label", &BernoulliGrid::class_label)
        .def_readwrite("mixture_index", &BernoulliGrid::mixture_index)
        .def_property_readonly("alpha", [](const BernoulliGrid& g) {
            return to_array(g.alpha, {g.height, g.width, g.parts});
        });

    py::class_<BackgroundModel>(m, "BackgroundModel")
        .def(py::init([](std::vector<double> beta, std::string kind) { return BackgroundModel{std::move(beta), std::move(kind)}; }),
             py::arg("beta"), py::arg("occluder_kind") = "background")
        .def_readwrite("beta", &BackgroundModel::beta)
        .def_readwrite("occluder_kind", &BackgroundModel::occluder_kind);

    py::class_<Region>(m, "Region")
        .def(py::init([](std::uint32_t top, std::uint32_t left, std::uint32_t bottom, std::uint32_t right) {
                 return Region{top, left, bottom, right};
             }),
             py::arg("top"), py::arg("left"), py::arg("bottom"), py::arg("right"))
        .def_readwrite("top", &Region::top)
        .def_readwrite("left", &Region::left)
        .def_readwrite("bottom", &Region::bottom)
        .def_readwrite("right", &Region::right)
        .def("area", &Region::area);

    py::class_<PartDictionary>(m, "PartDictionary")
        .def_readonly("dim", &PartDictionary::dim)
        .def_readonly("k_per_class", &PartDictionary::k_per_class)
        .def_readonly("class_of_part", &PartDictionary::class_of_part)
        .def("parts", &PartDictionary::parts)
        .def_property_readonly("centroids", [](const PartDictionary& d) {
            return to_array(d.centroids, {static_cast<py::ssize_t>(d.parts()), d.dim});
        });

    py::class_<Hyperparameters>(m, "Hyperparameters")
        .def(py::init<>())
        .def_readwrite("delta", &Hyperparameters::delta)
        .def_readwrite("mixtures", &Hyperparameters::mixtures)
        .def_readwrite("k_per_class", &Hyperparameters::k_per_class)
        .def_readwrite("occlusion_prior", &Hyperparameters::occlusion_prior)
        .def_readwrite("tau", &Hyperparameters::tau);

    py::class_<ModelFile>(m, "Model")
        .def(py::init<>())
        .def_readwrite("dictionary", &ModelFile::dictionary)
        .def_readwrite("class_names", &ModelFile::class_names)
        .def_readwrite("class_models", &ModelFile::class_models)
        .def_readwrite("background_models", &ModelFile::background_models)
        .def_readwrite("hyperparameters", &ModelFile::hyperparameters)
        .def("background", &ModelFile::background, py::return_value_policy::copy)
        .def("validate", [](const ModelFile& f) { validate(f); })
        .def("to_json", &model_to_text)
        .def_static("from_json", &model_from_text);

    py::class_<OcclusionResult>(m, "OcclusionResult")
        .def_readonly("log_likelihood", &OcclusionResult::log_likelihood)
        .def_property_readonly("visible", [](const OcclusionResult& r) { return to_array(r.visible, grid_shape(r.height, r.width)); })
        .def_property_readonly("ratio_map", [](const OcclusionResult& r) { return to_array(r.ratio_map, grid_shape(r.height, r.width)); })
        .def_property_readonly("object_scores",
                               [](const OcclusionResult& r) { return to_array(r.object_scores, grid_shape(r.height, r.width)); });

    py::class_<Classification>(m, "Classification")
        .def_readonly("label", &Classification::label)
        .def_readonly("scores", &Classification::scores)
        .def_readonly("best_mixture", &Classification::best_mixture)
        .def_readonly("occlusion", &Classification::occlusion);

    py::class_<MixtureModel>(m, "MixtureModel")
        .def_readonly("components", &MixtureModel::components)
        .def_readonly("assignments", &MixtureModel::assignments)
        .def_readonly("class_label", &MixtureModel::class_label)
        .def_readonly("objective_history", &MixtureModel::objective_history);

    py::enum_<Branch>(m, "Branch").value("external", Branch::external).value("compositional", Branch::compositional);

    py::class_<FusionDecision>(m, "FusionDecision")
        .def_readonly("label", &FusionDecision::label)
        .def_readonly("branch", &FusionDecision::branch)
        .def_readonly("dcnn_confidence", &FusionDecision::dcnn_confidence)
        .def_readonly("comp_scores", &FusionDecision::comp_scores);

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("mean_accuracy", &EvalReport::mean_accuracy)
        .def_readonly("overall_accuracy", &EvalReport::overall_accuracy)
        .def_readonly("total", &EvalReport::total)
        .def_readonly("confusion", &EvalReport::confusion)
        .def_readonly("branch_usage", &EvalReport::branch_usage)
        .def_property_readonly("accuracy", [](const EvalReport& r) {
            std::map<std::string, double> out;
            for (const auto& c : r.conditions) out[c.condition] = c.accuracy;
            return out;
        })
        .def("to_json", &EvalReport::to_json);

    // files
    m.def("read_feature_maps", [](const std::filesystem::path& p) {
        auto maps = read_feature_maps(p);
        apply_ids_sidecar(maps, p);
        return maps;
    }, py::arg("path"));
    m.def("write_feature_maps", &write_feature_maps, py::arg("maps"), py::arg("path"));
    m.def("read_detection_maps", [](const std::filesystem::path& p) {
        auto maps = read_detection_maps(p);
        apply_ids_sidecar(maps, p);
        return maps;
    }, py::arg("path"));
    m.def("write_detection_maps", &write_detection_maps, py::arg("maps"), py::arg("path"));
    m.def("load_model", &load_model, py::arg("path"));
    m.def("save_model", &save_model, py::arg("model"), py::arg("path"));

    // dictionary
    m.def("learn_dictionary",
          [](std::vector<FeatureMap> maps, const std::vector<int>& labels, int k_per_class, std::uint64_t seed, int max_iters) {
              if (maps.size() != labels.size()) throw InputError("maps and labels differ in length");
              LabeledSet set;
              set.maps = std::move(maps);
              set.labels = labels;
              const int classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
              for (int y = 0; y < classes; ++y) set.class_names.push_back("class" + std::to_string(y));
              return learn_dictionary(set, {k_per_class, seed, max_iters});
          },
          py::arg("maps"), py::arg("labels"), py::arg("k_per_class") = 50, py::arg("seed") = 0, py::arg("max_iters") = 100);
    m.def("encode", &encode, py::arg("map"), py::arg("dictionary"), py::arg("delta") = 0.45);

    // compositional model
    m.def("estimate_bernoulli", py::overload_cast<const std::vector<PartDetectionMap>&>(&estimate_bernoulli), py::arg("maps"));
    m.def("estimate_background",
          py::overload_cast<const std::vector<PartDetectionMap>&, std::string>(&estimate_background), py::arg("maps"),
          py::arg("occluder_kind") = "background");
    m.def("log_likelihood", &log_likelihood, py::arg("map"), py::arg("model"));
    m.def("log_likelihood_occluded", &log_likelihood_occluded, py::arg("map"), py::arg("model"), py::arg("background"),
          py::arg("prior") = 0.7);
    m.def("classify", &classify_single, py::arg("map"), py::arg("models"), py::arg("background"), py::arg("prior") = 0.7,
          py::arg("use_occlusion") = true);

    // mixtures
    m.def("hamming_affinity", [](const std::vector<PartDetectionMap>& maps) {
        const auto a = hamming_affinity(maps);
        return py::make_tuple(to_array(a.entries, {static_cast<py::ssize_t>(a.size), static_cast<py::ssize_t>(a.size)}), a.sigma);
    }, py::arg("maps"));
    m.def("spectral_cluster",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a, int clusters, std::uint64_t seed) {
              if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw ShapeError("affinity must be a square matrix");
              return spectral_cluster({static_cast<std::size_t>(a.shape(0)), {a.data(), a.data() + a.size()}, 0.0}, clusters, seed);
          },
          py::arg("affinity"), py::arg("clusters"), py::arg("seed") = 0);
    m.def("fit_mixture",
          [](const std::vector<PartDetectionMap>& maps, int components, int iterations, std::uint64_t seed, int class_label) {
              return fit_mixture(maps, {components, iterations, seed}, class_label);
          },
          py::arg("maps"), py::arg("components") = 4, py::arg("iterations") = 10, py::arg("seed") = 0,
          py::arg("class_label") = 0);

    // fusion
    m.def("fuse",
          [](const std::vector<double>& probs, int comp_label, double tau, std::vector<double> comp_scores) {
              return fuse(probs, comp_label, tau, std::move(comp_scores));
          },
          py::arg("dcnn_probs"), py::arg("comp_label"), py::arg("tau") = 0.6, py::arg("comp_scores") = std::vector<double>{});
    m.def("evaluate",
          [](const std::vector<std::tuple<std::string, int, std::optional<Branch>>>& predictions,
             const std::map<std::string, int>& truth, const std::map<std::string, std::string>& conditions) {
              std::vector<Prediction> preds;
              for (const auto& [id, label, branch] : predictions) preds.push_back({id, label, branch});
              LabelTable table;
              for (const auto& [id, label] : truth) {
                  table.source_ids.push_back(id);
                  table.labels.push_back(label);
              }
              return evaluate(preds, table, conditions);
          },
          py::arg("predictions"), py::arg("truth"), py::arg("conditions") = std::map<std::string, std::string>{});

    // synthetic data
    m.def("sample_map",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& alpha, std::uint64_t seed) {
              Rng rng(seed);
              return sample_map(dim(alpha, 0), dim(alpha, 1), dim(alpha, 2), from_array<double>(alpha, 3, "alpha"), rng);
          },
          py::arg("alpha"), py::arg("seed"));
    m.def("occlude_region",
          [](const PartDetectionMap& map, const Region& region, const std::vector<double>& beta, std::uint64_t seed) {
              return occlude_region(map, region, beta, seed);
          },
          py::arg("map"), py::arg("region"), py::arg("beta"), py::arg("seed"));
    m.def("random_alpha",
          [](std::uint32_t h, std::uint32_t w, std::uint32_t k, std::uint32_t active, double high, double low, std::uint64_t seed) {
              Rng rng(seed);
              return to_array(random_alpha(h, w, k, active, high, low, rng), {h, w, k});
          },
          py::arg("height"), py::arg("width"), py::arg("parts"), py::arg("active_parts"), py::arg("high"), py::arg("low"),
          py::arg("seed"));
    m.def("brute_force_likelihood_sum", &brute_force_likelihood_sum, py::arg("model"));
    m.def("run_synth_job", [](const std::string& json_text) {
        auto out = run_synth_job(parse_synth_job(json_text));
        return py::make_tuple(std::move(out.maps), std::move(out.labels));
    }, py::arg("job_json"));
}
