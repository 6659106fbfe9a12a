#include <compocc/fusion.hpp>

#include <compocc/errors.hpp>
#include <compocc/tensorio.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace compocc {

const char* to_string(Branch branch) {
    return branch == Branch::external ? "external" : "compositional";
}

Branch branch_from_string(const std::string& text) {
    if (text == "external") return Branch::external;
    if (text == "compositional") return Branch::compositional;
    throw InputError("unknown branch '" + text + "'");
}

FusionDecision fuse(std::span<const double> dcnn_probs, int comp_label, double tau, std::vector<double> comp_scores) {
    if (dcnn_probs.empty()) throw InputError("probability vector is empty");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ParameterError("tau must lie in [0,1]");
    if (comp_label < 0 || static_cast<std::size_t>(comp_label) >= dcnn_probs.size())
        throw InputError("compositional label " + std::to_string(comp_label) + " outside the " +
                         std::to_string(dcnn_probs.size()) + " classes");
    double sum = 0.0;
    for (double p : dcnn_probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("probability vector has a negative or non-finite entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbabilitySumTolerance)
        throw InputError("probabilities sum to " + std::to_string(sum) + ", expected 1");

    const auto top = std::max_element(dcnn_probs.begin(), dcnn_probs.end());  // first max on ties
    FusionDecision d;
    d.dcnn_confidence = *top;
    d.comp_scores = std::move(comp_scores);
    if (d.dcnn_confidence > tau) {
        d.label = static_cast<int>(top - dcnn_probs.begin());
        d.branch = Branch::external;
    } else {
        d.label = comp_label;
        d.branch = Branch::compositional;
    }
    return d;
}

EvalReport evaluate(const std::vector<Prediction>& predictions, const LabelTable& truth,
                    const std::map<std::string, std::string>& condition_tags) {
    const auto lookup = truth.index();
    std::size_t classes = static_cast<std::size_t>(truth.num_classes());
    for (const auto& p : predictions) {
        if (!lookup.contains(p.source_id)) throw InputError("prediction for unknown source_id '" + p.source_id + "'");
        if (p.label < 0) throw InputError("negative predicted label for '" + p.source_id + "'");
        classes = std::max(classes, static_cast<std::size_t>(p.label) + 1);
    }

    EvalReport report;
    report.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    std::map<std::string, ConditionAccuracy> cells;
    std::map<std::string, std::size_t> branches;
    std::size_t correct = 0;
    std::size_t with_branch = 0;
    for (const auto& p : predictions) {
        const int y = lookup.at(p.source_id);
        const bool hit = y == p.label;
        ++report.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p.label)];
        auto tag_it = condition_tags.find(p.source_id);
        const std::string tag = tag_it == condition_tags.end() ? "all" : tag_it->second;
        auto& cell = cells[tag];
        cell.condition = tag;
        ++cell.total;
        cell.correct += hit ? 1 : 0;
        correct += hit ? 1 : 0;
        if (p.branch) {
            ++branches[to_string(*p.branch)];
            ++with_branch;
        }
    }
    double mean = 0.0;
    for (auto& [tag, cell] : cells) {
        cell.accuracy = static_cast<double>(cell.correct) / static_cast<double>(cell.total);
        mean += cell.accuracy;
        report.conditions.push_back(cell);
    }
    report.total = predictions.size();
    report.mean_accuracy = cells.empty() ? 0.0 : mean / static_cast<double>(cells.size());
    report.overall_accuracy =
        predictions.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(predictions.size());
    if (with_branch > 0) {
        if (with_branch != predictions.size()) throw InputError("branch is known for only some predictions");
        for (const auto& [name, count] : branches)
            report.branch_usage[name] = static_cast<double>(count) / static_cast<double>(with_branch);
    }
    return report;
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json doc;
    auto cells = nlohmann::ordered_json::array();
    for (const auto& c : conditions)
        cells.push_back({{"condition", c.condition}, {"accuracy", c.accuracy}, {"correct", c.correct}, {"total", c.total}});
    doc["conditions"] = std::move(cells);
    doc["mean_accuracy"] = mean_accuracy;
    doc["overall_accuracy"] = overall_accuracy;
    doc["total"] = total;
    doc["confusion"] = confusion;
    if (!branch_usage.empty()) doc["branch_usage"] = branch_usage;
    return doc.dump(2) + "\n";
}

}  // namespace compocc
