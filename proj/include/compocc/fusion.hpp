#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace compocc {

struct LabelTable;

enum class Branch { external, compositional };

const char* to_string(Branch branch);
Branch branch_from_string(const std::string& text);

struct FusionDecision {
    int label = 0;
    Branch branch = Branch::external;
    double dcnn_confidence = 0.0;
    std::vector<double> comp_scores;
};

inline constexpr double kProbabilitySumTolerance = 1e-4;

/// Keeps the external classifier's argmax when its top probability exceeds tau,
/// otherwise defers to the compositional label.
FusionDecision fuse(std::span<const double> dcnn_probs, int comp_label, double tau,
                    std::vector<double> comp_scores = {});

struct Prediction {
    std::string source_id;
    int label = 0;
    std::optional<Branch> branch;
};

struct ConditionAccuracy {
    std::string condition;
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy = 0.0;
};

struct EvalReport {
    std::vector<ConditionAccuracy> conditions;  // sorted by tag
    double mean_accuracy = 0.0;                 // unweighted mean over condition cells
    double overall_accuracy = 0.0;
    std::size_t total = 0;
    std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
    std::map<std::string, double> branch_usage;       // empty when branches are unknown

    std::string to_json() const;
};

/// Accuracy per condition tag, unweighted mean across tags, confusion matrix and branch
/// usage. Predictions without a tag fall under "all".
EvalReport evaluate(const std::vector<Prediction>& predictions, const LabelTable& truth,
                    const std::map<std::string, std::string>& condition_tags);

}  // namespace compocc
