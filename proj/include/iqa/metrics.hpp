#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace iqa {

// Ground truth, predictions and the cells eligible for scoring. An empty
// `valid` span means every cell is eligible.
struct ScorePair {
    std::span<const double> y_true;
    std::span<const double> y_pred;
    std::span<const std::uint8_t> valid = {};
};

double rmse(const ScorePair& p);

// 1 - RMSE / (max - min) of the valid ground truth. A constant target
// scores 1 when perfectly predicted and 0 otherwise.
double nrmse_score(const ScorePair& p);
bool is_constant_target(const ScorePair& p);

double r2(const ScorePair& p);

// Mean of sensitivity and specificity. The larger of the two observed
// truth values is the positive class; a prediction counts as positive
// when it is closer to it than to the negative value.
double balanced_accuracy(const ScorePair& p);

// One-vs-rest balanced accuracy averaged over the classes present in
// the valid ground truth.
double macro_balanced_accuracy(const ScorePair& p);

// Mann-Whitney AUROC with half credit for ties.
double auroc(std::span<const std::uint8_t> labels, std::span<const double> scores);

struct ConfidenceInterval {
    double mean = 0.0;
    double half_width = 0.0;
};

// Student-t interval: mean +/- t_{k-1,(1+level)/2} * sd / sqrt(k).
ConfidenceInterval mean_ci(std::span<const double> samples, double level = 0.95);

enum class ScorerKind { Nrmse, R2, BalancedAccuracy, MacroBalancedAccuracy };

std::string to_string(ScorerKind kind);
ScorerKind parse_scorer_kind(const std::string& name);  // throws InvalidArgument
double score(ScorerKind kind, const ScorePair& p);

}  // namespace iqa
