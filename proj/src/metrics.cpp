#include "iqa/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <map>
#include <numeric>

#include "iqa/errors.hpp"

namespace iqa {

namespace {

void check_lengths(const ScorePair& p) {
    if (p.y_true.size() != p.y_pred.size())
        throw InvalidArgument("y_true and y_pred lengths differ");
    if (!p.valid.empty() && p.valid.size() != p.y_true.size())
        throw InvalidArgument("valid mask length differs from y_true");
}

bool is_valid(const ScorePair& p, std::size_t i) { return p.valid.empty() || p.valid[i] != 0; }

std::size_t count_valid(const ScorePair& p) {
    check_lengths(p);
    if (p.valid.empty()) return p.y_true.size();
    return static_cast<std::size_t>(std::count_if(p.valid.begin(), p.valid.end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

std::pair<double, double> truth_range(const ScorePair& p) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < p.y_true.size(); ++i) {
        if (!is_valid(p, i)) continue;
        lo = std::min(lo, p.y_true[i]);
        hi = std::max(hi, p.y_true[i]);
    }
    return {lo, hi};
}

}  // namespace

double rmse(const ScorePair& p) {
    const std::size_t n = count_valid(p);
    if (n == 0) throw DegenerateInput("rmse: no valid cells");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.y_true.size(); ++i) {
        if (!is_valid(p, i)) continue;
        const double d = p.y_true[i] - p.y_pred[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(n));
}

bool is_constant_target(const ScorePair& p) {
    if (count_valid(p) == 0) return false;
    auto [lo, hi] = truth_range(p);
    return !(hi > lo);
}

double nrmse_score(const ScorePair& p) {
    const double err = rmse(p);
    auto [lo, hi] = truth_range(p);
    if (!(hi > lo)) return err == 0.0 ? 1.0 : 0.0;
    return 1.0 - err / (hi - lo);
}

double r2(const ScorePair& p) {
    const std::size_t n = count_valid(p);
    if (n < 2) throw DegenerateInput("r2: fewer than two valid cells");
    double mean = 0.0;
    for (std::size_t i = 0; i < p.y_true.size(); ++i)
        if (is_valid(p, i)) mean += p.y_true[i];
    mean /= static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < p.y_true.size(); ++i) {
        if (!is_valid(p, i)) continue;
        ss_res += (p.y_true[i] - p.y_pred[i]) * (p.y_true[i] - p.y_pred[i]);
        ss_tot += (p.y_true[i] - mean) * (p.y_true[i] - mean);
    }
    if (ss_tot == 0.0) throw DegenerateInput("r2: constant target");
    return 1.0 - ss_res / ss_tot;
}

double balanced_accuracy(const ScorePair& p) {
    count_valid(p);
    std::map<double, std::size_t> classes;
    for (std::size_t i = 0; i < p.y_true.size(); ++i)
        if (is_valid(p, i)) ++classes[p.y_true[i]];
    if (classes.size() != 2)
        throw DegenerateInput("balanced_accuracy: expected exactly two classes in y_true");
    const double neg = classes.begin()->first;
    const double pos = classes.rbegin()->first;
    std::size_t tp = 0, tn = 0, n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < p.y_true.size(); ++i) {
        if (!is_valid(p, i)) continue;
        const bool predicted_pos = std::abs(p.y_pred[i] - pos) < std::abs(p.y_pred[i] - neg);
        if (p.y_true[i] == pos) {
            ++n_pos;
            tp += predicted_pos ? 1 : 0;
        } else {
            ++n_neg;
            tn += predicted_pos ? 0 : 1;
        }
    }
    return 0.5 * (static_cast<double>(tp) / static_cast<double>(n_pos) +
                  static_cast<double>(tn) / static_cast<double>(n_neg));
}

double macro_balanced_accuracy(const ScorePair& p) {
    count_valid(p);
    std::map<double, std::size_t> classes;
    for (std::size_t i = 0; i < p.y_true.size(); ++i)
        if (is_valid(p, i)) ++classes[p.y_true[i]];
    if (classes.size() < 2)
        throw DegenerateInput("macro_balanced_accuracy: fewer than two classes in y_true");
    double total = 0.0;
    for (const auto& [cls, n_pos] : classes) {
        std::size_t tp = 0, tn = 0, n_neg = 0;
        for (std::size_t i = 0; i < p.y_true.size(); ++i) {
            if (!is_valid(p, i)) continue;
            const bool predicted = p.y_pred[i] == cls;
            if (p.y_true[i] == cls) {
                tp += predicted ? 1 : 0;
            } else {
                ++n_neg;
                tn += predicted ? 0 : 1;
            }
        }
        total += 0.5 * (static_cast<double>(tp) / static_cast<double>(n_pos) +
                        static_cast<double>(tn) / static_cast<double>(n_neg));
    }
    return total / static_cast<double>(classes.size());
}

double auroc(std::span<const std::uint8_t> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) throw InvalidArgument("auroc: length mismatch");
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Twice the Mann-Whitney U, kept integral so the single division at
    // the end is the only rounding step.
    std::uint64_t twice_u = 0, n_pos = 0, n_neg = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::uint64_t tie_pos = 0, tie_neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? tie_pos : tie_neg) += 1;
            ++j;
        }
        twice_u += tie_pos * (2 * n_neg + tie_neg);
        n_pos += tie_pos;
        n_neg += tie_neg;
        i = j;
    }
    if (n_pos == 0 || n_neg == 0) throw DegenerateInput("auroc: both classes must be present");
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) *
                                           static_cast<double>(n_neg));
}

ConfidenceInterval mean_ci(std::span<const double> samples, double level) {
    const std::size_t k = samples.size();
    if (k < 2) throw DegenerateInput("mean_ci: at least two samples required");
    if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("mean_ci: level must be in (0, 1)");
    if (std::all_of(samples.begin(), samples.end(), [&](double s) { return s == samples.front(); }))
        return {samples.front(), 0.0};
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(k);
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    const double sd = std::sqrt(ss / static_cast<double>(k - 1));
    boost::math::students_t dist(static_cast<double>(k - 1));
    const double t = boost::math::quantile(dist, 0.5 + level / 2.0);
    return {mean, t * sd / std::sqrt(static_cast<double>(k))};
}

std::string to_string(ScorerKind kind) {
    switch (kind) {
        case ScorerKind::Nrmse: return "nrmse";
        case ScorerKind::R2: return "r2";
        case ScorerKind::BalancedAccuracy: return "balanced_accuracy";
        case ScorerKind::MacroBalancedAccuracy: return "macro_balanced_accuracy";
    }
    return "nrmse";
}

ScorerKind parse_scorer_kind(const std::string& name) {
    if (name == "nrmse") return ScorerKind::Nrmse;
    if (name == "r2") return ScorerKind::R2;
    if (name == "balanced_accuracy") return ScorerKind::BalancedAccuracy;
    if (name == "macro_balanced_accuracy") return ScorerKind::MacroBalancedAccuracy;
    throw InvalidArgument("unknown scorer '" + name + "'");
}

double score(ScorerKind kind, const ScorePair& p) {
    switch (kind) {
        case ScorerKind::Nrmse: return nrmse_score(p);
        case ScorerKind::R2: return r2(p);
        case ScorerKind::BalancedAccuracy: return balanced_accuracy(p);
        case ScorerKind::MacroBalancedAccuracy: return macro_balanced_accuracy(p);
    }
    return nrmse_score(p);
}

}  // namespace iqa
