#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace iqa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ----------------------------------------------------------------- ridge

struct RidgeModel {
    Vector weights;
    double intercept = 0.0;
    double reg_strength = 1.0;
};

// Solves (Xc'Xc + reg*I) w = Xc'yc on centered data; the intercept
// restores the means. reg may be zero for full-rank designs.
RidgeModel ridge_fit(const Matrix& x, const Vector& y, double reg);
Vector ridge_predict(const RidgeModel& model, const Matrix& x);

// ----------------------------------------------------------------- trees

// `threshold` is the largest training value routed left, so a row goes
// left iff x[feature] <= threshold. Leaves have feature == -1.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(const Matrix& x, Eigen::Index row) const;
    int leaf_of(const Matrix& x, Eigen::Index row) const;
    int depth() const;
};

struct TreeParams {
    int max_depth = -1;  // negative: unlimited
    std::size_t min_samples_split = 2;
    std::size_t min_samples_leaf = 1;
    // Features drawn per split; nullopt evaluates every feature.
    std::optional<std::size_t> max_features;
};

// CART regression tree on variance reduction. `sample` lists training
// rows (duplicates allowed, as produced by bootstrapping). Ties between
// equally good splits go to the lowest feature index, then the lowest
// threshold. When `hessian` is non-empty, leaves hold sum(g)/sum(h)
// instead of the mean target.
RegressionTree fit_tree(const Matrix& x, const Vector& target, std::span<const std::size_t> sample,
                        const TreeParams& params, std::uint64_t seed,
                        const Vector* hessian = nullptr);

// ---------------------------------------------------------------- forest

struct ForestParams {
    int n_estimators = 100;
    int max_depth = -1;
    bool bootstrap = true;
    // nullopt: ceil(p / 3) features per split.
    std::optional<std::size_t> max_features;
};

struct ForestModel {
    std::vector<RegressionTree> trees;
    ForestParams params;
    std::size_t n_features = 0;
};

ForestModel forest_fit(const Matrix& x, const Vector& y, const ForestParams& params,
                       std::uint64_t seed);
Vector forest_predict(const ForestModel& model, const Matrix& x);

// ------------------------------------------------------ gradient boosting

enum class GbtLoss { Squared, Logistic };

struct GbtParams {
    int n_estimators = 100;
    int max_depth = 6;
    double learning_rate = 0.1;
    GbtLoss loss = GbtLoss::Squared;
};

struct GbtModel {
    double base_score = 0.0;
    std::vector<RegressionTree> trees;
    GbtParams params;
    std::size_t n_features = 0;
};

GbtModel gbt_fit(const Matrix& x, const Vector& y, const GbtParams& params, std::uint64_t seed);
// Raw output: base_score + learning_rate * sum of tree outputs (a margin
// for the logistic loss).
Vector gbt_predict(const GbtModel& model, const Matrix& x);
Vector gbt_predict_proba(const GbtModel& model, const Matrix& x);

double sigmoid(double margin);
// Log-loss of a binary label at a margin, and its derivative in the margin.
double logistic_loss(double label, double margin);
double logistic_gradient(double label, double margin);

// ------------------------------------------------------ generic estimator

enum class EstimatorKind { Ridge, Forest, Gbt };

std::string to_string(EstimatorKind kind);

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::Ridge;
    double reg_strength = 1.0;
    ForestParams forest;
    GbtParams gbt;
};

using Model = std::variant<RidgeModel, ForestModel, GbtModel>;

// Throws DegenerateInput on empty data.
Model fit_estimator(const EstimatorSpec& spec, const Matrix& x, const Vector& y, std::uint64_t seed);
Vector predict(const Model& model, const Matrix& x);

using VectorScorer = std::function<double(const Vector& y_true, const Vector& y_pred)>;

// Mean drop of `scorer` when each column is shuffled, over `n_repeats`
// seeded permutations per column.
Vector permutation_importance(const Model& model, const Matrix& x, const Vector& y,
                              const VectorScorer& scorer, std::uint64_t seed, int n_repeats = 5);

}  // namespace iqa
