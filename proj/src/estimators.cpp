#include "iqa/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iqa/errors.hpp"
#include "iqa/rng.hpp"

namespace iqa {

// ----------------------------------------------------------------- ridge

RidgeModel ridge_fit(const Matrix& x, const Vector& y, double reg) {
    if (x.rows() == 0) throw DegenerateInput("ridge_fit: no rows");
    if (x.rows() != y.size()) throw InvalidArgument("ridge_fit: X and y row counts differ");
    if (!(reg >= 0.0)) throw InvalidArgument("ridge_fit: regularization must be non-negative");

    RidgeModel m;
    m.reg_strength = reg;
    const double y_mean = y.mean();
    if (x.cols() == 0) {
        m.weights = Vector::Zero(0);
        m.intercept = y_mean;
        return m;
    }
    const Eigen::RowVectorXd x_mean = x.colwise().mean();
    const Matrix xc = x.rowwise() - x_mean;
    const Vector yc = y.array() - y_mean;

    Matrix gram = xc.transpose() * xc;
    gram.diagonal().array() += reg;
    const Vector rhs = xc.transpose() * yc;
    if (reg > 0.0)
        m.weights = gram.ldlt().solve(rhs);
    else
        m.weights = gram.completeOrthogonalDecomposition().solve(rhs);
    m.intercept = y_mean - x_mean.dot(m.weights);
    return m;
}

Vector ridge_predict(const RidgeModel& model, const Matrix& x) {
    if (x.cols() != model.weights.size())
        throw InvalidArgument("ridge_predict: feature count differs from fit");
    return (x * model.weights).array() + model.intercept;
}

// ----------------------------------------------------------------- trees

int RegressionTree::leaf_of(const Matrix& x, Eigen::Index row) const {
    int id = 0;
    while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(id)];
        id = x(row, n.feature) <= n.threshold ? n.left : n.right;
    }
    return id;
}

double RegressionTree::predict(const Matrix& x, Eigen::Index row) const {
    return nodes[static_cast<std::size_t>(leaf_of(x, row))].value;
}

int RegressionTree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int best = 0;
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        const auto& n = nodes[static_cast<std::size_t>(id)];
        if (n.feature >= 0) {
            stack.push_back({n.left, d + 1});
            stack.push_back({n.right, d + 1});
        }
    }
    return best;
}

namespace {

// Presorted exact-split CART builder. Every feature keeps the sample
// positions sorted by value; a node owns the same [begin, end) segment
// in every feature's array, and splits stable-partition all of them.
class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const Vector& target, std::span<const std::size_t> sample,
                const TreeParams& params, std::uint64_t seed, const Vector* hessian)
        : x_(x), params_(params), rng_(seed), n_features_(static_cast<std::size_t>(x.cols())) {
        const std::size_t m = sample.size();
        rows_.assign(sample.begin(), sample.end());
        t_.resize(m);
        for (std::size_t i = 0; i < m; ++i) t_[i] = target[static_cast<Eigen::Index>(rows_[i])];
        if (hessian) {
            h_.resize(m);
            for (std::size_t i = 0; i < m; ++i) h_[i] = (*hessian)[static_cast<Eigen::Index>(rows_[i])];
        }
        sorted_.resize(n_features_);
        for (std::size_t f = 0; f < n_features_; ++f) {
            auto& s = sorted_[f];
            s.resize(m);
            std::iota(s.begin(), s.end(), 0u);
            std::stable_sort(s.begin(), s.end(), [&](std::uint32_t a, std::uint32_t b) {
                return value(a, f) < value(b, f);
            });
        }
        goes_left_.resize(m);
        buffer_.resize(m);
    }

    RegressionTree build() {
        RegressionTree tree;
        struct Task {
            int node;
            std::size_t begin, end;
            int depth;
        };
        tree.nodes.emplace_back();
        std::vector<Task> stack{{0, 0, t_.size(), 0}};
        while (!stack.empty()) {
            const Task task = stack.back();
            stack.pop_back();
            tree.nodes[static_cast<std::size_t>(task.node)].value = leaf_value(task.begin, task.end);

            const std::size_t n = task.end - task.begin;
            if (n < std::max<std::size_t>(2, params_.min_samples_split)) continue;
            if (params_.max_depth >= 0 && task.depth >= params_.max_depth) continue;
            const Split split = find_split(task.begin, task.end);
            if (split.feature < 0) continue;

            const std::size_t n_left = partition(task.begin, task.end, split);
            const int left = static_cast<int>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto& node = tree.nodes[static_cast<std::size_t>(task.node)];
            node.feature = split.feature;
            node.threshold = split.threshold;
            node.left = left;
            node.right = left + 1;
            stack.push_back({left + 1, task.begin + n_left, task.end, task.depth + 1});
            stack.push_back({left, task.begin, task.begin + n_left, task.depth + 1});
        }
        return tree;
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = 0.0;
    };

    double value(std::uint32_t pos, std::size_t f) const {
        return x_(static_cast<Eigen::Index>(rows_[pos]), static_cast<Eigen::Index>(f));
    }

    double leaf_value(std::size_t begin, std::size_t end) const {
        if (end == begin) return 0.0;
        const auto& seg = sorted_[0];
        double g = 0.0, h = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            g += t_[seg[i]];
            h += h_.empty() ? 1.0 : h_[seg[i]];
        }
        return g / std::max(h, 1e-12);
    }

    Split find_split(std::size_t begin, std::size_t end) {
        const auto& any = sorted_[0];
        const double n = static_cast<double>(end - begin);
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) sum += t_[any[i]];
        const double mean = sum / n;
        double sse = 0.0;
        for (std::size_t i = begin; i < end; ++i) sse += (t_[any[i]] - mean) * (t_[any[i]] - mean);
        if (!(sse > 0.0)) return {};
        const double min_gain = 1e-10 * sse;

        std::vector<std::size_t> candidates(n_features_);
        std::iota(candidates.begin(), candidates.end(), std::size_t{0});
        std::size_t drawn = n_features_;
        if (params_.max_features && *params_.max_features < n_features_) {
            drawn = std::max<std::size_t>(1, *params_.max_features);
            for (std::size_t i = 0; i < drawn; ++i) {
                const auto j = i + static_cast<std::size_t>(uniform_index(rng_, n_features_ - i));
                std::swap(candidates[i], candidates[j]);
            }
        }
        std::vector<std::size_t> first(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(drawn));
        std::vector<std::size_t> rest(candidates.begin() + static_cast<std::ptrdiff_t>(drawn), candidates.end());
        std::sort(first.begin(), first.end());
        std::sort(rest.begin(), rest.end());

        Split best = best_over(first, begin, end, sum, min_gain);
        // Fall back to the unsampled features when the draw cannot split.
        if (best.feature < 0 && !rest.empty()) best = best_over(rest, begin, end, sum, min_gain);
        return best;
    }

    Split best_over(const std::vector<std::size_t>& features, std::size_t begin, std::size_t end,
                    double sum, double min_gain) const {
        const std::size_t n = end - begin;
        const std::size_t min_leaf = std::max<std::size_t>(1, params_.min_samples_leaf);
        const double parent = sum * sum / static_cast<double>(n);
        Split best;
        best.gain = min_gain;
        for (std::size_t f : features) {
            const auto& s = sorted_[f];
            double left_sum = 0.0;
            for (std::size_t i = begin; i + 1 < end; ++i) {
                left_sum += t_[s[i]];
                const std::size_t n_left = i + 1 - begin;
                const double v = value(s[i], f);
                if (v == value(s[i + 1], f)) continue;
                if (n_left < min_leaf || n - n_left < min_leaf) continue;
                const double right_sum = sum - left_sum;
                const double gain = left_sum * left_sum / static_cast<double>(n_left) +
                                    right_sum * right_sum / static_cast<double>(n - n_left) - parent;
                if (gain > best.gain) {
                    best.gain = gain;
                    best.feature = static_cast<int>(f);
                    best.threshold = v;
                }
            }
        }
        return best;
    }

    std::size_t partition(std::size_t begin, std::size_t end, const Split& split) {
        const auto f = static_cast<std::size_t>(split.feature);
        std::size_t n_left = 0;
        for (std::size_t i = begin; i < end; ++i) {
            const auto pos = sorted_[f][i];
            const bool left = value(pos, f) <= split.threshold;
            goes_left_[pos] = left ? 1 : 0;
            n_left += left ? 1 : 0;
        }
        for (auto& s : sorted_) {
            std::size_t l = begin, r = begin + n_left;
            for (std::size_t i = begin; i < end; ++i) {
                const auto pos = s[i];
                buffer_[goes_left_[pos] ? l++ : r++] = pos;
            }
            std::copy(buffer_.begin() + static_cast<std::ptrdiff_t>(begin),
                      buffer_.begin() + static_cast<std::ptrdiff_t>(end),
                      s.begin() + static_cast<std::ptrdiff_t>(begin));
        }
        return n_left;
    }

    const Matrix& x_;
    TreeParams params_;
    Rng rng_;
    std::size_t n_features_;
    std::vector<std::size_t> rows_;
    std::vector<double> t_;
    std::vector<double> h_;
    std::vector<std::vector<std::uint32_t>> sorted_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<std::uint32_t> buffer_;
};

std::vector<std::size_t> all_rows(Eigen::Index n) {
    std::vector<std::size_t> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

void check_xy(const Matrix& x, const Vector& y, const char* who) {
    if (x.rows() == 0) throw DegenerateInput(std::string(who) + ": no rows");
    if (x.rows() != y.size()) throw InvalidArgument(std::string(who) + ": X and y row counts differ");
}

}  // namespace

RegressionTree fit_tree(const Matrix& x, const Vector& target, std::span<const std::size_t> sample,
                        const TreeParams& params, std::uint64_t seed, const Vector* hessian) {
    if (sample.empty()) throw DegenerateInput("fit_tree: empty sample");
    if (x.cols() == 0) {
        // No predictors: a single leaf.
        RegressionTree tree;
        TreeNode leaf;
        double g = 0.0, h = 0.0;
        for (auto r : sample) {
            g += target[static_cast<Eigen::Index>(r)];
            h += hessian ? (*hessian)[static_cast<Eigen::Index>(r)] : 1.0;
        }
        leaf.value = g / std::max(h, 1e-12);
        tree.nodes.push_back(leaf);
        return tree;
    }
    TreeBuilder builder(x, target, sample, params, seed, hessian);
    return builder.build();
}

// ---------------------------------------------------------------- forest

ForestModel forest_fit(const Matrix& x, const Vector& y, const ForestParams& params,
                       std::uint64_t seed) {
    check_xy(x, y, "forest_fit");
    if (params.n_estimators < 1) throw InvalidArgument("forest_fit: n_estimators must be >= 1");
    ForestModel model;
    model.params = params;
    model.n_features = static_cast<std::size_t>(x.cols());

    TreeParams tp;
    tp.max_depth = params.max_depth;
    const auto p = static_cast<std::size_t>(x.cols());
    tp.max_features = params.max_features ? *params.max_features : (p + 2) / 3;

    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<std::size_t> sample = all_rows(x.rows());
    for (int t = 0; t < params.n_estimators; ++t) {
        Rng rng(derive_seed({seed, static_cast<std::uint64_t>(t), 0}));
        if (params.bootstrap)
            for (auto& s : sample) s = static_cast<std::size_t>(uniform_index(rng, n));
        model.trees.push_back(
            fit_tree(x, y, sample, tp, derive_seed({seed, static_cast<std::uint64_t>(t), 1})));
    }
    return model;
}

Vector forest_predict(const ForestModel& model, const Matrix& x) {
    if (static_cast<std::size_t>(x.cols()) != model.n_features)
        throw InvalidArgument("forest_predict: feature count differs from fit");
    Vector out = Vector::Zero(x.rows());
    for (const auto& tree : model.trees)
        for (Eigen::Index r = 0; r < x.rows(); ++r) out[r] += tree.predict(x, r);
    return out / static_cast<double>(model.trees.size());
}

// ------------------------------------------------------ gradient boosting

double sigmoid(double margin) {
    if (margin >= 0) return 1.0 / (1.0 + std::exp(-margin));
    const double e = std::exp(margin);
    return e / (1.0 + e);
}

double logistic_loss(double label, double margin) {
    // log(1 + e^m) - y m, evaluated without overflow.
    const double softplus = margin > 0 ? margin + std::log1p(std::exp(-margin))
                                       : std::log1p(std::exp(margin));
    return softplus - label * margin;
}

double logistic_gradient(double label, double margin) { return sigmoid(margin) - label; }

GbtModel gbt_fit(const Matrix& x, const Vector& y, const GbtParams& params, std::uint64_t seed) {
    check_xy(x, y, "gbt_fit");
    if (params.n_estimators < 0) throw InvalidArgument("gbt_fit: n_estimators must be >= 0");
    GbtModel model;
    model.params = params;
    model.n_features = static_cast<std::size_t>(x.cols());

    const Eigen::Index n = x.rows();
    const double mean = y.mean();
    if (params.loss == GbtLoss::Logistic) {
        for (Eigen::Index i = 0; i < n; ++i)
            if (y[i] != 0.0 && y[i] != 1.0) throw InvalidArgument("gbt_fit: logistic loss needs 0/1 labels");
        const double p = std::clamp(mean, 1e-6, 1.0 - 1e-6);
        model.base_score = std::log(p / (1.0 - p));
    } else {
        model.base_score = mean;
    }

    TreeParams tp;
    tp.max_depth = params.max_depth;
    const std::vector<std::size_t> sample = all_rows(n);
    Vector margin = Vector::Constant(n, model.base_score);
    Vector grad(n), hess(n);
    for (int t = 0; t < params.n_estimators; ++t) {
        if (params.loss == GbtLoss::Logistic) {
            for (Eigen::Index i = 0; i < n; ++i) {
                grad[i] = -logistic_gradient(y[i], margin[i]);
                const double p = sigmoid(margin[i]);
                hess[i] = p * (1.0 - p);
            }
        } else {
            grad = y - margin;
        }
        RegressionTree tree =
            fit_tree(x, grad, sample, tp, derive_seed({seed, static_cast<std::uint64_t>(t)}),
                     params.loss == GbtLoss::Logistic ? &hess : nullptr);
        for (Eigen::Index i = 0; i < n; ++i) margin[i] += params.learning_rate * tree.predict(x, i);
        model.trees.push_back(std::move(tree));
    }
    return model;
}

Vector gbt_predict(const GbtModel& model, const Matrix& x) {
    if (static_cast<std::size_t>(x.cols()) != model.n_features)
        throw InvalidArgument("gbt_predict: feature count differs from fit");
    Vector sum = Vector::Zero(x.rows());
    for (const auto& tree : model.trees)
        for (Eigen::Index r = 0; r < x.rows(); ++r) sum[r] += tree.predict(x, r);
    return (model.params.learning_rate * sum).array() + model.base_score;
}

Vector gbt_predict_proba(const GbtModel& model, const Matrix& x) {
    Vector m = gbt_predict(model, x);
    for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = sigmoid(m[i]);
    return m;
}

// ------------------------------------------------------ generic estimator

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Ridge: return "ridge";
        case EstimatorKind::Forest: return "forest";
        case EstimatorKind::Gbt: return "gbt";
    }
    return "ridge";
}

Model fit_estimator(const EstimatorSpec& spec, const Matrix& x, const Vector& y, std::uint64_t seed) {
    switch (spec.kind) {
        case EstimatorKind::Ridge: return ridge_fit(x, y, spec.reg_strength);
        case EstimatorKind::Forest: return forest_fit(x, y, spec.forest, seed);
        case EstimatorKind::Gbt: return gbt_fit(x, y, spec.gbt, seed);
    }
    throw InvalidArgument("unknown estimator kind");
}

Vector predict(const Model& model, const Matrix& x) {
    struct Visitor {
        const Matrix& x;
        Vector operator()(const RidgeModel& m) const { return ridge_predict(m, x); }
        Vector operator()(const ForestModel& m) const { return forest_predict(m, x); }
        Vector operator()(const GbtModel& m) const { return gbt_predict(m, x); }
    };
    return std::visit(Visitor{x}, model);
}

Vector permutation_importance(const Model& model, const Matrix& x, const Vector& y,
                              const VectorScorer& scorer, std::uint64_t seed, int n_repeats) {
    if (n_repeats < 1) throw InvalidArgument("permutation_importance: n_repeats must be >= 1");
    const double baseline = scorer(y, predict(model, x));
    Vector importance = Vector::Zero(x.cols());
    Rng rng(seed);
    Matrix shuffled = x;
    std::vector<double> column(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double total = 0.0;
        for (int r = 0; r < n_repeats; ++r) {
            for (Eigen::Index i = 0; i < x.rows(); ++i) column[static_cast<std::size_t>(i)] = x(i, j);
            shuffle_in_place(std::span<double>(column), rng);
            for (Eigen::Index i = 0; i < x.rows(); ++i) shuffled(i, j) = column[static_cast<std::size_t>(i)];
            total += scorer(y, predict(model, shuffled));
        }
        shuffled.col(j) = x.col(j);
        importance[j] = baseline - total / n_repeats;
    }
    return importance;
}

}  // namespace iqa
