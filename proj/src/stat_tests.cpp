#include "iqa/stat_tests.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <map>
#include <numbers>

#include "iqa/errors.hpp"

namespace iqa {

std::string to_string(TestKind kind) {
    return kind == TestKind::KolmogorovSmirnov ? "ks" : "chi2";
}

double kolmogorov_sf(double lambda) {
    if (!(lambda > 0.0)) return 1.0;
    if (lambda < 1.18) {
        // Jacobi theta form of the CDF converges fast for small lambda.
        const double pi = std::numbers::pi;
        const double w = std::sqrt(2.0 * pi) / lambda;
        double sum = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double t = (2.0 * k - 1.0) * pi / (2.0 * lambda);
            sum += std::exp(-0.5 * t * t);
        }
        return std::clamp(1.0 - w * sum, 0.0, 1.0);
    }
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 ? term : -term);
        if (term < 1e-300) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b, double alpha) {
    if (a.empty() || b.empty()) throw DegenerateInput("ks_two_sample: empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());

    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }

    TestResult r;
    r.test = TestKind::KolmogorovSmirnov;
    r.statistic = d;
    r.alpha = alpha;
    r.p_value = kolmogorov_sf(std::sqrt(nx * ny / (nx + ny)) * d);
    r.rejected = r.p_value < alpha;
    if (x.size() < 30 || y.size() < 30) r.flags.push_back("small_sample");
    return r;
}

TestResult chi2_independence(std::span<const double> first, std::span<const double> second,
                             double alpha) {
    if (first.empty() || second.empty()) throw DegenerateInput("chi2_independence: empty group");

    std::map<double, std::pair<double, double>> table;
    for (double v : first) table[v].first += 1.0;
    for (double v : second) table[v].second += 1.0;
    const double n1 = static_cast<double>(first.size());
    const double n2 = static_cast<double>(second.size());
    const double total = n1 + n2;
    const double small_row = std::min(n1, n2);

    struct Category {
        double a = 0.0, b = 0.0;
        double total() const { return a + b; }
    };
    // Rarest first; equal totals keep value order.
    std::vector<std::pair<double, Category>> cats;
    for (const auto& [v, counts] : table) cats.push_back({v, Category{counts.first, counts.second}});
    std::stable_sort(cats.begin(), cats.end(), [](const auto& l, const auto& r) {
        return l.second.total() < r.second.total();
    });

    auto min_expected = [&](const Category& c) { return small_row * c.total() / total; };
    Category pooled;
    bool any_pooled = false;
    std::size_t next = 0;
    while (next < cats.size()) {
        const bool head_small = min_expected(cats[next].second) < 5.0;
        const bool pooled_small = any_pooled && min_expected(pooled) < 5.0;
        if (!head_small && !pooled_small) break;
        pooled.a += cats[next].second.a;
        pooled.b += cats[next].second.b;
        any_pooled = true;
        ++next;
    }
    std::vector<Category> kept;
    for (std::size_t k = next; k < cats.size(); ++k) kept.push_back(cats[k].second);
    if (any_pooled) kept.push_back(pooled);
    if (kept.size() < 2)
        throw DegenerateInput("chi2_independence: fewer than two categories after pooling");

    double stat = 0.0;
    for (const auto& c : kept) {
        const double e1 = n1 * c.total() / total;
        const double e2 = n2 * c.total() / total;
        stat += (c.a - e1) * (c.a - e1) / e1 + (c.b - e2) * (c.b - e2) / e2;
    }

    TestResult r;
    r.test = TestKind::ChiSquare;
    r.statistic = stat;
    r.alpha = alpha;
    const double df = static_cast<double>(kept.size() - 1);
    r.p_value = stat > 0.0 ? boost::math::gamma_q(df / 2.0, stat / 2.0) : 1.0;
    r.rejected = r.p_value < alpha;
    if (any_pooled) r.flags.push_back("pooled_rare_categories");
    return r;
}

TestResult distribution_compatible(const Column& column, std::span<const double> observed,
                                   std::span<const double> imputed, double alpha) {
    if (column.kind == ColumnKind::Continuous) return ks_two_sample(observed, imputed, alpha);
    try {
        return chi2_independence(observed, imputed, alpha);
    } catch (const DegenerateInput&) {
        TestResult r;
        r.test = TestKind::ChiSquare;
        r.alpha = alpha;
        r.flags.push_back("degenerate_table");
        return r;
    }
}

}  // namespace iqa
