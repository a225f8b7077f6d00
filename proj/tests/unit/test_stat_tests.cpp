#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "iqa/stat_tests.hpp"

using namespace iqa;

namespace {

// Supremum of |F_a - F_b| evaluated at every sample point.
double ks_by_sweep(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pts(a);
    pts.insert(pts.end(), b.begin(), b.end());
    double d = 0.0;
    for (double t : pts) {
        const double fa = static_cast<double>(std::count_if(a.begin(), a.end(), [&](double v) { return v <= t; })) / a.size();
        const double fb = static_cast<double>(std::count_if(b.begin(), b.end(), [&](double v) { return v <= t; })) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

}  // namespace

TEST_SUITE("stat_tests") {

TEST_CASE("Kolmogorov survival function against scipy kstwobign") {
    const std::vector<std::pair<double, double>> ref = {
        {0.3, 0.9999906941986655},  {0.5, 0.9639452436648751},  {0.8, 0.5441424115741981},
        {1.0, 0.26999967167735456}, {1.17, 0.12939004218561884}, {1.19, 0.11774229287977166},
        {1.5, 0.022217962616525127}, {2.0, 0.0006709252557796953}, {3.0, 3.045995948942526e-08}};
    for (auto [lambda, p] : ref) CHECK(std::abs(kolmogorov_sf(lambda) - p) < 1e-12);
    CHECK(kolmogorov_sf(0.0) == 1.0);
}

TEST_CASE("KS basics") {
    const std::vector<double> a = {1, 2, 3, 4};
    const auto same = ks_two_sample(a, a);
    CHECK(same.statistic == 0.0);
    CHECK(same.p_value == 1.0);
    CHECK_FALSE(same.rejected);
    CHECK(ks_two_sample(std::vector<double>{0, 1, 2}, std::vector<double>{10, 11, 12}).statistic == 1.0);

    const std::vector<double> x = {0.1, 0.5, 0.9, 1.3, 2.2, 2.8, 3.0}, y = {0.4, 0.6, 1.0, 1.1, 3.5, 4.0};
    const auto r = ks_two_sample(x, y);
    CHECK(std::abs(r.statistic - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(r.p_value - 0.865413283499468) < 1e-9);
}

TEST_CASE("KS statistic equals a brute-force ECDF sweep") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n01;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> a(1 + rng() % 40), b(1 + rng() % 40);
        for (double& v : a) v = std::round(n01(rng) * 4.0) / 4.0;
        for (double& v : b) v = std::round((n01(rng) + 0.3) * 4.0) / 4.0;
        CHECK(std::abs(ks_two_sample(a, b).statistic - ks_by_sweep(a, b)) < 1e-12);
    }
}

TEST_CASE("chi-square statistic and p-value") {
    std::vector<double> first, second;
    for (int i = 0; i < 10; ++i) first.push_back(0);
    for (int i = 0; i < 10; ++i) second.push_back(1);
    const auto r = chi2_independence(first, second);
    CHECK(r.statistic == 20.0);
    CHECK(std::abs(r.p_value - 7.744216431044088e-06) < 1e-15);
    CHECK(r.rejected);

    std::vector<double> g1, g2;
    for (int i = 0; i < 30; ++i) g1.push_back(0);
    for (int i = 0; i < 20; ++i) g1.push_back(1);
    for (int i = 0; i < 10; ++i) g1.push_back(2);
    for (int i = 0; i < 25; ++i) g2.push_back(0);
    for (int i = 0; i < 25; ++i) g2.push_back(1);
    for (int i = 0; i < 15; ++i) g2.push_back(2);
    const auto three = chi2_independence(g1, g2);
    CHECK(std::abs(three.statistic - 1.8130018130018142) < 1e-12);
    CHECK(std::abs(three.p_value - 0.4039351609897598) < 1e-12);

    std::vector<double> relabeled1, relabeled2;
    for (double v : g1) relabeled1.push_back(10.0 - 3.0 * v);
    for (double v : g2) relabeled2.push_back(10.0 - 3.0 * v);
    CHECK(chi2_independence(relabeled1, relabeled2).statistic == doctest::Approx(three.statistic).epsilon(1e-14));

    const std::vector<double> p = {0, 0, 1, 1, 0, 1, 0, 1, 0, 1};
    const auto zero = chi2_independence(p, p);
    CHECK(zero.statistic == 0.0);
    CHECK(zero.p_value == 1.0);
}

TEST_CASE("rare categories are pooled") {
    std::vector<double> a, b;
    for (int i = 0; i < 40; ++i) a.push_back(i % 2);
    for (int i = 0; i < 40; ++i) b.push_back(i % 2);
    a.push_back(7);
    const auto r = chi2_independence(a, b);
    CHECK(std::find(r.flags.begin(), r.flags.end(), "pooled_rare_categories") != r.flags.end());
}

TEST_CASE("dispatch by kind") {
    const std::vector<double> o = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, i = {1, 0, 1, 0, 1, 0};
    CHECK(distribution_compatible(testing::with_kind(testing::col("c", o), ColumnKind::Continuous), o, i).test ==
          TestKind::KolmogorovSmirnov);
    CHECK(distribution_compatible(testing::with_kind(testing::col("b", o), ColumnKind::Binary), o, i).test ==
          TestKind::ChiSquare);
}

TEST_CASE("mean spike on skewed data is rejected") {
    std::mt19937_64 rng(8);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> observed(500);
    for (double& v : observed) v = e(rng);
    double mean = 0;
    for (double v : observed) mean += v / observed.size();
    const std::vector<double> imputed(500, mean);
    const auto r = distribution_compatible(testing::col("x", observed), observed, imputed);
    CHECK(r.rejected);
}

}  // TEST_SUITE
