#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "iqa/table.hpp"

namespace testing {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline iqa::Column col(std::string name, std::vector<double> values) {
    return iqa::Column::numeric(std::move(name), std::move(values));
}

inline iqa::Column with_kind(iqa::Column c, iqa::ColumnKind kind) {
    c.kind = kind;
    return c;
}

// Masks each cell independently with probability `rate`.
inline std::vector<double> mcar(std::vector<double> v, double rate, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& x : v)
        if (u(rng) < rate) x = kNaN;
    return v;
}

inline std::size_t count_missing(const std::vector<double>& v) {
    std::size_t n = 0;
    for (double x : v) n += std::isnan(x) ? 1 : 0;
    return n;
}

// x ~ U(0, 10), y = 2x + N(0, noise_sd).
inline iqa::Table linear_pair(std::size_t n, double noise_sd, double y_missing, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, 10.0);
    std::normal_distribution<double> noise(0.0, noise_sd);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = ux(rng);
        y[i] = 2.0 * x[i] + noise(rng);
    }
    y = mcar(std::move(y), y_missing, rng);
    return iqa::Table({col("x", std::move(x)), col("y", std::move(y))});
}

}  // namespace testing
