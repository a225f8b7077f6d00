#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "iqa/errors.hpp"
#include "iqa/pipeline.hpp"
#include "json.hpp"

using namespace iqa;

namespace {

std::string mixed_csv(std::size_t n, std::uint64_t seed, double gap) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const char* colors[] = {"red", "green", "blue"};
    std::ostringstream s;
    s << "x,y,flag,color,level\n";
    for (std::size_t i = 0; i < n; ++i) {
        const double x = n01(rng);
        const double y = 1.5 * x + 0.2 * n01(rng);
        auto cell = [&](const std::string& v) { return u(rng) < gap ? std::string() : v; };
        s << cell(std::to_string(x)) << ',' << cell(std::to_string(y)) << ',' << cell(x > 0 ? "1" : "0") << ','
          << cell(colors[rng() % 3]) << ',' << cell(std::to_string(rng() % 4)) << '\n';
    }
    return s.str();
}

Table encoded(const std::string& csv) {
    std::istringstream in(csv);
    return infer_column_kinds(label_encode(read_csv(in)));
}

Table raw(const std::string& csv) {
    std::istringstream in(csv);
    return read_csv(in);
}

AssessConfig small_config() {
    AssessConfig cfg;
    ImputerSpec mean;
    mean.id = "mean";
    mean.family = ImputerFamily::Mean;
    ImputerSpec knn;
    knn.id = "knn5";
    knn.family = ImputerFamily::Knn;
    ImputerSpec it;
    it.id = "iter_br";
    it.family = ImputerFamily::Iterative;
    cfg.imputers = {mean, knn, it};
    cfg.seed = 3;
    return cfg;
}

bool same_cells(const Table& a, const Table& b) {
    if (a.names() != b.names() || a.n_rows() != b.n_rows()) return false;
    for (std::size_t j = 0; j < a.n_cols(); ++j)
        for (std::size_t i = 0; i < a.n_rows(); ++i) {
            const double x = a.column(j).values[i], y = b.column(j).values[i];
            if (a.column(j).mask[i] != b.column(j).mask[i]) return false;
            if (!a.column(j).missing(i) && x != y) return false;
        }
    return true;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("applying to the training table leaves no gaps") {
    const Table t = encoded(mixed_csv(200, 1, 0.15));
    const AssessConfig cfg = small_config();
    const auto recs = assess(t, cfg);
    const PipelinePlan plan = fit_pipeline(t, recs, cfg);
    const Table out = apply_pipeline(plan, t);
    CHECK(out.n_cols() == t.n_cols() - plan.drop_list.size());
    CHECK(out.missing_count() == 0);
    for (std::size_t j = 0; j < out.n_cols(); ++j) {
        const Column& c = out.column(j);
        const auto obs = observed_values(t.column(c.name));
        const std::set<double> seen(obs.begin(), obs.end());
        if (c.kind != ColumnKind::Continuous)
            for (double v : c.values) CHECK(seen.count(v) == 1);
    }
}

TEST_CASE("dropped features still serve as predictors") {
    const Table t = encoded(mixed_csv(120, 2, 0.1));
    const AssessConfig cfg = small_config();
    auto recs = assess(t, cfg);
    for (auto& r : recs) {
        r.kept = r.feature != "x";
        if (r.feature == "y") r.chosen_imputer = "iter_br";
    }
    const PipelinePlan plan = fit_pipeline(t, recs, cfg);
    CHECK(plan.drop_list == std::vector<std::string>{"x"});
    const auto it = std::find_if(plan.imputers.begin(), plan.imputers.end(), [](const auto& f) { return f.target == "y"; });
    REQUIRE(it != plan.imputers.end());
    CHECK(std::find(it->predictors.begin(), it->predictors.end(), "x") != it->predictors.end());
    CHECK_FALSE(apply_pipeline(plan, t).has_column("x"));
}

TEST_CASE("serialized plan applies identically") {
    const std::string train_csv = mixed_csv(200, 3, 0.2), test_csv = mixed_csv(80, 4, 0.25);
    const Table t = encoded(train_csv);
    const AssessConfig cfg = small_config();
    const PipelinePlan plan = fit_pipeline(t, assess(t, cfg), cfg, "abc");
    const std::string text = serialize_pipeline(plan);
    const PipelinePlan back = deserialize_pipeline(text, "abc");
    CHECK(serialize_pipeline(back) == text);
    CHECK(same_cells(apply_pipeline(plan, raw(test_csv)), apply_pipeline(back, raw(test_csv))));
}

TEST_CASE("codec errors and hash warnings") {
    const Table t = encoded(mixed_csv(60, 5, 0.1));
    const AssessConfig cfg = small_config();
    const PipelinePlan plan = fit_pipeline(t, assess(t, cfg), cfg, "aaaa");
    const std::string text = serialize_pipeline(plan);

    auto j = nlohmann::json::parse(text);
    j.erase("imputers");
    CHECK_THROWS_AS(deserialize_pipeline(j.dump()), CorruptModel);
    CHECK_THROWS_AS(deserialize_pipeline("{not json"), CorruptModel);

    auto v = nlohmann::json::parse(text);
    v["schema_version"] = 99;
    CHECK_THROWS_AS(deserialize_pipeline(v.dump()), VersionMismatch);

    std::vector<std::string> warnings;
    CHECK_NOTHROW(deserialize_pipeline(text, "bbbb", &warnings));
    CHECK(warnings.size() == 1);
}

TEST_CASE("complete table only loses dropped columns") {
    const Table t = encoded(mixed_csv(60, 6, 0.0));
    const AssessConfig cfg = small_config();
    auto recs = assess(t, cfg);
    recs[4].kept = false;
    const PipelinePlan plan = fit_pipeline(t, recs, cfg);
    const Table out = apply_pipeline(plan, t);
    CHECK(out.n_cols() == 4);
    for (const auto& c : out.columns()) CHECK(c.values == t.column(c.name).values);
}

TEST_CASE("unseen categories become gaps and are imputed") {
    const Table t = encoded(mixed_csv(150, 7, 0.1));
    const AssessConfig cfg = small_config();
    const PipelinePlan plan = fit_pipeline(t, assess(t, cfg), cfg);
    std::istringstream in("x,y,flag,color,level\n0.1,0.2,1,purple,2\n0.3,,0,red,1\n");
    std::vector<std::string> notes;
    const Table out = apply_pipeline(plan, read_csv(in), &notes);
    CHECK(std::find(notes.begin(), notes.end(), "unseen_category:color:1") != notes.end());
    REQUIRE(out.has_column("color"));
    const auto decoded = decode_labels(out.column("color"));
    const std::set<std::string> known = {"red", "green", "blue"};
    for (const auto& s : decoded) CHECK(known.count(s) == 1);
}

TEST_CASE("missing planned column is a schema mismatch") {
    const Table t = encoded(mixed_csv(60, 8, 0.1));
    const AssessConfig cfg = small_config();
    const PipelinePlan plan = fit_pipeline(t, assess(t, cfg), cfg);
    std::istringstream in("x,y\n1,2\n");
    CHECK_THROWS_AS(apply_pipeline(plan, read_csv(in)), SchemaMismatch);
}

}  // TEST_SUITE
