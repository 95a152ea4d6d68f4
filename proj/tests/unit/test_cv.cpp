#include "doctest.h"

#include "bondtca/cross_validation.hpp"
#include "bondtca/error.hpp"
#include "bondtca/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace bondtca;

namespace {

Dataset sparse_problem(std::uint64_t seed, int n = 300) {
    CounterRng rng(seed);
    Dataset d;
    d.X.resize(n, 8);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 8; ++j) d.X(i, j) = rng.normal();
        d.y(i) = 10.0 + 3.0 * d.X(i, 0) - 2.0 * d.X(i, 4) + rng.normal(0.0, 1.0);
    }
    for (int j = 0; j < 8; ++j) d.names.push_back("f" + std::to_string(j));
    return d;
}

CVPoint point(double lambda, std::size_t i1, std::size_t i2, bool degenerate = false) {
    CVPoint p;
    p.mu = {lambda, 1.0};
    p.in_i1 = i1;
    p.in_i2 = i2;
    p.degenerate = degenerate;
    return p;
}

}  // namespace

TEST_CASE("interval counts on hand-built values") {
    const auto p = summarize_fold_r2({1.0, 1.0}, {0.5, 0.5, 0.5, 0.5, 1.0});
    CHECK(p.mean == doctest::Approx(0.6));
    CHECK(p.sd == doctest::Approx(std::sqrt(0.05)));
    CHECK(p.in_i1 == 4);
    CHECK(p.in_i2 == 4);
    const auto flat = summarize_fold_r2({1.0, 1.0}, {0.3, 0.3, 0.3});
    CHECK(flat.sd == 0.0);
    CHECK(flat.in_i1 == 3);
    CHECK(flat.in_i2 == 3);
    CHECK(summarize_fold_r2({1.0, 1.0}, {0.1, 0.2}, 1e-12).degenerate);
}

TEST_CASE("folds partition the rows") {
    const auto folds = make_folds(103, 10, 7);
    REQUIRE(folds.size() == 10);
    std::vector<std::size_t> all;
    for (const auto& f : folds) {
        CHECK((f.size() == 10 || f.size() == 11));
        all.insert(all.end(), f.begin(), f.end());
    }
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
    CHECK(make_folds(103, 10, 7) == folds);
    CHECK(make_folds(103, 10, 8) != folds);
    CHECK_THROWS_AS(make_folds(10, 1, 0), ConfigError);
    CHECK_THROWS_AS(make_folds(3, 5, 0), DataError);
}

TEST_CASE("selection order") {
    CVReport r;
    r.points = {point(1.0, 7, 9)};
    CHECK(select_by_ci(r) == 0);
    r.points = {point(1.0, 16, 20), point(2.0, 18, 18)};
    CHECK(select_by_ci(r) == 1);
    r.points = {point(1.0, 18, 20), point(2.0, 18, 19)};
    CHECK(select_by_ci(r) == 0);
    r.points = {point(3.0, 18, 19), point(2.0, 18, 19)};
    CHECK(select_by_ci(r) == 0);
    r.points = {point(1.0, 5, 6), point(2.0, 9, 9, true)};
    CHECK(select_by_ci(r) == 0);
    r.points = {point(1.0, 5, 6, true)};
    CHECK_THROWS_AS(select_by_ci(r), NumericalError);
    r.points = {point(1.0, 9, 9), point(2.0, 3, 3)};
    r.points[0].error = "rank deficient";
    CHECK(select_by_ci(r) == 1);
}

TEST_CASE("k-fold cross-validation") {
    const auto d = sparse_problem(3);
    std::vector<GridPoint> grid;
    for (double l : log_grid(1e-3, 100.0, 12)) grid.push_back({l, 1.0});
    const auto serial = k_fold_cv(d, Model::lasso, grid, 10, 99, Execution::serial);
    const auto parallel = k_fold_cv(d, Model::lasso, grid, 10, 99, Execution::parallel);
    REQUIRE(serial.points.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(serial.points[i].r2 == parallel.points[i].r2);
        CHECK(serial.points[i].in_i1 <= serial.points[i].in_i2);
        CHECK(serial.points[i].r2.size() == 10);
    }
    // the largest lambda zeroes every coefficient and is never chosen
    CHECK(serial.points.back().degenerate);
    for (double v : serial.points.back().r2) CHECK(std::abs(v) < 0.1);
    const auto chosen = select_by_ci(serial);
    CHECK_FALSE(serial.points[chosen].degenerate);
    CHECK(cv_report_to_json(serial).size() == grid.size());
}

TEST_CASE("failed fits are reported per point") {
    auto d = sparse_problem(4, 60);
    d.X.col(7) = d.X.col(0) + d.X.col(1);
    const std::vector<GridPoint> grid{{0.0, 1.0}, {0.5, 1.0}};
    const auto r = k_fold_cv(d, Model::lslasso, grid, 5, 1, Execution::serial);
    CHECK_FALSE(r.points[0].error.empty());
    CHECK(select_by_ci(r) == 1);
    CHECK_THROWS_AS(k_fold_cv(d, Model::lasso, grid, 1, 1), ConfigError);
}

TEST_CASE("log grid") {
    const auto g = log_grid(0.1, 1000.0, 5);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == doctest::Approx(0.1));
    CHECK(g[1] == doctest::Approx(1.0));
    CHECK(g.back() == doctest::Approx(1000.0));
}
