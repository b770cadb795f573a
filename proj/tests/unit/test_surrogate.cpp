#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "mofs/error.hpp"
#include "mofs/surrogate.hpp"

using namespace mofs;

namespace {

struct Design {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
};

// y = x1 on [0, 1] with a second, irrelevant column.
Design linear_design(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Design d;
    for (std::size_t i = 0; i < n; ++i) {
        d.X.push_back({rng.uniform(), rng.uniform()});
        d.y.push_back(d.X.back()[0]);
    }
    return d;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("tree prediction summary") {
    const auto mv = summarize_tree_predictions(std::vector<double>{0.0, 1.0});
    CHECK(mv.mean == 0.5);
    CHECK(mv.var == 0.25);
    const auto agree = summarize_tree_predictions(std::vector<double>{0.3, 0.3, 0.3});
    CHECK(agree.mean == doctest::Approx(0.3));
    CHECK(agree.var == 1e-12);
}

TEST_CASE("forest on degenerate targets") {
    SUBCASE("constant targets predict the constant") {
        Rng rng(1);
        std::vector<std::vector<double>> X;
        for (int i = 0; i < 40; ++i) X.push_back({rng.uniform(), static_cast<double>(rng.integer(0, 2))});
        const std::vector<double> y(40, 0.7);
        Forest f;
        f.fit(X, y, {0, 3}, {}, 4);
        for (int t = 0; t < 100; ++t) {
            const std::vector<double> x{rng.uniform(-1, 2), static_cast<double>(rng.integer(0, 2))};
            const auto mv = f.predict(x);
            CHECK(mv.mean == doctest::Approx(0.7).epsilon(1e-12));
            CHECK(mv.var <= 1e-12);
        }
    }
    SUBCASE("a single training point") {
        Forest f;
        f.fit({{0.3, 0.4}}, std::vector<double>{2.5}, {0, 0}, {}, 1);
        for (double a : {0.0, 0.3, 1.0}) CHECK(f.predict(std::vector<double>{a, 0.9}).mean == 2.5);
    }
    SUBCASE("bad input") {
        Forest f;
        CHECK_THROWS_AS(f.fit({}, std::vector<double>{}, {}, {}, 1), Error);
        CHECK_THROWS_AS(f.fit({{0.1}, {0.2}}, std::vector<double>{1.0}, {0}, {}, 1), Error);
    }
}

TEST_CASE("forest fits y = x1") {
    const auto d = linear_design(200, 3);
    Forest f;
    f.fit(d.X, d.y, {0, 0}, {}, 7);
    CHECK(f.size() == 100);
    CHECK(f.dims() == 2);
    CHECK(f.min_leaf_size() >= 3);

    double mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / 200.0, ss = 0.0, se = 0.0;
    for (std::size_t i = 0; i < 200; ++i) {
        ss += (d.y[i] - mean) * (d.y[i] - mean);
        const double e = f.predict(d.X[i]).mean - d.y[i];
        se += e * e;
    }
    const double sd = std::sqrt(ss / 200.0), rmse = std::sqrt(se / 200.0);
    CHECK(rmse < 0.1 * sd);

    SUBCASE("predictions stay inside the target range") {
        const double lo = *std::min_element(d.y.begin(), d.y.end());
        const double hi = *std::max_element(d.y.begin(), d.y.end());
        Rng rng(2);
        for (int t = 0; t < 500; ++t) {
            const double m = f.predict(std::vector<double>{rng.uniform(-3, 3), rng.uniform(-3, 3)}).mean;
            CHECK(m >= lo);
            CHECK(m <= hi);
        }
    }
    SUBCASE("uncertainty grows away from the data") {
        // Dense clean data on x1 < 0.5, a few contradictory labels at x1 = 0.95.
        Design half;
        for (std::size_t i = 0; i < 200; ++i)
            if (d.X[i][0] < 0.5) {
                half.X.push_back(d.X[i]);
                half.y.push_back(d.y[i]);
            }
        Design far = half;
        for (int i = 0; i < 20; ++i) {
            far.X.push_back({0.95, 0.05 * i});
            far.y.push_back(i % 2 ? 0.0 : 1.0);
        }
        Forest g;
        g.fit(far.X, far.y, {0, 0}, {}, 9);
        std::vector<double> at_train, at_probe;
        Rng rng(5);
        for (int t = 0; t < 50; ++t) {
            at_train.push_back(g.predict(half.X[static_cast<std::size_t>(t)]).var);
            at_probe.push_back(g.predict(std::vector<double>{rng.uniform(0.9, 1.0), rng.uniform()}).var);
        }
        CHECK(median(at_probe) > median(at_train));
    }
}

TEST_CASE("forest is deterministic and row-order invariant") {
    const auto d = linear_design(120, 11);
    Forest a, b, c;
    a.fit(d.X, d.y, {0, 0}, {}, 5);
    b.fit(d.X, d.y, {0, 0}, {}, 5);

    std::vector<std::size_t> perm(120);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(8);
    rng.shuffle(perm.begin(), perm.end());
    Design p;
    for (auto i : perm) {
        p.X.push_back(d.X[i]);
        p.y.push_back(d.y[i]);
    }
    c.fit(p.X, p.y, {0, 0}, {}, 5);
    for (int t = 0; t < 200; ++t) {
        const std::vector<double> x{rng.uniform(), rng.uniform()};
        CHECK(a.tree_predictions(x) == b.tree_predictions(x));
        CHECK(a.tree_predictions(x) == c.tree_predictions(x));
    }
}

TEST_CASE("categorical level-subset splits") {
    // Target depends only on which of 4 levels is present: {0, 2} high, {1, 3} low.
    Rng rng(4);
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 120; ++i) {
        const int lev = static_cast<int>(rng.integer(0, 3));
        X.push_back({static_cast<double>(lev), rng.uniform()});
        y.push_back(lev % 2 == 0 ? 1.0 : 0.0);
    }
    Forest f;
    f.fit(X, y, {4, 0}, {50, 3, 2}, 3);
    for (int lev = 0; lev < 4; ++lev) {
        const double m = f.predict(std::vector<double>{static_cast<double>(lev), 0.5}).mean;
        if (lev % 2 == 0) CHECK(m > 0.9);
        else CHECK(m < 0.1);
    }
}
