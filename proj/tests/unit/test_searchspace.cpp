#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "mofs/error.hpp"
#include "mofs/searchspace.hpp"

using namespace mofs;

TEST_CASE("param definitions reject invalid bounds") {
    CHECK_THROWS_AS(SearchSpace({ParamDef::numeric("a", 1.0, 1.0)}), Error);
    CHECK_THROWS_AS(SearchSpace({ParamDef::numeric("a", 0.0, 1.0, true)}), Error);
    CHECK_THROWS_AS(SearchSpace({ParamDef::categorical("c", {"x", "x"})}), Error);
    CHECK_THROWS_AS(SearchSpace({ParamDef::numeric("a", 0, 1), ParamDef::numeric("a", 0, 1)}), Error);
    CHECK_NOTHROW(SearchSpace({ParamDef::categorical("kernel", {"rbfdot"})}));
}

TEST_CASE("uniform sampling of a unit numeric has mean one half") {
    SearchSpace s({ParamDef::numeric("x", 0.0, 1.0)});
    Rng rng(11);
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) sum += sample_uniform(s, rng)[0];
    CHECK(sum / 10000.0 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("log-scale sampling has median near one on [2^-10, 2^10]") {
    SearchSpace s({ParamDef::numeric("c", std::ldexp(1.0, -10), std::ldexp(1.0, 10), true)});
    Rng rng(5);
    std::vector<double> v;
    for (int i = 0; i < 10000; ++i) v.push_back(sample_uniform(s, rng)[0]);
    std::nth_element(v.begin(), v.begin() + 5000, v.end());
    CHECK(v[5000] > 0.5);
    CHECK(v[5000] < 2.0);
}

TEST_CASE("categorical levels are sampled uniformly") {
    SearchSpace s({ParamDef::categorical("c", {"a", "b", "c", "d"})});
    Rng rng(3);
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 10000; ++i) ++counts[static_cast<int>(sample_uniform(s, rng)[0])];
    for (int c : counts) CHECK(std::abs(c / 10000.0 - 0.25) <= 0.02);
}

TEST_CASE("samples never leave their bounds") {
    SearchSpace s({ParamDef::numeric("a", -2.0, 3.0), ParamDef::numeric("b", 1e-3, 1e3, true),
                   ParamDef::integer("k", 1, 50), ParamDef::integer("n", 1, 2000, true),
                   ParamDef::categorical("c", {"x", "y", "z"})});
    Rng rng(17);
    bool ok = true;
    for (int i = 0; i < 100000; ++i) {
        Configuration c;
        c.hyperparams = sample_uniform(s, rng);
        c.ffrac = 0.5;
        ok = ok && validate(s, c).empty();
    }
    CHECK(ok);
}

TEST_CASE("unit coordinates") {
    SearchSpace s({ParamDef::numeric("x", 0.0, 10.0), ParamDef::numeric("l", std::ldexp(1.0, -10), std::ldexp(1.0, 10), true),
                   ParamDef::integer("k", 1, 50), ParamDef::categorical("c", {"a", "b", "c"})});
    const HyperValues v{5.0, std::ldexp(1.0, 10), 3.0, 2.0};
    const auto u = to_unit(s, v);
    CHECK(u[0] == 0.5);
    CHECK(u[1] == 1.0);
    CHECK(u[2] == doctest::Approx(2.0 / 49.0));
    CHECK(u[3] == 1.0);
    CHECK(from_unit(s, u) == v);

    SUBCASE("integers round half up") {
        SearchSpace si({ParamDef::integer("k", 0, 10)});
        CHECK(from_unit(si, std::vector<double>{0.25})[0] == 3.0);  // 2.5 -> 3
        CHECK(from_unit(si, std::vector<double>{0.24})[0] == 2.0);
        CHECK(round_half_up(-0.5) == 0.0);
    }
    SUBCASE("out-of-bounds values name the parameter") {
        try {
            to_unit(s, HyperValues{11.0, 1.0, 3.0, 0.0});
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("'x'") != std::string::npos);
        }
        CHECK_THROWS_AS(to_unit(s, HyperValues{1.0, 1.0, 3.5, 0.0}), Error);
    }
}

TEST_CASE("round trip holds for random valid configurations") {
    SearchSpace s({ParamDef::numeric("a", -1.0, 1.0), ParamDef::integer("k", 1, 50),
                   ParamDef::categorical("c", {"p", "q", "r", "s"})});
    Rng rng(9);
    for (int i = 0; i < 2000; ++i) {
        const auto v = sample_uniform(s, rng);
        const auto back = from_unit(s, to_unit(s, v));
        CHECK(back[0] == doctest::Approx(v[0]).epsilon(1e-12));
        CHECK(back[1] == v[1]);
        CHECK(back[2] == v[2]);
    }
}

TEST_CASE("validate reports every violation") {
    SearchSpace s({ParamDef::numeric("x", 0.0, 1.0), ParamDef::integer("k", 1, 5)});
    Configuration ok;
    ok.hyperparams = {0.5, 2.0};
    ok.ffrac = 0.3;
    ok.weights = std::vector<double>{0.5, 0.5};
    CHECK(validate(s, ok, {std::nullopt, 2}).empty());

    Configuration bad = ok;
    bad.hyperparams = {2.0, 7.0};
    bad.weights = std::vector<double>{0.6, 0.6};
    const auto v = validate(s, bad);
    CHECK(v.size() == 3);
    CHECK(std::any_of(v.begin(), v.end(), [](const Violation& x) { return x.what.find("simplex") != std::string::npos; }));

    Configuration m;
    m.hyperparams = {0.5, 2.0};
    m.mask = FeatureMask(7);
    const auto vm = validate(s, m, {10, std::nullopt});
    REQUIRE(vm.size() == 1);
    CHECK(vm[0].what.find("mask length") != std::string::npos);
}

TEST_CASE("simplex repair") {
    std::vector<double> w{-0.2, 0.3, 0.9};
    repair_simplex(w);
    CHECK(w[0] == 0.0);
    CHECK(std::abs(w[0] + w[1] + w[2] - 1.0) < 1e-12);
    std::vector<double> z{-1.0, 0.0, -3.0, 0.0};
    repair_simplex(z);
    for (double x : z) CHECK(x == 0.25);

    Rng rng(21);
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> r(5);
        for (auto& x : r) x = rng.normal();
        repair_simplex(r);
        double sum = 0.0;
        for (double x : r) {
            CHECK(x >= 0.0);
            sum += x;
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
        auto s = rng.simplex(4);
        CHECK(is_simplex(s, 1e-12));
    }
}

TEST_CASE("feature mask string form") {
    FeatureMask m(std::vector<std::uint8_t>{1, 0, 1, 1});
    CHECK(m.weight() == 3);
    CHECK(m.to_string() == "1011");
    CHECK(FeatureMask::from_string("1011") == m);
    CHECK(m.selected() == std::vector<std::size_t>{0, 2, 3});
    CHECK_THROWS_AS(FeatureMask::from_string("10x"), Error);
}
