#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "oracles.hpp"

#include "mofs/error.hpp"
#include "mofs/evo.hpp"
#include "mofs/mobo.hpp"

using namespace mofs;

namespace {

SearchSpace toy_space() {
    return SearchSpace({ParamDef::numeric("x", 0.0, 1.0), ParamDef::integer("k", 1, 10),
                        ParamDef::categorical("c", {"a", "b", "c"})});
}

FilterMatrix toy_filters(std::size_t p, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> cols(3, std::vector<double>(p));
    for (auto& c : cols) {
        for (auto& v : c) v = rng.uniform();
        c = rank_scale(c);
    }
    return FilterMatrix(p, {"f1", "f2", "f3"}, cols);
}

// Cheap deterministic objective: features 0..4 matter, x should be near 0.3.
Evaluation toy_eval(const Configuration& c, std::size_t p) {
    Evaluation e;
    e.mask = *c.mask;
    double missing = 0;
    for (std::size_t j = 0; j < 5; ++j) missing += e.mask[j] ? 0 : 1;
    const double noise = static_cast<double>(e.mask.weight() - (5 - missing)) / static_cast<double>(p);
    e.objectives.perf = std::clamp(0.3 * std::abs(c.hyperparams[0] - 0.3) + 0.1 * missing + 0.1 * noise +
                                       0.01 * c.hyperparams[1] / 10.0,
                                   0.0, 1.0);
    e.objectives.cost = static_cast<double>(e.mask.weight()) / static_cast<double>(p);
    return e;
}

struct ToyProblem {
    SearchSpace space = toy_space();
    FilterMatrix filters;
    Problem problem;

    explicit ToyProblem(std::size_t p = 20, std::size_t workers = 1) : filters(toy_filters(p, 3)) {
        problem.space = &space;
        problem.p = p;
        problem.filters = &filters;
        problem.evaluate = [p](const Configuration& c) { return toy_eval(c, p); };
        problem.workers = workers;
    }
};

double mean_weight_after(const std::function<FeatureMask(Rng&)>& mutate, int trials, std::uint64_t seed,
                         double* stderr_out) {
    Rng rng(seed);
    double sum = 0, sq = 0;
    for (int t = 0; t < trials; ++t) {
        const double w = static_cast<double>(mutate(rng).weight());
        sum += w;
        sq += w * w;
    }
    const double mean = sum / trials;
    *stderr_out = std::sqrt((sq / trials - mean * mean) / trials);
    return mean;
}

FeatureMask mask_of_weight(std::size_t p, std::size_t s) {
    FeatureMask m(p);
    for (std::size_t j = 0; j < s; ++j) m.bits[j] = 1;
    return m;
}

}  // namespace

TEST_CASE("truncated geometric distribution") {
    const auto pmf = truncated_geometric_pmf(2, 0.5);
    CHECK(pmf[0] == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
    CHECK(pmf[1] == doctest::Approx(2.0 / 7.0).epsilon(1e-15));
    CHECK(pmf[2] == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
    CHECK(truncated_geometric_pmf(10, 1.0 - 1e-9)[0] > 1.0 - 1e-8);
    CHECK_THROWS_AS(truncated_geometric_pmf(5, 1.0), Error);
    CHECK_THROWS_AS(truncated_geometric_pmf(5, 0.0), Error);

    SUBCASE("empirical frequencies match the pmf") {
        Rng rng(1);
        const std::size_t p = 30;
        const double rho = 0.15;
        const auto exact = truncated_geometric_pmf(p, rho);
        std::vector<double> counts(p + 1, 0.0);
        for (int t = 0; t < 100000; ++t) counts[sample_truncated_geometric(p, rho, rng)] += 1;
        double worst = 0;
        for (std::size_t s = 0; s <= p; ++s) worst = std::max(worst, std::abs(counts[s] / 1e5 - exact[s]));
        CHECK(worst < 0.01);
    }
}

TEST_CASE("masks with a fixed weight are uniform subsets") {
    Rng rng(5);
    std::vector<double> hits(10, 0);
    for (int t = 0; t < 20000; ++t) {
        const auto m = sample_mask_with_weight(10, 3, rng);
        CHECK(m.weight() == 3);
        for (std::size_t j = 0; j < 10; ++j) hits[j] += m[j];
    }
    for (double h : hits) CHECK(std::abs(h / 20000 - 0.3) < 0.015);
    CHECK_THROWS_AS(sample_mask_with_weight(3, 4, rng), Error);
}

TEST_CASE("filter inclusion probability") {
    for (std::size_t p : {8u, 50u, 100u})
        for (std::size_t s = 0; s <= p; s += 3)
            CHECK(filter_inclusion_probability(0.5, s, p) ==
                  doctest::Approx((s + 1.0) / (p + 2.0)).epsilon(1e-14));
    CHECK(filter_inclusion_probability(1.0, 4, 20) == 1.0);
    CHECK(filter_inclusion_probability(0.0, 4, 20) == 0.0);
}

TEST_CASE("init_mask") {
    Rng rng(7);
    SUBCASE("geometric weights follow the truncated geometric pmf") {
        const std::size_t p = 100;
        const double rho = 0.1;
        const auto exact = truncated_geometric_pmf(p, rho);
        std::vector<double> counts(p + 1, 0);
        for (int t = 0; t < 10000; ++t) counts[init_mask({MaskInitKind::geometric, rho}, p, nullptr, rng).mask.weight()] += 1;
        double worst = 0;
        for (std::size_t s = 0; s <= p; ++s) worst = std::max(worst, std::abs(counts[s] / 1e4 - exact[s]));
        CHECK(worst < 0.01);
    }
    SUBCASE("naive Bernoulli averages half the features") {
        double total = 0;
        for (int t = 0; t < 2000; ++t) total += init_mask({MaskInitKind::bernoulli_naive, 0.5}, 40, nullptr, rng).mask.weight();
        CHECK(std::abs(total / 2000 - 20.0) < 0.5);
    }
    SUBCASE("uniform count covers every weight") {
        std::vector<int> seen(11, 0);
        for (int t = 0; t < 3000; ++t) ++seen[init_mask({MaskInitKind::uniform_count, 0.5}, 10, nullptr, rng).mask.weight()];
        for (int c : seen) CHECK(std::abs(c / 3000.0 - 1.0 / 11.0) < 0.02);
    }
    SUBCASE("filter ensemble needs filters and returns simplex weights") {
        CHECK_THROWS_AS(init_mask({MaskInitKind::filter_ensemble, 0.5}, 20, nullptr, rng), Error);
        const auto fm = toy_filters(20, 1);
        const auto r = init_mask({MaskInitKind::filter_ensemble, 0.2}, 20, &fm, rng);
        REQUIRE(r.weights.has_value());
        CHECK(is_simplex(*r.weights, 1e-12));
        CHECK(r.mask.size() == 20);
    }
}

TEST_CASE("Hamming-weight preserving mutation") {
    CHECK((3 + 1.0) / (8 + 2.0) == 0.4);
    for (auto [p, s, pi] : {std::tuple{100u, 20u, 0.1}, std::tuple{8u, 0u, 0.2}, std::tuple{50u, 5u, 0.05}}) {
        const auto m = mask_of_weight(p, s);
        const double expected = (1 - 2 * pi) * s + 2 * pi * p * (s + 1.0) / (p + 2.0);
        double se = 0;
        const double got = mean_weight_after([&](Rng& r) { return hw_preserving_mutate(m, pi, r); }, 100000, p + s, &se);
        CHECK(std::abs(got - expected) <= 3 * se);
        CHECK(std::abs(got - expected) <= 0.5);
    }
    SUBCASE("an empty mask grows by 2 pi p / (p + 2) on average") {
        const auto m = FeatureMask(8);
        double se = 0;
        const double got = mean_weight_after([&](Rng& r) { return hw_preserving_mutate(m, 0.25, r); }, 100000, 3, &se);
        CHECK(std::abs(got - 2 * 0.25 * 8 * 0.1) <= 3 * se);
    }
}

TEST_CASE("filter-ensemble mutation") {
    SUBCASE("uniform scores reproduce the Hamming-weight operator") {
        const std::size_t p = 60, s = 12;
        const auto m = mask_of_weight(p, s);
        const std::vector<double> half(p, 0.5);
        std::vector<double> ha(p + 1, 0), hb(p + 1, 0);
        Rng ra(11), rb(12);
        for (int t = 0; t < 10000; ++t) {
            ha[filter_ensemble_mutate(m, half, 0.1, ra).weight()] += 1;
            hb[hw_preserving_mutate(m, 0.1, rb).weight()] += 1;
        }
        CHECK(oracle::two_sample_chi_square(ha, hb).p_value > 0.01);
        double se = 0;
        const double got =
            mean_weight_after([&](Rng& r) { return filter_ensemble_mutate(m, half, 0.1, r); }, 100000, 9, &se);
        const double expected = 0.8 * s + 0.2 * p * (s + 1.0) / (p + 2.0);
        CHECK(std::abs(got - expected) <= 1.0);
    }
    SUBCASE("score endpoints force the redraw") {
        std::vector<double> ef(10, 0.0);
        ef[0] = 1.0;
        Rng rng(2);
        const auto m = mask_of_weight(10, 4);
        for (int t = 0; t < 100; ++t) {
            // pi = 0.5 erases every bit.
            const auto out = filter_ensemble_mutate(m, ef, 0.5, rng);
            CHECK(out.selected() == std::vector<std::size_t>{0});
        }
        CHECK_THROWS_AS(filter_ensemble_mutate(m, std::vector<double>(3, 0.5), 0.1, rng), Error);
    }
}

TEST_CASE("simulated binary crossover") {
    CHECK(sbx_beta(0.5, 5.0) == 1.0);
    const auto id = sbx_children(0.2, 0.8, 0.5, 5.0);
    CHECK(id.c1 == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(id.c2 == doctest::Approx(0.8).epsilon(1e-15));

    Rng rng(4);
    for (int t = 0; t < 10000; ++t) {
        const double x1 = rng.uniform(-5, 5), x2 = rng.uniform(-5, 5), u = rng.uniform();
        const auto c = sbx_children(x1, x2, u, 5.0);
        CHECK(std::abs((c.c1 + c.c2) - (x1 + x2)) <= 1e-14 * (1 + std::abs(x1) + std::abs(x2)));
    }
    SUBCASE("children of (0.2, 0.8) average one half") {
        double sum = 0;
        for (int t = 0; t < 100000; ++t) {
            const auto c = sbx_crossover(0.2, 0.8, 5.0, 0.0, 1.0, rng);
            CHECK((c.c1 >= 0.0 && c.c1 <= 1.0 && c.c2 >= 0.0 && c.c2 <= 1.0));
            sum += c.c1 + c.c2;
        }
        CHECK(std::abs(sum / 200000 - 0.5) < 0.01);
    }
    SUBCASE("integer variant rounds into bounds") {
        for (int t = 0; t < 1000; ++t) {
            const auto c = sbx_crossover(1, 10, 5.0, 1, 10, rng, true);
            CHECK(c.c1 == std::round(c.c1));
            CHECK(c.c2 >= 1);
            CHECK(c.c2 <= 10);
        }
    }
}

TEST_CASE("uniform crossover") {
    Rng rng(3);
    const std::vector<int> a{1, 1, 1, 1}, same = a;
    auto [c1, c2] = uniform_crossover(a, same, 0.5, rng);
    CHECK(c1 == a);
    CHECK(c2 == a);
    const std::vector<std::uint8_t> x{1, 0, 1, 0, 1, 1, 0, 0}, y{0, 1, 0, 1, 0, 0, 1, 1};
    for (int t = 0; t < 100; ++t) {
        auto [d1, d2] = uniform_crossover(x, y, 0.5, rng);
        int total = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            CHECK(d1[i] != d2[i]);
            CHECK(std::multiset<int>{d1[i], d2[i]} == std::multiset<int>{x[i], y[i]});
            total += d1[i] + d2[i];
        }
        CHECK(total == 8);
    }
}

TEST_CASE("Gaussian mutation") {
    Rng rng(6);
    for (int t = 0; t < 1000; ++t) CHECK(gaussian_mutate(0.4, 1e-12, 0, 1, 1.0, rng) == doctest::Approx(0.4).epsilon(1e-9));
    for (int t = 0; t < 10000; ++t) {
        const double v = gaussian_mutate(0.95, 0.5, 0, 1, 1.0, rng);
        CHECK((v >= 0.0 && v <= 1.0));
    }
    CHECK_THROWS_AS(gaussian_mutate(0.5, 0.0, 0, 1, 0.1, rng), Error);

    SUBCASE("mean displacement is gene rate times the folded-normal mean") {
        const double sigma = 0.05;
        double total = 0;
        for (int t = 0; t < 100000; ++t) total += std::abs(gaussian_mutate(0.5, sigma, 0, 1, 0.1, rng) - 0.5);
        const double expected = 0.1 * sigma * std::sqrt(2.0 / M_PI);
        CHECK(total / 100000 == doctest::Approx(expected).epsilon(0.05));
    }
    SUBCASE("integer variant") {
        for (int t = 0; t < 1000; ++t) {
            const double v = gaussian_mutate(5, 3.0, 1, 10, 1.0, rng, true);
            CHECK(v == std::round(v));
        }
    }
}

TEST_CASE("self-adaptation stays inside its clamps") {
    const auto space = toy_space();
    const auto b = strategy_bounds(space, 40);
    CHECK(b.p_cat_min == doctest::Approx(1.0 / 3.0));
    CHECK(b.p_mask_min == doctest::Approx(1.0 / 40.0));
    auto s = initial_strategy(space, 40);
    CHECK(s.sigma.size() == 2);
    CHECK(s.p_mask == doctest::Approx(0.05));
    Rng rng(10);
    for (int t = 0; t < 20000; ++t) {
        self_adapt(s, b, rng);
        for (double sg : s.sigma) CHECK((sg >= b.sigma_min && sg <= b.sigma_max));
        CHECK((s.p_cat >= b.p_cat_min && s.p_cat <= b.p_max));
        CHECK((s.p_mask >= b.p_mask_min && s.p_mask <= b.p_max));
    }
}

TEST_CASE("nondominated sort against brute force") {
    Rng rng(13);
    for (int t = 0; t < 100; ++t) {
        const auto n = static_cast<std::size_t>(rng.integer(1, 150));
        std::vector<Point2> pts(n);
        for (auto& p : pts) p = {std::round(rng.uniform() * 10) / 10, std::round(rng.uniform() * 10) / 10};
        const auto got = nondominated_sort(pts);
        const auto want = oracle::fronts({pts.begin(), pts.end()});
        REQUIRE(got.size() == want.size());
        for (std::size_t f = 0; f < got.size(); ++f)
            CHECK(std::set<std::size_t>(got[f].begin(), got[f].end()) == want[f]);
    }
}

TEST_CASE("crowding distance") {
    const auto inf = std::numeric_limits<double>::infinity();
    const auto d = crowding_distance(std::vector<Point2>{{0, 1}, {0.5, 0.5}, {1, 0}});
    CHECK(d[0] == inf);
    CHECK(d[2] == inf);
    CHECK(d[1] == doctest::Approx(2.0));
    const auto two = crowding_distance(std::vector<Point2>{{0, 1}, {1, 0}});
    CHECK(two == std::vector<double>{inf, inf});
    const auto dup = crowding_distance(std::vector<Point2>{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}});
    for (double v : dup) CHECK(!std::isnan(v));
    CHECK(std::isfinite(dup[1]));
}

TEST_CASE("survival selection") {
    auto ind = [](double perf, double cost, std::size_t id) {
        Individual i;
        i.objectives = {perf, cost};
        i.eval_index = id;
        return i;
    };
    SUBCASE("elitism keeps parents that dominate every offspring") {
        std::vector<Individual> pool;
        for (std::size_t i = 0; i < 10; ++i) pool.push_back(ind(0.1 * i, 0.9 - 0.1 * i, i));
        for (std::size_t i = 0; i < 5; ++i) pool.push_back(ind(0.95, 0.95, 100 + i));
        const auto out = survival_select(pool, 10);
        REQUIRE(out.size() == 10);
        for (std::size_t i = 0; i < 10; ++i) CHECK(out[i].eval_index == i);
        for (const auto& o : out) CHECK(o.rank == 1);
    }
    SUBCASE("truncation by crowding keeps the extremes") {
        std::vector<Individual> pool;
        for (std::size_t i = 0; i < 11; ++i) pool.push_back(ind(0.1 * i, 1.0 - 0.1 * i, i));
        const auto out = survival_select(pool, 4);
        std::set<std::size_t> ids;
        for (const auto& o : out) ids.insert(o.eval_index);
        CHECK(ids.count(0) == 1);
        CHECK(ids.count(10) == 1);
        CHECK(out.size() == 4);
    }
}

TEST_CASE("variants") {
    CHECK(ga_variant_from_string("ablation-5") == GaVariant::ga_mo);
    CHECK(ga_variant_from_string("ablation-6") == GaVariant::ga_mo_fe);
    CHECK(!ga_variant_from_string("BO-MO").has_value());
    CHECK(operators_for(GaVariant::ablation1, 0.3).init.kind == MaskInitKind::bernoulli_naive);
    CHECK(operators_for(GaVariant::ablation3, 0.3).init.kind == MaskInitKind::geometric);
    CHECK(operators_for(GaVariant::ablation4, 0.3).mutation == MaskMutationKind::hamming_weight);
    CHECK(operators_for(GaVariant::ga_mo, 0.3).init.kind == MaskInitKind::filter_ensemble);
    CHECK(operators_for(GaVariant::ga_mo_fe, 0.3).mutation == MaskMutationKind::filter_ensemble);
    CHECK(operators_for(GaVariant::ga_mo_fe, 0.3).init.rho == 0.3);
    for (auto v : {GaVariant::ablation1, GaVariant::ablation2, GaVariant::ablation3, GaVariant::ablation4,
                   GaVariant::ga_mo, GaVariant::ga_mo_fe, GaVariant::ga_mo_fe_nj})
        CHECK(ga_variant_from_string(ga_variant_name(v)) == v);
    const auto ops = operators_for(GaVariant::ga_mo_fe, 0.3);
    CHECK(ops.mu == 80);
    CHECK(ops.offspring == 15);
    CHECK(ops.p_crossover == 0.7);
    CHECK(ops.p_mutation == 0.3);
    CHECK(ops.gene_p == 0.1);
    CHECK(ops.eta == 5.0);
}

TEST_CASE("NSGA-II engine") {
    ToyProblem toy;
    const auto ops = operators_for(GaVariant::ga_mo_fe, 0.2);

    SUBCASE("budget equal to the population evaluates only the initial population") {
        const auto r = run_nsga2(toy.problem, ops, 80, 1);
        CHECK(r.evaluations == 80);
        CHECK(r.trace.generations == 0);
        CHECK(r.final_population.individuals.size() == 80);
        CHECK_THROWS_AS(run_nsga2(toy.problem, ops, 79, 1), Error);
    }
    SUBCASE("2000 evaluations give 128 generations") {
        const auto r = run_nsga2(toy.problem, ops, 2000, 2);
        CHECK(r.evaluations == 2000);
        CHECK(r.trace.size() == 2000);
        CHECK(r.trace.generations == 128);
        CHECK(ga_generation_count(2000, 80, 15) == 128);
        std::vector<std::size_t> ids;
        for (const auto& rec : r.trace.records) ids.push_back(rec.eval_index);
        std::vector<std::size_t> want(2000);
        std::iota(want.begin(), want.end(), std::size_t{0});
        CHECK(ids == want);
        CHECK(r.trace.records.back().generation == 128);
    }
    SUBCASE("a partial last generation spends the budget exactly") {
        const auto r = run_nsga2(toy.problem, ops, 80 + 15 * 3 + 7, 3);
        CHECK(r.evaluations == 132);
        CHECK(r.trace.generations == 4);
    }
    SUBCASE("operators off: offspring are copies of parents") {
        auto copy_ops = ops;
        copy_ops.p_crossover = 0.0;
        copy_ops.p_mutation = 0.0;
        const auto r = run_nsga2(toy.problem, copy_ops, 80 + 15, 4);
        std::vector<Configuration> parents;
        for (const auto& rec : r.trace.records)
            if (rec.generation == 0) parents.push_back(rec.config);
        for (const auto& rec : r.trace.records) {
            if (rec.generation != 1) continue;
            CHECK(std::find(parents.begin(), parents.end(), rec.config) != parents.end());
        }
    }
    SUBCASE("population size, elitism and report") {
        GaResult res;
        GaContext ctx{&toy.problem, &ops, 9, &res.trace, 0, 0.0};
        Population pop = initial_population(ctx);
        for (int g = 0; g < 20; ++g) {
            std::vector<Individual> elite;
            for (const auto& i : pop.individuals)
                if (i.rank == 1 && std::isinf(i.crowding)) elite.push_back(i);
            Population next = nsga2_step(pop, ctx, 15);
            CHECK(next.individuals.size() == 80);
            CHECK(next.generation == pop.generation + 1);
            for (const auto& e : elite) {
                const bool kept = std::any_of(next.individuals.begin(), next.individuals.end(), [&](const Individual& n) {
                    return n.eval_index == e.eval_index ||
                           (n.objectives.perf <= e.objectives.perf && n.objectives.cost <= e.objectives.cost);
                });
                CHECK(kept);
            }
            pop = std::move(next);
        }
        res.final_population = pop;
        res.evaluations = ctx.next_eval;
        const auto rep = ga_pareto_report(res);
        CHECK(!rep.points.empty());
        for (const auto& a : rep.points) {
            for (const auto& b : rep.points) CHECK(!dominates(to_point(b.optim), to_point(a.optim)));
            CHECK(std::any_of(pop.individuals.begin(), pop.individuals.end(),
                              [&](const Individual& i) { return i.eval_index == a.eval_index; }));
        }
    }
    SUBCASE("worker count does not change the trace") {
        ToyProblem par(20, 3);
        const auto a = run_nsga2(toy.problem, ops, 300, 5);
        const auto b = run_nsga2(par.problem, ops, 300, 5);
        REQUIRE(a.trace.size() == b.trace.size());
        for (std::size_t i = 0; i < a.trace.size(); ++i) {
            CHECK(a.trace.records[i].config == b.trace.records[i].config);
            CHECK(a.trace.records[i].objectives == b.trace.records[i].objectives);
        }
    }
    SUBCASE("frozen hyperparameters never change") {
        auto nj = operators_for(GaVariant::ga_mo_fe_nj, 0.2);
        nj.frozen_hyperparams = HyperValues{0.3, 4, 2};
        const auto r = run_nsga2(toy.problem, nj, 200, 6);
        for (const auto& rec : r.trace.records) CHECK(rec.config.hyperparams == *nj.frozen_hyperparams);
    }
    SUBCASE("filter variants need a filter matrix") {
        auto bare = toy.problem;
        bare.filters = nullptr;
        CHECK_THROWS_AS(run_nsga2(bare, ops, 100, 1), Error);
        CHECK_NOTHROW(run_nsga2(bare, operators_for(GaVariant::ablation4, 0.2), 100, 1));
    }
}
