#include "mofs/evo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "mofs/error.hpp"
#include "mofs/parallel.hpp"

namespace mofs {

Problem Problem::from(const Evaluator& ev, std::size_t workers) {
    Problem p;
    p.space = &ev.space();
    p.p = ev.data().cols();
    p.filters = ev.filters();
    p.evaluate = [&ev](const Configuration& c) { return ev.evaluate(c); };
    p.workers = workers;
    return p;
}

// ---------------------------------------------------------------------------
// Masks

std::vector<double> truncated_geometric_pmf(std::size_t p, double rho) {
    require(rho > 0.0 && rho < 1.0, "geometric success probability must lie in (0,1)");
    std::vector<double> pmf(p + 1);
    double mass = rho, z = 0.0;
    for (std::size_t s = 0; s <= p; ++s) {
        pmf[s] = mass;
        z += mass;
        mass *= 1.0 - rho;
    }
    for (auto& v : pmf) v /= z;
    return pmf;
}

std::size_t sample_truncated_geometric(std::size_t p, double rho, Rng& rng) {
    const auto pmf = truncated_geometric_pmf(p, rho);
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t s = 0; s <= p; ++s) {
        acc += pmf[s];
        if (u < acc) return s;
    }
    return p;
}

FeatureMask sample_mask_with_weight(std::size_t p, std::size_t weight, Rng& rng) {
    require(weight <= p, "mask weight exceeds p");
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first `weight` slots are a uniform subset.
    for (std::size_t i = 0; i < weight; ++i) {
        const std::size_t j = i + rng.index(p - i);
        std::swap(idx[i], idx[j]);
    }
    FeatureMask m(p);
    for (std::size_t i = 0; i < weight; ++i) m.bits[idx[i]] = 1;
    return m;
}

double filter_inclusion_probability(double ef, std::size_t weight, std::size_t p) {
    const double s = static_cast<double>(weight);
    const double pp = static_cast<double>(p);
    const double v = ef * (s + 1.0) / (ef * s + (1.0 - ef) * (pp - s) + 1.0);
    return std::clamp(v, 0.0, 1.0);
}

MaskInit init_mask(const MaskInitStrategy& st, std::size_t p, const FilterMatrix* filters, Rng& rng) {
    MaskInit out;
    switch (st.kind) {
    case MaskInitKind::bernoulli_naive: {
        out.mask = FeatureMask(p);
        for (auto& b : out.mask.bits) b = rng.bernoulli(0.5) ? 1 : 0;
        break;
    }
    case MaskInitKind::uniform_count: {
        const auto s = static_cast<std::size_t>(rng.integer(0, static_cast<std::int64_t>(p)));
        out.mask = sample_mask_with_weight(p, s, rng);
        break;
    }
    case MaskInitKind::geometric: {
        const auto s = sample_truncated_geometric(p, st.rho, rng);
        out.mask = sample_mask_with_weight(p, s, rng);
        break;
    }
    case MaskInitKind::filter_ensemble: {
        require(filters != nullptr, "filter-ensemble initialization needs a filter matrix");
        require(filters->features() == p, "filter matrix does not match p");
        const auto s = sample_truncated_geometric(p, st.rho, rng);
        auto w = rng.simplex(filters->filters());
        const auto ef = ensemble_score(*filters, w);
        out.mask = FeatureMask(p);
        for (std::size_t j = 0; j < p; ++j) out.mask.bits[j] = rng.bernoulli(filter_inclusion_probability(ef[j], s, p));
        out.weights = std::move(w);
        break;
    }
    }
    return out;
}

FeatureMask bitflip_mutate(const FeatureMask& mask, double pi, Rng& rng) {
    FeatureMask out = mask;
    for (auto& b : out.bits)
        if (rng.bernoulli(pi)) b = b ? 0 : 1;
    return out;
}

FeatureMask hw_preserving_mutate(const FeatureMask& mask, double pi, Rng& rng) {
    const std::size_t p = mask.size();
    const double redraw = (static_cast<double>(mask.weight()) + 1.0) / (static_cast<double>(p) + 2.0);
    FeatureMask out = mask;
    const double erase = std::min(1.0, 2.0 * pi);
    for (auto& b : out.bits)
        if (rng.bernoulli(erase)) b = rng.bernoulli(redraw) ? 1 : 0;
    return out;
}

FeatureMask filter_ensemble_mutate(const FeatureMask& mask, std::span<const double> ef, double pi, Rng& rng) {
    const std::size_t p = mask.size();
    require(ef.size() == p, "ensemble score length does not match the mask");
    const std::size_t s = mask.weight();
    FeatureMask out = mask;
    const double erase = std::min(1.0, 2.0 * pi);
    for (std::size_t j = 0; j < p; ++j)
        if (rng.bernoulli(erase)) out.bits[j] = rng.bernoulli(filter_inclusion_probability(ef[j], s, p)) ? 1 : 0;
    return out;
}

// ---------------------------------------------------------------------------
// Hyperparameter operators

double sbx_beta(double u, double eta) {
    const double e = 1.0 / (eta + 1.0);
    return u <= 0.5 ? std::pow(2.0 * u, e) : std::pow(1.0 / (2.0 * (1.0 - u)), e);
}

SbxChildren sbx_children(double x1, double x2, double u, double eta) {
    const double beta = sbx_beta(u, eta);
    return {0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2), 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2)};
}

SbxChildren sbx_crossover(double x1, double x2, double eta, double lo, double hi, Rng& rng, bool integer) {
    auto c = sbx_children(x1, x2, rng.uniform(), eta);
    c.c1 = std::clamp(c.c1, lo, hi);
    c.c2 = std::clamp(c.c2, lo, hi);
    if (integer) {
        c.c1 = std::clamp(round_half_up(c.c1), lo, hi);
        c.c2 = std::clamp(round_half_up(c.c2), lo, hi);
    }
    return c;
}

double gaussian_mutate(double value, double sigma, double lo, double hi, double per_gene_p, Rng& rng, bool integer) {
    require(sigma > 0.0, "mutation step size must be positive");
    if (!rng.bernoulli(per_gene_p)) return value;
    double v = std::clamp(value + sigma * rng.normal(), lo, hi);
    if (integer) v = std::clamp(round_half_up(v), lo, hi);
    return v;
}

StrategyBounds strategy_bounds(const SearchSpace& space, std::size_t p) {
    StrategyBounds b;
    b.p_cat_min = 1.0 / static_cast<double>(std::max<std::size_t>(2, space.size()));
    b.p_mask_min = 1.0 / static_cast<double>(std::max<std::size_t>(2, p));
    return b;
}

StrategyParams initial_strategy(const SearchSpace& space, std::size_t p) {
    const auto b = strategy_bounds(space, p);
    StrategyParams s;
    for (const auto& d : space.params())
        if (d.kind != ParamKind::categorical) s.sigma.push_back(0.1);
    s.p_cat = std::clamp(0.25, b.p_cat_min, b.p_max);
    s.p_mask = std::clamp(2.0 / static_cast<double>(std::max<std::size_t>(p, 1)), b.p_mask_min, b.p_max);
    return s;
}

namespace {
double logit(double p) { return std::log(p / (1.0 - p)); }
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

void self_adapt(StrategyParams& s, const StrategyBounds& b, Rng& rng) {
    const double d = static_cast<double>(s.sigma.size() + 2);
    const double tau = 1.0 / std::sqrt(2.0 * d);
    for (auto& sg : s.sigma) sg = std::clamp(sg * std::exp(tau * rng.normal()), b.sigma_min, b.sigma_max);
    s.p_cat = std::clamp(logistic(logit(s.p_cat) + tau * rng.normal()), b.p_cat_min, b.p_max);
    s.p_mask = std::clamp(logistic(logit(s.p_mask) + tau * rng.normal()), b.p_mask_min, b.p_max);
}

// ---------------------------------------------------------------------------
// Sorting

std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const Point2> obj) {
    const std::size_t n = obj.size();
    std::vector<std::vector<std::size_t>> dominated_by_me(n);
    std::vector<std::size_t> dom_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(obj[i], obj[j])) {
                dominated_by_me[i].push_back(j);
                ++dom_count[j];
            } else if (dominates(obj[j], obj[i])) {
                dominated_by_me[j].push_back(i);
                ++dom_count[i];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (dom_count[i] == 0) current.push_back(i);
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto i : current)
            for (auto j : dominated_by_me[i])
                if (--dom_count[j] == 0) next.push_back(j);
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

std::vector<double> crowding_distance(std::span<const Point2> front) {
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0) return dist;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> order(n);
    for (std::size_t m = 0; m < 2; ++m) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return front[a][m] < front[b][m]; });
        dist[order.front()] = inf;
        dist[order.back()] = inf;
        const double range = front[order.back()][m] - front[order.front()][m];
        if (range <= 0.0) continue;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            dist[order[i]] += (front[order[i + 1]][m] - front[order[i - 1]][m]) / range;
        }
    }
    return dist;
}

void assign_rank_and_crowding(std::vector<Individual>& pop) {
    std::vector<Point2> pts;
    pts.reserve(pop.size());
    for (const auto& ind : pop) pts.push_back(to_point(ind.objectives));
    const auto fronts = nondominated_sort(pts);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        std::vector<Point2> fp;
        for (auto i : fronts[f]) fp.push_back(pts[i]);
        const auto cd = crowding_distance(fp);
        for (std::size_t t = 0; t < fronts[f].size(); ++t) {
            pop[fronts[f][t]].rank = f + 1;
            pop[fronts[f][t]].crowding = cd[t];
        }
    }
}

std::vector<Individual> survival_select(std::vector<Individual> pool, std::size_t mu) {
    if (pool.size() <= mu) {
        assign_rank_and_crowding(pool);
        return pool;
    }
    std::vector<Point2> pts;
    for (const auto& ind : pool) pts.push_back(to_point(ind.objectives));
    const auto fronts = nondominated_sort(pts);
    std::vector<std::size_t> keep;
    for (const auto& f : fronts) {
        if (keep.size() + f.size() <= mu) {
            keep.insert(keep.end(), f.begin(), f.end());
            if (keep.size() == mu) break;
            continue;
        }
        std::vector<Point2> fp;
        for (auto i : f) fp.push_back(pts[i]);
        const auto cd = crowding_distance(fp);
        std::vector<std::size_t> order(f.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cd[a] > cd[b]; });
        for (std::size_t t = 0; keep.size() < mu; ++t) keep.push_back(f[order[t]]);
        break;
    }
    std::sort(keep.begin(), keep.end());
    std::vector<Individual> out;
    out.reserve(mu);
    for (auto i : keep) out.push_back(std::move(pool[i]));
    assign_rank_and_crowding(out);
    return out;
}

// ---------------------------------------------------------------------------
// Variants

std::optional<GaVariant> ga_variant_from_string(const std::string& s) {
    if (s == "ablation-1") return GaVariant::ablation1;
    if (s == "ablation-2") return GaVariant::ablation2;
    if (s == "ablation-3") return GaVariant::ablation3;
    if (s == "ablation-4") return GaVariant::ablation4;
    if (s == "ablation-5" || s == "GA-MO") return GaVariant::ga_mo;
    if (s == "ablation-6" || s == "GA-MO-FE") return GaVariant::ga_mo_fe;
    if (s == "GA-MO-FE-NJ") return GaVariant::ga_mo_fe_nj;
    return std::nullopt;
}

std::string ga_variant_name(GaVariant v) {
    switch (v) {
    case GaVariant::ablation1: return "ablation-1";
    case GaVariant::ablation2: return "ablation-2";
    case GaVariant::ablation3: return "ablation-3";
    case GaVariant::ablation4: return "ablation-4";
    case GaVariant::ga_mo: return "GA-MO";
    case GaVariant::ga_mo_fe: return "GA-MO-FE";
    case GaVariant::ga_mo_fe_nj: return "GA-MO-FE-NJ";
    }
    return "?";
}

GaOperators operators_for(GaVariant v, double rho) {
    GaOperators ops;
    ops.init.rho = rho;
    switch (v) {
    case GaVariant::ablation1:
        ops.init.kind = MaskInitKind::bernoulli_naive;
        ops.mutation = MaskMutationKind::bitflip;
        break;
    case GaVariant::ablation2:
        ops.init.kind = MaskInitKind::uniform_count;
        ops.mutation = MaskMutationKind::bitflip;
        break;
    case GaVariant::ablation3:
        ops.init.kind = MaskInitKind::geometric;
        ops.mutation = MaskMutationKind::bitflip;
        break;
    case GaVariant::ablation4:
        ops.init.kind = MaskInitKind::geometric;
        ops.mutation = MaskMutationKind::hamming_weight;
        break;
    case GaVariant::ga_mo:
        ops.init.kind = MaskInitKind::filter_ensemble;
        ops.mutation = MaskMutationKind::hamming_weight;
        break;
    case GaVariant::ga_mo_fe:
    case GaVariant::ga_mo_fe_nj:
        ops.init.kind = MaskInitKind::filter_ensemble;
        ops.mutation = MaskMutationKind::filter_ensemble;
        break;
    }
    return ops;
}

// ---------------------------------------------------------------------------
// Engine

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

bool better(const Individual& a, const Individual& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    return a.crowding > b.crowding;
}

std::size_t tournament(const std::vector<Individual>& pop, Rng& rng) {
    const std::size_t i = rng.index(pop.size());
    if (pop.size() == 1) return i;
    std::size_t j = rng.index(pop.size() - 1);
    if (j >= i) ++j;
    return better(pop[j], pop[i]) ? j : i;
}

bool evolves_hyperparams(const GaOperators& ops) { return !ops.frozen_hyperparams.has_value(); }

void crossover(Configuration& a, Configuration& b, const SearchSpace& space, const GaOperators& ops, Rng& rng) {
    if (evolves_hyperparams(ops)) {
        for (std::size_t i = 0; i < space.size(); ++i) {
            const auto& d = space[i];
            if (d.kind == ParamKind::categorical) {
                if (rng.bernoulli(0.5)) std::swap(a.hyperparams[i], b.hyperparams[i]);
                continue;
            }
            const auto c = sbx_crossover(encode_unit(d, a.hyperparams[i]), encode_unit(d, b.hyperparams[i]), ops.eta,
                                         0.0, 1.0, rng);
            a.hyperparams[i] = decode_unit(d, c.c1);
            b.hyperparams[i] = decode_unit(d, c.c2);
        }
    }
    auto [ma, mb] = uniform_crossover(a.mask->bits, b.mask->bits, 0.5, rng);
    a.mask->bits = std::move(ma);
    b.mask->bits = std::move(mb);
    if (a.weights && b.weights) {
        for (std::size_t m = 0; m < a.weights->size(); ++m) {
            const double mean = 0.5 * ((*a.weights)[m] + (*b.weights)[m]);
            (*a.weights)[m] = (*b.weights)[m] = mean;
        }
        repair_simplex(*a.weights);
        repair_simplex(*b.weights);
    }
    if (a.strategy && b.strategy) {
        auto& sa = *a.strategy;
        auto& sb = *b.strategy;
        for (std::size_t i = 0; i < sa.sigma.size(); ++i) sa.sigma[i] = sb.sigma[i] = 0.5 * (sa.sigma[i] + sb.sigma[i]);
        sa.p_cat = sb.p_cat = 0.5 * (sa.p_cat + sb.p_cat);
        sa.p_mask = sb.p_mask = 0.5 * (sa.p_mask + sb.p_mask);
    }
}

void mutate(Configuration& c, const Problem& prob, const GaOperators& ops, const StrategyBounds& bounds, Rng& rng) {
    auto& s = *c.strategy;
    self_adapt(s, bounds, rng);
    if (c.weights) {
        for (auto& w : *c.weights) w += ops.weight_sd * rng.normal();
        repair_simplex(*c.weights);
    }
    const auto& space = *prob.space;
    if (evolves_hyperparams(ops)) {
        std::size_t si = 0;
        for (std::size_t i = 0; i < space.size(); ++i) {
            const auto& d = space[i];
            if (d.kind == ParamKind::categorical) {
                if (d.levels.size() > 1 && rng.bernoulli(s.p_cat)) c.hyperparams[i] = static_cast<double>(rng.index(d.levels.size()));
                continue;
            }
            const double u = gaussian_mutate(encode_unit(d, c.hyperparams[i]), s.sigma[si++], 0.0, 1.0, ops.gene_p, rng);
            c.hyperparams[i] = decode_unit(d, u);
        }
    }
    switch (ops.mutation) {
    case MaskMutationKind::bitflip: *c.mask = bitflip_mutate(*c.mask, s.p_mask, rng); break;
    case MaskMutationKind::hamming_weight: *c.mask = hw_preserving_mutate(*c.mask, s.p_mask, rng); break;
    case MaskMutationKind::filter_ensemble: {
        require(prob.filters != nullptr && c.weights.has_value(), "filter-ensemble mutation needs filters and weights");
        const auto ef = ensemble_score(*prob.filters, *c.weights);
        *c.mask = filter_ensemble_mutate(*c.mask, ef, s.p_mask, rng);
        break;
    }
    }
}

void evaluate_all(std::vector<Individual>& inds, GaContext& ctx, std::size_t generation) {
    const auto& prob = *ctx.problem;
    std::vector<Evaluation> evs(inds.size());
    parallel_for(inds.size(), prob.workers, [&](std::size_t i) { evs[i] = prob.evaluate(inds[i].config); });
    for (std::size_t i = 0; i < inds.size(); ++i) {
        auto& ind = inds[i];
        ind.objectives = evs[i].objectives;
        ind.mask = std::move(evs[i].mask);
        ind.failed = evs[i].failed;
        ind.eval_index = ctx.next_eval++;
        if (ctx.trace) {
            TraceRecord r;
            r.eval_index = ind.eval_index;
            r.generation = generation;
            r.config = ind.config;
            r.mask = ind.mask;
            r.objectives = ind.objectives;
            r.failed = ind.failed;
            r.wall_time = now_seconds() - ctx.start_time;
            ctx.trace->records.push_back(std::move(r));
        }
    }
}

}  // namespace

Population initial_population(GaContext& ctx) {
    const auto& prob = *ctx.problem;
    const auto& ops = *ctx.ops;
    require(prob.space != nullptr && prob.evaluate, "GA problem needs a search space and an evaluator");
    Population pop;
    pop.individuals.resize(ops.mu);
    for (std::size_t i = 0; i < ops.mu; ++i) {
        Rng rng = Rng(ctx.seed).derive({0, i});
        auto& c = pop.individuals[i].config;
        c.hyperparams = ops.frozen_hyperparams ? *ops.frozen_hyperparams : sample_uniform(*prob.space, rng);
        auto init = init_mask(ops.init, prob.p, prob.filters, rng);
        c.mask = std::move(init.mask);
        if (init.weights) c.weights = std::move(init.weights);
        else if (ops.mutation == MaskMutationKind::filter_ensemble && prob.filters) c.weights = rng.simplex(prob.filters->filters());
        c.strategy = initial_strategy(ops.frozen_hyperparams ? SearchSpace{} : *prob.space, prob.p);
    }
    evaluate_all(pop.individuals, ctx, 0);
    assign_rank_and_crowding(pop.individuals);
    return pop;
}

Population nsga2_step(const Population& pop, GaContext& ctx, std::size_t n_offspring) {
    const auto& prob = *ctx.problem;
    const auto& ops = *ctx.ops;
    const std::size_t gen = pop.generation + 1;
    const auto bounds = strategy_bounds(ops.frozen_hyperparams ? SearchSpace{} : *prob.space, prob.p);

    std::vector<Individual> parents = pop.individuals;
    assign_rank_and_crowding(parents);

    Rng select_rng = Rng(ctx.seed).derive({gen, 0});
    const std::size_t pairs = (n_offspring + 1) / 2;
    std::vector<Individual> children;
    children.reserve(2 * pairs);
    for (std::size_t k = 0; k < pairs; ++k) {
        const auto ia = tournament(parents, select_rng);
        const auto ib = tournament(parents, select_rng);
        Rng rng = Rng(ctx.seed).derive({gen, k + 1});
        Configuration a = parents[ia].config, b = parents[ib].config;
        if (rng.bernoulli(ops.p_crossover)) crossover(a, b, *prob.space, ops, rng);
        for (auto* c : {&a, &b}) {
            if (rng.bernoulli(ops.p_mutation)) mutate(*c, prob, ops, bounds, rng);
        }
        children.emplace_back().config = std::move(a);
        if (children.size() < n_offspring) children.emplace_back().config = std::move(b);
    }
    evaluate_all(children, ctx, gen);

    std::vector<Individual> pool = std::move(parents);
    for (auto& c : children) pool.push_back(std::move(c));
    Population next;
    next.individuals = survival_select(std::move(pool), ops.mu);
    next.generation = gen;
    return next;
}

GaResult run_nsga2(const Problem& problem, const GaOperators& ops, std::size_t budget, std::uint64_t seed) {
    require(ops.mu >= 2, "population size must be at least 2");
    require(ops.offspring >= 1, "offspring count must be at least 1");
    require(budget >= ops.mu, "budget " + std::to_string(budget) + " cannot evaluate the initial population of " +
                                  std::to_string(ops.mu));
    if (ops.init.kind == MaskInitKind::filter_ensemble || ops.mutation == MaskMutationKind::filter_ensemble) {
        require(problem.filters != nullptr, "filter-ensemble GA variants need a filter matrix");
    }
    GaResult result;
    GaContext ctx{&problem, &ops, seed, &result.trace, 0, now_seconds()};
    Population pop = initial_population(ctx);
    while (ctx.next_eval < budget) {
        const std::size_t n = std::min(ops.offspring, budget - ctx.next_eval);
        pop = nsga2_step(pop, ctx, n);
    }
    result.trace.generations = pop.generation;
    result.final_population = std::move(pop);
    result.evaluations = ctx.next_eval;
    return result;
}

ParetoReport ga_pareto_report(const GaResult& result) {
    const auto& inds = result.final_population.individuals;
    std::vector<Point2> pts;
    for (const auto& ind : inds) pts.push_back(to_point(ind.objectives));
    ParetoReport rep;
    rep.source = ReportSource::optim;
    rep.eval_budget_at_report = result.evaluations;
    for (auto i : pareto_front(pts)) {
        rep.points.push_back({inds[i].config, inds[i].objectives, inds[i].mask, inds[i].eval_index});
    }
    return rep;
}

}  // namespace mofs
