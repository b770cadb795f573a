#include "mofs/mobo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "mofs/error.hpp"
#include "mofs/log.hpp"
#include "mofs/parallel.hpp"

namespace mofs {

BoSpace::BoSpace(const SearchSpace& space, FeatureMode mode, std::size_t n_filters, std::size_t p)
    : space_(&space), mode_(mode), n_filters_(n_filters), p_(p) {
    for (const auto& d : space.params()) levels_.push_back(d.kind == ParamKind::categorical ? d.levels.size() : 0);
    switch (mode) {
    case FeatureMode::ensemble:
        require(n_filters >= 1, "ensemble feature mode needs at least one filter");
        for (std::size_t m = 0; m < n_filters; ++m) levels_.push_back(0);
        levels_.push_back(0);
        break;
    case FeatureMode::individual:
        require(n_filters >= 1, "individual feature mode needs at least one filter");
        levels_.push_back(n_filters);
        levels_.push_back(0);
        break;
    case FeatureMode::full:
        require(p >= 1, "full feature mode needs the feature count");
        break;
    }
}

std::vector<double> BoSpace::encode(const Configuration& c) const {
    std::vector<double> x;
    x.reserve(levels_.size());
    const auto& sp = *space_;
    require(c.hyperparams.size() == sp.size(), "configuration does not match the search space");
    for (std::size_t i = 0; i < sp.size(); ++i)
        x.push_back(sp[i].kind == ParamKind::categorical ? c.hyperparams[i] : encode_unit(sp[i], c.hyperparams[i]));
    if (mode_ == FeatureMode::ensemble) {
        require(c.weights && c.weights->size() == n_filters_ && c.ffrac, "ensemble configuration is incomplete");
        x.insert(x.end(), c.weights->begin(), c.weights->end());
        x.push_back(*c.ffrac);
    } else if (mode_ == FeatureMode::individual) {
        require(c.filter_index && c.ffrac, "single-filter configuration is incomplete");
        x.push_back(static_cast<double>(*c.filter_index));
        x.push_back(*c.ffrac);
    }
    return x;
}

Configuration BoSpace::sample(Rng& rng) const {
    Configuration c;
    c.hyperparams = sample_uniform(*space_, rng);
    switch (mode_) {
    case FeatureMode::ensemble:
        c.weights = rng.simplex(n_filters_);
        c.ffrac = rng.uniform();
        break;
    case FeatureMode::individual:
        c.filter_index = rng.index(n_filters_);
        c.ffrac = rng.uniform();
        break;
    case FeatureMode::full: c.mask = FeatureMask(p_, true); break;
    }
    return c;
}

Configuration BoSpace::perturb(const Configuration& base, double sd, double resample_p, double weight_sd,
                               Rng& rng) const {
    Configuration c = base;
    const auto& sp = *space_;
    for (std::size_t i = 0; i < sp.size(); ++i) {
        const auto& d = sp[i];
        if (d.kind == ParamKind::categorical) {
            if (rng.bernoulli(resample_p)) c.hyperparams[i] = static_cast<double>(rng.index(d.levels.size()));
            continue;
        }
        const double u = std::clamp(encode_unit(d, c.hyperparams[i]) + sd * rng.normal(), 0.0, 1.0);
        c.hyperparams[i] = decode_unit(d, u);
    }
    if (c.weights) {
        for (auto& w : *c.weights) w += weight_sd * rng.normal();
        repair_simplex(*c.weights);
    }
    if (c.filter_index && rng.bernoulli(resample_p)) c.filter_index = rng.index(n_filters_);
    if (c.ffrac) c.ffrac = std::clamp(*c.ffrac + sd * rng.normal(), 0.0, 1.0);
    return c;
}

std::vector<Point2> normalize_objectives(std::span<const Point2> archive) {
    std::vector<Point2> out(archive.begin(), archive.end());
    if (archive.empty()) return out;
    for (std::size_t m = 0; m < 2; ++m) {
        double lo = archive[0][m], hi = archive[0][m];
        for (const auto& p : archive) {
            lo = std::min(lo, p[m]);
            hi = std::max(hi, p[m]);
        }
        const double range = hi - lo;
        for (auto& p : out) p[m] = range > 0.0 ? (p[m] - lo) / range : 0.0;
    }
    return out;
}

std::vector<double> parego_scalarize(std::span<const Point2> normalized, const std::array<double, 2>& lambda,
                                     double rho_aug) {
    std::vector<double> out;
    out.reserve(normalized.size());
    for (const auto& f : normalized) {
        const double a = lambda[0] * f[0], b = lambda[1] * f[1];
        out.push_back(std::max(a, b) + rho_aug * (a + b));
    }
    return out;
}

std::vector<Configuration> propose_batch(const BoSpace& space, const BoArchive& archive, BoMode mode,
                                         const BoOptions& opt, std::size_t q, Rng& rng) {
    require(archive.size() >= 1, "proposal needs a nonempty archive");
    require(archive.objectives.size() == archive.size(), "archive objectives and configurations differ in size");
    require(opt.uniform_candidates + opt.local_candidates >= 1, "proposal needs at least one candidate");

    std::vector<Point2> pts;
    std::vector<std::vector<double>> X;
    pts.reserve(archive.size());
    X.reserve(archive.size());
    for (std::size_t i = 0; i < archive.size(); ++i) {
        pts.push_back(to_point(archive.objectives[i]));
        X.push_back(space.encode(archive.configs[i]));
    }
    const auto norm = normalize_objectives(pts);

    std::vector<Configuration> batch;
    std::vector<std::vector<double>> taken = X;
    batch.reserve(q);
    for (std::size_t slot = 0; slot < q; ++slot) {
        std::array<double, 2> lambda{1.0, 0.0};
        double rho = 0.0;
        if (mode == BoMode::multi) {
            const auto w = rng.simplex(2);
            lambda = {w[0], w[1]};
            rho = opt.rho_aug;
        }
        const auto targets = parego_scalarize(norm, lambda, rho);

        Forest forest;
        forest.fit(X, targets, space.levels(), opt.forest, rng.engine()());
        const double kappa = opt.fixed_kappa ? *opt.fixed_kappa : rng.exponential(opt.kappa_mean) + opt.kappa_offset;

        std::vector<std::size_t> order(targets.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return targets[a] < targets[b]; });
        const std::size_t parents = std::max<std::size_t>(1, std::min(opt.local_parents, order.size()));

        Configuration best;
        double best_lcb = std::numeric_limits<double>::infinity();
        const std::size_t total = opt.uniform_candidates + opt.local_candidates;
        for (std::size_t k = 0; k < total; ++k) {
            Configuration cand = k < opt.uniform_candidates
                                     ? space.sample(rng)
                                     : space.perturb(archive.configs[order[rng.index(parents)]], opt.local_sd,
                                                     opt.local_resample, opt.weight_sd, rng);
            const auto mv = forest.predict(space.encode(cand));
            const double lcb = mv.mean - kappa * std::sqrt(mv.var);
            if (lcb < best_lcb) {
                best_lcb = lcb;
                best = std::move(cand);
            }
        }
        auto x = space.encode(best);
        if (std::find(taken.begin(), taken.end(), x) != taken.end()) {
            best = space.perturb(best, opt.local_sd, opt.local_resample, opt.weight_sd, rng);
            x = space.encode(best);
        }
        taken.push_back(std::move(x));
        batch.push_back(std::move(best));
    }
    return batch;
}

std::optional<BoVariant> bo_variant_from_string(const std::string& s) {
    if (s == "BO-MO-FE") return BoVariant::bo_mo_fe;
    if (s == "BO-MO") return BoVariant::bo_mo;
    if (s == "BO-SO-FE") return BoVariant::bo_so_fe;
    if (s == "BO-SO") return BoVariant::bo_so;
    if (s == "BO-MO-FE-NJ") return BoVariant::bo_mo_fe_nj;
    return std::nullopt;
}

std::string bo_variant_name(BoVariant v) {
    switch (v) {
    case BoVariant::bo_mo_fe: return "BO-MO-FE";
    case BoVariant::bo_mo: return "BO-MO";
    case BoVariant::bo_so_fe: return "BO-SO-FE";
    case BoVariant::bo_so: return "BO-SO";
    case BoVariant::bo_mo_fe_nj: return "BO-MO-FE-NJ";
    }
    return "?";
}

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

// Evaluates `configs` concurrently and appends them to the trace in order.
void evaluate_batch(const Problem& prob, std::vector<Configuration> configs, std::size_t generation, Trace& trace,
                    BoArchive* archive, double start) {
    std::vector<Evaluation> evs(configs.size());
    parallel_for(configs.size(), prob.workers, [&](std::size_t i) { evs[i] = prob.evaluate(configs[i]); });
    for (std::size_t i = 0; i < configs.size(); ++i) {
        TraceRecord r;
        r.eval_index = trace.records.size();
        r.generation = generation;
        r.mask = std::move(evs[i].mask);
        r.objectives = evs[i].objectives;
        r.failed = evs[i].failed;
        r.wall_time = now_seconds() - start;
        if (archive) {
            archive->configs.push_back(configs[i]);
            archive->objectives.push_back(r.objectives);
        }
        r.config = std::move(configs[i]);
        trace.records.push_back(std::move(r));
    }
}

std::size_t best_perf_index(const Trace& trace, std::size_t from, std::size_t to) {
    std::size_t best = from;
    for (std::size_t i = from; i < to; ++i)
        if (trace.records[i].objectives.perf < trace.records[best].objectives.perf) best = i;
    return best;
}

}  // namespace

BoResult run_bo(const Problem& prob, BoMode mode, FeatureMode features, std::size_t budget, std::uint64_t seed,
                const BoOptions& opt) {
    require(prob.space != nullptr && prob.evaluate, "BO problem needs a search space and an evaluator");
    require(opt.batch >= 1, "BO batch size must be positive");
    if (features != FeatureMode::full) require(prob.filters != nullptr, "BO feature modes need a filter matrix");
    const BoSpace space(*prob.space, features, prob.filters ? prob.filters->filters() : 0, prob.p);
    const std::size_t init = opt.initial_design.value_or(4 * space.dims());
    require(init >= 1, "BO initial design must contain at least one point");
    require(budget >= init, "budget " + std::to_string(budget) + " is smaller than the initial design of " +
                                std::to_string(init));

    BoResult res;
    res.initial_design = init;
    BoArchive archive;
    const double start = now_seconds();

    std::vector<Configuration> design;
    design.reserve(init);
    for (std::size_t i = 0; i < init; ++i) {
        Rng rng = Rng(seed).derive({0, i});
        design.push_back(space.sample(rng));
    }
    evaluate_batch(prob, std::move(design), 0, res.trace, &archive, start);

    while (res.trace.size() < budget) {
        ++res.rounds;
        const std::size_t q = std::min(opt.batch, budget - res.trace.size());
        Rng rng = Rng(seed).derive({1, res.rounds});
        auto batch = propose_batch(space, archive, mode, opt, q, rng);
        evaluate_batch(prob, std::move(batch), res.rounds, res.trace, &archive, start);
        log_debug("BO round " + std::to_string(res.rounds) + ": " + std::to_string(res.trace.size()) + " evaluations");
    }
    res.trace.generations = res.rounds;
    res.evaluations = res.trace.size();
    res.incumbent = best_perf_index(res.trace, 0, res.trace.size());
    res.report_candidates.resize(res.trace.size());
    std::iota(res.report_candidates.begin(), res.report_candidates.end(), std::size_t{0});
    return res;
}

BoResult run_bo(const Problem& prob, BoVariant variant, std::size_t budget, std::uint64_t seed,
                const BoOptions& opt) {
    switch (variant) {
    case BoVariant::bo_mo_fe: return run_bo(prob, BoMode::multi, FeatureMode::ensemble, budget, seed, opt);
    case BoVariant::bo_mo: return run_bo(prob, BoMode::multi, FeatureMode::individual, budget, seed, opt);
    case BoVariant::bo_so_fe: return run_bo(prob, BoMode::single, FeatureMode::ensemble, budget, seed, opt);
    case BoVariant::bo_so: return run_bo(prob, BoMode::single, FeatureMode::individual, budget, seed, opt);
    case BoVariant::bo_mo_fe_nj: break;
    }
    const std::size_t sweep = opt.nj_sweep;
    require(sweep >= 2, "the ffrac sweep needs at least 2 points");
    require(budget > sweep, "budget " + std::to_string(budget) + " leaves nothing before the ffrac sweep of " +
                                std::to_string(sweep));
    BoResult res = run_bo(prob, BoMode::single, FeatureMode::ensemble, budget - sweep, seed, opt);
    const Configuration incumbent = res.trace.records[res.incumbent].config;
    std::vector<Configuration> configs;
    for (std::size_t i = 0; i < sweep; ++i) {
        Configuration c = incumbent;
        c.ffrac = static_cast<double>(i) / static_cast<double>(sweep - 1);
        configs.push_back(std::move(c));
    }
    const std::size_t first = res.trace.size();
    evaluate_batch(prob, std::move(configs), res.rounds + 1, res.trace, nullptr, now_seconds());
    res.trace.generations = res.rounds + 1;
    res.evaluations = res.trace.size();
    res.report_candidates.clear();
    res.report_candidates.push_back(res.incumbent);
    for (std::size_t i = first; i < res.trace.size(); ++i) res.report_candidates.push_back(i);
    return res;
}

namespace {

ParetoReport report_from(const Trace& trace, const std::vector<std::size_t>& candidates, std::size_t budget) {
    std::vector<Point2> pts;
    pts.reserve(candidates.size());
    for (auto i : candidates) pts.push_back(to_point(trace.records[i].objectives));
    ParetoReport rep;
    rep.source = ReportSource::optim;
    rep.eval_budget_at_report = budget;
    for (auto k : pareto_front(pts)) {
        const auto& r = trace.records[candidates[k]];
        rep.points.push_back({r.config, r.objectives, r.mask, r.eval_index});
    }
    return rep;
}

}  // namespace

ParetoReport bo_pareto_report(const BoResult& res) { return report_from(res.trace, res.report_candidates, res.evaluations); }

ParetoReport trace_pareto_report(const Trace& trace) {
    std::vector<std::size_t> all(trace.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return report_from(trace, all, trace.size());
}

PretuneResult run_nj_pretune(const Problem& prob, std::size_t budget, std::uint64_t seed, const BoOptions& opt) {
    require(prob.space != nullptr, "pretuning needs a search space");
    PretuneResult out;
    if (prob.space->empty()) return out;
    auto res = run_bo(prob, BoMode::single, FeatureMode::full, budget, seed, opt);
    const auto& best = res.trace.records[res.incumbent];
    out.hyperparams = best.config.hyperparams;
    out.objectives = best.objectives;
    out.evaluations = res.evaluations;
    out.trace = std::move(res.trace);
    return out;
}

RandomSearchResult run_random_search(const Problem& prob, std::size_t budget, double rho, std::uint64_t seed) {
    require(prob.space != nullptr && prob.evaluate, "random search needs a search space and an evaluator");
    require(budget >= 1, "random search budget must be positive");
    const MaskInitStrategy init{MaskInitKind::geometric, rho};
    std::vector<Configuration> configs(budget);
    for (std::size_t i = 0; i < budget; ++i) {
        Rng rng = Rng(seed).derive({i});
        configs[i].hyperparams = sample_uniform(*prob.space, rng);
        configs[i].mask = init_mask(init, prob.p, nullptr, rng).mask;
    }
    RandomSearchResult out;
    evaluate_batch(prob, std::move(configs), 0, out.trace, nullptr, now_seconds());
    out.evaluations = out.trace.size();
    return out;
}

std::size_t bo_round_count(std::size_t budget, std::size_t initial_design, std::size_t q) {
    require(q >= 1, "batch size must be positive");
    require(budget >= initial_design, "budget is smaller than the initial design");
    return (budget - initial_design + q - 1) / q;
}

std::size_t ga_generation_count(std::size_t budget, std::size_t mu, std::size_t offspring) {
    require(offspring >= 1, "offspring count must be positive");
    require(budget >= mu, "budget is smaller than the population");
    return (budget - mu + offspring - 1) / offspring;
}

}  // namespace mofs
