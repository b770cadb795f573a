#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mofs/filters.hpp"
#include "mofs/learners.hpp"
#include "mofs/metrics.hpp"
#include "mofs/rng.hpp"
#include "mofs/searchspace.hpp"
#include "mofs/trace.hpp"

namespace mofs {

// What an optimizer needs to know about the problem. `evaluate` must be
// thread-safe and deterministic; the optimizers call it from worker threads.
struct Problem {
    const SearchSpace* space = nullptr;
    std::size_t p = 0;
    const FilterMatrix* filters = nullptr;
    std::function<Evaluation(const Configuration&)> evaluate;
    std::size_t workers = 1;

    static Problem from(const Evaluator& ev, std::size_t workers = 1);
};

// ---------------------------------------------------------------------------
// Feature-mask initialization and mutation

std::vector<double> truncated_geometric_pmf(std::size_t p, double rho);
std::size_t sample_truncated_geometric(std::size_t p, double rho, Rng& rng);

// Uniform over all masks of length p with exactly `weight` bits set.
FeatureMask sample_mask_with_weight(std::size_t p, std::size_t weight, Rng& rng);

// Bernoulli parameter for a bit whose ensemble score is `ef` given the target
// weight S: ef (S+1) / (ef S + (1-ef)(p-S) + 1).
double filter_inclusion_probability(double ef, std::size_t weight, std::size_t p);

enum class MaskInitKind { bernoulli_naive, uniform_count, geometric, filter_ensemble };

struct MaskInitStrategy {
    MaskInitKind kind = MaskInitKind::geometric;
    double rho = 0.5;
};

struct MaskInit {
    FeatureMask mask;
    std::optional<std::vector<double>> weights;  // filter_ensemble only
};

MaskInit init_mask(const MaskInitStrategy& strategy, std::size_t p, const FilterMatrix* filters, Rng& rng);

// Flips each bit with probability pi.
FeatureMask bitflip_mutate(const FeatureMask& mask, double pi, Rng& rng);

// Erases each bit with probability 2 pi and redraws it from
// Bernoulli((S+1)/(p+2)), S the weight of the input mask.
FeatureMask hw_preserving_mutate(const FeatureMask& mask, double pi, Rng& rng);

// As hw_preserving_mutate, but erased bit j is redrawn with
// filter_inclusion_probability(ef[j], S, p).
FeatureMask filter_ensemble_mutate(const FeatureMask& mask, std::span<const double> ef, double pi, Rng& rng);

// ---------------------------------------------------------------------------
// Hyperparameter recombination and mutation

struct SbxChildren {
    double c1 = 0.0, c2 = 0.0;
};

// Spread factor for a given uniform draw u.
double sbx_beta(double u, double eta);
// Children before clipping for a fixed u.
SbxChildren sbx_children(double x1, double x2, double u, double eta);
// Draws u, clips to [lo, hi]; the integer variant rounds half-up.
SbxChildren sbx_crossover(double x1, double x2, double eta, double lo, double hi, Rng& rng, bool integer = false);

template <class T>
std::pair<std::vector<T>, std::vector<T>> uniform_crossover(const std::vector<T>& a, const std::vector<T>& b,
                                                            double swap_p, Rng& rng) {
    std::pair<std::vector<T>, std::vector<T>> out{a, b};
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i)
        if (rng.bernoulli(swap_p)) std::swap(out.first[i], out.second[i]);
    return out;
}

// With probability per_gene_p adds N(0, sigma^2) and clips.
double gaussian_mutate(double value, double sigma, double lo, double hi, double per_gene_p, Rng& rng,
                       bool integer = false);

struct StrategyBounds {
    double sigma_min = 1e-4;
    double sigma_max = 0.5;
    double p_cat_min = 0.1;
    double p_mask_min = 0.01;
    double p_max = 0.5;
};

StrategyBounds strategy_bounds(const SearchSpace& space, std::size_t p);
StrategyParams initial_strategy(const SearchSpace& space, std::size_t p);

// Log-normal step-size and logit-normal rate self-adaptation with
// tau = 1 / sqrt(2 d), d the number of adapted parameters.
void self_adapt(StrategyParams& s, const StrategyBounds& bounds, Rng& rng);

// ---------------------------------------------------------------------------
// NSGA-II

std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const Point2> objectives);
std::vector<double> crowding_distance(std::span<const Point2> front);

struct Individual {
    Configuration config;
    FeatureMask mask;  // as evaluated
    ObjectiveVector objectives;
    std::size_t eval_index = 0;
    bool failed = false;
    std::size_t rank = 0;
    double crowding = 0.0;
};

struct Population {
    std::vector<Individual> individuals;
    std::size_t generation = 0;
};

enum class MaskMutationKind { bitflip, hamming_weight, filter_ensemble };

struct GaOperators {
    MaskInitStrategy init;
    MaskMutationKind mutation = MaskMutationKind::filter_ensemble;
    std::optional<HyperValues> frozen_hyperparams;  // NJ: hyperparameters are not evolved
    std::size_t mu = 80;
    std::size_t offspring = 15;
    double p_crossover = 0.7;
    double p_mutation = 0.3;
    double gene_p = 0.1;
    double eta = 5.0;
    double weight_sd = 0.05;
};

enum class GaVariant { ablation1, ablation2, ablation3, ablation4, ga_mo, ga_mo_fe, ga_mo_fe_nj };

std::optional<GaVariant> ga_variant_from_string(const std::string& name);
std::string ga_variant_name(GaVariant v);
GaOperators operators_for(GaVariant v, double rho);

// Assigns rank (1-based front index) and crowding distance in place.
void assign_rank_and_crowding(std::vector<Individual>& pop);

// Keeps `mu` individuals by front rank, then crowding distance; ties keep
// the earlier pool position.
std::vector<Individual> survival_select(std::vector<Individual> pool, std::size_t mu);

struct GaContext {
    const Problem* problem = nullptr;
    const GaOperators* ops = nullptr;
    std::uint64_t seed = 0;
    Trace* trace = nullptr;
    std::size_t next_eval = 0;
    double start_time = 0.0;
};

Population initial_population(GaContext& ctx);

// One generation: tournament selection, crossover, mutation, evaluation of
// `n_offspring` children and (mu + n_offspring) -> mu survival.
Population nsga2_step(const Population& pop, GaContext& ctx, std::size_t n_offspring);

struct GaResult {
    Trace trace;
    Population final_population;
    std::size_t evaluations = 0;
};

GaResult run_nsga2(const Problem& problem, const GaOperators& ops, std::size_t budget, std::uint64_t seed);

// Nondominated members of the final generation.
ParetoReport ga_pareto_report(const GaResult& result);

}  // namespace mofs
