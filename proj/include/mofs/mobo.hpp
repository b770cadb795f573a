#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mofs/evo.hpp"
#include "mofs/metrics.hpp"
#include "mofs/rng.hpp"
#include "mofs/surrogate.hpp"
#include "mofs/trace.hpp"

namespace mofs {

enum class BoMode { multi, single };

// ensemble: (weights, ffrac); individual: (filter index, ffrac); full: no
// feature dimensions, every feature is used.
enum class FeatureMode { ensemble, individual, full };

// Joint BO search space: the hyperparameters followed by the feature part.
class BoSpace {
public:
    // `p` is needed in full mode, where configurations carry an all-ones mask.
    BoSpace(const SearchSpace& space, FeatureMode mode, std::size_t n_filters, std::size_t p = 0);

    const SearchSpace& hyper() const noexcept { return *space_; }
    FeatureMode mode() const noexcept { return mode_; }
    std::size_t filters() const noexcept { return n_filters_; }
    std::size_t dims() const noexcept { return levels_.size(); }
    const ColumnLevels& levels() const noexcept { return levels_; }

    // Numeric and integer hyperparameters in unit coordinates, categoricals
    // and the filter index as level codes, then weights and ffrac as-is.
    std::vector<double> encode(const Configuration& c) const;

    Configuration sample(Rng& rng) const;
    // Gaussian steps of `sd` in unit coordinates, categorical resampling with
    // probability `resample_p`, weights perturbed by N(0, weight_sd^2).
    Configuration perturb(const Configuration& c, double sd, double resample_p, double weight_sd, Rng& rng) const;

private:
    const SearchSpace* space_;
    FeatureMode mode_;
    std::size_t n_filters_;
    std::size_t p_;
    ColumnLevels levels_;
};

// Per-column min-max scaling; zero range maps to 0.
std::vector<Point2> normalize_objectives(std::span<const Point2> archive);

// Augmented Chebyshev: max_i(l_i f_i) + rho * sum_i(l_i f_i).
std::vector<double> parego_scalarize(std::span<const Point2> normalized, const std::array<double, 2>& lambda,
                                     double rho_aug = 0.05);

struct BoOptions {
    std::size_t batch = 15;
    std::optional<std::size_t> initial_design;  // default 4 * dims
    double rho_aug = 0.05;
    std::size_t uniform_candidates = 500;
    std::size_t local_candidates = 500;
    std::size_t local_parents = 10;
    double local_sd = 0.1;
    double local_resample = 0.2;
    double weight_sd = 0.05;
    double kappa_mean = 1.0;
    double kappa_offset = 0.5;
    std::optional<double> fixed_kappa;
    ForestParams forest;
    std::size_t nj_sweep = 20;
};

struct BoArchive {
    std::vector<Configuration> configs;
    std::vector<ObjectiveVector> objectives;

    std::size_t size() const noexcept { return configs.size(); }
};

// Proposes `q` configurations; each slot draws its own scalarization weights
// and LCB multiplier and refits the surrogate.
std::vector<Configuration> propose_batch(const BoSpace& space, const BoArchive& archive, BoMode mode,
                                         const BoOptions& options, std::size_t q, Rng& rng);

enum class BoVariant { bo_mo_fe, bo_mo, bo_so_fe, bo_so, bo_mo_fe_nj };

std::optional<BoVariant> bo_variant_from_string(const std::string& name);
std::string bo_variant_name(BoVariant v);

struct BoResult {
    Trace trace;
    std::size_t evaluations = 0;
    std::size_t rounds = 0;
    std::size_t initial_design = 0;
    std::size_t incumbent = 0;                    // trace position of the best perf
    std::vector<std::size_t> report_candidates;   // trace positions eligible for the Pareto report
};

BoResult run_bo(const Problem& problem, BoMode mode, FeatureMode features, std::size_t budget, std::uint64_t seed,
                const BoOptions& options = {});
BoResult run_bo(const Problem& problem, BoVariant variant, std::size_t budget, std::uint64_t seed,
                const BoOptions& options = {});

// Nondominated subset of the report candidates.
ParetoReport bo_pareto_report(const BoResult& result);

// Single-objective BO over the hyperparameters with every feature selected;
// returns the incumbent hyperparameters.
struct PretuneResult {
    HyperValues hyperparams;
    ObjectiveVector objectives;
    std::size_t evaluations = 0;
    Trace trace;
};
PretuneResult run_nj_pretune(const Problem& problem, std::size_t budget, std::uint64_t seed,
                             const BoOptions& options = {});

// Uniform hyperparameters with geometric-size masks.
struct RandomSearchResult {
    Trace trace;
    std::size_t evaluations = 0;
};
RandomSearchResult run_random_search(const Problem& problem, std::size_t budget, double rho, std::uint64_t seed);
ParetoReport trace_pareto_report(const Trace& trace);

// Rounds after the initial design needed to spend the budget in batches of q.
std::size_t bo_round_count(std::size_t budget, std::size_t initial_design, std::size_t q);
// Full generations after the initial population.
std::size_t ga_generation_count(std::size_t budget, std::size_t mu, std::size_t offspring);

}  // namespace mofs
