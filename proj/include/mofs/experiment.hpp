#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mofs/data.hpp"
#include "mofs/evo.hpp"
#include "mofs/learners.hpp"
#include "mofs/metrics.hpp"
#include "mofs/mobo.hpp"
#include "mofs/searchspace.hpp"

namespace mofs {

struct DatasetSource {
    enum class Kind { synthetic, csv, arff, openml } kind = Kind::synthetic;
    std::filesystem::path path;
    std::string target = "class";
    int did = 0;
    std::filesystem::path cache_dir = "cache";
    std::string api_base = "https://www.openml.org";
    std::size_t n = 300, p = 50, informative = 5;
    double noise = 0.1;
    std::uint64_t seed = 1;
};

struct LoadedData {
    Dataset data;
    std::string name;
    std::vector<std::size_t> informative;  // synthetic sources only
};

LoadedData load_dataset(const DatasetSource& src, const OpenMlOptions& openml = {});

struct ExperimentConfig {
    DatasetSource dataset;
    std::string dataset_name;
    std::optional<std::vector<double>> costs;
    LearnerSpec learner;
    SearchSpace space;
    std::vector<std::string> methods;
    std::size_t budget = 2000;
    std::size_t outer_folds = 10;
    std::size_t inner_folds = 10;
    std::optional<std::size_t> max_outer_folds;  // run only the first folds
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    std::filesystem::path output_dir = "results";
    bool stratified = true;
    std::vector<std::string> filters = default_filter_names();
    std::optional<double> geom_rate;
    std::size_t geom_trials = 100;
    TreeParams geom_tree;
    GaOperators ga;
    BoOptions bo;
    std::size_t pretune_budget = 500;
};

// Every known method name.
const std::vector<std::string>& method_names();
bool is_known_method(const std::string& name);

SearchSpace default_search_space(LearnerKind kind);
SearchSpace search_space_from_json(const nlohmann::json& j);
nlohmann::json search_space_to_json(const SearchSpace& space);

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

// Throws Error(runtime) when the optimization set shares a row with the test ids.
void check_firewall(const Dataset& optim, std::span<const std::size_t> test_ids);

struct FrontPoint {
    ParetoPoint point;
    double test_perf = 1.0;
};

struct AnytimePoint {
    std::size_t eval_index = 0;
    double optim_perf = 1.0;
    double test_perf = 1.0;
};

struct MethodRun {
    std::string method;
    std::size_t fold = 0;
    std::size_t evaluations = 0;
    double domhv_gen = 0.0;
    double domhv_optim = 0.0;
    std::vector<FrontPoint> front;
    std::vector<AnytimePoint> anytime;
    Trace trace;
};

struct FoldFailure {
    std::string method;
    std::size_t fold = 0;
    std::string message;
};

struct ExperimentResult {
    std::string dataset;
    std::string learner;
    std::vector<MethodRun> runs;
    std::vector<FoldFailure> failures;
    std::vector<std::size_t> informative;

    bool ok() const noexcept { return failures.empty(); }
};

// Nested resampling over the configured outer folds. When `write_outputs`
// is set, summary.csv, fronts/, traces/, anytime/ and config.json are
// written to the output directory.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_outputs = true);

struct FoldPretune {
    std::size_t fold = 0;
    PretuneResult result;
};

// Single-objective pretuning with all features on every outer D_optim.
std::vector<FoldPretune> run_pretune(const ExperimentConfig& cfg);

// Reads a result directory and writes report/anytime_<method>.csv,
// report/fronts.csv and report/ranks.csv. Returns the rank summary.
RankSummary write_report(const std::filesystem::path& result_dir);

std::uint64_t method_seed(std::uint64_t seed, std::size_t fold, const std::string& method);

}  // namespace mofs
