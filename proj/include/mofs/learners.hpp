#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mofs/data.hpp"
#include "mofs/filters.hpp"
#include "mofs/searchspace.hpp"

namespace mofs {

struct ObjectiveVector {
    double perf = 1.0;  // mean misclassification error estimate
    double cost = 0.0;  // sum of c_i s_i

    friend bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;
};

double mmce(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> pred);

// ---------------------------------------------------------------------------
// k-nearest neighbours with kknn-style vote kernels.

enum class KnnKernel { rectangular, triangular, biweight, optimal };
KnnKernel knn_kernel_from_string(const std::string& s);
const std::vector<std::string>& knn_kernel_names();

struct KnnParams {
    std::size_t k = 7;
    double distance = 2.0;  // Minkowski power
    KnnKernel kernel = KnnKernel::optimal;
};

std::vector<std::uint8_t> knn_predict(const Dataset& d, std::span<const std::size_t> cols,
                                      std::span<const std::size_t> train, std::span<const std::size_t> test,
                                      const KnnParams& params);

// ---------------------------------------------------------------------------
// CART classification tree, Gini impurity.

struct TreeParams {
    int max_depth = 10;
    std::size_t min_split = 5;
};

class DecisionTree {
public:
    void fit(const Dataset& d, std::span<const std::size_t> cols, std::span<const std::size_t> rows,
             const TreeParams& params);

    std::uint8_t predict(std::span<const double> row) const;
    int depth() const noexcept { return depth_; }
    // Distinct dataset columns used by at least one split.
    const std::set<std::size_t>& split_variables() const noexcept { return split_vars_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }

private:
    struct Node {
        int feature = -1;  // -1: leaf
        double threshold = 0.0;
        int left = -1, right = -1;
        std::uint8_t label = 0;
    };
    int grow(const Dataset& d, std::span<const std::size_t> cols, std::vector<std::size_t>& rows, std::size_t lo,
             std::size_t hi, int level, const TreeParams& params);

    std::vector<Node> nodes_;
    std::set<std::size_t> split_vars_;
    int depth_ = 0;
};

// ---------------------------------------------------------------------------
// Learner interface

std::uint8_t majority_class(const Dataset& d, std::span<const std::size_t> rows);

class Learner {
public:
    virtual ~Learner() = default;
    virtual std::string name() const = 0;

    // Fits on the masked columns of `train` and labels `test`. An empty mask
    // yields the majority class of `train`.
    virtual std::vector<std::uint8_t> train_predict(const Dataset& d, const FeatureMask& mask,
                                                    std::span<const std::size_t> train,
                                                    std::span<const std::size_t> test,
                                                    const HyperValues& hyperparams) const = 0;
};

enum class LearnerKind { knn, decision_tree, external };

struct LearnerSpec {
    LearnerKind kind = LearnerKind::knn;
    KnnParams knn;          // defaults for parameters absent from the search space
    TreeParams tree;
    std::string command;    // external only
};

// Binds learner parameters by name: knn reads "k", "distance", "kernel";
// decision_tree reads "max_depth", "min_split". The external learner gets
// every hyperparameter.
std::shared_ptr<const Learner> make_learner(const LearnerSpec& spec, const SearchSpace& space);

std::string learner_kind_name(LearnerKind kind);
LearnerKind learner_kind_from_string(const std::string& s);

// ---------------------------------------------------------------------------
// Objective evaluation

struct Evaluation {
    ObjectiveVector objectives;
    FeatureMask mask;  // materialized mask that was evaluated
    bool failed = false;
    std::string message;
};

double feature_cost(const Dataset& d, const FeatureMask& mask);

// Turns any configuration into the feature mask it denotes: GA configs carry
// the mask, BO configs select the top ceil(p*ffrac) features either by the
// weighted ensemble or by a single filter column.
FeatureMask materialize_mask(const Configuration& c, std::size_t p, const FilterMatrix* filters);

class Evaluator {
public:
    Evaluator(Dataset data, CvSplit inner_cv, std::shared_ptr<const Learner> learner, SearchSpace space,
              std::optional<FilterMatrix> filters = std::nullopt);

    // Inner cross-validated mmce and feature cost; counts one evaluation.
    // Learner errors are never propagated: the result is (1.0, cost) and flagged.
    Evaluation evaluate(const Configuration& c) const;

    FeatureMask materialize(const Configuration& c) const;

    std::size_t evaluations() const noexcept { return count_.load(); }
    void reset_count() noexcept { count_.store(0); }

    const Dataset& data() const noexcept { return data_; }
    const CvSplit& inner_cv() const noexcept { return cv_; }
    const SearchSpace& space() const noexcept { return space_; }
    const Learner& learner() const noexcept { return *learner_; }
    std::shared_ptr<const Learner> learner_ptr() const noexcept { return learner_; }
    const FilterMatrix* filters() const noexcept { return filters_ ? &*filters_ : nullptr; }

private:
    Dataset data_;
    CvSplit cv_;
    std::shared_ptr<const Learner> learner_;
    SearchSpace space_;
    std::optional<FilterMatrix> filters_;
    std::vector<std::vector<std::size_t>> train_idx_;
    mutable std::atomic<std::size_t> count_{0};
};

// Success probability for the truncated geometric initializer: 1 / (1 + E),
// E the mean number of distinct split variables of trees fitted on random
// 90% subsets. Falls back to 0.5 when no tree splits.
double estimate_geom_rate(const Dataset& d, std::size_t trials, std::uint64_t seed, const TreeParams& tree = {});

}  // namespace mofs
