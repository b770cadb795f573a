#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mofs/rng.hpp"

namespace mofs {

struct ForestParams {
    std::size_t trees = 100;
    std::size_t min_leaf = 3;
    std::size_t mtry = 0;  // 0: ceil(d / 3)
};

// Column description for the surrogate design matrix: 0 for ordered
// (threshold) columns, otherwise the number of levels of a categorical column
// whose values are level indices.
using ColumnLevels = std::vector<std::size_t>;

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;
};

// Mean and population variance of per-tree predictions, variance floored.
MeanVar summarize_tree_predictions(std::span<const double> per_tree, double var_floor = 1e-12);

// Regression random forest with variance-reduction splits.
class Forest {
public:
    Forest() = default;

    void fit(const std::vector<std::vector<double>>& X, std::span<const double> y, const ColumnLevels& levels,
             const ForestParams& params, std::uint64_t seed);

    MeanVar predict(std::span<const double> x) const;
    std::vector<double> tree_predictions(std::span<const double> x) const;

    std::size_t size() const noexcept { return trees_.size(); }
    std::size_t dims() const noexcept { return levels_.size(); }
    // Smallest leaf population over all trees (bootstrap counts).
    std::size_t min_leaf_size() const;

private:
    struct Node {
        int feature = -1;  // -1: leaf
        double threshold = 0.0;
        std::vector<std::uint8_t> left_levels;  // categorical splits: levels routed left
        int left = -1, right = -1;
        double value = 0.0;
        std::size_t count = 0;
    };
    using Tree = std::vector<Node>;

    int grow(Tree& tree, const std::vector<std::vector<double>>& X, std::span<const double> y,
             std::vector<std::size_t>& rows, std::size_t lo, std::size_t hi, const ForestParams& params,
             std::size_t mtry, std::vector<std::size_t>& feature_pool, Rng& rng) const;
    double predict_tree(const Tree& tree, std::span<const double> x) const;

    ColumnLevels levels_;
    std::vector<Tree> trees_;
};

}  // namespace mofs
