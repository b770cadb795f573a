#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mofs/data.hpp"
#include "mofs/searchspace.hpp"

namespace mofs {

// p x M matrix of rank-scaled filter scores; column m belongs to filter m.
class FilterMatrix {
public:
    FilterMatrix() = default;
    FilterMatrix(std::size_t p, std::vector<std::string> names, std::vector<std::vector<double>> columns);

    std::size_t features() const noexcept { return p_; }
    std::size_t filters() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    double score(std::size_t j, std::size_t m) const { return columns_[m][j]; }
    std::span<const double> column(std::size_t m) const { return columns_[m]; }

    void write_csv(const std::filesystem::path& path) const;

private:
    std::size_t p_ = 0;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
};

// Ties take the mean of their positions on the grid i/(p-1).
std::vector<double> rank_scale(std::span<const double> raw);

// Equal-frequency binning into at most `bins` codes. Features with at most
// `bins` distinct values are coded by distinct value.
std::vector<int> discretize(std::span<const double> values, int bins = 10);

std::vector<double> info_gain(const Dataset& d, int bins = 10);
std::vector<double> auc_score(const Dataset& d);
std::vector<double> jmi(const Dataset& d, int bins = 10);
std::vector<double> cmim(const Dataset& d, int bins = 10);

const std::vector<std::string>& default_filter_names();

std::vector<double> raw_filter_scores(const std::string& name, const Dataset& d, int bins = 10);

// Computes and rank-scales every named filter on `d`.
FilterMatrix compute_filter_matrix(const Dataset& d, const std::vector<std::string>& names = default_filter_names(),
                                   int bins = 10);

std::vector<double> ensemble_score(const FilterMatrix& fm, std::span<const double> weights);

// Exactly ceil(p * ffrac) bits at the largest scores, ties to the lower index.
FeatureMask top_fraction_mask(std::span<const double> scores, double ffrac);

// ceil(p * ffrac) with a guard against round-off just above an integer.
std::size_t selected_count(std::size_t p, double ffrac);

}  // namespace mofs
