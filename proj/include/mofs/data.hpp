#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mofs {

// Dense binary-classification dataset. X is stored row-major.
class Dataset {
public:
    Dataset() = default;

    // Validates the invariants (no missing values, n >= 10, p >= 1, both
    // classes present, positive costs). Empty costs default to 1/p each.
    Dataset(std::size_t n, std::size_t p, std::vector<double> x, std::vector<std::uint8_t> y,
            std::vector<std::string> feature_names = {}, std::vector<double> costs = {},
            std::vector<std::string> class_labels = {"0", "1"});

    std::size_t rows() const noexcept { return n_; }
    std::size_t cols() const noexcept { return p_; }

    double at(std::size_t i, std::size_t j) const { return x_[i * p_ + j]; }
    std::span<const double> row(std::size_t i) const { return {x_.data() + i * p_, p_}; }
    std::span<const double> values() const noexcept { return x_; }
    std::vector<double> column(std::size_t j) const;

    std::span<const std::uint8_t> labels() const noexcept { return y_; }
    std::uint8_t label(std::size_t i) const { return y_[i]; }
    std::size_t count_class(std::uint8_t c) const;

    const std::vector<std::string>& feature_names() const noexcept { return names_; }
    const std::vector<double>& costs() const noexcept { return costs_; }
    const std::vector<std::string>& class_labels() const noexcept { return class_labels_; }

    // Row ids relative to the dataset this one was carved out of.
    const std::vector<std::size_t>& row_ids() const noexcept { return row_ids_; }

    // Rows in the given order. Requires the subset to still satisfy the
    // invariants with a relaxed minimum size of 2 rows.
    Dataset subset(std::span<const std::size_t> rows) const;
    Dataset with_costs(std::vector<double> costs) const;

private:
    std::size_t n_ = 0;
    std::size_t p_ = 0;
    std::vector<double> x_;
    std::vector<std::uint8_t> y_;
    std::vector<std::string> names_;
    std::vector<double> costs_;
    std::vector<std::string> class_labels_;
    std::vector<std::size_t> row_ids_;

    struct Unchecked {};
    Dataset(Unchecked) {}
};

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column);
void write_csv(const Dataset& d, const std::filesystem::path& path, const std::string& target_column = "class");

// The target is `target_attribute` when given, otherwise the nominal
// attribute named "class" (case-insensitive), otherwise the last nominal one.
Dataset load_arff(const std::filesystem::path& path, const std::string& target_attribute = "");
Dataset parse_arff(const std::string& text, const std::string& source_name = "<arff>",
                   const std::string& target_attribute = "");

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string error;
};

// Injected transport for OpenML requests; the default one uses HTTPS.
using HttpTransport = std::function<HttpResponse(const std::string& url)>;
HttpTransport default_transport();

struct OpenMlOptions {
    std::string api_base = "https://www.openml.org";
    HttpTransport transport;  // empty -> default_transport()
};

Dataset fetch_openml(int did, const std::filesystem::path& cache_dir, const OpenMlOptions& opts = {});

struct SyntheticData {
    Dataset data;
    std::vector<std::size_t> informative;  // sorted
};

SyntheticData make_synthetic(std::size_t n, std::size_t p, std::size_t k_informative, double noise_sd,
                             std::uint64_t seed);

struct CvSplit {
    std::vector<std::vector<std::size_t>> folds;
    bool stratified = true;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return folds.size(); }
    const std::vector<std::size_t>& test(std::size_t k) const { return folds[k]; }
    std::vector<std::size_t> train(std::size_t k) const;
};

CvSplit split_cv(std::span<const std::uint8_t> labels, std::size_t k, bool stratified, std::uint64_t seed);
inline CvSplit split_cv(const Dataset& d, std::size_t k, bool stratified, std::uint64_t seed) {
    return split_cv(d.labels(), k, stratified, seed);
}

}  // namespace mofs
