#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mofs/rng.hpp"

namespace mofs {

enum class ParamKind { numeric, integer, categorical };

const char* to_string(ParamKind kind);
ParamKind param_kind_from_string(const std::string& s);

struct ParamDef {
    std::string name;
    ParamKind kind = ParamKind::numeric;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<std::string> levels;  // categorical only
    bool log_scale = false;

    static ParamDef numeric(std::string name, double lo, double hi, bool log_scale = false);
    static ParamDef integer(std::string name, std::int64_t lo, std::int64_t hi, bool log_scale = false);
    static ParamDef categorical(std::string name, std::vector<std::string> levels);

    std::size_t level_count() const noexcept { return levels.size(); }
};

// Hyperparameter values, one per ParamDef. Categoricals hold the level index.
using HyperValues = std::vector<double>;

// Mixed bounded space without conditional parameters.
class SearchSpace {
public:
    SearchSpace() = default;
    explicit SearchSpace(std::vector<ParamDef> params);

    std::span<const ParamDef> params() const noexcept { return params_; }
    std::size_t size() const noexcept { return params_.size(); }
    bool empty() const noexcept { return params_.empty(); }
    const ParamDef& operator[](std::size_t i) const { return params_[i]; }

    std::optional<std::size_t> find(const std::string& name) const;
    std::size_t count(ParamKind kind) const;

private:
    std::vector<ParamDef> params_;
};

struct FeatureMask {
    std::vector<std::uint8_t> bits;

    FeatureMask() = default;
    explicit FeatureMask(std::size_t p, bool value = false) : bits(p, value ? 1 : 0) {}
    explicit FeatureMask(std::vector<std::uint8_t> b) : bits(std::move(b)) {}

    std::size_t size() const noexcept { return bits.size(); }
    std::size_t weight() const noexcept;
    bool operator[](std::size_t j) const { return bits[j] != 0; }
    std::vector<std::size_t> selected() const;
    std::string to_string() const;
    static FeatureMask from_string(const std::string& s);

    friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
};

// Self-adapted mutation strategy carried by GA individuals. All rates live in
// unit-cube coordinates.
struct StrategyParams {
    std::vector<double> sigma;  // one per numeric/integer hyperparameter, in space order
    double p_cat = 0.1;
    double p_mask = 0.1;

    friend bool operator==(const StrategyParams&, const StrategyParams&) = default;
};

struct Configuration {
    HyperValues hyperparams;
    std::optional<FeatureMask> mask;
    std::optional<double> ffrac;
    std::optional<std::vector<double>> weights;
    std::optional<std::size_t> filter_index;  // 0-based column of the FilterMatrix
    std::optional<StrategyParams> strategy;

    friend bool operator==(const Configuration&, const Configuration&) = default;
};

struct Violation {
    std::string field;
    std::string what;
};

// Context needed to check the feature part of a configuration.
struct FeatureContext {
    std::optional<std::size_t> p;
    std::optional<std::size_t> n_filters;
};

HyperValues sample_uniform(const SearchSpace& space, Rng& rng);

// Maps to [0,1]^d. Categoricals encode as index / (levels - 1). Throws
// Error(invalid_argument) naming the parameter when a value is out of bounds.
std::vector<double> to_unit(const SearchSpace& space, std::span<const double> values);
HyperValues from_unit(const SearchSpace& space, std::span<const double> unit);

double decode_unit(const ParamDef& def, double u);
double encode_unit(const ParamDef& def, double value);

std::vector<Violation> validate(const SearchSpace& space, const Configuration& config, const FeatureContext& ctx = {});

// std::floor(x + 0.5): ties round toward +infinity.
double round_half_up(double x);

// Clamp negatives to zero and renormalize; an all-zero vector becomes uniform.
void repair_simplex(std::vector<double>& w);
bool is_simplex(std::span<const double> w, double tol = 1e-9);

std::string format_value(const ParamDef& def, double value);

}  // namespace mofs
