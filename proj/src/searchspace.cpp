#include "mofs/searchspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "mofs/error.hpp"

namespace mofs {

const char* to_string(ParamKind kind) {
    switch (kind) {
    case ParamKind::numeric: return "numeric";
    case ParamKind::integer: return "integer";
    case ParamKind::categorical: return "categorical";
    }
    return "?";
}

ParamKind param_kind_from_string(const std::string& s) {
    if (s == "numeric" || s == "real" || s == "double") return ParamKind::numeric;
    if (s == "integer" || s == "int") return ParamKind::integer;
    if (s == "categorical" || s == "discrete") return ParamKind::categorical;
    fail(ErrorKind::parse, "unknown parameter kind '" + s + "'");
}

ParamDef ParamDef::numeric(std::string name, double lo, double hi, bool log_scale) {
    return ParamDef{std::move(name), ParamKind::numeric, lo, hi, {}, log_scale};
}

ParamDef ParamDef::integer(std::string name, std::int64_t lo, std::int64_t hi, bool log_scale) {
    return ParamDef{std::move(name), ParamKind::integer, static_cast<double>(lo), static_cast<double>(hi), {}, log_scale};
}

ParamDef ParamDef::categorical(std::string name, std::vector<std::string> levels) {
    ParamDef d{std::move(name), ParamKind::categorical, 0.0, 0.0, std::move(levels), false};
    d.hi = d.levels.empty() ? 0.0 : static_cast<double>(d.levels.size() - 1);
    return d;
}

namespace {

void check_def(const ParamDef& d) {
    require(!d.name.empty(), "parameter with empty name");
    if (d.kind == ParamKind::categorical) {
        // Single-level categoricals model constants such as a fixed kernel.
        require(!d.levels.empty(), "categorical '" + d.name + "' needs at least one level");
        std::set<std::string> uniq(d.levels.begin(), d.levels.end());
        require(uniq.size() == d.levels.size(), "categorical '" + d.name + "' has duplicate levels");
        return;
    }
    require(std::isfinite(d.lo) && std::isfinite(d.hi) && d.lo < d.hi,
            "parameter '" + d.name + "' needs finite lo < hi");
    require(!d.log_scale || d.lo > 0.0, "log-scale parameter '" + d.name + "' needs lo > 0");
    if (d.kind == ParamKind::integer) {
        require(d.lo == std::floor(d.lo) && d.hi == std::floor(d.hi),
                "integer parameter '" + d.name + "' needs integral bounds");
    }
}

}  // namespace

SearchSpace::SearchSpace(std::vector<ParamDef> params) : params_(std::move(params)) {
    std::set<std::string> names;
    for (const auto& d : params_) {
        check_def(d);
        require(names.insert(d.name).second, "duplicate parameter '" + d.name + "'");
    }
}

std::optional<std::size_t> SearchSpace::find(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i].name == name) return i;
    return std::nullopt;
}

std::size_t SearchSpace::count(ParamKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(params_.begin(), params_.end(), [kind](const ParamDef& d) { return d.kind == kind; }));
}

std::size_t FeatureMask::weight() const noexcept {
    return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

std::vector<std::size_t> FeatureMask::selected() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < bits.size(); ++j)
        if (bits[j]) out.push_back(j);
    return out;
}

std::string FeatureMask::to_string() const {
    std::string s(bits.size(), '0');
    for (std::size_t j = 0; j < bits.size(); ++j)
        if (bits[j]) s[j] = '1';
    return s;
}

FeatureMask FeatureMask::from_string(const std::string& s) {
    FeatureMask m(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
        if (s[j] == '1') m.bits[j] = 1;
        else if (s[j] != '0') fail(ErrorKind::parse, "feature mask string must contain only 0/1");
    }
    return m;
}

double round_half_up(double x) { return std::floor(x + 0.5); }

double decode_unit(const ParamDef& d, double u) {
    u = std::clamp(u, 0.0, 1.0);
    switch (d.kind) {
    case ParamKind::categorical: {
        if (d.levels.size() <= 1) return 0.0;
        return round_half_up(u * static_cast<double>(d.levels.size() - 1));
    }
    case ParamKind::numeric:
    case ParamKind::integer: {
        double v = d.log_scale ? std::exp(std::log(d.lo) + u * (std::log(d.hi) - std::log(d.lo)))
                               : d.lo + u * (d.hi - d.lo);
        if (u == 1.0) v = d.hi;
        if (u == 0.0) v = d.lo;
        if (d.kind == ParamKind::integer) v = round_half_up(v);
        return std::clamp(v, d.lo, d.hi);
    }
    }
    return 0.0;
}

double encode_unit(const ParamDef& d, double v) {
    switch (d.kind) {
    case ParamKind::categorical:
        if (d.levels.size() <= 1) return 0.0;
        return v / static_cast<double>(d.levels.size() - 1);
    case ParamKind::numeric:
    case ParamKind::integer:
        if (d.log_scale) return (std::log(v) - std::log(d.lo)) / (std::log(d.hi) - std::log(d.lo));
        return (v - d.lo) / (d.hi - d.lo);
    }
    return 0.0;
}

namespace {

bool in_bounds(const ParamDef& d, double v) {
    if (!std::isfinite(v)) return false;
    if (d.kind == ParamKind::categorical) {
        return v == std::floor(v) && v >= 0.0 && v < static_cast<double>(d.levels.size());
    }
    if (d.kind == ParamKind::integer && v != std::floor(v)) return false;
    return v >= d.lo && v <= d.hi;
}

}  // namespace

HyperValues sample_uniform(const SearchSpace& space, Rng& rng) {
    HyperValues out(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto& d = space[i];
        switch (d.kind) {
        case ParamKind::categorical:
            out[i] = static_cast<double>(rng.index(d.levels.size()));
            break;
        case ParamKind::integer:
            if (d.log_scale) {
                out[i] = decode_unit(d, rng.uniform());
            } else {
                out[i] = static_cast<double>(
                    rng.integer(static_cast<std::int64_t>(d.lo), static_cast<std::int64_t>(d.hi)));
            }
            break;
        case ParamKind::numeric:
            out[i] = decode_unit(d, rng.uniform());
            break;
        }
    }
    return out;
}

std::vector<double> to_unit(const SearchSpace& space, std::span<const double> values) {
    require(values.size() == space.size(), "hyperparameter vector length does not match the search space");
    std::vector<double> u(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& d = space[i];
        if (!in_bounds(d, values[i])) {
            fail(ErrorKind::invalid_argument, "parameter '" + d.name + "' out of bounds: " + format_value(d, values[i]));
        }
        u[i] = std::clamp(encode_unit(d, values[i]), 0.0, 1.0);
    }
    return u;
}

HyperValues from_unit(const SearchSpace& space, std::span<const double> unit) {
    require(unit.size() == space.size(), "unit vector length does not match the search space");
    HyperValues v(unit.size());
    for (std::size_t i = 0; i < unit.size(); ++i) {
        if (!std::isfinite(unit[i]) || unit[i] < 0.0 || unit[i] > 1.0) {
            fail(ErrorKind::invalid_argument, "parameter '" + space[i].name + "' unit coordinate outside [0,1]");
        }
        v[i] = decode_unit(space[i], unit[i]);
    }
    return v;
}

bool is_simplex(std::span<const double> w, double tol) {
    if (w.empty()) return false;
    double sum = 0.0;
    for (double x : w) {
        if (!std::isfinite(x) || x < 0.0 || x > 1.0 + tol) return false;
        sum += x;
    }
    return std::abs(sum - 1.0) <= tol;
}

void repair_simplex(std::vector<double>& w) {
    if (w.empty()) return;
    double sum = 0.0;
    for (auto& x : w) {
        if (!std::isfinite(x) || x < 0.0) x = 0.0;
        sum += x;
    }
    if (sum <= 0.0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
        return;
    }
    for (auto& x : w) x /= sum;
}

std::vector<Violation> validate(const SearchSpace& space, const Configuration& c, const FeatureContext& ctx) {
    std::vector<Violation> out;
    if (c.hyperparams.size() != space.size()) {
        out.push_back({"hyperparams", "length " + std::to_string(c.hyperparams.size()) + " != " +
                                          std::to_string(space.size())});
    } else {
        for (std::size_t i = 0; i < space.size(); ++i) {
            if (!in_bounds(space[i], c.hyperparams[i])) {
                out.push_back({space[i].name, "out of bounds or wrong type: " + format_value(space[i], c.hyperparams[i])});
            }
        }
    }
    if (c.mask.has_value() == c.ffrac.has_value()) {
        out.push_back({"features", "exactly one of mask or ffrac must be present"});
    }
    if (c.mask && ctx.p && c.mask->size() != *ctx.p) {
        out.push_back({"mask", "mask length " + std::to_string(c.mask->size()) + " != p = " + std::to_string(*ctx.p)});
    }
    if (c.ffrac && !(*c.ffrac >= 0.0 && *c.ffrac <= 1.0)) {
        out.push_back({"ffrac", "ffrac outside [0,1]"});
    }
    if (c.weights) {
        if (!is_simplex(*c.weights, 1e-9)) out.push_back({"weights", "simplex: weights must be >= 0 and sum to 1"});
        if (ctx.n_filters && c.weights->size() != *ctx.n_filters) {
            out.push_back({"weights", "weight vector length != number of filters"});
        }
    }
    if (c.filter_index && ctx.n_filters && *c.filter_index >= *ctx.n_filters) {
        out.push_back({"filter_index", "filter index out of range"});
    }
    if (c.weights && c.filter_index) {
        out.push_back({"features", "weights and filter_index are mutually exclusive"});
    }
    if (c.strategy) {
        const auto& s = *c.strategy;
        for (double sg : s.sigma)
            if (!(sg > 0.0)) out.push_back({"strategy", "sigma must be positive"});
        if (!(s.p_cat > 0.0 && s.p_cat < 1.0)) out.push_back({"strategy", "p_cat outside (0,1)"});
        if (!(s.p_mask > 0.0 && s.p_mask < 1.0)) out.push_back({"strategy", "p_mask outside (0,1)"});
    }
    return out;
}

std::string format_value(const ParamDef& d, double v) {
    if (d.kind == ParamKind::categorical) {
        auto i = static_cast<std::size_t>(v);
        if (v >= 0.0 && v == std::floor(v) && i < d.levels.size()) return d.levels[i];
    }
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace mofs
