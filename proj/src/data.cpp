#include "mofs/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "mofs/error.hpp"
#include "mofs/rng.hpp"

namespace mofs {

Dataset::Dataset(std::size_t n, std::size_t p, std::vector<double> x, std::vector<std::uint8_t> y,
                 std::vector<std::string> feature_names, std::vector<double> costs,
                 std::vector<std::string> class_labels)
    : n_(n), p_(p), x_(std::move(x)), y_(std::move(y)), names_(std::move(feature_names)),
      costs_(std::move(costs)), class_labels_(std::move(class_labels)) {
    require(p_ >= 1, "dataset needs at least one feature");
    require(n_ >= 10, "dataset needs at least 10 rows, got " + std::to_string(n_));
    require(x_.size() == n_ * p_, "feature matrix size does not match n*p");
    require(y_.size() == n_, "label vector length does not match n");
    for (std::size_t i = 0; i < x_.size(); ++i) {
        if (!std::isfinite(x_[i])) {
            fail(ErrorKind::invalid_argument, "missing or non-finite value at row " + std::to_string(i / p_ + 1) +
                                                  ", column " + std::to_string(i % p_ + 1));
        }
    }
    for (auto v : y_) require(v <= 1, "labels must be 0 or 1");
    require(count_class(0) > 0 && count_class(1) > 0, "both classes must be present");
    if (names_.empty()) {
        names_.reserve(p_);
        for (std::size_t j = 0; j < p_; ++j) names_.push_back("x" + std::to_string(j + 1));
    }
    require(names_.size() == p_, "feature name count does not match p");
    if (costs_.empty()) costs_.assign(p_, 1.0 / static_cast<double>(p_));
    require(costs_.size() == p_, "cost vector length does not match p");
    for (double c : costs_) require(std::isfinite(c) && c > 0.0, "feature costs must be positive");
    require(class_labels_.size() == 2, "exactly two class labels required");
    row_ids_.resize(n_);
    std::iota(row_ids_.begin(), row_ids_.end(), std::size_t{0});
}

std::vector<double> Dataset::column(std::size_t j) const {
    std::vector<double> c(n_);
    for (std::size_t i = 0; i < n_; ++i) c[i] = x_[i * p_ + j];
    return c;
}

std::size_t Dataset::count_class(std::uint8_t c) const {
    return static_cast<std::size_t>(std::count(y_.begin(), y_.end(), c));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    require(!rows.empty(), "empty row subset");
    Dataset d{Unchecked{}};
    d.n_ = rows.size();
    d.p_ = p_;
    d.names_ = names_;
    d.costs_ = costs_;
    d.class_labels_ = class_labels_;
    d.x_.reserve(rows.size() * p_);
    d.y_.reserve(rows.size());
    d.row_ids_.reserve(rows.size());
    for (auto r : rows) {
        require(r < n_, "row index out of range in subset");
        auto rr = row(r);
        d.x_.insert(d.x_.end(), rr.begin(), rr.end());
        d.y_.push_back(y_[r]);
        d.row_ids_.push_back(row_ids_[r]);
    }
    return d;
}

Dataset Dataset::with_costs(std::vector<double> costs) const {
    require(costs.size() == p_, "cost vector length does not match p");
    for (double c : costs) require(std::isfinite(c) && c > 0.0, "feature costs must be positive");
    Dataset d = *this;
    d.costs_ = std::move(costs);
    return d;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool is_missing_token(const std::string& s) {
    return s.empty() || s == "NA" || s == "na" || s == "?" || s == "NaN" || s == "nan" || s == "null";
}

bool parse_double(const std::string& s, double& out) {
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (b != e && *b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && ptr == e && std::isfinite(out);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open CSV file " + path.string());
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::parse, path.string() + ": empty file (no header)");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
    auto header = split_csv_line(line);
    for (auto& h : header) h = trim(h);
    auto tpos = std::find(header.begin(), header.end(), target_column);
    if (tpos == header.end()) fail(ErrorKind::parse, path.string() + ": target column '" + target_column + "' not found");
    const auto tcol = static_cast<std::size_t>(tpos - header.begin());
    const std::size_t p = header.size() - 1;
    if (p == 0) fail(ErrorKind::parse, path.string() + ": no feature columns");

    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != tcol) names.push_back(header[c]);

    std::vector<double> x;
    std::vector<std::string> raw_y;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++row;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            fail(ErrorKind::parse, path.string() + ": row " + std::to_string(row) + " has " +
                                       std::to_string(cells.size()) + " cells, expected " +
                                       std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            auto cell = trim(cells[c]);
            if (is_missing_token(cell)) {
                fail(ErrorKind::parse, path.string() + ": missing value at row " + std::to_string(row) + ", column '" +
                                           header[c] + "'");
            }
            if (c == tcol) {
                raw_y.push_back(cell);
                continue;
            }
            double v = 0.0;
            if (!parse_double(cell, v)) {
                fail(ErrorKind::parse, path.string() + ": non-numeric value '" + cell + "' at row " +
                                           std::to_string(row) + ", column '" + header[c] + "'");
            }
            x.push_back(v);
        }
    }
    if (row == 0) fail(ErrorKind::parse, path.string() + ": no rows");
    std::set<std::string> classes(raw_y.begin(), raw_y.end());
    if (classes.size() != 2) {
        fail(ErrorKind::parse, path.string() + ": target must have exactly 2 distinct values, found " +
                                   std::to_string(classes.size()));
    }
    std::vector<std::string> labels(classes.begin(), classes.end());
    std::vector<std::uint8_t> y(raw_y.size());
    for (std::size_t i = 0; i < raw_y.size(); ++i) y[i] = raw_y[i] == labels[0] ? 0 : 1;
    return Dataset(row, p, std::move(x), std::move(y), std::move(names), {}, std::move(labels));
}

void write_csv(const Dataset& d, const std::filesystem::path& path, const std::string& target_column) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write CSV file " + path.string());
    out.precision(17);
    for (const auto& name : d.feature_names()) out << name << ',';
    out << target_column << '\n';
    for (std::size_t i = 0; i < d.rows(); ++i) {
        for (std::size_t j = 0; j < d.cols(); ++j) out << d.at(i, j) << ',';
        out << d.class_labels()[d.label(i)] << '\n';
    }
    if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Synthetic benchmark

SyntheticData make_synthetic(std::size_t n, std::size_t p, std::size_t k_informative, double noise_sd,
                             std::uint64_t seed) {
    require(k_informative <= p, "k_informative must not exceed p");
    require(noise_sd >= 0.0, "noise_sd must be non-negative");
    Rng rng(seed);
    Rng feature_rng = rng.derive({1});
    Rng pick_rng = rng.derive({2});
    Rng noise_rng = rng.derive({3});

    std::vector<double> x(n * p);
    for (auto& v : x) v = feature_rng.normal();

    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    pick_rng.shuffle(idx.begin(), idx.end());
    std::vector<std::size_t> informative(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k_informative));
    std::sort(informative.begin(), informative.end());

    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (auto j : informative) s += x[i * p + j];
        z[i] = s + noise_sd * noise_rng.normal();
    }
    std::vector<double> sorted = z;
    std::sort(sorted.begin(), sorted.end());
    const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = z[i] > median ? 1 : 0;

    return {Dataset(n, p, std::move(x), std::move(y)), std::move(informative)};
}

// ---------------------------------------------------------------------------
// Cross-validation

std::vector<std::size_t> CvSplit::train(std::size_t k) const {
    std::vector<std::size_t> out;
    for (std::size_t f = 0; f < folds.size(); ++f)
        if (f != k) out.insert(out.end(), folds[f].begin(), folds[f].end());
    std::sort(out.begin(), out.end());
    return out;
}

CvSplit split_cv(std::span<const std::uint8_t> labels, std::size_t k, bool stratified, std::uint64_t seed) {
    const std::size_t n = labels.size();
    require(k >= 2, "cross-validation needs at least 2 folds");
    require(k <= n, "more folds (" + std::to_string(k) + ") than rows (" + std::to_string(n) + ")");
    Rng rng(seed);
    CvSplit split;
    split.folds.resize(k);
    split.stratified = stratified;
    split.seed = seed;

    std::vector<std::vector<std::size_t>> groups;
    if (stratified) {
        groups.resize(2);
        for (std::size_t i = 0; i < n; ++i) groups[labels[i] ? 1 : 0].push_back(i);
        for (const auto& g : groups) {
            require(g.empty() || g.size() >= k,
                    "stratified CV: class with " + std::to_string(g.size()) + " rows cannot fill " +
                        std::to_string(k) + " folds");
        }
    } else {
        groups.emplace_back(n);
        std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
    }
    // Round-robin dealing continued across groups keeps fold sizes within one
    // of each other and per-class counts within one of the global ratio.
    std::size_t t = 0;
    for (auto& g : groups) {
        rng.shuffle(g.begin(), g.end());
        for (auto i : g) split.folds[t++ % k].push_back(i);
    }
    for (auto& f : split.folds) std::sort(f.begin(), f.end());
    return split;
}

}  // namespace mofs
