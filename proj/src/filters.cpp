#include "mofs/filters.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "mofs/error.hpp"

namespace mofs {

FilterMatrix::FilterMatrix(std::size_t p, std::vector<std::string> names, std::vector<std::vector<double>> columns)
    : p_(p), names_(std::move(names)), columns_(std::move(columns)) {
    require(names_.size() == columns_.size(), "filter name count does not match column count");
    require(!columns_.empty(), "filter matrix needs at least one filter");
    for (const auto& c : columns_) require(c.size() == p_, "filter column length does not match p");
}

void FilterMatrix::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    out.precision(17);
    out << "feature,filter,scaled_score\n";
    for (std::size_t j = 0; j < p_; ++j)
        for (std::size_t m = 0; m < names_.size(); ++m) out << j << ',' << names_[m] << ',' << columns_[m][j] << '\n';
}

std::vector<double> rank_scale(std::span<const double> raw) {
    const std::size_t p = raw.size();
    for (double v : raw)
        if (std::isnan(v)) fail(ErrorKind::invalid_argument, "rank_scale: NaN score");
    if (p == 0) return {};
    if (p == 1) return {1.0};
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
    std::vector<double> out(p);
    const double step = 1.0 / static_cast<double>(p - 1);
    for (std::size_t i = 0; i < p;) {
        std::size_t j = i;
        while (j + 1 < p && raw[order[j + 1]] == raw[order[i]]) ++j;
        const double v = 0.5 * static_cast<double>(i + j) * step;
        for (std::size_t t = i; t <= j; ++t) out[order[t]] = v;
        i = j + 1;
    }
    return out;
}

std::vector<int> discretize(std::span<const double> values, int bins) {
    const std::size_t n = values.size();
    std::vector<int> codes(n, 0);
    if (n == 0) return codes;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::size_t distinct = 1;
    for (std::size_t i = 1; i < n; ++i)
        if (values[order[i]] != values[order[i - 1]]) ++distinct;

    if (distinct <= static_cast<std::size_t>(bins)) {
        int code = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0 && values[order[i]] != values[order[i - 1]]) ++code;
            codes[order[i]] = code;
        }
        return codes;
    }
    // Equal-frequency by sorted position; a run of ties keeps the bin of its first member.
    int last_raw = -1, code = -1;
    for (std::size_t i = 0; i < n; ++i) {
        int raw_bin = static_cast<int>((i * static_cast<std::size_t>(bins)) / n);
        if (i > 0 && values[order[i]] == values[order[i - 1]]) {
            codes[order[i]] = code;
            continue;
        }
        if (raw_bin != last_raw) {
            ++code;
            last_raw = raw_bin;
        }
        codes[order[i]] = code;
    }
    return codes;
}

namespace {

double entropy_of_counts(const std::vector<std::size_t>& counts, std::size_t n) {
    double h = 0.0;
    const double dn = static_cast<double>(n);
    for (auto c : counts) {
        if (c == 0) continue;
        const double q = static_cast<double>(c) / dn;
        h -= q * std::log2(q);
    }
    return h;
}

int code_count(const std::vector<int>& codes) {
    return codes.empty() ? 0 : *std::max_element(codes.begin(), codes.end()) + 1;
}

// Entropy of a joint code built from up to three discrete variables.
double joint_entropy(std::span<const std::vector<int>* const> vars, std::span<const int> cards) {
    const std::size_t n = vars[0]->size();
    std::size_t total = 1;
    for (int c : cards) total *= static_cast<std::size_t>(std::max(c, 1));
    std::vector<std::size_t> counts(total, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t code = 0;
        for (std::size_t v = 0; v < vars.size(); ++v)
            code = code * static_cast<std::size_t>(std::max(cards[v], 1)) + static_cast<std::size_t>((*vars[v])[i]);
        ++counts[code];
    }
    return entropy_of_counts(counts, n);
}

struct Discrete {
    std::vector<std::vector<int>> x;
    std::vector<int> card;
    std::vector<int> y;
    double h_y = 0.0;
};

Discrete discretize_all(const Dataset& d, int bins) {
    Discrete out;
    out.x.reserve(d.cols());
    for (std::size_t j = 0; j < d.cols(); ++j) {
        auto col = d.column(j);
        out.x.push_back(discretize(col, bins));
        out.card.push_back(code_count(out.x.back()));
    }
    out.y.assign(d.labels().begin(), d.labels().end());
    std::vector<std::size_t> yc(2, 0);
    for (int v : out.y) ++yc[static_cast<std::size_t>(v)];
    out.h_y = entropy_of_counts(yc, out.y.size());
    return out;
}

double H(std::initializer_list<const std::vector<int>*> vars, std::initializer_list<int> cards) {
    std::vector<const std::vector<int>*> v(vars);
    std::vector<int> c(cards);
    return joint_entropy(v, c);
}

double mutual_info_y(const Discrete& D, std::size_t j) {
    return H({&D.x[j]}, {D.card[j]}) + D.h_y - H({&D.x[j], &D.y}, {D.card[j], 2});
}

// I(X_j, X_k; Y)
double pair_info_y(const Discrete& D, std::size_t j, std::size_t k) {
    const double h_jk = H({&D.x[j], &D.x[k]}, {D.card[j], D.card[k]});
    const double h_jky = H({&D.x[j], &D.x[k], &D.y}, {D.card[j], D.card[k], 2});
    return h_jk + D.h_y - h_jky;
}

// I(X_j; Y | X_k)
double cond_info_y(const Discrete& D, std::size_t j, std::size_t k) {
    const double h_jk = H({&D.x[j], &D.x[k]}, {D.card[j], D.card[k]});
    const double h_yk = H({&D.y, &D.x[k]}, {2, D.card[k]});
    const double h_k = H({&D.x[k]}, {D.card[k]});
    const double h_jyk = H({&D.x[j], &D.y, &D.x[k]}, {D.card[j], 2, D.card[k]});
    return std::max(0.0, h_jk + h_yk - h_k - h_jyk);
}

constexpr double kTieTol = 1e-12;

std::size_t argmax_remaining(const std::vector<double>& score, const std::vector<bool>& taken) {
    std::size_t best = score.size();
    for (std::size_t j = 0; j < score.size(); ++j) {
        if (taken[j]) continue;
        if (best == score.size() || score[j] > score[best] + kTieTol) best = j;
    }
    return best;
}

enum class Greedy { jmi, cmim };

std::vector<double> greedy_selection(const Dataset& d, int bins, Greedy kind) {
    const auto D = discretize_all(d, bins);
    const std::size_t p = d.cols();
    std::vector<double> relevance(p);
    for (std::size_t j = 0; j < p; ++j) relevance[j] = mutual_info_y(D, j);

    std::vector<bool> taken(p, false);
    std::vector<double> raw(p, 0.0);
    std::vector<double> acc(p, kind == Greedy::jmi ? 0.0 : std::numeric_limits<double>::infinity());

    std::size_t pick = argmax_remaining(relevance, taken);
    for (std::size_t rank = 0; rank < p; ++rank) {
        taken[pick] = true;
        raw[pick] = static_cast<double>(p - rank);
        if (rank + 1 == p) break;
        for (std::size_t j = 0; j < p; ++j) {
            if (taken[j]) continue;
            if (kind == Greedy::jmi) acc[j] += pair_info_y(D, j, pick);
            else acc[j] = std::min(acc[j], cond_info_y(D, j, pick));
        }
        pick = argmax_remaining(acc, taken);
    }
    return raw;
}

}  // namespace

std::vector<double> info_gain(const Dataset& d, int bins) {
    const auto D = discretize_all(d, bins);
    std::vector<double> out(d.cols());
    for (std::size_t j = 0; j < d.cols(); ++j) {
        out[j] = D.card[j] <= 1 ? 0.0 : std::max(0.0, mutual_info_y(D, j));
    }
    return out;
}

std::vector<double> auc_score(const Dataset& d) {
    const std::size_t n = d.rows();
    const double n1 = static_cast<double>(d.count_class(1));
    const double n0 = static_cast<double>(d.count_class(0));
    std::vector<double> out(d.cols());
    std::vector<std::size_t> order(n);
    for (std::size_t j = 0; j < d.cols(); ++j) {
        auto col = d.column(j);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
        // Mann-Whitney with mid-ranks: ties contribute one half.
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < n;) {
            std::size_t k = i;
            while (k + 1 < n && col[order[k + 1]] == col[order[i]]) ++k;
            const double mid = 0.5 * static_cast<double>(i + k) + 1.0;
            for (std::size_t t = i; t <= k; ++t)
                if (d.label(order[t]) == 1) rank_sum += mid;
            i = k + 1;
        }
        const double auc = (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
        out[j] = std::abs(2.0 * auc - 1.0);
    }
    return out;
}

std::vector<double> jmi(const Dataset& d, int bins) { return greedy_selection(d, bins, Greedy::jmi); }
std::vector<double> cmim(const Dataset& d, int bins) { return greedy_selection(d, bins, Greedy::cmim); }

const std::vector<std::string>& default_filter_names() {
    static const std::vector<std::string> names{"info_gain", "auc", "jmi", "cmim"};
    return names;
}

std::vector<double> raw_filter_scores(const std::string& name, const Dataset& d, int bins) {
    if (name == "info_gain") return info_gain(d, bins);
    if (name == "auc") return auc_score(d);
    if (name == "jmi") return jmi(d, bins);
    if (name == "cmim") return cmim(d, bins);
    fail(ErrorKind::invalid_argument, "unknown filter '" + name + "'");
}

FilterMatrix compute_filter_matrix(const Dataset& d, const std::vector<std::string>& names, int bins) {
    std::vector<std::vector<double>> cols;
    cols.reserve(names.size());
    for (const auto& name : names) cols.push_back(rank_scale(raw_filter_scores(name, d, bins)));
    return FilterMatrix(d.cols(), names, std::move(cols));
}

std::vector<double> ensemble_score(const FilterMatrix& fm, std::span<const double> w) {
    require(w.size() == fm.filters(), "ensemble weight length " + std::to_string(w.size()) +
                                          " does not match filter count " + std::to_string(fm.filters()));
    std::vector<double> ef(fm.features(), 0.0);
    for (std::size_t m = 0; m < fm.filters(); ++m) {
        if (w[m] == 0.0) continue;
        auto col = fm.column(m);
        for (std::size_t j = 0; j < ef.size(); ++j) ef[j] += w[m] * col[j];
    }
    for (auto& v : ef) v = std::clamp(v, 0.0, 1.0);
    return ef;
}

std::size_t selected_count(std::size_t p, double ffrac) {
    ffrac = std::clamp(ffrac, 0.0, 1.0);
    const double target = static_cast<double>(p) * ffrac;
    auto k = static_cast<std::size_t>(std::ceil(target - 1e-9));
    return std::min(k, p);
}

FeatureMask top_fraction_mask(std::span<const double> scores, double ffrac) {
    const std::size_t p = scores.size();
    const std::size_t k = selected_count(p, ffrac);
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    FeatureMask m(p);
    for (std::size_t i = 0; i < k; ++i) m.bits[order[i]] = 1;
    return m;
}

}  // namespace mofs
