#include "mofs/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mofs/error.hpp"

namespace mofs {

MeanVar summarize_tree_predictions(std::span<const double> per_tree, double var_floor) {
    MeanVar mv;
    if (per_tree.empty()) return mv;
    const double n = static_cast<double>(per_tree.size());
    mv.mean = std::accumulate(per_tree.begin(), per_tree.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : per_tree) ss += (v - mv.mean) * (v - mv.mean);
    mv.var = std::max(ss / n, var_floor);
    return mv;
}

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    std::vector<std::uint8_t> left_levels;
    double gain = 0.0;
};

}  // namespace

void Forest::fit(const std::vector<std::vector<double>>& X, std::span<const double> y, const ColumnLevels& levels,
                 const ForestParams& params, std::uint64_t seed) {
    require(!X.empty(), "forest needs at least one training row");
    require(X.size() == y.size(), "forest design and target sizes differ");
    require(params.trees >= 1, "forest needs at least one tree");
    require(params.min_leaf >= 1, "minimum leaf size must be positive");
    const std::size_t d = levels.size();
    for (const auto& row : X) require(row.size() == d, "forest design row has the wrong width");
    for (double v : y) require(std::isfinite(v), "forest targets must be finite");

    levels_ = levels;
    trees_.clear();
    trees_.reserve(params.trees);

    const std::size_t n = X.size();
    std::vector<std::size_t> canonical(n);
    std::iota(canonical.begin(), canonical.end(), std::size_t{0});
    std::stable_sort(canonical.begin(), canonical.end(), [&](std::size_t a, std::size_t b) {
        if (X[a] != X[b]) return std::lexicographical_compare(X[a].begin(), X[a].end(), X[b].begin(), X[b].end());
        return y[a] < y[b];
    });

    const std::size_t mtry =
        d == 0 ? 0 : std::clamp<std::size_t>(params.mtry ? params.mtry : (d + 2) / 3, std::size_t{1}, d);
    std::vector<std::size_t> pool(d);
    for (std::size_t t = 0; t < params.trees; ++t) {
        Rng rng = Rng(seed).derive({t});
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = canonical[rng.index(n)];
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        Tree tree;
        grow(tree, X, y, rows, 0, n, params, mtry, pool, rng);
        trees_.push_back(std::move(tree));
    }
}

int Forest::grow(Tree& tree, const std::vector<std::vector<double>>& X, std::span<const double> y,
                 std::vector<std::size_t>& rows, std::size_t lo, std::size_t hi, const ForestParams& params,
                 std::size_t mtry, std::vector<std::size_t>& pool, Rng& rng) const {
    const int id = static_cast<int>(tree.size());
    tree.emplace_back();
    const std::size_t n = hi - lo;
    double sum = 0.0, ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (std::size_t i = lo; i < hi; ++i) {
        const double v = y[rows[i]];
        sum += v;
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    tree[id].value = sum / static_cast<double>(n);
    tree[id].count = n;
    if (n < 2 * params.min_leaf || ymax <= ymin || mtry == 0) return id;

    const double base = sum * sum / static_cast<double>(n);
    Split best;
    const std::size_t d = pool.size();
    for (std::size_t i = 0; i < mtry; ++i) {
        const std::size_t j = i + rng.index(d - i);
        std::swap(pool[i], pool[j]);
    }
    std::vector<std::size_t> order(rows.begin() + static_cast<std::ptrdiff_t>(lo),
                                   rows.begin() + static_cast<std::ptrdiff_t>(hi));
    for (std::size_t c = 0; c < mtry; ++c) {
        const std::size_t f = pool[c];
        if (levels_[f] == 0) {
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return X[a][f] < X[b][f]; });
            double left = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                left += y[order[k]];
                const std::size_t nl = k + 1, nr = n - nl;
                if (nl < params.min_leaf || nr < params.min_leaf) continue;
                const double a = X[order[k]][f], b = X[order[k + 1]][f];
                if (!(a < b)) continue;
                const double right = sum - left;
                const double gain = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr) - base;
                if (gain > best.gain + 1e-12) {
                    best.feature = static_cast<int>(f);
                    best.threshold = 0.5 * (a + b);
                    if (!(best.threshold < b)) best.threshold = a;
                    best.left_levels.clear();
                    best.gain = gain;
                }
            }
        } else {
            const std::size_t L = levels_[f];
            std::vector<double> lsum(L, 0.0);
            std::vector<std::size_t> lcount(L, 0);
            for (auto r : order) {
                const auto lv = static_cast<std::size_t>(X[r][f]);
                require(lv < L, "categorical design value out of range");
                lsum[lv] += y[r];
                ++lcount[lv];
            }
            std::vector<std::size_t> present;
            for (std::size_t l = 0; l < L; ++l)
                if (lcount[l] > 0) present.push_back(l);
            if (present.size() < 2) continue;
            std::stable_sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
                return lsum[a] / static_cast<double>(lcount[a]) < lsum[b] / static_cast<double>(lcount[b]);
            });
            double left = 0.0;
            std::size_t nl = 0;
            for (std::size_t k = 0; k + 1 < present.size(); ++k) {
                left += lsum[present[k]];
                nl += lcount[present[k]];
                const std::size_t nr = n - nl;
                if (nl < params.min_leaf || nr < params.min_leaf) continue;
                const double right = sum - left;
                const double gain = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr) - base;
                if (gain > best.gain + 1e-12) {
                    best.feature = static_cast<int>(f);
                    best.left_levels.assign(L, 0);
                    for (std::size_t t = 0; t <= k; ++t) best.left_levels[present[t]] = 1;
                    best.gain = gain;
                }
            }
        }
    }
    if (best.feature < 0) return id;

    const auto f = static_cast<std::size_t>(best.feature);
    auto goes_left = [&](std::size_t r) {
        if (levels_[f] == 0) return X[r][f] <= best.threshold;
        return best.left_levels[static_cast<std::size_t>(X[r][f])] != 0;
    };
    auto mid = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(lo),
                                     rows.begin() + static_cast<std::ptrdiff_t>(hi), goes_left);
    const auto split = static_cast<std::size_t>(mid - rows.begin());

    tree[id].feature = best.feature;
    tree[id].threshold = best.threshold;
    tree[id].left_levels = std::move(best.left_levels);
    const int l = grow(tree, X, y, rows, lo, split, params, mtry, pool, rng);
    const int r = grow(tree, X, y, rows, split, hi, params, mtry, pool, rng);
    tree[id].left = l;
    tree[id].right = r;
    return id;
}

double Forest::predict_tree(const Tree& tree, std::span<const double> x) const {
    int i = 0;
    while (tree[i].feature >= 0) {
        const auto& node = tree[i];
        const auto f = static_cast<std::size_t>(node.feature);
        bool left;
        if (levels_[f] == 0) {
            left = x[f] <= node.threshold;
        } else {
            const auto lv = static_cast<std::size_t>(x[f]);
            left = lv < node.left_levels.size() && node.left_levels[lv] != 0;
        }
        i = left ? node.left : node.right;
    }
    return tree[i].value;
}

std::vector<double> Forest::tree_predictions(std::span<const double> x) const {
    require(x.size() == levels_.size(), "prediction point has the wrong width");
    std::vector<double> out;
    out.reserve(trees_.size());
    for (const auto& t : trees_) out.push_back(predict_tree(t, x));
    return out;
}

MeanVar Forest::predict(std::span<const double> x) const {
    require(!trees_.empty(), "forest is not fitted");
    return summarize_tree_predictions(tree_predictions(x));
}

std::size_t Forest::min_leaf_size() const {
    std::size_t m = std::numeric_limits<std::size_t>::max();
    for (const auto& t : trees_)
        for (const auto& node : t)
            if (node.feature < 0) m = std::min(m, node.count);
    return m;
}

}  // namespace mofs
