#include "mofs/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mofs/error.hpp"
#include "mofs/rng.hpp"

namespace mofs {

double mmce(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> pred) {
    require(truth.size() == pred.size(), "mmce: length mismatch (" + std::to_string(truth.size()) + " vs " +
                                             std::to_string(pred.size()) + ")");
    require(!truth.empty(), "mmce: empty input");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) wrong += truth[i] != pred[i];
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

std::uint8_t majority_class(const Dataset& d, std::span<const std::size_t> rows) {
    std::size_t ones = 0;
    for (auto r : rows) ones += d.label(r);
    return ones * 2 > rows.size() ? 1 : 0;
}

// ---------------------------------------------------------------------------
// k-NN

KnnKernel knn_kernel_from_string(const std::string& s) {
    if (s == "rectangular") return KnnKernel::rectangular;
    if (s == "triangular") return KnnKernel::triangular;
    if (s == "biweight") return KnnKernel::biweight;
    if (s == "optimal") return KnnKernel::optimal;
    fail(ErrorKind::invalid_argument, "unknown k-NN kernel '" + s + "'");
}

const std::vector<std::string>& knn_kernel_names() {
    static const std::vector<std::string> names{"rectangular", "optimal", "triangular", "biweight"};
    return names;
}

namespace {

// Samworth's rank weights as used by kknn's "optimal" kernel.
std::vector<double> optimal_rank_weights(std::size_t k, std::size_t dim) {
    const double d = static_cast<double>(std::max<std::size_t>(dim, 1));
    const double kk = static_cast<double>(k);
    const double e = 1.0 + 2.0 / d;
    std::vector<double> w(k);
    for (std::size_t i = 1; i <= k; ++i) {
        const double di = static_cast<double>(i);
        w[i - 1] = std::max(0.0, (1.0 + d / 2.0 - d / (2.0 * std::pow(kk, 2.0 / d)) *
                                                     (std::pow(di, e) - std::pow(di - 1.0, e))) / kk);
    }
    return w;
}

double kernel_weight(KnnKernel kernel, double u) {
    switch (kernel) {
    case KnnKernel::rectangular: return 0.5;
    case KnnKernel::triangular: return 1.0 - u;
    case KnnKernel::biweight: {
        const double t = 1.0 - u * u;
        return 15.0 / 16.0 * t * t;
    }
    case KnnKernel::optimal: return 1.0;
    }
    return 1.0;
}

}  // namespace

std::vector<std::uint8_t> knn_predict(const Dataset& d, std::span<const std::size_t> cols,
                                      std::span<const std::size_t> train, std::span<const std::size_t> test,
                                      const KnnParams& params) {
    require(!train.empty(), "k-NN: empty training set");
    std::vector<std::uint8_t> out(test.size(), majority_class(d, train));
    if (cols.empty() || test.empty()) return out;
    const std::uint8_t fallback = out.front();

    // Standardize with training moments; constant columns carry no distance.
    std::vector<std::size_t> use;
    std::vector<double> mean, inv_sd;
    for (auto j : cols) {
        double s = 0.0, ss = 0.0;
        for (auto r : train) s += d.at(r, j);
        const double m = s / static_cast<double>(train.size());
        for (auto r : train) ss += (d.at(r, j) - m) * (d.at(r, j) - m);
        const double sd = train.size() > 1 ? std::sqrt(ss / static_cast<double>(train.size() - 1)) : 0.0;
        if (sd > 0.0) {
            use.push_back(j);
            mean.push_back(m);
            inv_sd.push_back(1.0 / sd);
        }
    }
    const std::size_t s = use.size();
    const std::size_t nt = train.size();
    std::vector<double> tr(nt * s);
    for (std::size_t a = 0; a < nt; ++a)
        for (std::size_t c = 0; c < s; ++c) tr[a * s + c] = (d.at(train[a], use[c]) - mean[c]) * inv_sd[c];

    const std::size_t k = std::clamp<std::size_t>(params.k, 1, nt);
    const double q = params.distance;
    const bool manhattan = q == 1.0, euclid = q == 2.0;
    const std::vector<double> rank_w =
        params.kernel == KnnKernel::optimal ? optimal_rank_weights(k, s) : std::vector<double>{};

    std::vector<double> xt(s);
    std::vector<std::pair<double, std::size_t>> dist(nt);
    for (std::size_t t = 0; t < test.size(); ++t) {
        for (std::size_t c = 0; c < s; ++c) xt[c] = (d.at(test[t], use[c]) - mean[c]) * inv_sd[c];
        for (std::size_t a = 0; a < nt; ++a) {
            const double* row = &tr[a * s];
            double acc = 0.0;
            if (manhattan) {
                for (std::size_t c = 0; c < s; ++c) acc += std::abs(row[c] - xt[c]);
            } else if (euclid) {
                for (std::size_t c = 0; c < s; ++c) acc += (row[c] - xt[c]) * (row[c] - xt[c]);
            } else {
                for (std::size_t c = 0; c < s; ++c) acc += std::pow(std::abs(row[c] - xt[c]), q);
            }
            dist[a] = {acc, a};
        }
        const std::size_t need = std::min(k + 1, nt);
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(need), dist.end());
        auto root = [&](double acc) { return manhattan ? acc : euclid ? std::sqrt(acc) : std::pow(acc, 1.0 / q); };
        double maxdist = need > k ? root(dist[k].first) : root(dist[k - 1].first);
        maxdist = std::max(maxdist, 1e-6);

        double vote[2] = {0.0, 0.0};
        for (std::size_t i = 0; i < k; ++i) {
            double w = 0.0;
            if (params.kernel == KnnKernel::optimal) {
                w = rank_w[i];
            } else {
                const double u = std::clamp(root(dist[i].first) / maxdist, 1e-6, 1.0 - 1e-6);
                w = kernel_weight(params.kernel, u);
            }
            vote[d.label(train[dist[i].second])] += w;
        }
        out[t] = vote[1] > vote[0] ? 1 : vote[0] > vote[1] ? 0 : fallback;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Decision tree

void DecisionTree::fit(const Dataset& d, std::span<const std::size_t> cols, std::span<const std::size_t> rows,
                       const TreeParams& params) {
    require(!rows.empty(), "decision tree: empty training set");
    nodes_.clear();
    split_vars_.clear();
    depth_ = 0;
    std::vector<std::size_t> work(rows.begin(), rows.end());
    grow(d, cols, work, 0, work.size(), 0, params);
}

int DecisionTree::grow(const Dataset& d, std::span<const std::size_t> cols, std::vector<std::size_t>& rows,
                       std::size_t lo, std::size_t hi, int level, const TreeParams& params) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    depth_ = std::max(depth_, level);
    const std::size_t n = hi - lo;
    std::size_t ones = 0;
    for (std::size_t i = lo; i < hi; ++i) ones += d.label(rows[i]);
    nodes_[id].label = ones * 2 > n ? 1 : 0;
    if (level >= params.max_depth || n < params.min_split || n < 2 || ones == 0 || ones == n) return id;

    auto gini_sum = [](double pos, double cnt) { return cnt > 0.0 ? cnt * 2.0 * (pos / cnt) * (1.0 - pos / cnt) : 0.0; };
    const double parent = gini_sum(static_cast<double>(ones), static_cast<double>(n));
    double best_imp = parent - 1e-12;
    int best_feat = -1;
    double best_thr = 0.0;

    std::vector<std::pair<double, std::uint8_t>> vals(n);
    for (auto j : cols) {
        for (std::size_t i = 0; i < n; ++i) vals[i] = {d.at(rows[lo + i], j), d.label(rows[lo + i])};
        std::sort(vals.begin(), vals.end());
        if (vals.front().first == vals.back().first) continue;
        double left_pos = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_pos += vals[i].second;
            if (vals[i].first == vals[i + 1].first) continue;
            const double nl = static_cast<double>(i + 1), nr = static_cast<double>(n - i - 1);
            const double imp = gini_sum(left_pos, nl) + gini_sum(static_cast<double>(ones) - left_pos, nr);
            if (imp < best_imp) {
                best_imp = imp;
                best_feat = static_cast<int>(j);
                best_thr = 0.5 * (vals[i].first + vals[i + 1].first);
            }
        }
    }
    if (best_feat < 0) return id;

    auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(lo), rows.begin() + static_cast<std::ptrdiff_t>(hi),
                              [&](std::size_t r) { return d.at(r, static_cast<std::size_t>(best_feat)) <= best_thr; });
    const auto split = static_cast<std::size_t>(mid - rows.begin());
    nodes_[id].feature = best_feat;
    nodes_[id].threshold = best_thr;
    split_vars_.insert(static_cast<std::size_t>(best_feat));
    const int l = grow(d, cols, rows, lo, split, level + 1, params);
    const int r = grow(d, cols, rows, split, hi, level + 1, params);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
}

std::uint8_t DecisionTree::predict(std::span<const double> row) const {
    int i = 0;
    while (nodes_[i].feature >= 0) {
        i = row[static_cast<std::size_t>(nodes_[i].feature)] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    }
    return nodes_[i].label;
}

// ---------------------------------------------------------------------------
// Learner bindings

namespace {

double lookup(const SearchSpace& space, const HyperValues& hp, const std::optional<std::size_t>& idx, double fallback) {
    if (!idx || *idx >= hp.size()) return fallback;
    (void)space;
    return hp[*idx];
}

class KnnLearner final : public Learner {
public:
    KnnLearner(KnnParams defaults, const SearchSpace& space)
        : defaults_(defaults), space_(space), k_(space.find("k")), dist_(space.find("distance")),
          kernel_(space.find("kernel")) {
        if (kernel_) {
            const auto& def = space[*kernel_];
            require(def.kind == ParamKind::categorical, "k-NN parameter 'kernel' must be categorical");
            for (const auto& l : def.levels) kernels_.push_back(knn_kernel_from_string(l));
        }
        if (k_) require(space[*k_].kind != ParamKind::categorical, "k-NN parameter 'k' must be numeric");
        if (dist_) require(space[*dist_].kind != ParamKind::categorical, "k-NN parameter 'distance' must be numeric");
    }

    std::string name() const override { return "knn"; }

    std::vector<std::uint8_t> train_predict(const Dataset& d, const FeatureMask& mask, std::span<const std::size_t> train,
                                            std::span<const std::size_t> test, const HyperValues& hp) const override {
        KnnParams p = defaults_;
        p.k = static_cast<std::size_t>(std::max(1.0, round_half_up(lookup(space_, hp, k_, static_cast<double>(p.k)))));
        p.distance = lookup(space_, hp, dist_, p.distance);
        require(p.distance > 0.0, "k-NN distance power must be positive");
        if (kernel_) p.kernel = kernels_.at(static_cast<std::size_t>(hp.at(*kernel_)));
        const auto cols = mask.selected();
        return knn_predict(d, cols, train, test, p);
    }

private:
    KnnParams defaults_;
    SearchSpace space_;
    std::optional<std::size_t> k_, dist_, kernel_;
    std::vector<KnnKernel> kernels_;
};

class TreeLearner final : public Learner {
public:
    TreeLearner(TreeParams defaults, const SearchSpace& space)
        : defaults_(defaults), space_(space), depth_(space.find("max_depth")), split_(space.find("min_split")) {}

    std::string name() const override { return "decision_tree"; }

    std::vector<std::uint8_t> train_predict(const Dataset& d, const FeatureMask& mask, std::span<const std::size_t> train,
                                            std::span<const std::size_t> test, const HyperValues& hp) const override {
        TreeParams p = defaults_;
        p.max_depth = static_cast<int>(round_half_up(lookup(space_, hp, depth_, p.max_depth)));
        p.min_split = static_cast<std::size_t>(
            std::max(1.0, round_half_up(lookup(space_, hp, split_, static_cast<double>(p.min_split)))));
        const auto cols = mask.selected();
        if (cols.empty()) return std::vector<std::uint8_t>(test.size(), majority_class(d, train));
        DecisionTree tree;
        tree.fit(d, cols, train, p);
        std::vector<std::uint8_t> out(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) out[i] = tree.predict(d.row(test[i]));
        return out;
    }

private:
    TreeParams defaults_;
    SearchSpace space_;
    std::optional<std::size_t> depth_, split_;
};

}  // namespace

std::shared_ptr<const Learner> make_external_learner(const std::string& command, const SearchSpace& space);

std::shared_ptr<const Learner> make_learner(const LearnerSpec& spec, const SearchSpace& space) {
    switch (spec.kind) {
    case LearnerKind::knn: return std::make_shared<KnnLearner>(spec.knn, space);
    case LearnerKind::decision_tree: return std::make_shared<TreeLearner>(spec.tree, space);
    case LearnerKind::external:
        require(!spec.command.empty(), "external learner needs a command");
        return make_external_learner(spec.command, space);
    }
    fail(ErrorKind::invalid_argument, "unknown learner kind");
}

std::string learner_kind_name(LearnerKind kind) {
    switch (kind) {
    case LearnerKind::knn: return "knn";
    case LearnerKind::decision_tree: return "decision_tree";
    case LearnerKind::external: return "external";
    }
    return "?";
}

LearnerKind learner_kind_from_string(const std::string& s) {
    if (s == "knn" || s == "kknn") return LearnerKind::knn;
    if (s == "decision_tree" || s == "tree" || s == "rpart") return LearnerKind::decision_tree;
    if (s == "external") return LearnerKind::external;
    fail(ErrorKind::invalid_argument, "unknown learner '" + s + "'");
}

// ---------------------------------------------------------------------------
// Evaluation

double feature_cost(const Dataset& d, const FeatureMask& mask) {
    const auto& c = d.costs();
    const double uniform = 1.0 / static_cast<double>(d.cols());
    const bool is_uniform = std::all_of(c.begin(), c.end(), [&](double v) { return v == uniform; });
    if (is_uniform) return static_cast<double>(mask.weight()) / static_cast<double>(d.cols());
    double s = 0.0;
    for (std::size_t j = 0; j < mask.size(); ++j)
        if (mask[j]) s += c[j];
    return s;
}

FeatureMask materialize_mask(const Configuration& c, std::size_t p, const FilterMatrix* filters) {
    if (c.mask) return *c.mask;
    require(c.ffrac.has_value(), "configuration has neither mask nor ffrac");
    require(filters != nullptr, "ffrac configuration needs a filter matrix");
    require(filters->features() == p, "filter matrix feature count does not match the dataset");
    if (c.filter_index) {
        require(*c.filter_index < filters->filters(), "filter index out of range");
        return top_fraction_mask(filters->column(*c.filter_index), *c.ffrac);
    }
    require(c.weights.has_value(), "ffrac configuration needs ensemble weights or a filter index");
    return top_fraction_mask(ensemble_score(*filters, *c.weights), *c.ffrac);
}

Evaluator::Evaluator(Dataset data, CvSplit inner_cv, std::shared_ptr<const Learner> learner, SearchSpace space,
                     std::optional<FilterMatrix> filters)
    : data_(std::move(data)), cv_(std::move(inner_cv)), learner_(std::move(learner)), space_(std::move(space)),
      filters_(std::move(filters)) {
    require(learner_ != nullptr, "evaluator needs a learner");
    require(cv_.size() >= 2, "evaluator needs at least 2 inner folds");
    std::size_t covered = 0;
    for (const auto& f : cv_.folds) {
        for (auto i : f) require(i < data_.rows(), "inner CV index outside the optimization set");
        covered += f.size();
    }
    require(covered == data_.rows(), "inner CV folds must partition the optimization set");
    for (std::size_t k = 0; k < cv_.size(); ++k) train_idx_.push_back(cv_.train(k));
}

FeatureMask Evaluator::materialize(const Configuration& c) const {
    return materialize_mask(c, data_.cols(), filters());
}

Evaluation Evaluator::evaluate(const Configuration& c) const {
    count_.fetch_add(1);
    Evaluation ev;
    ev.mask = materialize(c);
    ev.objectives.cost = feature_cost(data_, ev.mask);
    try {
        double total = 0.0;
        std::vector<std::uint8_t> truth;
        for (std::size_t k = 0; k < cv_.size(); ++k) {
            const auto& test = cv_.test(k);
            auto pred = learner_->train_predict(data_, ev.mask, train_idx_[k], test, c.hyperparams);
            truth.resize(test.size());
            for (std::size_t i = 0; i < test.size(); ++i) truth[i] = data_.label(test[i]);
            total += mmce(truth, pred);
        }
        ev.objectives.perf = std::clamp(total / static_cast<double>(cv_.size()), 0.0, 1.0);
    } catch (const std::exception& e) {
        ev.objectives.perf = 1.0;
        ev.failed = true;
        ev.message = e.what();
    }
    return ev;
}

double estimate_geom_rate(const Dataset& d, std::size_t trials, std::uint64_t seed, const TreeParams& tree) {
    require(trials >= 1, "estimate_geom_rate needs at least one trial");
    Rng rng(seed);
    std::vector<std::size_t> all(d.rows()), cols(d.cols());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    const auto m = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(0.9 * static_cast<double>(d.rows()))));
    double total = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        std::iota(all.begin(), all.end(), std::size_t{0});
        rng.shuffle(all.begin(), all.end());
        std::span<const std::size_t> rows(all.data(), m);
        DecisionTree dt;
        dt.fit(d, cols, rows, tree);
        total += static_cast<double>(dt.split_variables().size());
    }
    const double mean = total / static_cast<double>(trials);
    return mean > 0.0 ? 1.0 / (1.0 + mean) : 0.5;
}

}  // namespace mofs
