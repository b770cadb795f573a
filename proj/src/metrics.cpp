#include "mofs/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include "mofs/error.hpp"

namespace mofs {

std::vector<std::size_t> pareto_front(std::span<const Point2> pts) {
    const std::size_t n = pts.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Lexicographic sweep: after sorting by (x, y, index) a point is
    // nondominated iff its y is strictly below every y seen before it.
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(pts[a][0], pts[a][1], a) < std::tie(pts[b][0], pts[b][1], b);
    });
    std::vector<std::size_t> out;
    bool any = false;
    double best_y = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const auto i = order[t];
        if (!any || pts[i][1] < best_y) {
            out.push_back(i);
            best_y = pts[i][1];
            any = true;
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

double hypervolume_2d(std::span<const Point2> points, Point2 ref) {
    std::vector<Point2> clipped;
    clipped.reserve(points.size());
    for (const auto& p : points) {
        Point2 q{std::min(p[0], ref[0]), std::min(p[1], ref[1])};
        if (q[0] < ref[0] && q[1] < ref[1]) clipped.push_back(q);
    }
    if (clipped.empty()) return 0.0;
    auto front_idx = pareto_front(clipped);
    std::vector<Point2> front;
    for (auto i : front_idx) front.push_back(clipped[i]);
    std::sort(front.begin(), front.end());
    double area = 0.0;
    for (std::size_t i = 0; i < front.size(); ++i) {
        const double next_x = i + 1 < front.size() ? front[i + 1][0] : ref[0];
        area += (next_x - front[i][0]) * (ref[1] - front[i][1]);
    }
    return area;
}

double generalization_domhv(const ParetoReport& report, std::span<const double> test_perf, Point2 ref) {
    require(test_perf.size() == report.points.size(), "generalization_domhv: need one test error per reported point");
    std::vector<Point2> pts;
    pts.reserve(test_perf.size());
    for (std::size_t i = 0; i < test_perf.size(); ++i) pts.push_back({test_perf[i], report.points[i].optim.cost});
    return hypervolume_2d(pts, ref);
}

std::vector<double> descending_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

RankSummary rank_summary(std::span<const ResultCell> results) {
    require(!results.empty(), "rank_summary: no results");
    std::set<std::string> method_set;
    std::set<std::tuple<std::string, std::string, std::size_t>> grid;
    std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, std::size_t>> mean;
    std::set<std::tuple<std::string, std::string, std::string, std::size_t>> seen;
    for (const auto& r : results) {
        method_set.insert(r.method);
        grid.insert({r.dataset, r.learner, r.fold});
        require(seen.insert({r.method, r.dataset, r.learner, r.fold}).second,
                "rank_summary: duplicate result for " + r.method + "/" + r.dataset + "/" + r.learner + "/fold " +
                    std::to_string(r.fold));
        auto& m = mean[{r.method, r.dataset, r.learner}];
        m.first += r.domhv_gen;
        m.second += 1;
    }
    std::string missing;
    for (const auto& method : method_set) {
        for (const auto& [ds, ln, fold] : grid) {
            if (!seen.count({method, ds, ln, fold})) {
                missing += " " + method + "/" + ds + "/" + ln + "/fold" + std::to_string(fold);
            }
        }
    }
    if (!missing.empty()) fail(ErrorKind::invalid_argument, "rank_summary: incomplete result grid, missing:" + missing);

    RankSummary out;
    out.methods.assign(method_set.begin(), method_set.end());
    out.average_rank.assign(out.methods.size(), 0.0);
    std::set<std::pair<std::string, std::string>> cells;
    for (const auto& [ds, ln, fold] : grid) cells.insert({ds, ln});
    for (const auto& [ds, ln] : cells) {
        std::vector<double> vals;
        for (const auto& method : out.methods) {
            const auto& m = mean.at({method, ds, ln});
            vals.push_back(m.first / static_cast<double>(m.second));
        }
        auto r = descending_ranks(vals);
        for (std::size_t i = 0; i < r.size(); ++i) out.average_rank[i] += r[i];
    }
    out.cells = cells.size();
    const double nm = static_cast<double>(out.methods.size());
    for (auto& r : out.average_rank) {
        r /= static_cast<double>(cells.size());
        out.inverted_rank.push_back(nm + 1.0 - r);
    }
    return out;
}

}  // namespace mofs
