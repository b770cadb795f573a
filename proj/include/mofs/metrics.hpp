#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mofs/learners.hpp"
#include "mofs/searchspace.hpp"

namespace mofs {

// (perf, cost), both minimized.
using Point2 = std::array<double, 2>;

inline Point2 to_point(const ObjectiveVector& o) { return {o.perf, o.cost}; }

// a <= b componentwise and a != b.
inline bool dominates(const Point2& a, const Point2& b) noexcept {
    return a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1]);
}

// Indices (ascending) of the nondominated points; among duplicates only the
// lowest index is kept.
std::vector<std::size_t> pareto_front(std::span<const Point2> points);

// Area dominated by `points` inside the box bounded by `ref`. Coordinates
// beyond the reference are clipped to it and contribute nothing.
double hypervolume_2d(std::span<const Point2> points, Point2 ref = {1.0, 1.0});

struct ParetoPoint {
    Configuration config;
    ObjectiveVector optim;
    FeatureMask mask;
    std::size_t eval_index = 0;
};

enum class ReportSource { optim, test };

struct ParetoReport {
    std::vector<ParetoPoint> points;
    ReportSource source = ReportSource::optim;
    std::size_t eval_budget_at_report = 0;
};

// Area of the optim-selected points after their perf coordinate is replaced
// by the held-out error. The test points may dominate each other.
double generalization_domhv(const ParetoReport& report, std::span<const double> test_perf, Point2 ref = {1.0, 1.0});

struct ResultCell {
    std::string method;
    std::string dataset;
    std::string learner;
    std::size_t fold = 0;
    double domhv_gen = 0.0;
};

struct RankSummary {
    std::vector<std::string> methods;
    std::vector<double> average_rank;    // 1 = best
    std::vector<double> inverted_rank;   // (methods + 1) - average_rank, higher = better
    std::size_t cells = 0;
};

// Folds are averaged per (method, dataset, learner); methods are then ranked
// inside each (dataset, learner) cell by descending domhv_gen, ties averaged.
RankSummary rank_summary(std::span<const ResultCell> results);

// Mid-rank of each value under descending order (largest gets 1).
std::vector<double> descending_ranks(std::span<const double> values);

}  // namespace mofs
