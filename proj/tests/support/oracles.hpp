#pragma once

// Independent reference implementations used to check the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using Pt = std::array<double, 2>;

inline bool weakly_dominates(const Pt& a, const Pt& b) {
    return a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1]);
}

// Peels nondominated layers one pairwise scan at a time.
inline std::vector<std::set<std::size_t>> fronts(const std::vector<Pt>& pts) {
    std::set<std::size_t> left;
    for (std::size_t i = 0; i < pts.size(); ++i) left.insert(i);
    std::vector<std::set<std::size_t>> out;
    while (!left.empty()) {
        std::set<std::size_t> layer;
        for (auto i : left) {
            bool dominated = false;
            for (auto j : left)
                if (j != i && weakly_dominates(pts[j], pts[i])) dominated = true;
            if (!dominated) layer.insert(i);
        }
        for (auto i : layer) left.erase(i);
        out.push_back(layer);
    }
    return out;
}

// Nondominated indices; of several identical points only the first survives.
inline std::vector<std::size_t> pareto(const std::vector<Pt>& pts) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < pts.size() && keep; ++j) {
            if (j == i) continue;
            if (weakly_dominates(pts[j], pts[i])) keep = false;
            if (j < i && pts[j] == pts[i]) keep = false;
        }
        if (keep) out.push_back(i);
    }
    return out;
}

// Exact area of the union of boxes [p, ref] by coordinate compression.
inline double union_area(const std::vector<Pt>& pts, Pt ref) {
    std::vector<double> xs{ref[0]}, ys{ref[1]};
    std::vector<Pt> clipped;
    for (auto p : pts) {
        p[0] = std::min(p[0], ref[0]);
        p[1] = std::min(p[1], ref[1]);
        clipped.push_back(p);
        xs.push_back(p[0]);
        ys.push_back(p[1]);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const double cx = 0.5 * (xs[i] + xs[i + 1]), cy = 0.5 * (ys[j] + ys[j + 1]);
            bool covered = false;
            for (const auto& p : clipped)
                if (p[0] <= cx && p[1] <= cy) covered = true;
            if (covered) area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
        }
    }
    return area;
}

struct McEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

// Fraction of uniform samples in [0, ref] covered by some box [p, ref].
inline McEstimate mc_area(const std::vector<Pt>& pts, Pt ref, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> ux(0.0, ref[0]), uy(0.0, ref[1]);
    std::size_t hit = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double x = ux(eng), y = uy(eng);
        for (const auto& p : pts) {
            if (p[0] <= x && p[1] <= y) {
                ++hit;
                break;
            }
        }
    }
    const double frac = static_cast<double>(hit) / static_cast<double>(samples);
    const double box = ref[0] * ref[1];
    return {frac * box, box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(samples))};
}

inline double entropy_bits(const std::vector<double>& counts) {
    double n = 0.0, h = 0.0;
    for (double c : counts) n += c;
    for (double c : counts)
        if (c > 0) h -= c / n * std::log2(c / n);
    return h;
}

// I(X;Y) in bits from discrete codes.
template <class A, class B>
double mutual_information(const std::vector<A>& x, const std::vector<B>& y) {
    std::map<std::pair<A, B>, double> joint;
    std::map<A, double> px;
    std::map<B, double> py;
    for (std::size_t i = 0; i < x.size(); ++i) {
        joint[{x[i], y[i]}] += 1;
        px[x[i]] += 1;
        py[y[i]] += 1;
    }
    const double n = static_cast<double>(x.size());
    double mi = 0.0;
    for (const auto& [k, c] : joint) mi += c / n * std::log2(c * n / (px[k.first] * py[k.second]));
    return mi;
}

// Regularized upper incomplete gamma Q(a, x).
inline double gamma_q(double a, double x) {
    if (x <= 0.0) return 1.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double sum = 1.0 / a, term = sum, ap = a;
        for (int i = 0; i < 1000; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-15) break;
        }
        return 1.0 - sum * std::exp(-x + a * std::log(x) - lg);
    }
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - lg) * h;
}

struct ChiSquare {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
};

// Two-sample chi-square homogeneity test on count histograms. Sparse tail
// bins are pooled until each pooled bin has an expected count of at least 5.
inline ChiSquare two_sample_chi_square(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t k = std::max(a.size(), b.size());
    double na = 0.0, nb = 0.0;
    for (double v : a) na += v;
    for (double v : b) nb += v;
    std::vector<std::pair<double, double>> bins;
    std::pair<double, double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < k; ++i) {
        acc.first += i < a.size() ? a[i] : 0.0;
        acc.second += i < b.size() ? b[i] : 0.0;
        const double tot = acc.first + acc.second;
        if (tot * std::min(na, nb) / (na + nb) >= 5.0) {
            bins.push_back(acc);
            acc = {0.0, 0.0};
        }
    }
    if (acc.first + acc.second > 0) {
        if (bins.empty()) bins.push_back(acc);
        else {
            bins.back().first += acc.first;
            bins.back().second += acc.second;
        }
    }
    ChiSquare out;
    for (const auto& [x, y] : bins) {
        const double tot = x + y;
        const double ea = tot * na / (na + nb), eb = tot * nb / (na + nb);
        out.statistic += (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb;
    }
    out.dof = static_cast<double>(bins.size()) - 1.0;
    out.p_value = out.dof > 0 ? gamma_q(out.dof / 2.0, out.statistic / 2.0) : 1.0;
    return out;
}

}  // namespace oracle
