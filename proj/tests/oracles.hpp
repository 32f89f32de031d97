#pragma once

// Independent reference computations used only by tests. Nothing here shares
// code paths with the library routines it checks.

#include "linemix/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace linemix::oracle {

/// Direct product-of-sums likelihood, no log-domain tricks.
inline double naive_log_likelihood(const Dataset& d, const MixtureModel& mm) {
    double total = 0.0;
    for (const auto& m : d.points()) {
        double s = 0.0;
        for (std::size_t l = 0; l < mm.size(); ++l) {
            const auto& c = mm.component(l);
            const double r = m.y - c.a * m.x - c.b;
            s += mm.weight(l) * std::exp(-r * r / (2.0 * c.sigma2)) / (std::sqrt(2.0 * std::numbers::pi) * std::sqrt(c.sigma2));
        }
        total += std::log(s);
    }
    return total;
}

struct Line {
    double a;
    double b;
};

/// Intercept first from its closed form (with A = sum p x, B = sum p x^2),
/// then slope from a = sum p (y - b) x / sum p x^2.
inline Line sequential_closed_form(const Dataset& d, std::span<const double> p) {
    double A = 0.0, B = 0.0, Syx = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
        A += p[n] * d[n].x;
        B += p[n] * d[n].x * d[n].x;
        Syx += p[n] * d[n].y * d[n].x;
    }
    double denom = 0.0, first = 0.0, second = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
        const double g = d[n].x * A - B;
        denom += p[n] * g * g;
        first += p[n] * d[n].x * g * Syx;
        second += p[n] * d[n].y * g * B;
    }
    const double b = (first - second) / denom;
    double num = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) num += p[n] * (d[n].y - b) * d[n].x;
    return {num / B, b};
}

inline long double weighted_loss(const Dataset& d, std::span<const double> p, long double a, long double b) {
    long double s = 0.0L;
    for (std::size_t n = 0; n < d.size(); ++n) {
        const long double r = d[n].y - a * d[n].x - b;
        s += p[n] * r * r;
    }
    return s;
}

/// Golden-section minimum of a unimodal function on [lo, hi].
template <typename F>
long double golden_section(F&& f, long double lo, long double hi, int iterations = 300) {
    const long double invphi = (std::sqrt(5.0L) - 1.0L) / 2.0L;
    long double c = hi - invphi * (hi - lo), dd = lo + invphi * (hi - lo);
    long double fc = f(c), fd = f(dd);
    for (int i = 0; i < iterations && hi - lo > 1e-18L * (1.0L + std::abs(lo) + std::abs(hi)); ++i) {
        if (fc < fd) {
            hi = dd;
            dd = c;
            fd = fc;
            c = hi - invphi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = dd;
            fc = fd;
            dd = lo + invphi * (hi - lo);
            fd = f(dd);
        }
    }
    return (lo + hi) / 2.0L;
}

/// Coarse grid over (a, b) followed by alternating golden-section line searches
/// in extended precision, until 25 sweeps in a row fail to lower the loss.
inline Line coordinate_descent_wls(const Dataset& d, std::span<const double> p, double a_span = 20.0,
                                   double b_span = 2000.0) {
    long double best_a = 0.0L, best_b = 0.0L, best = std::numeric_limits<long double>::infinity();
    constexpr int grid = 60;
    for (int i = 0; i <= grid; ++i) {
        for (int j = 0; j <= grid; ++j) {
            const long double a = -a_span + 2.0L * a_span * i / grid;
            const long double b = -b_span + 2.0L * b_span * j / grid;
            const long double v = weighted_loss(d, p, a, b);
            if (v < best) {
                best = v;
                best_a = a;
                best_b = b;
            }
        }
    }
    long double a = best_a, b = best_b;
    long double step_a = 2.0L * a_span / grid, step_b = 2.0L * b_span / grid;
    long double loss = weighted_loss(d, p, a, b);
    int stalled = 0;
    for (int sweep = 0; sweep < 20000 && stalled < 25; ++sweep) {
        const long double pa = a, pb = b;
        a = golden_section([&](long double t) { return weighted_loss(d, p, t, b); }, a - 4 * step_a, a + 4 * step_a);
        b = golden_section([&](long double t) { return weighted_loss(d, p, a, t); }, b - 4 * step_b, b + 4 * step_b);
        step_a = std::max(std::abs(a - pa), 1e-12L * (1.0L + std::abs(a)));
        step_b = std::max(std::abs(b - pb), 1e-12L * (1.0L + std::abs(b)));
        const long double next = weighted_loss(d, p, a, b);
        stalled = next < loss ? 0 : stalled + 1;
        loss = std::min(loss, next);
    }
    return {static_cast<double>(a), static_cast<double>(b)};
}

/// Max agreements over every injective predicted->truth assignment, by
/// enumerating permutations of max(Kp, Kt) slots.
inline std::size_t brute_force_agreements(const std::vector<int>& pred, const std::vector<int>& truth) {
    const int kp = *std::max_element(pred.begin(), pred.end());
    const int kt = *std::max_element(truth.begin(), truth.end());
    const int k = std::max(kp, kt);
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 1);
    std::size_t best = 0;
    do {
        std::size_t agree = 0;
        for (std::size_t n = 0; n < pred.size(); ++n) {
            if (perm[static_cast<std::size_t>(pred[n] - 1)] == truth[n]) ++agree;
        }
        best = std::max(best, agree);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Minimum within-cluster sum of squares over every 2-partition.
inline double best_two_partition_wcss(const std::vector<Measurement>& pts) {
    const std::size_t n = pts.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
        double wcss = 0.0;
        for (int side = 0; side < 2; ++side) {
            double mx = 0.0, my = 0.0;
            int c = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (static_cast<int>((mask >> i) & 1U) == side) {
                    mx += pts[i].x;
                    my += pts[i].y;
                    ++c;
                }
            }
            mx /= c;
            my /= c;
            for (std::size_t i = 0; i < n; ++i) {
                if (static_cast<int>((mask >> i) & 1U) == side) {
                    wcss += (pts[i].x - mx) * (pts[i].x - mx) + (pts[i].y - my) * (pts[i].y - my);
                }
            }
        }
        best = std::min(best, wcss);
    }
    return best;
}

/// Random dataset of n points near random lines, for property tests.
inline Dataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t lines) {
    std::uniform_real_distribution<double> slope(-3.0, 3.0), icpt(-500.0, 500.0), xs(0.0, 200.0), sd(1.0, 10.0);
    std::normal_distribution<double> z;
    std::vector<Line> ls;
    for (std::size_t l = 0; l < lines; ++l) ls.push_back({slope(rng), icpt(rng)});
    const double s = sd(rng);
    std::vector<Measurement> pts;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = i % lines;
        const double x = xs(rng);
        pts.push_back({x, ls[l].a * x + ls[l].b + s * z(rng)});
        labels.push_back(static_cast<int>(l) + 1);
    }
    return Dataset(std::move(pts), std::move(labels));
}

inline MixtureModel random_model(std::mt19937_64& rng, std::size_t L) {
    std::uniform_real_distribution<double> slope(-3.0, 3.0), icpt(-500.0, 500.0), var(1.0, 400.0), w(0.1, 1.0);
    std::vector<ComponentParams> comps;
    std::vector<double> weights;
    double total = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
        comps.push_back({slope(rng), icpt(rng), var(rng)});
        weights.push_back(w(rng));
        total += weights.back();
    }
    for (double& v : weights) v /= total;
    return MixtureModel(std::move(comps), std::move(weights));
}

}  // namespace linemix::oracle
