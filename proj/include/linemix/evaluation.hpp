#pragma once

#include "linemix/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace linemix {

/// Per-measurement cluster labels, 1-based.
struct Labeling {
    std::vector<int> labels;

    [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
    [[nodiscard]] int num_classes() const noexcept {
        return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
    }

    friend bool operator==(const Labeling&, const Labeling&) = default;
};

[[nodiscard]] inline Labeling truth_labeling(const Dataset& d) {
    const auto t = d.truth();
    return Labeling{{t.begin(), t.end()}};
}

/// argmax per row; ties go to the lowest component index.
[[nodiscard]] inline Labeling map_assign(const Responsibilities& r) {
    Labeling out;
    out.labels.reserve(r.rows());
    for (std::size_t n = 0; n < r.rows(); ++n) {
        const auto row = r.row(n);
        out.labels.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()) + 1);
    }
    return out;
}

/// Square assignment maximizing total profit (Hungarian / Kuhn-Munkres, O(n^3)).
/// Returns assignment[row] = column.
[[nodiscard]] inline std::vector<std::size_t> max_weight_assignment(
    const std::vector<std::vector<double>>& profit) {
    const std::size_t n = profit.size();
    if (n == 0) return {};
    constexpr double inf = std::numeric_limits<double>::infinity();
    // Potentials-based shortest augmenting path on cost = -profit, 1-based internally.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = -profit[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> assignment(n);
    for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
    return assignment;
}

/// Correspondence from predicted clusters to true targets.
struct LabelMatching {
    /// to_truth[k-1] is the true target matched to predicted cluster k, or 0 if unmatched.
    std::vector<int> to_truth;
    /// Number of measurements whose predicted cluster maps to their true target.
    std::size_t agreements = 0;

    [[nodiscard]] int operator()(int predicted) const {
        if (predicted < 1 || static_cast<std::size_t>(predicted) > to_truth.size()) return 0;
        return to_truth[predicted - 1];
    }
};

namespace detail {

inline void require_same_length(const Labeling& pred, const Labeling& truth) {
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("labelings differ in length (" + std::to_string(pred.size()) +
                                    " vs " + std::to_string(truth.size()) + ")");
    }
    const auto positive = [](int l) { return l >= 1; };
    if (!std::all_of(pred.labels.begin(), pred.labels.end(), positive) ||
        !std::all_of(truth.labels.begin(), truth.labels.end(), positive)) {
        throw std::invalid_argument("labels must be >= 1");
    }
}

}  // namespace detail

/// Injective cluster-to-target mapping maximizing the number of agreements,
/// solved as an assignment problem over the contingency table.
[[nodiscard]] inline LabelMatching match_labels(const Labeling& pred, const Labeling& truth) {
    detail::require_same_length(pred, truth);
    const std::size_t kp = static_cast<std::size_t>(std::max(pred.num_classes(), 1));
    const std::size_t kt = static_cast<std::size_t>(std::max(truth.num_classes(), 1));
    const std::size_t k = std::max(kp, kt);
    std::vector<std::vector<double>> table(k, std::vector<double>(k, 0.0));
    for (std::size_t n = 0; n < pred.size(); ++n) {
        table[static_cast<std::size_t>(pred.labels[n] - 1)][static_cast<std::size_t>(truth.labels[n] - 1)] += 1.0;
    }
    // Solve on rows sorted by content so tied optima resolve the same way
    // whatever the predicted label names are.
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return table[i] > table[j]; });
    std::vector<std::vector<double>> sorted(k);
    for (std::size_t r = 0; r < k; ++r) sorted[r] = table[order[r]];
    const auto sorted_assign = max_weight_assignment(sorted);
    std::vector<std::size_t> assign(k);
    for (std::size_t r = 0; r < k; ++r) assign[order[r]] = sorted_assign[r];
    LabelMatching m;
    m.to_truth.assign(kp, 0);
    for (std::size_t i = 0; i < kp; ++i) {
        if (assign[i] < kt) {
            m.to_truth[i] = static_cast<int>(assign[i]) + 1;
            m.agreements += static_cast<std::size_t>(table[i][assign[i]]);
        }
    }
    return m;
}

/// Percentage of measurements whose matched predicted label equals the truth.
[[nodiscard]] inline double consistency(const Labeling& pred, const Labeling& truth) {
    const auto m = match_labels(pred, truth);
    return 100.0 * static_cast<double>(m.agreements) / static_cast<double>(pred.size());
}

/// Per true target t: percentage of its measurements not mapped to t.
/// Targets with no measurements report 0.
[[nodiscard]] inline std::vector<double> per_target_error(const Labeling& pred, const Labeling& truth) {
    const auto m = match_labels(pred, truth);
    const std::size_t kt = static_cast<std::size_t>(truth.num_classes());
    std::vector<double> wrong(kt, 0.0), count(kt, 0.0);
    for (std::size_t n = 0; n < pred.size(); ++n) {
        const auto t = static_cast<std::size_t>(truth.labels[n] - 1);
        count[t] += 1.0;
        if (m(pred.labels[n]) != truth.labels[n]) wrong[t] += 1.0;
    }
    std::vector<double> out(kt, 0.0);
    for (std::size_t t = 0; t < kt; ++t) {
        if (count[t] > 0.0) out[t] = 100.0 * wrong[t] / count[t];
    }
    return out;
}

struct LineParams {
    double a = 0.0;
    double b = 0.0;
};

/// Per-target squared errors for one trial: min over fitted components,
/// independently for slope and intercept.
struct TrialParamErrors {
    std::vector<double> sq_err_a;
    std::vector<double> sq_err_b;
};

[[nodiscard]] inline TrialParamErrors nearest_param_errors(std::span<const LineParams> truth,
                                                           std::span<const LineParams> fitted) {
    if (fitted.empty()) throw std::invalid_argument("prmse: trial has no fitted components");
    TrialParamErrors e;
    for (const auto& t : truth) {
        double ba = std::numeric_limits<double>::infinity();
        double bb = std::numeric_limits<double>::infinity();
        for (const auto& f : fitted) {
            ba = std::min(ba, (t.a - f.a) * (t.a - f.a));
            bb = std::min(bb, (t.b - f.b) * (t.b - f.b));
        }
        e.sq_err_a.push_back(ba);
        e.sq_err_b.push_back(bb);
    }
    return e;
}

struct PrmseResult {
    /// Percent of |true value|, or absolute RMSE where the matching flag is set.
    std::vector<double> prmse_a;
    std::vector<double> prmse_b;
    /// True where the true parameter is zero and the value is an absolute RMSE.
    std::vector<bool> absolute_a;
    std::vector<bool> absolute_b;
};

/// Aggregates per-trial nearest-component errors into percentage RMSE.
[[nodiscard]] inline PrmseResult prmse_from_errors(std::span<const LineParams> truth,
                                                   std::span<const TrialParamErrors> trials) {
    if (trials.empty()) throw std::invalid_argument("prmse: no trials");
    const std::size_t L = truth.size();
    PrmseResult out;
    out.prmse_a.assign(L, 0.0);
    out.prmse_b.assign(L, 0.0);
    out.absolute_a.assign(L, false);
    out.absolute_b.assign(L, false);
    const double nmc = static_cast<double>(trials.size());
    for (std::size_t l = 0; l < L; ++l) {
        double sa = 0.0, sb = 0.0;
        for (const auto& t : trials) {
            sa += t.sq_err_a.at(l);
            sb += t.sq_err_b.at(l);
        }
        const double ra = std::sqrt(sa / nmc);
        const double rb = std::sqrt(sb / nmc);
        out.absolute_a[l] = truth[l].a == 0.0;
        out.absolute_b[l] = truth[l].b == 0.0;
        out.prmse_a[l] = out.absolute_a[l] ? ra : ra * 100.0 / std::abs(truth[l].a);
        out.prmse_b[l] = out.absolute_b[l] ? rb : rb * 100.0 / std::abs(truth[l].b);
    }
    return out;
}

/// PRMSE of slope and intercept per true target over Monte-Carlo trials.
[[nodiscard]] inline PrmseResult prmse(std::span<const LineParams> truth,
                                       const std::vector<std::vector<LineParams>>& estimates) {
    std::vector<TrialParamErrors> errs;
    errs.reserve(estimates.size());
    for (const auto& trial : estimates) errs.push_back(nearest_param_errors(truth, trial));
    return prmse_from_errors(truth, errs);
}

[[nodiscard]] inline double rmse_count(std::span<const std::size_t> estimates, std::size_t true_L) {
    if (estimates.empty()) throw std::invalid_argument("rmse_count: no trials");
    double s = 0.0;
    for (std::size_t e : estimates) {
        const double diff = static_cast<double>(e) - static_cast<double>(true_L);
        s += diff * diff;
    }
    return std::sqrt(s / static_cast<double>(estimates.size()));
}

[[nodiscard]] inline std::vector<LineParams> lines_of(const MixtureModel& mm) {
    std::vector<LineParams> out;
    for (const auto& c : mm.components()) out.push_back({c.a, c.b});
    return out;
}

}  // namespace linemix
