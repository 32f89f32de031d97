#pragma once

#include "linemix/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace linemix {

/// Raised when the pruning initializer runs out of usable points.
class InitializationError : public std::runtime_error {
public:
    InitializationError(std::size_t component, const std::string& what)
        : std::runtime_error("initialization degenerated at component " +
                             std::to_string(component + 1) + ": " + what),
          component_(component) {}

    /// Zero-based index of the component being fitted when the failure happened.
    [[nodiscard]] std::size_t component() const noexcept { return component_; }

private:
    std::size_t component_;
};

/// Raised when a component collapses twice in a row during fit_em.
class EmptyComponentError : public std::runtime_error {
public:
    EmptyComponentError(std::size_t component, int iteration)
        : std::runtime_error("component " + std::to_string(component + 1) +
                             " emptied on two consecutive iterations (iteration " +
                             std::to_string(iteration) + ")"),
          component_(component) {}

    [[nodiscard]] std::size_t component() const noexcept { return component_; }

private:
    std::size_t component_;
};

struct EmConfig {
    double epsilon = 1e-5;
    /// Unset means 150 for L <= 5 and 250 otherwise.
    std::optional<int> max_iterations;
    VarianceFloor floor;
    /// A component whose effective count falls below this fraction of N is re-seeded.
    double empty_component_fraction = 1e-6;

    [[nodiscard]] int iteration_budget(std::size_t L) const {
        if (max_iterations) return *max_iterations;
        return L <= 5 ? 150 : 250;
    }

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("EmConfig: epsilon must be positive");
        if (max_iterations && *max_iterations < 1) {
            throw std::invalid_argument("EmConfig: max_iterations must be >= 1");
        }
    }
};

struct FitReport {
    /// Entry 0 is the log-likelihood at initialization, entry h after iteration h.
    std::vector<double> loglik_trace;
    int iterations_used = 0;
    bool converged = false;
    double final_delta = 0.0;
    /// Iterations at which some empty component was re-seeded.
    std::vector<int> reseed_iterations;
    /// Iterations at which a re-seed would have lowered the log-likelihood and
    /// the empty components kept their previous parameters instead.
    std::vector<int> declined_reseed_iterations;

    /// Relative change |L(h) - L(h-1)| / |L(h)| for h = 1..iterations_used.
    [[nodiscard]] std::vector<double> deltas() const;
};

struct FitResult {
    MixtureModel model;
    Responsibilities responsibilities;
    FitReport report;
};

[[nodiscard]] inline double relative_change(double previous, double current) {
    if (current == 0.0) return 0.0;
    return std::abs(current - previous) / std::abs(current);
}

inline std::vector<double> FitReport::deltas() const {
    std::vector<double> out;
    for (std::size_t h = 1; h < loglik_trace.size(); ++h) {
        out.push_back(relative_change(loglik_trace[h - 1], loglik_trace[h]));
    }
    return out;
}

namespace detail {

struct LineFit {
    double a;
    double b;
};

/// Unweighted OLS over the selected indices; nullopt when x has no spread.
[[nodiscard]] inline std::optional<LineFit> ols(const Dataset& d, std::span<const std::size_t> idx) {
    if (idx.size() < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i : idx) {
        mx += d[i].x;
        my += d[i].y;
    }
    mx /= static_cast<double>(idx.size());
    my /= static_cast<double>(idx.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i : idx) {
        sxy += (d[i].x - mx) * (d[i].y - my);
        sxx += (d[i].x - mx) * (d[i].x - mx);
    }
    if (!(sxx > 0.0)) return std::nullopt;
    const double a = sxy / sxx;
    return LineFit{a, my - a * mx};
}

}  // namespace detail

/// Deterministic initialization: repeatedly fit one OLS line to the working
/// set, record it, then drop the floor(N/L) points nearest to it.
/// Weights are uniform; each variance is the mean squared residual of the
/// working set that produced the line.
[[nodiscard]] inline MixtureModel initialize(const Dataset& d, std::size_t L,
                                             const VarianceFloor& floor_policy = {}) {
    if (L < 1) throw std::invalid_argument("initialize: L must be >= 1");
    const std::size_t N = d.size();
    if (N < 2 * L) {
        throw std::invalid_argument("initialize: need at least 2L measurements (N=" +
                                    std::to_string(N) + ", L=" + std::to_string(L) + ")");
    }
    const double var_floor = variance_floor(d, floor_policy);
    const std::size_t prune = N / L;

    std::vector<std::size_t> working(N);
    std::iota(working.begin(), working.end(), std::size_t{0});
    std::vector<ComponentParams> comps;
    comps.reserve(L);

    for (std::size_t l = 0; l < L; ++l) {
        if (working.size() < 2) throw InitializationError(l, "fewer than 2 points remain");
        const auto fit = detail::ols(d, working);
        if (!fit) throw InitializationError(l, "all remaining x values are identical");

        double ss = 0.0;
        for (std::size_t i : working) {
            const double r = d[i].y - fit->a * d[i].x - fit->b;
            ss += r * r;
        }
        comps.push_back({fit->a, fit->b,
                         std::max(ss / static_cast<double>(working.size()), var_floor)});

        if (l + 1 == L) break;
        // Deviation is |r| / sqrt(a^2 + b^2); the scale is shared within a round, so
        // ranking by |r| is equivalent and stays finite when a = b = 0.
        std::vector<std::pair<double, std::size_t>> dev;
        dev.reserve(working.size());
        for (std::size_t i : working) {
            dev.emplace_back(std::abs(d[i].y - fit->a * d[i].x - fit->b), i);
        }
        std::sort(dev.begin(), dev.end());
        std::vector<std::size_t> keep;
        keep.reserve(dev.size() - std::min(prune, dev.size()));
        for (std::size_t k = std::min(prune, dev.size()); k < dev.size(); ++k) keep.push_back(dev[k].second);
        std::sort(keep.begin(), keep.end());
        working = std::move(keep);
    }
    return MixtureModel::uniform(std::move(comps));
}

/// Posterior responsibilities under `mm`; also returns log_likelihood(d, mm) when
/// `loglik` is non-null, since both come out of the same log-sum-exp.
[[nodiscard]] inline Responsibilities e_step(const Dataset& d, const MixtureModel& mm,
                                             double* loglik = nullptr) {
    const std::size_t L = mm.size();
    Responsibilities r(d.size(), L);
    std::vector<double> terms(L), scratch(L);
    double total = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
        joint_log_terms(d[n], mm, terms);
        scratch = terms;
        const double lse = log_sum_exp_inplace(scratch);
        total += lse;
        auto row = r.row(n);
        for (std::size_t l = 0; l < L; ++l) row[l] = std::exp(terms[l] - lse);
    }
    if (loglik) *loglik = total;
    return r;
}

/// pi_l = column mean of the responsibilities.
[[nodiscard]] inline std::vector<double> m_step_weights(const Responsibilities& r) {
    std::vector<double> w(r.cols(), 0.0);
    for (std::size_t n = 0; n < r.rows(); ++n) {
        const auto row = r.row(n);
        for (std::size_t l = 0; l < r.cols(); ++l) w[l] += row[l];
    }
    for (double& v : w) v /= static_cast<double>(r.rows());
    return w;
}

/// Weighted least-squares line and variance for one component. Returns nullopt
/// when the effective count is below `min_effective_count` or the weighted x
/// values have no spread (the "empty component" signal).
[[nodiscard]] inline std::optional<ComponentParams> m_step_component(
    const Dataset& d, std::span<const double> weights, double min_effective_count, double var_floor) {
    double s0 = 0.0;
    for (double w : weights) s0 += w;
    if (!(s0 >= min_effective_count) || !(s0 > 0.0)) return std::nullopt;

    // Centered weighted sums, then the 2x2 normal equations.
    double mx = 0.0, my = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
        mx += weights[n] * d[n].x;
        my += weights[n] * d[n].y;
    }
    mx /= s0;
    my /= s0;
    double sxx = 0.0, sxy = 0.0, sx2 = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
        const double dx = d[n].x - mx;
        sxx += weights[n] * dx * dx;
        sxy += weights[n] * dx * (d[n].y - my);
        sx2 += weights[n] * d[n].x * d[n].x;
    }
    if (!(sxx > 1e-12 * sx2) || !(sxx > 0.0)) return std::nullopt;

    const double a = sxy / sxx;
    const double b = my - a * mx;
    double ss = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
        const double res = d[n].y - a * d[n].x - b;
        ss += weights[n] * res * res;
    }
    return ComponentParams{a, b, std::max(ss / s0, var_floor)};
}

namespace detail {

/// Index of the measurement whose largest responsibility is smallest.
[[nodiscard]] inline std::size_t hardest_point(const Responsibilities& r) {
    std::size_t best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < r.rows(); ++n) {
        const auto row = r.row(n);
        const double m = *std::max_element(row.begin(), row.end());
        if (m < best_val) {
            best_val = m;
            best = n;
        }
    }
    return best;
}

}  // namespace detail

/// EM iterations starting from a given model.
[[nodiscard]] inline FitResult fit_em_from(const Dataset& d, MixtureModel start, const EmConfig& cfg) {
    cfg.validate();
    const std::size_t N = d.size();
    const std::size_t L = start.size();
    const int budget = cfg.iteration_budget(L);
    const double var_floor = variance_floor(d, cfg.floor);
    const double min_count = cfg.empty_component_fraction * static_cast<double>(N);

    FitReport report;
    MixtureModel model = std::move(start);
    double ll = 0.0;
    Responsibilities resp = e_step(d, model, &ll);
    report.loglik_trace.push_back(ll);

    std::vector<int> last_reseed(L, -2);
    for (int h = 1; h <= budget; ++h) {
        std::vector<double> weights = m_step_weights(resp);
        std::vector<ComponentParams> comps(L);
        std::vector<std::size_t> reseeded;
        for (std::size_t l = 0; l < L; ++l) {
            const auto col = resp.column(l);
            if (auto c = m_step_component(d, col, min_count, var_floor)) {
                comps[l] = *c;
            } else {
                reseeded.push_back(l);
            }
        }
        const double previous = ll;
        if (reseeded.empty()) {
            model = MixtureModel(std::move(comps), std::move(weights));
            resp = e_step(d, model, &ll);
        } else {
            // Re-seed through the hardest point; declined if it would lower the log-likelihood.
            const auto& p = d[detail::hardest_point(resp)];
            const double y_var = std::max(y_variance(d), var_floor);
            const double seed_w = reseeded.size() == L ? 1.0 / static_cast<double>(L)
                                                       : 1.0 / static_cast<double>(N);
            const auto is_reseeded = [&](std::size_t l) {
                return std::find(reseeded.begin(), reseeded.end(), l) != reseeded.end();
            };
            double kept = 0.0;
            for (std::size_t l = 0; l < L; ++l) {
                if (!is_reseeded(l)) kept += weights[l];
            }
            const double target = 1.0 - seed_w * static_cast<double>(reseeded.size());
            std::vector<ComponentParams> seeded = comps;
            std::vector<double> seeded_w = weights;
            for (std::size_t l = 0; l < L; ++l) {
                if (is_reseeded(l)) {
                    const double a = model.component(l).a;
                    seeded[l] = {a, p.y - a * p.x, y_var};
                    seeded_w[l] = seed_w;
                    comps[l] = model.component(l);
                } else {
                    seeded_w[l] = kept > 0.0 ? weights[l] * target / kept
                                             : target / static_cast<double>(L - reseeded.size());
                }
            }
            MixtureModel candidate(std::move(seeded), std::move(seeded_w));
            double candidate_ll = 0.0;
            Responsibilities candidate_resp = e_step(d, candidate, &candidate_ll);
            if (candidate_ll >= previous) {
                for (std::size_t l : reseeded) {
                    if (last_reseed[l] == h - 1) throw EmptyComponentError(l, h);
                    last_reseed[l] = h;
                }
                report.reseed_iterations.push_back(h);
                model = std::move(candidate);
                resp = std::move(candidate_resp);
                ll = candidate_ll;
            } else {
                report.declined_reseed_iterations.push_back(h);
                model = MixtureModel(std::move(comps), std::move(weights));
                resp = e_step(d, model, &ll);
            }
        }
        report.loglik_trace.push_back(ll);
        report.iterations_used = h;
        report.final_delta = relative_change(previous, ll);
        if (report.final_delta < cfg.epsilon) {
            report.converged = true;
            break;
        }
    }
    return FitResult{std::move(model), std::move(resp), std::move(report)};
}

/// Full EM fit with L components from the deterministic initializer.
[[nodiscard]] inline FitResult fit_em(const Dataset& d, std::size_t L, const EmConfig& cfg = {}) {
    return fit_em_from(d, initialize(d, L, cfg.floor), cfg);
}

}  // namespace linemix
