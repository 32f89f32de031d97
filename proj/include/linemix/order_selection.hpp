#pragma once

#include "linemix/em.hpp"
#include "linemix/parallel.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace linemix {

enum class CriterionKind { AIC, BIC, GIC };

struct Criterion {
    CriterionKind kind = CriterionKind::BIC;
    /// GIC coefficient; ignored by AIC and BIC.
    double rho = 2.0;

    static Criterion aic() { return {CriterionKind::AIC, 2.0}; }
    static Criterion bic() { return {CriterionKind::BIC, 2.0}; }
    static Criterion gic(double rho = 2.0) {
        if (!(rho >= 1.0)) throw std::invalid_argument("GIC requires rho >= 1");
        return {CriterionKind::GIC, rho};
    }
};

[[nodiscard]] inline std::string_view to_string(CriterionKind k) {
    switch (k) {
        case CriterionKind::AIC: return "aic";
        case CriterionKind::BIC: return "bic";
        case CriterionKind::GIC: return "gic";
    }
    return "?";
}

[[nodiscard]] inline Criterion parse_criterion(std::string_view name, double rho = 2.0) {
    if (name == "aic") return Criterion::aic();
    if (name == "bic") return Criterion::bic();
    if (name == "gic") return Criterion::gic(rho);
    throw std::invalid_argument("unknown criterion '" + std::string(name) + "' (expected aic, bic or gic)");
}

/// Number of free parameters for L lines: slope, intercept, variance, weight.
[[nodiscard]] constexpr double parameter_count(std::size_t L) { return 4.0 * static_cast<double>(L); }

[[nodiscard]] inline double penalty(std::size_t L, std::size_t N, const Criterion& c) {
    const double np = parameter_count(L);
    switch (c.kind) {
        case CriterionKind::AIC: return 2.0 * np;
        case CriterionKind::GIC: return (1.0 + c.rho) * np;
        case CriterionKind::BIC: return np * std::log(static_cast<double>(N));
    }
    throw std::logic_error("unreachable criterion kind");
}

struct OrderScore {
    std::size_t L = 0;
    /// -2 loglik + p(L); +infinity when infeasible.
    double score = std::numeric_limits<double>::infinity();
    double loglik = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool feasible = false;
    std::string failure;
};

struct OrderSelectionResult {
    Criterion criterion;
    std::size_t chosen_L = 0;
    std::vector<OrderScore> scores;
    /// fits[L-1] is the EM fit with L components, empty when infeasible.
    std::vector<std::optional<FitResult>> fits;

    [[nodiscard]] const FitResult& chosen_fit() const { return *fits.at(chosen_L - 1); }
};

/// Re-scores existing per-L fits under another criterion. Log-likelihoods and
/// fits are carried over unchanged.
[[nodiscard]] inline OrderSelectionResult rescore(OrderSelectionResult res, std::size_t N,
                                                  const Criterion& c) {
    res.criterion = c;
    res.chosen_L = 0;
    double best = std::numeric_limits<double>::infinity();
    for (auto& s : res.scores) {
        if (!s.feasible) {
            s.score = std::numeric_limits<double>::infinity();
            continue;
        }
        s.score = -2.0 * s.loglik + penalty(s.L, N, c);
        if (s.score < best) {  // strict: ties keep the smaller L
            best = s.score;
            res.chosen_L = s.L;
        }
    }
    if (res.chosen_L == 0) {
        throw std::runtime_error("select_order: no feasible model order in 1.." +
                                 std::to_string(res.scores.size()));
    }
    return res;
}

/// Fits L = 1..L_max with a fresh initialization each and picks the order that
/// minimizes -2 loglik + p(L). Orders that cannot be initialized or whose fit
/// aborts are scored +infinity.
[[nodiscard]] inline OrderSelectionResult select_order(const Dataset& d, std::size_t L_max,
                                                       const Criterion& c, const EmConfig& cfg = {},
                                                       std::size_t workers = 1) {
    if (L_max < 1) throw std::invalid_argument("select_order: L_max must be >= 1");
    OrderSelectionResult res;
    res.scores.resize(L_max);
    res.fits.resize(L_max);
    parallel_for(L_max, workers, [&](std::size_t i) {
        const std::size_t L = i + 1;
        auto& s = res.scores[i];
        s.L = L;
        try {
            FitResult fit = fit_em(d, L, cfg);
            s.loglik = fit.report.loglik_trace.back();
            s.iterations = fit.report.iterations_used;
            s.feasible = std::isfinite(s.loglik);
            if (!s.feasible) s.failure = "non-finite log-likelihood";
            res.fits[i] = std::move(fit);
        } catch (const std::exception& e) {
            s.feasible = false;
            s.failure = e.what();
        }
    });
    return rescore(std::move(res), d.size(), c);
}

}  // namespace linemix
