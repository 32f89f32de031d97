#pragma once

#include "linemix/baselines.hpp"
#include "linemix/em.hpp"
#include "linemix/evaluation.hpp"
#include "linemix/io.hpp"
#include "linemix/order_selection.hpp"
#include "linemix/parallel.hpp"
#include "linemix/scenario.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace linemix::bench {

enum class Method { Em, KMeans, Knn, MosAic, MosBic, MosGic };

inline constexpr Method kAllMethods[] = {Method::Em,     Method::KMeans, Method::Knn,
                                         Method::MosAic, Method::MosBic, Method::MosGic};

[[nodiscard]] inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::Em: return "em";
        case Method::KMeans: return "kmeans";
        case Method::Knn: return "knn";
        case Method::MosAic: return "mos-aic";
        case Method::MosBic: return "mos-bic";
        case Method::MosGic: return "mos-gic";
    }
    return "?";
}

[[nodiscard]] inline Method parse_method(std::string_view s) {
    for (Method m : kAllMethods) {
        if (to_string(m) == s) return m;
    }
    throw std::invalid_argument("unknown method '" + std::string(s) +
                                "' (valid: em, kmeans, knn, mos-aic, mos-bic, mos-gic)");
}

[[nodiscard]] constexpr bool is_mos(Method m) {
    return m == Method::MosAic || m == Method::MosBic || m == Method::MosGic;
}

/// Methods that estimate line parameters (and so have PRMSE and a likelihood trace).
[[nodiscard]] constexpr bool estimates_lines(Method m) { return m == Method::Em || is_mos(m); }

// Sub-stream identifiers for derive_seed.
inline constexpr std::uint64_t kKMeansStream = 1;
inline constexpr std::uint64_t kKnnSplitStream = 2;

struct BenchConfig {
    ScenarioSpec scenario;
    std::vector<Method> methods{Method::Em, Method::KMeans, Method::Knn};
    std::size_t trials = 100;
    /// Trial t uses dataset seed `seed + t`.
    std::uint64_t seed = 0;
    std::size_t first_trial = 0;
    EmConfig em;
    std::size_t L_max = 10;
    double rho = 2.0;
    KnnConfig knn;
    int kmeans_max_iterations = 300;
    double kmeans_tolerance = 1e-6;
    std::size_t workers = 1;
};

struct MethodTrial {
    Method method = Method::Em;
    bool ok = false;
    std::string failure;
    double consistency = 0.0;
    std::vector<double> target_error;
    /// Line-estimating methods only.
    std::vector<LineParams> fitted;
    std::optional<TrialParamErrors> param_errors;
    int iterations = 0;
    std::optional<std::size_t> chosen_L;
    std::vector<double> deltas;
};

struct TrialRecord {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::size_t N = 0;
    std::vector<MethodTrial> results;

    [[nodiscard]] bool failed() const {
        return std::any_of(results.begin(), results.end(), [](const auto& r) { return !r.ok; });
    }
};

struct MethodAggregate {
    Method method = Method::Em;
    std::size_t successes = 0;
    std::size_t failures = 0;
    double mean_consistency = 0.0;
    std::vector<double> mean_target_error;
    std::optional<PrmseResult> prmse;
    std::optional<double> rmse_L;
    std::map<std::size_t, std::size_t> chosen_L_counts;
    double mean_iterations = 0.0;
    /// Averaged relative log-likelihood change per iteration h = 1..; a fit that
    /// stopped early holds its final value.
    std::vector<double> mean_delta;
};

struct BenchReport {
    BenchConfig config;
    std::vector<TrialRecord> trials;
    std::vector<MethodAggregate> aggregates;

    [[nodiscard]] std::size_t failed_trials() const {
        return static_cast<std::size_t>(std::count_if(trials.begin(), trials.end(),
                                                      [](const auto& t) { return t.failed(); }));
    }
    /// More than 5% of trials had a failing method.
    [[nodiscard]] bool over_failure_budget() const {
        return !trials.empty() && 20 * failed_trials() > trials.size();
    }
};

[[nodiscard]] inline std::vector<LineParams> true_lines(const ScenarioSpec& s) {
    std::vector<LineParams> out;
    for (const auto& t : s.targets) out.push_back({t.a, t.b});
    return out;
}

namespace detail {

inline void score_labels(MethodTrial& r, const Labeling& pred, const Labeling& truth) {
    r.consistency = consistency(pred, truth);
    r.target_error = per_target_error(pred, truth);
}

inline void score_fit(MethodTrial& r, const FitResult& fit, const Labeling& truth,
                      std::span<const LineParams> lines) {
    score_labels(r, map_assign(fit.responsibilities), truth);
    r.fitted = lines_of(fit.model);
    r.param_errors = nearest_param_errors(lines, r.fitted);
    r.iterations = fit.report.iterations_used;
    r.deltas = fit.report.deltas();
}

[[nodiscard]] inline Criterion criterion_for(Method m, double rho) {
    switch (m) {
        case Method::MosAic: return Criterion::aic();
        case Method::MosBic: return Criterion::bic();
        default: return Criterion::gic(rho);
    }
}

}  // namespace detail

/// One Monte-Carlo trial: generate the dataset, then run every requested method on it.
/// MOS methods share one set of per-L fits and differ only in scoring.
[[nodiscard]] inline TrialRecord run_trial(const BenchConfig& cfg, std::size_t trial) {
    TrialRecord rec;
    rec.trial = trial;
    rec.seed = cfg.seed + trial;
    ScenarioSpec spec = cfg.scenario;
    spec.seed = rec.seed;
    const Dataset d = generate(spec);
    rec.N = d.size();
    const Labeling truth = truth_labeling(d);
    const auto lines = true_lines(spec);
    const std::size_t L_true = spec.targets.size();

    std::optional<OrderSelectionResult> mos;
    std::string mos_failure;
    bool mos_attempted = false;

    for (Method m : cfg.methods) {
        MethodTrial r;
        r.method = m;
        try {
            switch (m) {
                case Method::Em: {
                    detail::score_fit(r, fit_em(d, L_true, cfg.em), truth, lines);
                    break;
                }
                case Method::KMeans: {
                    KMeansConfig kc{L_true, cfg.kmeans_max_iterations, cfg.kmeans_tolerance,
                                    derive_seed(rec.seed, kKMeansStream)};
                    detail::score_labels(r, kmeans(d, kc), truth);
                    break;
                }
                case Method::Knn: {
                    const auto split =
                        stratified_split(d, cfg.knn.train_fraction, derive_seed(rec.seed, kKnnSplitStream));
                    const Dataset train = d.subset(split.train);
                    const Dataset test = d.subset(split.test);
                    detail::score_labels(r, knn(train, test, cfg.knn), truth_labeling(test));
                    break;
                }
                case Method::MosAic:
                case Method::MosBic:
                case Method::MosGic: {
                    if (!mos_attempted) {
                        mos_attempted = true;
                        try {
                            mos = select_order(d, cfg.L_max, Criterion::bic(), cfg.em);
                        } catch (const std::exception& e) {
                            mos_failure = e.what();
                        }
                    }
                    if (!mos) throw std::runtime_error(mos_failure);
                    const auto res = rescore(*mos, d.size(), detail::criterion_for(m, cfg.rho));
                    detail::score_fit(r, res.chosen_fit(), truth, lines);
                    r.chosen_L = res.chosen_L;
                    break;
                }
            }
            r.ok = true;
        } catch (const std::exception& e) {
            r = MethodTrial{};
            r.method = m;
            r.failure = e.what();
        }
        rec.results.push_back(std::move(r));
    }
    return rec;
}

/// Ordered fold of trial records into per-method aggregates.
[[nodiscard]] inline std::vector<MethodAggregate> aggregate(const BenchConfig& cfg,
                                                            std::span<const TrialRecord> trials) {
    const auto lines = true_lines(cfg.scenario);
    const std::size_t L_true = lines.size();
    std::vector<MethodAggregate> out;
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        MethodAggregate agg;
        agg.method = cfg.methods[mi];
        agg.mean_target_error.assign(L_true, 0.0);
        std::vector<TrialParamErrors> errs;
        std::vector<std::size_t> chosen;
        std::size_t curve_len = 0;
        for (const auto& t : trials) {
            const auto& r = t.results.at(mi);
            if (!r.ok) {
                ++agg.failures;
                continue;
            }
            ++agg.successes;
            agg.mean_consistency += r.consistency;
            for (std::size_t l = 0; l < L_true && l < r.target_error.size(); ++l) {
                agg.mean_target_error[l] += r.target_error[l];
            }
            agg.mean_iterations += r.iterations;
            if (r.param_errors) errs.push_back(*r.param_errors);
            if (r.chosen_L) {
                chosen.push_back(*r.chosen_L);
                ++agg.chosen_L_counts[*r.chosen_L];
            }
            curve_len = std::max(curve_len, r.deltas.size());
        }
        if (agg.successes > 0) {
            const double s = static_cast<double>(agg.successes);
            agg.mean_consistency /= s;
            for (double& e : agg.mean_target_error) e /= s;
            agg.mean_iterations /= s;
        }
        if (!errs.empty()) agg.prmse = prmse_from_errors(lines, errs);
        if (!chosen.empty()) agg.rmse_L = rmse_count(chosen, L_true);
        if (estimates_lines(agg.method) && curve_len > 0) {
            if (agg.method == Method::Em) curve_len = std::max<std::size_t>(curve_len, cfg.em.iteration_budget(L_true));
            agg.mean_delta.assign(curve_len, 0.0);
            std::size_t used = 0;
            for (const auto& t : trials) {
                const auto& r = t.results.at(mi);
                if (!r.ok || r.deltas.empty()) continue;
                ++used;
                for (std::size_t h = 0; h < curve_len; ++h) {
                    agg.mean_delta[h] += r.deltas[std::min(h, r.deltas.size() - 1)];
                }
            }
            for (double& v : agg.mean_delta) v /= static_cast<double>(used);
        }
        out.push_back(std::move(agg));
    }
    return out;
}

[[nodiscard]] inline BenchReport run_bench(const BenchConfig& cfg) {
    if (cfg.trials < 1) throw std::invalid_argument("bench: trials must be >= 1");
    if (cfg.methods.empty()) throw std::invalid_argument("bench: no methods requested");
    cfg.scenario.validate();
    cfg.em.validate();
    BenchReport rep;
    rep.config = cfg;
    rep.trials.resize(cfg.trials);
    parallel_for(cfg.trials, cfg.workers,
                 [&](std::size_t i) { rep.trials[i] = run_trial(cfg, cfg.first_trial + i); });
    rep.aggregates = aggregate(cfg, rep.trials);
    return rep;
}

// ---- serialization ----

[[nodiscard]] inline io::json to_json(const BenchConfig& cfg) {
    std::vector<std::string> methods;
    for (Method m : cfg.methods) methods.emplace_back(to_string(m));
    return {{"scenario", io::to_json(cfg.scenario)},
            {"methods", methods},
            {"trials", cfg.trials},
            {"seed", cfg.seed},
            {"first_trial", cfg.first_trial},
            {"trial_seed_rule", "seed + trial index"},
            {"em", {{"epsilon", cfg.em.epsilon},
                    {"max_iterations", cfg.em.iteration_budget(cfg.scenario.targets.size())},
                    {"variance_floor_relative", cfg.em.floor.relative},
                    {"variance_floor_absolute", cfg.em.floor.absolute},
                    {"empty_component_fraction", cfg.em.empty_component_fraction}}},
            {"L_max", cfg.L_max},
            {"gic_rho", cfg.rho},
            {"knn", {{"k", cfg.knn.k}, {"train_fraction", cfg.knn.train_fraction}, {"split", "stratified per target"}}},
            {"kmeans", {{"max_iterations", cfg.kmeans_max_iterations}, {"tolerance", cfg.kmeans_tolerance},
                        {"seeding", "D^2-weighted"}}},
            {"label_matching", "optimal assignment maximizing agreements"}};
}

[[nodiscard]] inline io::json to_json(const MethodAggregate& a) {
    io::json j = {{"method", std::string(to_string(a.method))},
                  {"successes", a.successes},
                  {"failures", a.failures},
                  {"consistency_percent", a.mean_consistency},
                  {"per_target_error_percent", a.mean_target_error},
                  {"mean_iterations", a.mean_iterations}};
    if (a.prmse) {
        j["prmse_a"] = a.prmse->prmse_a;
        j["prmse_b"] = a.prmse->prmse_b;
    }
    if (a.rmse_L) {
        j["rmse_L"] = *a.rmse_L;
        io::json counts = io::json::object();
        for (const auto& [L, c] : a.chosen_L_counts) counts[std::to_string(L)] = c;
        j["chosen_L_counts"] = counts;
    }
    if (!a.mean_delta.empty()) j["mean_delta_L"] = a.mean_delta;
    return j;
}

[[nodiscard]] inline io::json to_json(const TrialRecord& t) {
    io::json results = io::json::array();
    for (const auto& r : t.results) {
        io::json j = {{"method", std::string(to_string(r.method))}, {"ok", r.ok}};
        if (!r.ok) {
            j["failure"] = r.failure;
        } else {
            j["consistency_percent"] = r.consistency;
            j["per_target_error_percent"] = r.target_error;
            if (!r.fitted.empty()) {
                io::json lines = io::json::array();
                for (const auto& f : r.fitted) lines.push_back({f.a, f.b});
                j["fitted_lines"] = lines;
                j["iterations"] = r.iterations;
            }
            if (r.chosen_L) j["chosen_L"] = *r.chosen_L;
        }
        results.push_back(j);
    }
    return {{"trial", t.trial}, {"seed", t.seed}, {"N", t.N}, {"results", results}};
}

[[nodiscard]] inline io::json to_json(const BenchReport& rep, std::string_view timestamp = {}) {
    io::json j;
    if (!timestamp.empty()) j["generated_at"] = std::string(timestamp);
    j["config"] = to_json(rep.config);
    j["failed_trials"] = rep.failed_trials();
    io::json aggs = io::json::array();
    for (const auto& a : rep.aggregates) aggs.push_back(to_json(a));
    j["aggregates"] = aggs;
    io::json trials = io::json::array();
    for (const auto& t : rep.trials) trials.push_back(to_json(t));
    j["trials"] = trials;
    return j;
}

// ---- plot-data CSVs ----

/// h, then one averaged relative-change column per line-estimating method.
inline void write_delta_csv(std::ostream& os, const BenchReport& rep) {
    std::vector<const MethodAggregate*> cols;
    std::size_t rows = 0;
    for (const auto& a : rep.aggregates) {
        if (a.mean_delta.empty()) continue;
        cols.push_back(&a);
        rows = std::max(rows, a.mean_delta.size());
    }
    os << "h";
    for (const auto* a : cols) os << ',' << to_string(a->method);
    os << '\n';
    for (std::size_t h = 0; h < rows; ++h) {
        os << h + 1;
        for (const auto* a : cols) {
            os << ',' << io::format_double(a->mean_delta[std::min(h, a->mean_delta.size() - 1)]);
        }
        os << '\n';
    }
}

/// One column per method, single row of mean consistency (%).
inline void write_consistency_csv(std::ostream& os, const BenchReport& rep) {
    for (std::size_t i = 0; i < rep.aggregates.size(); ++i) {
        os << (i ? "," : "") << to_string(rep.aggregates[i].method);
    }
    os << '\n';
    for (std::size_t i = 0; i < rep.aggregates.size(); ++i) {
        os << (i ? "," : "") << io::format_double(rep.aggregates[i].mean_consistency);
    }
    os << '\n';
}

/// target, then one mean per-target error (%) column per method.
inline void write_target_error_csv(std::ostream& os, const BenchReport& rep) {
    os << "target";
    for (const auto& a : rep.aggregates) os << ',' << to_string(a.method);
    os << '\n';
    for (std::size_t l = 0; l < rep.config.scenario.targets.size(); ++l) {
        os << l + 1;
        for (const auto& a : rep.aggregates) os << ',' << io::format_double(a.mean_target_error.at(l));
        os << '\n';
    }
}

/// method,target,a,b,prmse_a,prmse_b
inline void write_prmse_csv(std::ostream& os, const BenchReport& rep) {
    os << "method,target,a,b,prmse_a,prmse_b\n";
    const auto lines = true_lines(rep.config.scenario);
    for (const auto& a : rep.aggregates) {
        if (!a.prmse) continue;
        for (std::size_t l = 0; l < lines.size(); ++l) {
            os << to_string(a.method) << ',' << l + 1 << ',' << io::format_double(lines[l].a) << ','
               << io::format_double(lines[l].b) << ',' << io::format_double(a.prmse->prmse_a[l]) << ','
               << io::format_double(a.prmse->prmse_b[l]) << '\n';
        }
    }
}

/// One column per MOS method, single row of RMSE of the estimated target count.
inline void write_rmse_L_csv(std::ostream& os, const BenchReport& rep) {
    bool first = true;
    for (const auto& a : rep.aggregates) {
        if (!a.rmse_L) continue;
        os << (first ? "" : ",") << to_string(a.method);
        first = false;
    }
    os << '\n';
    first = true;
    for (const auto& a : rep.aggregates) {
        if (!a.rmse_L) continue;
        os << (first ? "" : ",") << io::format_double(*a.rmse_L);
        first = false;
    }
    os << '\n';
}

}  // namespace linemix::bench
