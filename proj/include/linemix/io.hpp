#pragma once

#include "linemix/em.hpp"
#include "linemix/evaluation.hpp"
#include "linemix/order_selection.hpp"
#include "linemix/scenario.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace linemix::io {

using json = nlohmann::ordered_json;

class CsvError : public std::runtime_error {
public:
    CsvError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Shortest locale-independent form with 17 significant digits, which
/// round-trips every double.
[[nodiscard]] inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return {buf, res.ptr};
}

inline void write_csv(std::ostream& os, const Dataset& d) {
    os << (d.has_truth() ? "x,y,label\n" : "x,y\n");
    for (std::size_t n = 0; n < d.size(); ++n) {
        os << format_double(d[n].x) << ',' << format_double(d[n].y);
        if (d.has_truth()) os << ',' << d.truth()[n];
        os << '\n';
    }
}

namespace detail {

[[nodiscard]] inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
[[nodiscard]] T parse_number(std::string_view field, std::size_t line, std::string_view column) {
    T value{};
    const auto* first = field.data();
    const auto* last = field.data() + field.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last || field.empty()) {
        throw CsvError(line, "non-numeric " + std::string(column) + " field '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace detail

/// Reads `x,y` or `x,y,label` CSV with a mandatory header row.
[[nodiscard]] inline Dataset read_csv(std::istream& is) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(is, line)) throw CsvError(1, "missing header");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool labeled = false;
    if (line == "x,y,label") {
        labeled = true;
    } else if (line != "x,y") {
        throw CsvError(lineno, "bad header '" + line + "' (expected x,y or x,y,label)");
    }
    const std::size_t width = labeled ? 3 : 2;

    std::vector<Measurement> pts;
    std::vector<int> labels;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != width) {
            throw CsvError(lineno, "expected " + std::to_string(width) + " fields, found " +
                                       std::to_string(fields.size()));
        }
        Measurement m{detail::parse_number<double>(fields[0], lineno, "x"),
                      detail::parse_number<double>(fields[1], lineno, "y")};
        if (!std::isfinite(m.x) || !std::isfinite(m.y)) throw CsvError(lineno, "non-finite coordinate");
        pts.push_back(m);
        if (labeled) {
            const int label = detail::parse_number<int>(fields[2], lineno, "label");
            if (label < 1) throw CsvError(lineno, "label must be >= 1");
            labels.push_back(label);
        }
    }
    if (pts.empty()) throw CsvError(lineno, "no measurements");
    if (labeled) return Dataset(std::move(pts), std::move(labels));
    return Dataset(std::move(pts));
}

/// JSON spec-file: {"name", "targets": [{"a","b","sigma2"}], "n_range": [lo, hi], "seed"}.
[[nodiscard]] inline ScenarioSpec spec_from_json(const json& j) {
    ScenarioSpec s;
    s.name = j.value("name", std::string("custom"));
    for (const auto& t : j.at("targets")) {
        s.targets.push_back({t.at("a").get<double>(), t.at("b").get<double>(), t.value("sigma2", 50.0)});
    }
    if (j.contains("n_range")) {
        s.n_min = j.at("n_range").at(0).get<int>();
        s.n_max = j.at("n_range").at(1).get<int>();
    }
    s.seed = j.value("seed", std::uint64_t{0});
    s.validate();
    return s;
}

[[nodiscard]] inline json to_json(const ScenarioSpec& s) {
    json targets = json::array();
    for (const auto& t : s.targets) targets.push_back({{"a", t.a}, {"b", t.b}, {"sigma2", t.sigma2}});
    return {{"name", s.name}, {"targets", targets}, {"n_range", {s.n_min, s.n_max}}, {"seed", s.seed}};
}

[[nodiscard]] inline json to_json(const MixtureModel& mm) {
    json comps = json::array();
    for (const auto& c : mm.components()) comps.push_back({{"a", c.a}, {"b", c.b}, {"sigma2", c.sigma2}});
    return {{"components", comps}, {"weights", std::vector<double>(mm.weights().begin(), mm.weights().end())}};
}

[[nodiscard]] inline json to_json(const EmConfig& cfg, std::size_t L) {
    return {{"epsilon", cfg.epsilon},
            {"max_iterations", cfg.iteration_budget(L)},
            {"variance_floor_relative", cfg.floor.relative},
            {"variance_floor_absolute", cfg.floor.absolute},
            {"empty_component_fraction", cfg.empty_component_fraction}};
}

/// Model report written by `fit`.
[[nodiscard]] inline json fit_report(const Dataset& d, const FitResult& fit, const EmConfig& cfg) {
    json j;
    j["N"] = d.size();
    j["L"] = fit.model.size();
    j["config"] = to_json(cfg, fit.model.size());
    const json model = to_json(fit.model);
    j["components"] = model["components"];
    j["weights"] = model["weights"];
    j["loglik_trace"] = fit.report.loglik_trace;
    j["iterations"] = fit.report.iterations_used;
    j["converged"] = fit.report.converged;
    j["final_delta"] = fit.report.final_delta;
    j["reseed_iterations"] = fit.report.reseed_iterations;
    j["declined_reseed_iterations"] = fit.report.declined_reseed_iterations;
    j["labels"] = map_assign(fit.responsibilities).labels;
    return j;
}

/// Model-order report written by `select`.
[[nodiscard]] inline json select_report(const Dataset& d, const OrderSelectionResult& res,
                                        const EmConfig& cfg) {
    json j;
    j["N"] = d.size();
    j["criterion"] = {{"kind", std::string(to_string(res.criterion.kind))}, {"rho", res.criterion.rho}};
    j["config"] = {{"epsilon", cfg.epsilon},
                   {"L_max", res.scores.size()},
                   {"max_iterations_override", cfg.max_iterations ? json(*cfg.max_iterations) : json(nullptr)}};
    json scores = json::array();
    for (const auto& s : res.scores) {
        json row = {{"L", s.L},
                    {"feasible", s.feasible},
                    {"score", s.feasible ? json(s.score) : json(nullptr)},
                    {"loglik", s.feasible ? json(s.loglik) : json(nullptr)},
                    {"penalty", penalty(s.L, d.size(), res.criterion)},
                    {"iterations", s.iterations}};
        if (!s.failure.empty()) row["failure"] = s.failure;
        scores.push_back(row);
    }
    j["scores"] = scores;
    j["chosen_L"] = res.chosen_L;
    j["fit"] = fit_report(d, res.chosen_fit(), cfg);
    return j;
}

}  // namespace linemix::io
