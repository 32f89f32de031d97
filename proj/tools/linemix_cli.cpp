// Command-line front end: simulate, fit, select, bench.

#include "linemix/linemix.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using namespace linemix;

struct Options {
    std::string scenario;
    std::string spec_file;
    std::uint64_t seed = 0;
    std::string input;
    std::size_t L = 1;
    std::size_t lmax = 10;
    std::string criterion = "bic";
    double rho = 2.0;
    double epsilon = 1e-5;
    int max_iter = 0;
    std::size_t trials = 100;
    std::vector<std::string> methods{"em", "kmeans", "knn"};
    std::size_t workers = 1;
    std::string out;
};

ScenarioSpec load_scenario(const Options& o) {
    if (!o.spec_file.empty()) {
        std::ifstream in(o.spec_file);
        if (!in) throw std::runtime_error("cannot open spec file '" + o.spec_file + "'");
        auto spec = io::spec_from_json(io::json::parse(in));
        return spec;
    }
    if (o.scenario.empty()) throw std::runtime_error("one of --scenario or --spec is required");
    return builtin(o.scenario);
}

EmConfig em_config(const Options& o) {
    EmConfig cfg;
    cfg.epsilon = o.epsilon;
    if (o.max_iter > 0) cfg.max_iterations = o.max_iter;
    cfg.validate();
    return cfg;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input '" + path + "'");
    try {
        return io::read_csv(in);
    } catch (const io::CsvError& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

/// Writes to `path`, or stdout when path is empty or "-".
void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output '" + path + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

int cmd_simulate(const Options& o) {
    ScenarioSpec spec = load_scenario(o);
    spec.seed = o.seed;
    std::ostringstream os;
    io::write_csv(os, generate(spec));
    emit(o.out, os.str());
    return 0;
}

int cmd_fit(const Options& o) {
    const Dataset d = load_dataset(o.input);
    const EmConfig cfg = em_config(o);
    const FitResult fit = fit_em(d, o.L, cfg);
    emit(o.out, io::fit_report(d, fit, cfg).dump(2) + "\n");
    return 0;
}

int cmd_select(const Options& o) {
    const Dataset d = load_dataset(o.input);
    const EmConfig cfg = em_config(o);
    const auto res = select_order(d, o.lmax, parse_criterion(o.criterion, o.rho), cfg, o.workers);
    emit(o.out, io::select_report(d, res, cfg).dump(2) + "\n");
    return 0;
}

int cmd_bench(const Options& o) {
    bench::BenchConfig cfg;
    cfg.scenario = load_scenario(o);
    cfg.methods.clear();
    for (const auto& m : o.methods) cfg.methods.push_back(bench::parse_method(m));
    cfg.trials = o.trials;
    cfg.seed = o.seed;
    cfg.em = em_config(o);
    cfg.L_max = o.lmax;
    cfg.rho = o.rho;
    cfg.workers = o.workers;
    if (o.rho < 1.0) throw std::runtime_error("--rho must be >= 1");

    const auto rep = bench::run_bench(cfg);

    const fs::path dir = o.out.empty() ? fs::path("bench_out") : fs::path(o.out);
    fs::create_directories(dir);
    emit((dir / "report.json").string(), bench::to_json(rep, utc_timestamp()).dump(2) + "\n");
    const auto write = [&](const char* name, auto&& writer) {
        std::ostringstream os;
        writer(os, rep);
        emit((dir / name).string(), os.str());
    };
    write("fig2_deltaL.csv", bench::write_delta_csv);
    write("fig5_consistency.csv", bench::write_consistency_csv);
    write("target_error.csv", bench::write_target_error_csv);
    write("table1_prmse.csv", bench::write_prmse_csv);
    const bool any_mos = std::any_of(cfg.methods.begin(), cfg.methods.end(), bench::is_mos);
    if (any_mos) write("fig11_rmseL.csv", bench::write_rmse_L_csv);

    for (const auto& a : rep.aggregates) {
        std::cerr << bench::to_string(a.method) << ": consistency " << a.mean_consistency << "%";
        if (a.rmse_L) std::cerr << ", RMSE_L " << *a.rmse_L;
        std::cerr << " (" << a.failures << " failed)\n";
    }
    if (rep.over_failure_budget()) {
        std::cerr << "error: " << rep.failed_trials() << " of " << rep.trials.size()
                  << " trials failed (budget 5%)\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cluster 2-D position measurements into straight-line trajectories"};
    app.require_subcommand(1);
    Options o;

    const auto add_scenario = [&](CLI::App* sub) {
        auto* sc = sub->add_option("--scenario", o.scenario, "Built-in scenario (scenario1, scenario2, scenario3)");
        auto* sp = sub->add_option("--spec", o.spec_file, "JSON scenario spec file");
        sc->excludes(sp);
        sub->add_option("--seed", o.seed, "Base RNG seed");
    };
    const auto add_em = [&](CLI::App* sub) {
        sub->add_option("--epsilon", o.epsilon, "Relative log-likelihood tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--max-iter", o.max_iter, "Iteration budget (default 150 for L<=5, else 250)")
            ->check(CLI::PositiveNumber);
    };

    auto* sim = app.add_subcommand("simulate", "Write a synthetic labeled dataset as CSV");
    add_scenario(sim);
    sim->add_option("--out", o.out, "Output CSV path (default stdout)");

    auto* fit = app.add_subcommand("fit", "Fit a mixture of L lines with EM");
    fit->add_option("input", o.input, "Input CSV (x,y[,label])")->required();
    fit->add_option("--L", o.L, "Number of lines")->required()->check(CLI::PositiveNumber);
    add_em(fit);
    fit->add_option("--out", o.out, "Output JSON path (default stdout)");

    auto* sel = app.add_subcommand("select", "Estimate the number of lines with AIC/BIC/GIC");
    sel->add_option("input", o.input, "Input CSV (x,y[,label])")->required();
    sel->add_option("--lmax", o.lmax, "Largest candidate order")->check(CLI::PositiveNumber);
    sel->add_option("--criterion", o.criterion, "aic | bic | gic")->check(CLI::IsMember({"aic", "bic", "gic"}));
    sel->add_option("--rho", o.rho, "GIC coefficient (>= 1)");
    add_em(sel);
    sel->add_option("--workers", o.workers, "Parallel per-L fits")->check(CLI::PositiveNumber);
    sel->add_option("--out", o.out, "Output JSON path (default stdout)");

    auto* ben = app.add_subcommand("bench", "Monte-Carlo benchmark against K-means and KNN");
    add_scenario(ben);
    ben->add_option("--methods", o.methods, "Comma-separated: em,kmeans,knn,mos-aic,mos-bic,mos-gic")
        ->delimiter(',');
    ben->add_option("--trials", o.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
    ben->add_option("--lmax", o.lmax, "Largest candidate order for mos-* methods")->check(CLI::PositiveNumber);
    ben->add_option("--rho", o.rho, "GIC coefficient (>= 1)");
    add_em(ben);
    ben->add_option("--workers", o.workers, "Parallel trials")->check(CLI::PositiveNumber);
    ben->add_option("--out", o.out, "Output directory (default bench_out)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(o);
        if (fit->parsed()) return cmd_fit(o);
        if (sel->parsed()) return cmd_select(o);
        if (ben->parsed()) return cmd_bench(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
