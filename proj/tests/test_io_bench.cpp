#include "catch_amalgamated.hpp"

#include "linemix/bench.hpp"
#include "linemix/io.hpp"

#include <sstream>

using namespace linemix;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

Dataset parse(const std::string& text) {
    std::istringstream is(text);
    return io::read_csv(is);
}

std::size_t error_line(const std::string& text) {
    try {
        (void)parse(text);
    } catch (const io::CsvError& e) {
        return e.line();
    }
    return 0;
}

bench::BenchConfig small_config(std::vector<bench::Method> methods, std::size_t trials) {
    bench::BenchConfig cfg;
    cfg.scenario = builtin("scenario3");
    cfg.methods = std::move(methods);
    cfg.trials = trials;
    cfg.seed = 11;
    cfg.L_max = 5;
    return cfg;
}

}  // namespace

TEST_CASE("CSV round trip is bitwise", "[io]") {
    auto spec = builtin("scenario1");
    spec.seed = 7;
    const Dataset d = generate(spec);
    std::ostringstream os;
    io::write_csv(os, d);
    CHECK(os.str().rfind("x,y,label\n", 0) == 0);
    CHECK(parse(os.str()) == d);

    const Dataset odd({{0.1, 1.0 / 3.0}, {-1e-300, 6.02214076e23}, {5e-324, -0.0}});
    std::ostringstream os2;
    io::write_csv(os2, odd);
    CHECK(os2.str().rfind("x,y\n", 0) == 0);
    const Dataset back = parse(os2.str());
    for (std::size_t n = 0; n < odd.size(); ++n) {
        CHECK(std::bit_cast<std::uint64_t>(back[n].x) == std::bit_cast<std::uint64_t>(odd[n].x));
        CHECK(std::bit_cast<std::uint64_t>(back[n].y) == std::bit_cast<std::uint64_t>(odd[n].y));
    }
    CHECK_FALSE(back.has_truth());
}

TEST_CASE("CSV reader accepts minor variations", "[io]") {
    const Dataset d = parse("x,y,label\r\n1,+2,1\r\n\r\n3.5,-4e2,2\r\n");
    REQUIRE(d.size() == 2);
    CHECK(d[0] == Measurement{1.0, 2.0});
    CHECK(d[1] == Measurement{3.5, -400.0});
    CHECK(d.truth()[1] == 2);
}

TEST_CASE("CSV parse errors name the line", "[io]") {
    CHECK(error_line("") == 1);
    CHECK(error_line("a,b\n1,2\n") == 1);
    CHECK(error_line("x,y\n1,2\n3\n") == 3);
    CHECK(error_line("x,y\n1,2\n3,4,5\n") == 3);
    CHECK(error_line("x,y\n1,2\n3,4\nfoo,5\n") == 4);
    CHECK(error_line("x,y,label\n1,2,0\n") == 2);
    CHECK(error_line("x,y,label\n1,2,1.5\n") == 2);
    CHECK(error_line("x,y\n1,nan\n") == 2);
    CHECK(error_line("x,y\n") == 1);
    try {
        (void)parse("x,y\n1,2\n1,zz\n");
    } catch (const io::CsvError& e) {
        CHECK_THAT(e.what(), ContainsSubstring("line 3") && ContainsSubstring("zz"));
    }
}

TEST_CASE("spec JSON round trip", "[io]") {
    const auto j = io::json::parse(R"({"name": "two", "targets": [{"a": 1, "b": 0, "sigma2": 0},
        {"a": -2.5, "b": 40}], "n_range": [5, 8], "seed": 3})");
    const auto s = io::spec_from_json(j);
    CHECK(s.name == "two");
    REQUIRE(s.targets.size() == 2);
    CHECK(s.targets[0].sigma2 == 0.0);
    CHECK(s.targets[1].a == -2.5);
    CHECK(s.targets[1].sigma2 == 50.0);
    CHECK(s.n_min == 5);
    CHECK(s.n_max == 8);
    CHECK(s.seed == 3);
    const auto again = io::spec_from_json(io::to_json(s));
    CHECK(generate(again) == generate(s));

    CHECK_THROWS(io::spec_from_json(io::json::parse(R"({"targets": []})")));
    CHECK_THROWS(io::spec_from_json(io::json::parse(R"({"name": "x"})")));
}

TEST_CASE("fit report fields", "[io]") {
    const Dataset d({{0, 1}, {1, 3}, {2, 5}, {3, 7.5}});
    const auto fit = fit_em(d, 1);
    const auto j = io::fit_report(d, fit, {});
    for (const char* key : {"N", "L", "config", "components", "weights", "loglik_trace", "iterations", "converged",
                            "final_delta", "labels"}) {
        CHECK(j.contains(key));
    }
    CHECK(j["labels"].size() == 4);
    CHECK(j["components"][0].contains("sigma2"));
}

TEST_CASE("bench with one trial equals that trial", "[bench]") {
    using bench::Method;
    const auto cfg = small_config({Method::Em, Method::KMeans, Method::Knn, Method::MosBic}, 1);
    const auto rep = bench::run_bench(cfg);
    REQUIRE(rep.trials.size() == 1);
    const auto& t = rep.trials[0];
    CHECK(t.seed == cfg.seed);
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        const auto& a = rep.aggregates[m];
        const auto& r = t.results[m];
        REQUIRE(r.ok);
        CHECK(a.successes == 1);
        CHECK(a.mean_consistency == r.consistency);
        CHECK(a.mean_target_error == r.target_error);
        if (r.param_errors) {
            REQUIRE(a.prmse);
            for (std::size_t l = 0; l < 3; ++l) {
                const double ta = cfg.scenario.targets[l].a;
                CHECK_THAT(a.prmse->prmse_a[l], WithinRel(std::sqrt(r.param_errors->sq_err_a[l]) * 100.0 / std::abs(ta), 1e-12));
            }
        }
    }
    CHECK_FALSE(rep.aggregates[1].prmse);
    CHECK_FALSE(rep.aggregates[2].prmse);
    REQUIRE(rep.aggregates[3].rmse_L);
    const double diff = static_cast<double>(*t.results[3].chosen_L) - 3.0;
    CHECK(*rep.aggregates[3].rmse_L == std::abs(diff));
}

TEST_CASE("two half runs merge into the full run", "[bench]") {
    using bench::Method;
    auto cfg = small_config({Method::Em, Method::KMeans, Method::Knn}, 40);
    const auto full = bench::run_bench(cfg);
    auto first = cfg;
    first.trials = 20;
    auto second = cfg;
    second.trials = 20;
    second.first_trial = 20;
    const auto a = bench::run_bench(first);
    const auto b = bench::run_bench(second);
    std::vector<bench::TrialRecord> merged = a.trials;
    merged.insert(merged.end(), b.trials.begin(), b.trials.end());
    const auto agg = bench::aggregate(cfg, merged);
    REQUIRE(agg.size() == full.aggregates.size());
    for (std::size_t m = 0; m < agg.size(); ++m) CHECK(bench::to_json(agg[m]) == bench::to_json(full.aggregates[m]));
    for (std::size_t i = 0; i < merged.size(); ++i) CHECK(bench::to_json(merged[i]) == bench::to_json(full.trials[i]));
}

TEST_CASE("serial and parallel benches produce identical reports", "[bench]") {
    using bench::Method;
    auto cfg = small_config({Method::Em, Method::KMeans, Method::Knn, Method::MosAic, Method::MosBic}, 12);
    const auto serial = bench::to_json(bench::run_bench(cfg)).dump();
    cfg.workers = 4;
    const auto parallel = bench::to_json(bench::run_bench(cfg)).dump();
    CHECK(serial == parallel);
}

TEST_CASE("bench plot-data CSV headers", "[bench]") {
    using bench::Method;
    const auto rep = bench::run_bench(small_config({Method::Em, Method::KMeans, Method::MosBic, Method::MosGic}, 3));
    std::ostringstream delta, cons, prm, rl, te;
    bench::write_delta_csv(delta, rep);
    bench::write_consistency_csv(cons, rep);
    bench::write_prmse_csv(prm, rep);
    bench::write_rmse_L_csv(rl, rep);
    bench::write_target_error_csv(te, rep);
    CHECK(delta.str().rfind("h,em,mos-bic,mos-gic\n1,", 0) == 0);
    CHECK(cons.str().rfind("em,kmeans,mos-bic,mos-gic\n", 0) == 0);
    CHECK(prm.str().rfind("method,target,a,b,prmse_a,prmse_b\nem,1,", 0) == 0);
    CHECK(rl.str().rfind("mos-bic,mos-gic\n", 0) == 0);
    CHECK(te.str().rfind("target,em,kmeans,mos-bic,mos-gic\n1,", 0) == 0);
    // Em curve spans at least the iteration budget.
    std::size_t rows = 0;
    for (char c : delta.str()) rows += c == '\n';
    CHECK(rows >= 151);
}

TEST_CASE("method names", "[bench]") {
    for (auto m : bench::kAllMethods) CHECK(bench::parse_method(bench::to_string(m)) == m);
    CHECK_THROWS_AS(bench::parse_method("svm"), std::invalid_argument);
}
