#pragma once

#include "linemix/model.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace linemix {

/// Counter-based 64-bit generator (SplitMix64): output k is the SplitMix
/// finalizer applied to key + k * golden-gamma. Integer-only, so streams are
/// identical on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t key) noexcept : key_(key) {}

    [[nodiscard]] static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() noexcept { return mix(key_ + (++counter_) * kGamma); }

    /// Uniform on (0, 1], 53-bit resolution.
    double uniform01() noexcept {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform integer on [lo, hi], unbiased (Lemire multiply-and-reject).
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return static_cast<std::int64_t>(next_u64());
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * range;
        auto low = static_cast<std::uint64_t>(m);
        if (low < range) {
            const std::uint64_t threshold = (0 - range) % range;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next_u64()) * range;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return lo + static_cast<std::int64_t>(m >> 64);
    }

    /// Standard normal by Box-Muller from two consecutive uniforms (cosine branch).
    double normal() noexcept {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    [[nodiscard]] std::uint64_t draws() const noexcept { return counter_; }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Independent seed for a named sub-stream of a trial (e.g. k-means seeding).
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return SplitMix64::mix(seed ^ SplitMix64::mix(stream + 0x632be59bd9b4e019ULL));
}

struct TargetSpec {
    double a = 0.0;
    double b = 0.0;
    /// 0 means noiseless.
    double sigma2 = 50.0;
};

struct ScenarioSpec {
    std::string name = "custom";
    std::vector<TargetSpec> targets;
    int n_min = 60;
    int n_max = 90;
    std::uint64_t seed = 0;

    void validate() const {
        if (targets.empty()) throw std::invalid_argument("ScenarioSpec: at least one target required");
        if (n_min < 1 || n_max < n_min) {
            throw std::invalid_argument("ScenarioSpec: n_range must be nonempty with positive lower bound");
        }
        for (const auto& t : targets) {
            if (!std::isfinite(t.a) || !std::isfinite(t.b) || !(t.sigma2 >= 0.0) || !std::isfinite(t.sigma2)) {
                throw std::invalid_argument("ScenarioSpec: invalid target parameters");
            }
        }
    }
};

/// Draws N_1..N_L, then every target's abscissas (integers in 1..N), then
/// every target's noise, in target order. Labels are 1-based target indices.
[[nodiscard]] inline Dataset generate(const ScenarioSpec& spec) {
    spec.validate();
    SplitMix64 rng(spec.seed);
    const std::size_t L = spec.targets.size();
    std::vector<std::size_t> counts(L);
    std::size_t N = 0;
    for (auto& c : counts) {
        c = static_cast<std::size_t>(rng.uniform_int(spec.n_min, spec.n_max));
        N += c;
    }
    std::vector<Measurement> pts;
    std::vector<int> labels;
    pts.reserve(N);
    labels.reserve(N);
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t k = 0; k < counts[l]; ++k) {
            pts.push_back({static_cast<double>(rng.uniform_int(1, static_cast<std::int64_t>(N))), 0.0});
            labels.push_back(static_cast<int>(l) + 1);
        }
    }
    std::size_t n = 0;
    for (std::size_t l = 0; l < L; ++l) {
        const auto& t = spec.targets[l];
        const double sd = std::sqrt(t.sigma2);
        for (std::size_t k = 0; k < counts[l]; ++k, ++n) {
            const double z = rng.normal();
            pts[n].y = t.a * pts[n].x + t.b + (t.sigma2 > 0.0 ? sd * z : 0.0);
        }
    }
    return Dataset(std::move(pts), std::move(labels));
}

inline constexpr std::string_view kBuiltinScenarios[] = {"scenario1", "scenario2", "scenario3"};

/// The three benchmark configurations: 5, 10 and 3 crossing lines, variance 50.
[[nodiscard]] inline ScenarioSpec builtin(std::string_view name) {
    ScenarioSpec s;
    s.name = std::string(name);
    if (name == "scenario1") {
        s.targets = {{-1.4826, 671, 50}, {-0.8391, 310, 50}, {0.5774, -434, 50}, {1.0, -110, 50},
                     {1.8040, 430, 50}};
    } else if (name == "scenario2") {
        s.targets = {{-4.0108, -4897, 50}, {14.3007, -6230, 50}, {0.0875, -2936, 50},
                     {-1.9626, -1774, 50}, {1.1504, 330, 50},    {-0.7265, 1997, 50},
                     {0.4663, 3245, 50},   {0.5774, 4588, 50},   {2.6051, 5846, 50},
                     {-2.4751, 6706, 50}};
    } else if (name == "scenario3") {
        s.targets = {{-1.8807, 771, 50}, {-0.2679, 410, 50}, {1.0, -129, 50}};
    } else {
        throw std::invalid_argument("unknown scenario '" + std::string(name) +
                                    "' (valid: scenario1, scenario2, scenario3)");
    }
    return s;
}

}  // namespace linemix
