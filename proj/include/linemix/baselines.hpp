#pragma once

#include "linemix/evaluation.hpp"
#include "linemix/model.hpp"
#include "linemix/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace linemix {

struct KMeansConfig {
    std::size_t K = 1;
    int max_iterations = 300;
    /// Stop once no centroid moves farther than this.
    double tolerance = 1e-6;
    std::uint64_t seed = 0;
};

struct KMeansResult {
    Labeling labeling;
    std::vector<Measurement> centroids;
    /// Within-cluster sum of squares after each assignment step.
    std::vector<double> objective_trace;
};

namespace detail {

[[nodiscard]] inline double sq_dist(const Measurement& p, const Measurement& q) noexcept {
    const double dx = p.x - q.x, dy = p.y - q.y;
    return dx * dx + dy * dy;
}

}  // namespace detail

/// Lloyd's algorithm in the raw (x, y) plane with D^2-weighted seeding.
[[nodiscard]] inline KMeansResult kmeans_detailed(const Dataset& d, const KMeansConfig& cfg) {
    const std::size_t N = d.size();
    const std::size_t K = cfg.K;
    if (K < 1) throw std::invalid_argument("kmeans: K must be >= 1");
    if (N < K) throw std::invalid_argument("kmeans: fewer points than clusters");
    SplitMix64 rng(cfg.seed);

    std::vector<Measurement> centers;
    centers.reserve(K);
    centers.push_back(d[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(N) - 1))]);
    std::vector<double> nearest(N);
    for (std::size_t n = 0; n < N; ++n) nearest[n] = detail::sq_dist(d[n], centers[0]);
    while (centers.size() < K) {
        const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform01() * total;
            double acc = 0.0;
            pick = N - 1;
            for (std::size_t n = 0; n < N; ++n) {
                acc += nearest[n];
                if (acc >= target && nearest[n] > 0.0) {
                    pick = n;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(N) - 1));
        }
        centers.push_back(d[pick]);
        for (std::size_t n = 0; n < N; ++n) {
            nearest[n] = std::min(nearest[n], detail::sq_dist(d[n], centers.back()));
        }
    }

    KMeansResult res;
    std::vector<std::size_t> assign(N, 0);
    for (int it = 0; it < cfg.max_iterations; ++it) {
        double objective = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < K; ++k) {
                const double dist = detail::sq_dist(d[n], centers[k]);
                if (dist < best) {
                    best = dist;
                    assign[n] = k;
                }
            }
            objective += best;
        }
        res.objective_trace.push_back(objective);

        std::vector<Measurement> sums(K);
        std::vector<std::size_t> counts(K, 0);
        for (std::size_t n = 0; n < N; ++n) {
            sums[assign[n]].x += d[n].x;
            sums[assign[n]].y += d[n].y;
            ++counts[assign[n]];
        }
        double shift = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            Measurement next;
            if (counts[k] == 0) {
                // Empty cluster: move it onto the point farthest from its current centroid.
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t n = 0; n < N; ++n) {
                    const double dist = detail::sq_dist(d[n], centers[assign[n]]);
                    if (dist > far_d) {
                        far_d = dist;
                        far = n;
                    }
                }
                next = d[far];
            } else {
                next = {sums[k].x / static_cast<double>(counts[k]), sums[k].y / static_cast<double>(counts[k])};
            }
            shift = std::max(shift, std::sqrt(detail::sq_dist(next, centers[k])));
            centers[k] = next;
        }
        if (shift <= cfg.tolerance) break;
    }

    // Final labels against the final centroids.
    for (std::size_t n = 0; n < N; ++n) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
            const double dist = detail::sq_dist(d[n], centers[k]);
            if (dist < best) {
                best = dist;
                assign[n] = k;
            }
        }
    }
    res.labeling.labels.resize(N);
    for (std::size_t n = 0; n < N; ++n) res.labeling.labels[n] = static_cast<int>(assign[n]) + 1;
    res.centroids = std::move(centers);
    return res;
}

[[nodiscard]] inline Labeling kmeans(const Dataset& d, const KMeansConfig& cfg) {
    return kmeans_detailed(d, cfg).labeling;
}

struct KnnConfig {
    std::size_t k = 50;
    double train_fraction = 0.4;

    void validate() const {
        if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
            throw std::invalid_argument("knn: train_fraction must lie in (0, 1)");
        }
    }
};

/// Majority vote of the k nearest training points; distance ties go to the
/// lower training index, vote ties to the lowest label.
[[nodiscard]] inline Labeling knn(const Dataset& train, const Dataset& test, const KnnConfig& cfg) {
    cfg.validate();
    if (!train.has_truth()) throw std::invalid_argument("knn: training set needs truth labels");
    if (train.size() < cfg.k) throw std::invalid_argument("knn: training set smaller than k");
    const auto labels = train.truth();
    const std::size_t classes = static_cast<std::size_t>(train.num_targets());

    Labeling out;
    out.labels.reserve(test.size());
    std::vector<std::pair<double, std::size_t>> dist(train.size());
    std::vector<std::size_t> votes(classes);
    for (const auto& q : test.points()) {
        for (std::size_t i = 0; i < train.size(); ++i) dist[i] = {detail::sq_dist(q, train[i]), i};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(cfg.k), dist.end());
        std::fill(votes.begin(), votes.end(), 0);
        for (std::size_t j = 0; j < cfg.k; ++j) ++votes[static_cast<std::size_t>(labels[dist[j].second] - 1)];
        out.labels.push_back(static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin()) + 1);
    }
    return out;
}

struct TrainTestSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per-target shuffle; each target contributes round(fraction * N_t) points
/// (at least one, and at least one left for testing when N_t > 1) to training.
[[nodiscard]] inline TrainTestSplit stratified_split(const Dataset& d, double train_fraction,
                                                     std::uint64_t seed) {
    if (!d.has_truth()) throw std::invalid_argument("stratified_split: dataset has no truth labels");
    SplitMix64 rng(seed);
    const auto truth = d.truth();
    std::vector<std::vector<std::size_t>> by_target(static_cast<std::size_t>(d.num_targets()));
    for (std::size_t n = 0; n < d.size(); ++n) by_target[static_cast<std::size_t>(truth[n] - 1)].push_back(n);

    TrainTestSplit split;
    for (auto& members : by_target) {
        if (members.empty()) continue;
        // Fisher-Yates with the portable integer generator.
        for (std::size_t i = members.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)));
            std::swap(members[i], members[j]);
        }
        auto take = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
        take = std::clamp<std::size_t>(take, 1, members.size() > 1 ? members.size() - 1 : 1);
        split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
        split.test.insert(split.test.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace linemix
