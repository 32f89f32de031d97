#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace linemix {

/// A single 2-D position report. Only y carries noise; x is the regressor.
struct Measurement {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Measurement&, const Measurement&) = default;
};

/// Ordered set of measurements with optional 1-based ground-truth target labels.
class Dataset {
public:
    explicit Dataset(std::vector<Measurement> points,
                     std::optional<std::vector<int>> truth = std::nullopt)
        : points_(std::move(points)), truth_(std::move(truth)) {
        if (points_.empty()) {
            throw std::invalid_argument("Dataset requires at least one measurement");
        }
        for (std::size_t n = 0; n < points_.size(); ++n) {
            if (!std::isfinite(points_[n].x) || !std::isfinite(points_[n].y)) {
                throw std::invalid_argument("Dataset: non-finite coordinate at index " +
                                            std::to_string(n));
            }
        }
        if (truth_) {
            if (truth_->size() != points_.size()) {
                throw std::invalid_argument("Dataset: truth length differs from point count");
            }
            for (int label : *truth_) {
                if (label < 1) {
                    throw std::invalid_argument("Dataset: truth labels must be >= 1");
                }
                num_targets_ = std::max(num_targets_, label);
            }
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] const Measurement& operator[](std::size_t n) const { return points_[n]; }
    [[nodiscard]] std::span<const Measurement> points() const noexcept { return points_; }

    [[nodiscard]] bool has_truth() const noexcept { return truth_.has_value(); }
    [[nodiscard]] std::span<const int> truth() const {
        if (!truth_) throw std::logic_error("Dataset has no truth labels");
        return *truth_;
    }
    /// Largest truth label, 0 when unlabeled.
    [[nodiscard]] int num_targets() const noexcept { return num_targets_; }

    /// Subset by index, keeping truth labels when present.
    [[nodiscard]] Dataset subset(std::span<const std::size_t> indices) const {
        std::vector<Measurement> pts;
        pts.reserve(indices.size());
        std::optional<std::vector<int>> labels;
        if (truth_) labels.emplace().reserve(indices.size());
        for (std::size_t i : indices) {
            pts.push_back(points_.at(i));
            if (labels) labels->push_back((*truth_)[i]);
        }
        return Dataset(std::move(pts), std::move(labels));
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<Measurement> points_;
    std::optional<std::vector<int>> truth_;
    int num_targets_ = 0;
};

/// Line y = a x + b with Gaussian noise variance sigma2 on y.
struct ComponentParams {
    double a = 0.0;
    double b = 0.0;
    double sigma2 = 1.0;

    friend bool operator==(const ComponentParams&, const ComponentParams&) = default;
};

/// Mixture of linear regressions: per-component lines plus mixing weights.
class MixtureModel {
public:
    static constexpr double kWeightSumTolerance = 1e-9;

    MixtureModel(std::vector<ComponentParams> components, std::vector<double> weights)
        : components_(std::move(components)), weights_(std::move(weights)) {
        if (components_.empty()) {
            throw std::invalid_argument("MixtureModel requires at least one component");
        }
        if (weights_.size() != components_.size()) {
            throw std::invalid_argument("MixtureModel: weight count differs from component count");
        }
        double total = 0.0;
        for (double w : weights_) {
            if (!(w >= 0.0)) throw std::invalid_argument("MixtureModel: negative weight");
            total += w;
        }
        if (std::abs(total - 1.0) > kWeightSumTolerance) {
            throw std::invalid_argument("MixtureModel: weights do not sum to one");
        }
        for (const auto& c : components_) {
            if (!std::isfinite(c.a) || !std::isfinite(c.b) || !(c.sigma2 > 0.0) ||
                !std::isfinite(c.sigma2)) {
                throw std::invalid_argument("MixtureModel: invalid component parameters");
            }
        }
    }

    /// Uniform weights 1/L.
    static MixtureModel uniform(std::vector<ComponentParams> components) {
        const std::size_t L = components.size();
        return MixtureModel(std::move(components),
                            std::vector<double>(L, L == 0 ? 0.0 : 1.0 / static_cast<double>(L)));
    }

    [[nodiscard]] std::size_t size() const noexcept { return components_.size(); }
    [[nodiscard]] std::span<const ComponentParams> components() const noexcept { return components_; }
    [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }
    [[nodiscard]] const ComponentParams& component(std::size_t l) const { return components_.at(l); }
    [[nodiscard]] double weight(std::size_t l) const { return weights_.at(l); }

    friend bool operator==(const MixtureModel&, const MixtureModel&) = default;

private:
    std::vector<ComponentParams> components_;
    std::vector<double> weights_;
};

/// N x L posterior matrix, row-major; entry (n, l) is P(c_n = l | y_n).
class Responsibilities {
public:
    Responsibilities(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

    [[nodiscard]] double operator()(std::size_t n, std::size_t l) const { return data_[n * cols_ + l]; }
    [[nodiscard]] double& operator()(std::size_t n, std::size_t l) { return data_[n * cols_ + l]; }

    [[nodiscard]] std::span<const double> row(std::size_t n) const {
        return {data_.data() + n * cols_, cols_};
    }
    [[nodiscard]] std::span<double> row(std::size_t n) { return {data_.data() + n * cols_, cols_}; }

    [[nodiscard]] std::vector<double> column(std::size_t l) const {
        std::vector<double> out(rows_);
        for (std::size_t n = 0; n < rows_; ++n) out[n] = (*this)(n, l);
        return out;
    }

    friend bool operator==(const Responsibilities&, const Responsibilities&) = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

/// Lower bound applied to every variance estimate:
/// max(sigma2, relative * var(y), absolute).
struct VarianceFloor {
    double relative = 1e-9;
    double absolute = 1e-12;
};

/// Population variance of the y coordinates.
[[nodiscard]] inline double y_variance(const Dataset& d) {
    double mean = 0.0;
    for (const auto& m : d.points()) mean += m.y;
    mean /= static_cast<double>(d.size());
    double ss = 0.0;
    for (const auto& m : d.points()) ss += (m.y - mean) * (m.y - mean);
    return ss / static_cast<double>(d.size());
}

[[nodiscard]] inline double variance_floor(const Dataset& d, const VarianceFloor& policy = {}) {
    return std::max(policy.relative * y_variance(d), policy.absolute);
}

[[nodiscard]] inline double log_component_density(const Measurement& m, const ComponentParams& c) {
    const double r = m.y - c.a * m.x - c.b;
    return -0.5 * std::log(2.0 * std::numbers::pi * c.sigma2) - r * r / (2.0 * c.sigma2);
}

/// log(sum exp(v)). Terms are added in ascending order so the result does not
/// depend on the order of `v`. Mutates `v`.
[[nodiscard]] inline double log_sum_exp_inplace(std::span<double> v) {
    const double peak = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(peak)) return peak;
    std::sort(v.begin(), v.end());
    double acc = 0.0;
    for (double t : v) acc += std::exp(t - peak);
    return peak + std::log(acc);
}

/// Fills `out[l]` with log(pi_l) + log f(y | c = l) for one measurement.
inline void joint_log_terms(const Measurement& m, const MixtureModel& mm, std::span<double> out) {
    for (std::size_t l = 0; l < mm.size(); ++l) {
        const double w = mm.weight(l);
        out[l] = w > 0.0 ? std::log(w) + log_component_density(m, mm.component(l))
                         : -std::numeric_limits<double>::infinity();
    }
}

/// Sum over measurements of log sum_l pi_l f(y_n | c_n = l), via log-sum-exp.
[[nodiscard]] inline double log_likelihood(const Dataset& d, const MixtureModel& mm) {
    std::vector<double> terms(mm.size());
    double total = 0.0;
    for (const auto& m : d.points()) {
        joint_log_terms(m, mm, terms);
        total += log_sum_exp_inplace(terms);
    }
    return total;
}

}  // namespace linemix
