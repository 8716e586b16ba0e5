#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "decu/errors.hpp"

namespace decu {

// Gaussian with diagonal covariance, the unit every reverse-process step and
// every pairwise-distance estimate operates on. Zero variance entries are
// legal and mark a point mass (the deterministic-sampler case).
struct DiagonalGaussian {
    std::vector<double> mean;
    std::vector<double> variance;

    DiagonalGaussian(std::vector<double> mean_, std::vector<double> variance_)
        : mean(std::move(mean_)), variance(std::move(variance_)) {
        if (mean.empty()) throw std::invalid_argument("DiagonalGaussian: dimension must be >= 1");
        if (mean.size() != variance.size())
            throw DimensionMismatch("DiagonalGaussian: mean and variance lengths differ");
        for (double v : variance)
            if (!(v >= 0.0)) throw std::invalid_argument("DiagonalGaussian: variance entries must be >= 0");
    }

    // All-zero variance (deterministic prediction).
    static DiagonalGaussian point_mass(std::vector<double> mean_) {
        std::vector<double> var(mean_.size(), 0.0);
        return DiagonalGaussian(std::move(mean_), std::move(var));
    }

    std::size_t dim() const noexcept { return mean.size(); }

    bool degenerate() const noexcept {
        return std::any_of(variance.begin(), variance.end(), [](double v) { return v == 0.0; });
    }
};

enum class Premetric { W2Squared, KL, Bhattacharyya };

namespace detail {

inline void check_same_dim(const DiagonalGaussian& p, const DiagonalGaussian& q) {
    if (p.dim() != q.dim())
        throw DimensionMismatch("premetric: distributions have different dimension");
}

inline void check_nondegenerate(const DiagonalGaussian& p, const char* what) {
    if (p.degenerate()) throw UndefinedForDegenerate(what);
}

} // namespace detail

// Squared 2-Wasserstein distance between diagonal Gaussians:
//   ||mu_p - mu_q||^2 + sum_k (sqrt(var_p_k) - sqrt(var_q_k))^2.
// Defined for zero variances, where it reduces to the squared Euclidean
// distance of the means exactly.
inline double w2_squared(const DiagonalGaussian& p, const DiagonalGaussian& q) {
    detail::check_same_dim(p, q);
    double acc = 0.0;
    for (std::size_t k = 0; k < p.dim(); ++k) {
        const double dm = p.mean[k] - q.mean[k];
        const double ds = std::sqrt(p.variance[k]) - std::sqrt(q.variance[k]);
        acc += dm * dm + ds * ds;
    }
    return acc;
}

// KL(p || q) for diagonal Gaussians. Not symmetric. Undefined when any
// variance entry is zero.
inline double kl_divergence(const DiagonalGaussian& p, const DiagonalGaussian& q) {
    detail::check_same_dim(p, q);
    detail::check_nondegenerate(p, "kl_divergence: zero-variance component");
    detail::check_nondegenerate(q, "kl_divergence: zero-variance component");
    double acc = 0.0;
    for (std::size_t k = 0; k < p.dim(); ++k) {
        const double dm = q.mean[k] - p.mean[k];
        acc += 0.5 * (p.variance[k] / q.variance[k] + dm * dm / q.variance[k] - 1.0 +
                      std::log(q.variance[k] / p.variance[k]));
    }
    return std::max(acc, 0.0);
}

// Bhattacharyya distance for diagonal Gaussians. Symmetric. Undefined when
// any variance entry is zero.
inline double bhattacharyya(const DiagonalGaussian& p, const DiagonalGaussian& q) {
    detail::check_same_dim(p, q);
    detail::check_nondegenerate(p, "bhattacharyya: zero-variance component");
    detail::check_nondegenerate(q, "bhattacharyya: zero-variance component");
    double acc = 0.0;
    for (std::size_t k = 0; k < p.dim(); ++k) {
        const double sbar = 0.5 * (p.variance[k] + q.variance[k]);
        const double dm = p.mean[k] - q.mean[k];
        acc += 0.125 * dm * dm / sbar +
               0.5 * std::log(sbar / std::sqrt(p.variance[k] * q.variance[k]));
    }
    return std::max(acc, 0.0);
}

// Differential entropy: sum_k 1/2 ln(2 pi e var_k).
inline double gaussian_entropy(const DiagonalGaussian& p) {
    detail::check_nondegenerate(p, "gaussian_entropy: zero-variance component");
    double acc = 0.0;
    for (double v : p.variance) acc += 0.5 * (std::log(2.0 * std::numbers::pi * v) + 1.0);
    return acc;
}

inline double log_density(const DiagonalGaussian& p, std::span<const double> y) {
    if (y.size() != p.dim()) throw DimensionMismatch("log_density: point has wrong dimension");
    detail::check_nondegenerate(p, "log_density: zero-variance component");
    double acc = 0.0;
    for (std::size_t k = 0; k < p.dim(); ++k) {
        const double d = y[k] - p.mean[k];
        acc += std::log(2.0 * std::numbers::pi * p.variance[k]) + d * d / p.variance[k];
    }
    return -0.5 * acc;
}

inline double premetric_distance(Premetric kind, const DiagonalGaussian& p, const DiagonalGaussian& q) {
    switch (kind) {
        case Premetric::W2Squared: return w2_squared(p, q);
        case Premetric::KL: return kl_divergence(p, q);
        case Premetric::Bhattacharyya: return bhattacharyya(p, q);
    }
    throw std::logic_error("premetric_distance: unknown kind");
}

} // namespace decu
