#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "decu/gaussian.hpp"
#include "decu/parallel.hpp"
#include "decu/rng.hpp"

namespace decu {

// The ensemble's predictive mixture at one reverse-process transition: M
// Gaussian components with mixture weights summing to one.
struct EnsemblePrediction {
    std::vector<DiagonalGaussian> components;
    std::vector<double> weights;

    EnsemblePrediction(std::vector<DiagonalGaussian> components_, std::vector<double> weights_)
        : components(std::move(components_)), weights(std::move(weights_)) {
        if (components.empty()) throw std::invalid_argument("EnsemblePrediction: empty ensemble");
        if (weights.size() != components.size())
            throw DimensionMismatch("EnsemblePrediction: weight count != component count");
        const std::size_t d = components.front().dim();
        for (const auto& c : components)
            if (c.dim() != d) throw DimensionMismatch("EnsemblePrediction: component dims differ");
        double sum = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0)) throw std::invalid_argument("EnsemblePrediction: negative weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("EnsemblePrediction: weights must sum to 1 within 1e-12");
        for (double& w : weights) w /= sum;
    }

    static EnsemblePrediction uniform(std::vector<DiagonalGaussian> components_) {
        std::vector<double> w(components_.size(),
                              components_.empty() ? 0.0 : 1.0 / static_cast<double>(components_.size()));
        return EnsemblePrediction(std::move(components_), std::move(w));
    }

    std::size_t size() const noexcept { return components.size(); }
    std::size_t dim() const noexcept { return components.front().dim(); }
};

// Pairwise-distance estimate of the mutual information between output and
// component identity:
//   -sum_i pi_i ln sum_j pi_j exp(-D(p_i || p_j)).
// The diagonal D(p_i||p_i) is fixed at zero without evaluating the metric,
// and each inner sum is computed as a shifted log-sum-exp so very large
// distances saturate cleanly instead of producing ln(0). Result lies in
// [0, ln M]; rounding residue is clamped into that range.
inline double paide(const EnsemblePrediction& pred, Premetric metric) {
    const std::size_t m = pred.size();
    const auto& w = pred.weights;

    std::vector<double> dist(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        if (w[i] == 0.0) continue;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i || w[j] == 0.0) continue;
            dist[i * m + j] = premetric_distance(metric, pred.components[i], pred.components[j]);
        }
    }

    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (w[i] == 0.0) continue;
        double dmin = dist[i * m + i];
        for (std::size_t j = 0; j < m; ++j)
            if (w[j] > 0.0) dmin = std::min(dmin, dist[i * m + j]);
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            if (w[j] > 0.0) s += w[j] * std::exp(dmin - dist[i * m + j]);
        total += w[i] * (dmin - std::log(s));
    }
    return std::clamp(total, 0.0, std::log(static_cast<double>(m)));
}

// Monte-Carlo estimate of the same mutual information, used as an oracle:
//   H_mix - sum_j pi_j H(p_j),
// with H_mix estimated from n samples drawn by picking a component from pi
// and then sampling it. Needs strictly positive variances (the mixture must
// have a density). Bit-reproducible for fixed (pred, n_samples, seed) at any
// thread count: sample k draws only from its own sub-stream and the final
// reduction runs in index order.
inline double mc_mutual_information(const EnsemblePrediction& pred, std::size_t n_samples,
                                    std::uint64_t seed) {
    if (n_samples == 0) throw std::invalid_argument("mc_mutual_information: n_samples must be > 0");
    for (const auto& c : pred.components)
        detail::check_nondegenerate(c, "mc_mutual_information: zero-variance component");

    const std::size_t m = pred.size();
    const std::size_t d = pred.dim();
    const auto& w = pred.weights;

    double h_components = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        if (w[j] > 0.0) h_components += w[j] * gaussian_entropy(pred.components[j]);

    std::vector<double> log_w(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) log_w[j] = w[j] > 0.0 ? std::log(w[j]) : 0.0;

    const SeededStream root(seed);
    std::vector<double> ln_mix(n_samples);
    parallel_for(n_samples, [&](std::size_t k) {
        SeededStream s = root.derive("sample", k);

        const double u = s.uniform();
        std::size_t pick = m - 1;
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            acc += w[j];
            if (u < acc) {
                pick = j;
                break;
            }
        }

        std::vector<double> y(d);
        const auto& comp = pred.components[pick];
        for (std::size_t k2 = 0; k2 < d; ++k2)
            y[k2] = comp.mean[k2] + std::sqrt(comp.variance[k2]) * s.normal();

        double best = -std::numeric_limits<double>::infinity();
        std::vector<double> lp(m, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            if (w[j] == 0.0) continue;
            lp[j] = log_w[j] + log_density(pred.components[j], y);
            best = std::max(best, lp[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            if (w[j] > 0.0) sum += std::exp(lp[j] - best);
        ln_mix[k] = best + std::log(sum);
    });

    double h_mix = 0.0;
    for (double v : ln_mix) h_mix += v;
    h_mix = -h_mix / static_cast<double>(n_samples);
    return h_mix - h_components;
}

} // namespace decu
