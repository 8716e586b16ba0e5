#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "decu/gaussian.hpp"

namespace decu {

// Forward-process noise schedule: strictly increasing betas in (0,1) with the
// derived alpha_t = 1 - beta_t and alpha_bar_t = prod_{s<=t} alpha_s.
// Index convention: step t runs 1..T; alpha_bar(0) == 1 (no noise).
struct NoiseSchedule {
    int T = 0;
    std::vector<double> betas;
    std::vector<double> alphas;
    std::vector<double> alpha_bars;

    double beta(int t) const { return betas.at(t - 1); }
    double alpha(int t) const { return alphas.at(t - 1); }
    double alpha_bar(int t) const {
        if (t == 0) return 1.0;
        return alpha_bars.at(t - 1);
    }
};

inline NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
    if (T < 2) throw std::invalid_argument("make_schedule: T must be >= 2");
    if (!(beta_start > 0.0 && beta_start < beta_end && beta_end < 1.0))
        throw std::invalid_argument("make_schedule: need 0 < beta_start < beta_end < 1");

    NoiseSchedule s;
    s.T = T;
    s.betas.resize(T);
    s.alphas.resize(T);
    s.alpha_bars.resize(T);
    double prod = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double beta = beta_start + (beta_end - beta_start) * (t - 1) / (T - 1);
        s.betas[t - 1] = beta;
        s.alphas[t - 1] = 1.0 - beta;
        prod *= s.alphas[t - 1];
        s.alpha_bars[t - 1] = prod;
    }
    return s;
}

// Closed-form forward corruption: y_t = sqrt(ab_t) y0 + sqrt(1 - ab_t) eps.
// noise is a caller-supplied standard-normal draw.
inline std::vector<double> forward_sample(std::span<const double> y0, int t,
                                          std::span<const double> noise,
                                          const NoiseSchedule& sched) {
    if (t < 1 || t > sched.T) throw std::invalid_argument("forward_sample: step out of range");
    if (y0.size() != noise.size())
        throw DimensionMismatch("forward_sample: y0 and noise lengths differ");
    const double ab = sched.alpha_bar(t);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    std::vector<double> out(y0.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = a * y0[k] + b * noise[k];
    return out;
}

// Uniform-stride reverse grid for the deterministic sampler: T, T-s, ..., s, 0
// with s = T / ddim_steps. The stride must divide T evenly.
inline std::vector<int> ddim_grid(int T, int ddim_steps) {
    if (ddim_steps < 1 || ddim_steps > T)
        throw std::invalid_argument("ddim_grid: need 1 <= ddim_steps <= T");
    if (T % ddim_steps != 0)
        throw std::invalid_argument("ddim_grid: ddim_steps must divide T for a uniform stride");
    const int stride = T / ddim_steps;
    std::vector<int> grid;
    grid.reserve(ddim_steps + 1);
    for (int t = T; t >= 0; t -= stride) grid.push_back(t);
    return grid;
}

// One deterministic reverse transition (eta = 0). The per-step distribution
// has mean z_prev and a covariance fixed at zero, which is exactly the object
// the pairwise-distance estimators consume.
struct DdimTransition {
    DiagonalGaussian mu; // variance identically zero

    const std::vector<double>& z_prev() const noexcept { return mu.mean; }
};

// clip_x0, when set, clamps the predicted clean point to [-clip_x0, clip_x0]
// before the update. Sampling loops use it to keep chains near the data
// range; without it the per-step 1/sqrt(alpha_bar) amplification compounds
// any prediction error across a long reverse chain.
inline DdimTransition ddim_step(std::span<const double> z_t, std::span<const double> eps_hat,
                                int t, int t_prev, const NoiseSchedule& sched,
                                std::optional<double> clip_x0 = std::nullopt) {
    if (t_prev >= t) throw std::invalid_argument("ddim_step: t_prev must be < t");
    if (t < 1 || t > sched.T || t_prev < 0)
        throw std::invalid_argument("ddim_step: step indices out of range");
    if (z_t.size() != eps_hat.size())
        throw DimensionMismatch("ddim_step: z_t and eps_hat lengths differ");

    const double ab_t = sched.alpha_bar(t);
    const double ab_prev = sched.alpha_bar(t_prev);
    const double sa_t = std::sqrt(ab_t);
    const double sb_t = std::sqrt(1.0 - ab_t);
    const double sa_prev = std::sqrt(ab_prev);
    const double sb_prev = std::sqrt(1.0 - ab_prev);

    std::vector<double> z_prev(z_t.size());
    for (std::size_t k = 0; k < z_prev.size(); ++k) {
        double x0 = (z_t[k] - sb_t * eps_hat[k]) / sa_t;
        if (clip_x0) x0 = std::clamp(x0, -*clip_x0, *clip_x0);
        z_prev[k] = sa_prev * x0 + sb_prev * eps_hat[k];
    }
    return DdimTransition{DiagonalGaussian::point_mass(std::move(z_prev))};
}

} // namespace decu
