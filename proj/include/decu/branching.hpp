#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "decu/ensemble.hpp"
#include "decu/paide.hpp"

namespace decu {

// Record of one branched generation: a shared prefix chain rolled out under a
// single uniformly drawn component, then M independent chains from the branch
// point down to step 0, decoded images, and the per-step component means the
// estimators consume.
struct BranchTrace {
    int class_id = 0;
    std::uint64_t seed = 0;
    int branch_point = 0;
    int prefix_component = 0;

    std::vector<int> grid;                             // full reverse grid T..0
    std::vector<std::vector<double>> prefix_chain;     // z at grid steps T..b
    std::vector<std::vector<std::vector<double>>> branch_chains; // [M][post-branch step]
    std::vector<Image> decoded_images;                 // M, clamped to [0,1]
    std::vector<DiagonalGaussian> first_step_means;    // M, variance zero
    std::vector<std::vector<DiagonalGaussian>> step_means; // [post-branch step][M]
};

namespace detail {

inline std::size_t grid_index_of(const std::vector<int>& grid, int b) {
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] == b) return i;
    throw std::invalid_argument("branching: branch point is not on the DDIM stride grid");
}

} // namespace detail

// The four-step procedure: sample z_T and a component, roll the shared chain
// to the branch point, split into M per-component chains, finish each chain
// and decode. Fully deterministic in (model, class, b, seed).
inline BranchTrace generate_with_branching(const EnsembleModel& model, int class_id, int b,
                                           std::uint64_t seed, int ddim_steps) {
    const auto grid = ddim_grid(model.sched.T, ddim_steps);
    const std::size_t b_at = detail::grid_index_of(grid, b);
    if (b <= 0) throw std::invalid_argument("branching: branch point must be a positive step");
    (void)model.tables.at(0).row(class_id); // validates the class id

    const int m = model.num_components();
    const int d = model.codec.latent_dim();
    const SeededStream root(seed);

    BranchTrace trace;
    trace.class_id = class_id;
    trace.seed = seed;
    trace.branch_point = b;
    trace.grid = grid;
    trace.prefix_component = static_cast<int>(root.derive("prefix").index_below(m));

    // Shared prefix under the drawn component.
    std::vector<double> z = root.derive("zT").normals(d);
    trace.prefix_chain.push_back(z);
    for (std::size_t i = 0; i < b_at; ++i) {
        const auto eps = denoiser_forward(model.backbone, model.tables[trace.prefix_component],
                                          z, grid[i], model.sched.T, class_id);
        z = ddim_step(z, eps, grid[i], grid[i + 1], model.sched, kLatentClip).z_prev();
        trace.prefix_chain.push_back(z);
    }

    // M independent continuations from the identical z_b.
    const std::size_t post_steps = grid.size() - 1 - b_at;
    trace.branch_chains.assign(m, {});
    trace.step_means.assign(post_steps, {});
    for (auto& row : trace.step_means)
        row.assign(m, DiagonalGaussian::point_mass(std::vector<double>(d, 0.0)));
    trace.decoded_images.assign(m, Image(model.codec.image_size, 0.0));

    parallel_for(m, [&](std::size_t j) {
        std::vector<double> zj = z;
        trace.branch_chains[j].reserve(post_steps);
        for (std::size_t s = 0; s < post_steps; ++s) {
            const int t = grid[b_at + s];
            const int t_prev = grid[b_at + s + 1];
            const auto eps =
                denoiser_forward(model.backbone, model.tables[j], zj, t, model.sched.T, class_id);
            auto tr = ddim_step(zj, eps, t, t_prev, model.sched, kLatentClip);
            zj = tr.z_prev();
            trace.step_means[s][j] = std::move(tr.mu);
            trace.branch_chains[j].push_back(zj);
        }
        Image img = model.codec.decode(encoded_from_latent(zj));
        img.clamp01();
        trace.decoded_images[j] = std::move(img);
    });

    if (post_steps > 0) trace.first_step_means = trace.step_means.front();
    return trace;
}

// Mean over n_noise fresh noise/prefix draws of the W2 pairwise-distance
// estimate taken at the first transition after the branch point.
inline double estimate_class_uncertainty(const EnsembleModel& model, int class_id, int b,
                                         int n_noise, std::uint64_t seed) {
    if (n_noise < 1) throw std::invalid_argument("estimate_class_uncertainty: n_noise >= 1");
    const SeededStream root(seed);
    double acc = 0.0;
    for (int i = 0; i < n_noise; ++i) {
        const auto trace = generate_with_branching(model, class_id, b,
                                                   root.derive_key("noise", i), model.ddim_steps);
        acc += paide(EnsemblePrediction::uniform(trace.first_step_means), Premetric::W2Squared);
    }
    return acc / n_noise;
}

// One pixel as a 1-D point mass per component:
//   -sum_i pi_i ln sum_j pi_j exp(-(y_i - y_j)^2).
inline double pixel_uncertainty(std::span<const double> values) {
    std::vector<DiagonalGaussian> pixel;
    pixel.reserve(values.size());
    for (double v : values) pixel.push_back(DiagonalGaussian::point_mass({v}));
    return paide(EnsemblePrediction::uniform(std::move(pixel)), Premetric::W2Squared);
}

// Pixel-wise estimate over the decoded images, averaged across the available
// channels (one at this scale). Values lie in [0, ln M].
inline Image per_pixel_uncertainty(const EnsembleModel& model, int class_id, int b,
                                   std::uint64_t seed) {
    const auto trace = generate_with_branching(model, class_id, b, seed, model.ddim_steps);
    const int m = model.num_components();
    Image map(model.codec.image_size, 0.0);
    std::vector<double> values(m);
    for (std::size_t k = 0; k < map.px.size(); ++k) {
        for (int j = 0; j < m; ++j) values[j] = trace.decoded_images[j].px[k];
        map.px[k] = pixel_uncertainty(values);
    }
    return map;
}

// The estimator evaluated at every post-branch grid step, each component
// advanced along its own chain: the saturation curve toward ln M.
inline std::vector<std::pair<int, double>> uncertainty_vs_branch_distance(
    const EnsembleModel& model, int class_id, int b, std::uint64_t seed) {
    const auto trace = generate_with_branching(model, class_id, b, seed, model.ddim_steps);
    std::vector<std::pair<int, double>> curve;
    curve.reserve(trace.step_means.size());
    for (std::size_t s = 0; s < trace.step_means.size(); ++s) {
        const double u =
            paide(EnsemblePrediction::uniform(trace.step_means[s]), Premetric::W2Squared);
        curve.emplace_back(static_cast<int>(s) + 1, u);
    }
    return curve;
}

} // namespace decu
