#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "decu/branching.hpp"
#include "decu/ssim.hpp"

namespace decu {

struct BinSummary {
    BinLabel bin;
    int count = 0;
    double mean = 0.0;
    double median = 0.0;
    double stddev = 0.0; // sample standard deviation, 0 for singletons
};

struct BinExperimentResult {
    std::vector<double> per_class; // indexed by class id
    std::vector<BinLabel> bins;    // class -> bin
    std::vector<BinSummary> summary;
};

namespace detail {

inline double mean_of(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

inline double sample_stddev(std::span<const double> v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace detail

// Per-class epistemic uncertainty at branch point b, grouped into per-bin
// statistics. Class evaluations are independent and run concurrently; the
// aggregation is a fixed-order reduction, so the output does not depend on
// the worker count.
inline BinExperimentResult run_bin_experiment(const EnsembleModel& model,
                                              const BinnedDataset& ds, int b, int n_noise,
                                              std::uint64_t seed) {
    const int n_classes = ds.num_classes();
    if (n_classes != model.num_classes())
        throw std::invalid_argument("run_bin_experiment: model and dataset class counts differ");

    BinExperimentResult res;
    res.per_class.assign(n_classes, 0.0);
    res.bins = ds.class_bins;

    const SeededStream root(seed);
    parallel_for(n_classes, [&](std::size_t c) {
        res.per_class[c] = estimate_class_uncertainty(model, static_cast<int>(c), b, n_noise,
                                                      root.derive_key("class", c));
    });

    for (int bin = 0; bin < kNumBins; ++bin) {
        std::vector<double> vals;
        for (int c = 0; c < n_classes; ++c)
            if (static_cast<int>(res.bins[c]) == bin) vals.push_back(res.per_class[c]);
        if (vals.empty()) continue;
        BinSummary s;
        s.bin = static_cast<BinLabel>(bin);
        s.count = static_cast<int>(vals.size());
        s.mean = detail::mean_of(vals);
        s.median = detail::median_of(vals);
        s.stddev = detail::sample_stddev(vals, s.mean);
        res.summary.push_back(s);
    }
    return res;
}

// Mean +/- sample standard deviation of pairwise SSIM between component
// outputs, one cell per (branch point, bin), aggregated over all classes of
// the bin, all seeds and all unordered component pairs.
struct DiversityCell {
    int b = 0;
    BinLabel bin{};
    double mean = 0.0;
    double stddev = 0.0;
    int count = 0; // SSIM samples aggregated into the cell
};

struct DiversityTable {
    std::vector<int> branch_points;      // row order
    std::vector<DiversityCell> cells;    // row-major: per b, then per bin

    const DiversityCell& cell(int b, BinLabel bin) const {
        for (const auto& c : cells)
            if (c.b == b && c.bin == bin) return c;
        throw std::out_of_range("DiversityTable: no such cell");
    }
};

inline DiversityTable run_diversity_experiment(const EnsembleModel& model,
                                               const BinnedDataset& ds,
                                               std::span<const int> branch_points, int n_seeds,
                                               std::uint64_t seed) {
    if (n_seeds < 1) throw std::invalid_argument("run_diversity_experiment: n_seeds >= 1");
    const int n_classes = ds.num_classes();
    const int m = model.num_components();

    DiversityTable table;
    table.branch_points.assign(branch_points.begin(), branch_points.end());

    const SeededStream root(seed);
    for (std::size_t bi = 0; bi < branch_points.size(); ++bi) {
        const int b = branch_points[bi];
        // Per class: SSIM of every unordered component pair for every seed.
        std::vector<std::vector<double>> per_class(n_classes);
        parallel_for(n_classes, [&](std::size_t c) {
            auto& vals = per_class[c];
            vals.reserve(static_cast<std::size_t>(n_seeds) * m * (m - 1) / 2);
            const SeededStream cs = root.derive("b", bi).derive("class", c);
            for (int k = 0; k < n_seeds; ++k) {
                const auto trace = generate_with_branching(model, static_cast<int>(c), b,
                                                           cs.derive_key("seed", k),
                                                           model.ddim_steps);
                for (int i = 0; i < m; ++i)
                    for (int j = i + 1; j < m; ++j)
                        vals.push_back(ssim(trace.decoded_images[i], trace.decoded_images[j]));
            }
        });

        for (int bin = 0; bin < kNumBins; ++bin) {
            std::vector<double> vals;
            for (int c = 0; c < n_classes; ++c)
                if (static_cast<int>(ds.class_bins[c]) == bin)
                    vals.insert(vals.end(), per_class[c].begin(), per_class[c].end());
            if (vals.empty()) continue;
            DiversityCell cell;
            cell.b = b;
            cell.bin = static_cast<BinLabel>(bin);
            cell.count = static_cast<int>(vals.size());
            cell.mean = detail::mean_of(vals);
            cell.stddev = detail::sample_stddev(vals, cell.mean);
            table.cells.push_back(cell);
        }
    }
    return table;
}

// Pointwise mean of the saturation curve over n_seeds independent traces.
inline std::vector<std::pair<int, double>> mean_uncertainty_curve(const EnsembleModel& model,
                                                                  int class_id, int b,
                                                                  int n_seeds,
                                                                  std::uint64_t seed) {
    if (n_seeds < 1) throw std::invalid_argument("mean_uncertainty_curve: n_seeds >= 1");
    const SeededStream root(seed);
    std::vector<std::vector<std::pair<int, double>>> curves(n_seeds);
    parallel_for(n_seeds, [&](std::size_t k) {
        curves[k] =
            uncertainty_vs_branch_distance(model, class_id, b, root.derive_key("seed", k));
    });
    std::vector<std::pair<int, double>> mean = curves.front();
    for (std::size_t k = 1; k < curves.size(); ++k)
        for (std::size_t s = 0; s < mean.size(); ++s) mean[s].second += curves[k][s].second;
    for (auto& [step, u] : mean) u /= static_cast<double>(n_seeds);
    return mean;
}

// Snap a branch fraction (of T) to the reverse grid.
inline int branch_point_for_fraction(double fraction, int T, int ddim_steps) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("branch fraction must be in (0, 1]");
    const int stride = T / ddim_steps;
    const auto k = static_cast<int>(std::llround(fraction * ddim_steps));
    return std::clamp(k, 1, ddim_steps) * stride;
}

} // namespace decu
