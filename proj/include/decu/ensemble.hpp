#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "decu/codec.hpp"
#include "decu/dataset.hpp"
#include "decu/denoiser.hpp"
#include "decu/parallel.hpp"
#include "decu/schedule.hpp"
#include "decu/training.hpp"

namespace decu {

// Per-component training data: for each class, the pool indices the component
// is allowed to see.
using SubsetAssignment = std::vector<std::vector<int>>;

// One shared frozen backbone plus M independently trained embedding tables
// with uniform mixture weights.
struct EnsembleModel {
    DenoiserBackbone backbone;
    std::vector<ClassEmbeddingTable> tables;
    std::vector<double> weights;
    std::vector<std::uint64_t> component_seeds;
    std::vector<SubsetAssignment> subset_assignment; // empty after a checkpoint load
    NoiseSchedule sched;
    Codec codec;
    int ddim_steps = 50;

    int num_components() const noexcept { return static_cast<int>(tables.size()); }
    int num_classes() const noexcept { return tables.empty() ? 0 : tables.front().num_classes; }
};

struct EnsembleSpec {
    int hidden = 128;
    int class_embed_dim = 16;
    int components = 5;
    std::vector<std::uint64_t> component_seeds; // size == components
    std::uint64_t stage0_seed = 0;
    NoiseSchedule sched;
    Codec codec;
    int ddim_steps = 50;
    TrainingConfig training;
};

struct LossRecord {
    std::string stage;
    int step = 0;
    double loss = 0.0;
};

struct EnsembleBuildInfo {
    std::uint64_t backbone_hash = 0;
    std::vector<std::uint64_t> subset_hashes;
    std::vector<LossRecord> losses;
};

// The diffusion operates on latents normalized to [-1, 1] (codec outputs live
// in [0, 1]); the reverse process starts from standard normal noise, so the
// data must be roughly centered at unit scale. Samplers clip predicted clean
// points to this range.
inline constexpr double kLatentClip = 1.0;

inline std::vector<double> latent_from_encoded(std::vector<double> enc) {
    for (auto& v : enc) v = 2.0 * v - 1.0;
    return enc;
}

inline std::vector<double> encoded_from_latent(std::vector<double> z) {
    for (auto& v : z) v = 0.5 * (v + 1.0);
    return z;
}

namespace detail {

using LatentPools = std::vector<std::vector<std::vector<double>>>; // [class][image]

inline LatentPools encode_pools(const BinnedDataset& ds, const Codec& codec) {
    LatentPools out(ds.pools.size());
    for (std::size_t c = 0; c < ds.pools.size(); ++c) {
        out[c].reserve(ds.pools[c].size());
        for (const auto& img : ds.pools[c])
            out[c].push_back(latent_from_encoded(codec.encode(img)));
    }
    return out;
}

inline SubsetAssignment full_assignment(const BinnedDataset& ds) {
    SubsetAssignment a(ds.pools.size());
    for (std::size_t c = 0; c < ds.pools.size(); ++c) {
        a[c].resize(ds.pools[c].size());
        std::iota(a[c].begin(), a[c].end(), 0);
    }
    return a;
}

// Class-balanced batch: pick a class uniformly, then an image uniformly from
// the class's allowed indices.
inline std::vector<TrainingExample> sample_batch(const LatentPools& latents,
                                                 const SubsetAssignment& subset, int batch_size,
                                                 SeededStream s) {
    std::vector<TrainingExample> batch;
    batch.reserve(batch_size);
    const auto n_classes = static_cast<std::uint64_t>(latents.size());
    for (int i = 0; i < batch_size; ++i) {
        const auto c = static_cast<std::size_t>(s.index_below(n_classes));
        const auto& allowed = subset[c];
        const int img = allowed[s.index_below(allowed.size())];
        batch.push_back({latents[c][img], static_cast<int>(c)});
    }
    return batch;
}

inline void log_loss(std::vector<LossRecord>* log, const std::string& stage, int step,
                     double loss, int log_every, int total_steps) {
    if (log == nullptr) return;
    if (step % log_every == 0 || step == total_steps) log->push_back({stage, step, loss});
}

} // namespace detail

// Sampling with replacement is never needed: the dataset ctor guarantees the
// pool covers the largest per-component draw. Indices come out sorted so the
// assignment has one canonical form.
inline SubsetAssignment draw_subsets(const BinnedDataset& ds, std::uint64_t component_seed) {
    SubsetAssignment out(ds.pools.size());
    const SeededStream root(component_seed);
    for (std::size_t c = 0; c < ds.pools.size(); ++c) {
        const int pool = static_cast<int>(ds.pools[c].size());
        const int want = std::min(ds.count_for(ds.class_bins[c]), pool);
        std::vector<int> idx(pool);
        std::iota(idx.begin(), idx.end(), 0);
        SeededStream s = root.derive("subset", c);
        for (int i = 0; i < want; ++i) {
            const auto j = i + static_cast<int>(s.index_below(pool - i));
            std::swap(idx[i], idx[j]);
        }
        idx.resize(want);
        std::sort(idx.begin(), idx.end());
        out[c] = std::move(idx);
    }
    return out;
}

inline std::uint64_t subset_hash(const SubsetAssignment& a) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::size_t c = 0; c < a.size(); ++c) {
        h = mix64(h ^ fnv1a64_bytes(&c, sizeof c));
        h = mix64(h ^ fnv1a64_bytes(a[c].data(), a[c].size() * sizeof(int)));
    }
    return h;
}

// Stage-0 pass: train backbone plus a throwaway embedding table on the full
// pool, then discard the table. Deterministic in the seed.
inline DenoiserBackbone pretrain_backbone(const BinnedDataset& ds, const Codec& codec,
                                          const NoiseSchedule& sched, const EnsembleSpec& spec,
                                          std::uint64_t seed,
                                          std::vector<LossRecord>* log = nullptr) {
    if (ds.num_classes() == 0 || ds.pools.empty() || ds.pools.front().empty())
        throw std::invalid_argument("pretrain_backbone: empty dataset");

    const auto latents = detail::encode_pools(ds, codec);
    const auto all = detail::full_assignment(ds);
    const SeededStream root(seed);

    auto bb = DenoiserBackbone::init(codec.latent_dim(), spec.hidden, spec.class_embed_dim,
                                     root.derive("backbone_init"));
    auto throwaway = ClassEmbeddingTable::init(ds.num_classes(), spec.class_embed_dim,
                                               spec.training.embed_init_scale,
                                               root.derive("stage0_table"));
    Optimizer opt(bb, throwaway, AdamConfig{.lr = spec.training.lr});
    for (int step = 1; step <= spec.training.stage0_steps; ++step) {
        const auto batch = detail::sample_batch(latents, all, spec.training.batch_size,
                                                root.derive("batch", step));
        const double loss = training_step(bb, throwaway, batch, sched, opt,
                                          Trainable::BackboneAndTable, root.derive("step", step));
        detail::log_loss(log, "stage0", step, loss, spec.training.log_every,
                         spec.training.stage0_steps);
    }
    return bb;
}

// Embedding-only training of component j on its own subset. Independent of
// every other component; the backbone hash is checked before and after.
inline ClassEmbeddingTable train_component(int j, const DenoiserBackbone& backbone,
                                           const BinnedDataset& ds,
                                           const detail::LatentPools& latents,
                                           const SubsetAssignment& subset,
                                           std::uint64_t seed_j, const TrainingConfig& tc,
                                           const NoiseSchedule& sched,
                                           std::vector<LossRecord>* log = nullptr) {
    const std::uint64_t frozen = backbone_hash(backbone);
    const SeededStream root(seed_j);
    auto table = ClassEmbeddingTable::init(ds.num_classes(), backbone.class_embed_dim,
                                           tc.embed_init_scale, root.derive("init"));
    Optimizer opt(backbone, table, AdamConfig{.lr = tc.lr});
    const std::string stage = "component" + std::to_string(j);
    try {
        for (int step = 1; step <= tc.component_steps; ++step) {
            const auto batch =
                detail::sample_batch(latents, subset, tc.batch_size, root.derive("batch", step));
            const double loss = training_step_table_only(backbone, table, batch, sched, opt,
                                                         root.derive("step", step));
            detail::log_loss(log, stage, step, loss, tc.log_every, tc.component_steps);
        }
    } catch (const TrainingDiverged& e) {
        throw TrainingDiverged("component " + std::to_string(j) + ": " + e.what());
    }
    if (backbone_hash(backbone) != frozen)
        throw std::logic_error("train_component: backbone changed while frozen");
    return table;
}

// Full DECU build: stage-0 pretraining, per-component subset draws, then M
// independent embedding trainings (run concurrently; results are identical to
// serial execution).
inline EnsembleModel build_ensemble(const BinnedDataset& ds, const EnsembleSpec& spec,
                                    EnsembleBuildInfo* info = nullptr) {
    if (spec.components < 1) throw std::invalid_argument("build_ensemble: need >= 1 component");
    if (spec.component_seeds.size() != static_cast<std::size_t>(spec.components))
        throw std::invalid_argument("build_ensemble: need one seed per component");

    EnsembleModel model;
    model.sched = spec.sched;
    model.codec = spec.codec;
    model.ddim_steps = spec.ddim_steps;
    model.component_seeds = spec.component_seeds;

    std::vector<LossRecord> stage0_log;
    model.backbone = pretrain_backbone(ds, spec.codec, spec.sched, spec, spec.stage0_seed,
                                       info != nullptr ? &stage0_log : nullptr);
    const std::uint64_t frozen = backbone_hash(model.backbone);

    const auto latents = detail::encode_pools(ds, spec.codec);
    const int m = spec.components;
    model.subset_assignment.resize(m);
    for (int j = 0; j < m; ++j)
        model.subset_assignment[j] = draw_subsets(ds, spec.component_seeds[j]);

    model.tables.resize(m, ClassEmbeddingTable{});
    std::vector<std::vector<LossRecord>> logs(m);
    parallel_for(m, [&](std::size_t j) {
        model.tables[j] = train_component(static_cast<int>(j), model.backbone, ds, latents,
                                          model.subset_assignment[j], spec.component_seeds[j],
                                          spec.training, spec.sched,
                                          info != nullptr ? &logs[j] : nullptr);
    });
    if (backbone_hash(model.backbone) != frozen)
        throw std::logic_error("build_ensemble: backbone changed during component training");

    model.weights.assign(m, 1.0 / static_cast<double>(m));

    if (info != nullptr) {
        info->backbone_hash = frozen;
        info->subset_hashes.clear();
        for (int j = 0; j < m; ++j)
            info->subset_hashes.push_back(subset_hash(model.subset_assignment[j]));
        info->losses = std::move(stage0_log);
        for (auto& l : logs)
            info->losses.insert(info->losses.end(), l.begin(), l.end());
    }
    return model;
}

// p_j for one reverse transition: deterministic-sampler mean under component
// j's table, variance zero.
inline DiagonalGaussian component_mean_prediction(const EnsembleModel& model, int j,
                                                  std::span<const double> z_t, int t, int t_prev,
                                                  int class_id) {
    if (j < 0 || j >= model.num_components())
        throw std::out_of_range("component_mean_prediction: bad component index");
    const auto eps =
        denoiser_forward(model.backbone, model.tables[j], z_t, t, model.sched.T, class_id);
    return ddim_step(z_t, eps, t, t_prev, model.sched, kLatentClip).mu;
}

// Parameters touched by one component's training: exactly the embedding table.
inline std::size_t trained_parameter_count(const ClassEmbeddingTable& table) {
    return table.rows.size();
}

} // namespace decu
