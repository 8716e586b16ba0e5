#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "decu/denoiser.hpp"
#include "decu/errors.hpp"
#include "decu/rng.hpp"
#include "decu/schedule.hpp"

namespace decu {

struct TrainingExample {
    std::span<const double> y0; // clean latent
    int class_id = 0;
};

enum class Trainable { BackboneAndTable, TableOnly };

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainingConfig {
    int stage0_steps = 4000;    // backbone pretraining pass
    int component_steps = 2500; // embedding-only pass, per component
    int batch_size = 64;
    double lr = 1e-3;
    double embed_init_scale = 0.3;
    int log_every = 50;
};

namespace detail {

struct AdamSlot {
    std::vector<double> m, v;

    explicit AdamSlot(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void apply(std::span<double> params, std::span<const double> grads, long t,
               const AdamConfig& cfg) {
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
            params[i] -= cfg.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
        }
    }
};

// Corruption draws for one sample: step, noise, noisy latent. A per-sample
// sub-stream keeps the draws independent of batch position bookkeeping.
struct Corruption {
    int t;
    std::vector<double> eps;
    std::vector<double> z_t;
};

inline Corruption corrupt(std::span<const double> y0, const NoiseSchedule& sched,
                          SeededStream s) {
    Corruption c;
    c.t = 1 + static_cast<int>(s.index_below(static_cast<std::uint64_t>(sched.T)));
    c.eps = s.normals(y0.size());
    c.z_t = forward_sample(y0, c.t, c.eps, sched);
    return c;
}

} // namespace detail

// Adam moments for every trainable block. The step counter is shared so a
// frozen-backbone run keeps bias correction consistent for the table.
struct Optimizer {
    AdamConfig cfg;
    long t = 0;
    detail::AdamSlot w1, b1, w2, b2, w3, b3, table;

    Optimizer(const DenoiserBackbone& bb, const ClassEmbeddingTable& tbl, AdamConfig cfg_)
        : cfg(cfg_),
          w1(bb.w1.size()),
          b1(bb.b1.size()),
          w2(bb.w2.size()),
          b2(bb.b2.size()),
          w3(bb.w3.size()),
          b3(bb.b3.size()),
          table(tbl.rows.size()) {}
};

// Mean epsilon-prediction error over a batch with an arbitrary predictor.
// Same corruption draws as training_step for the same stream, so a stubbed
// predictor exercises exactly the training loss path.
template <typename Predictor>
double batch_loss_with_predictor(Predictor&& predict, std::span<const TrainingExample> batch,
                                 const NoiseSchedule& sched, const SeededStream& stream) {
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto c = detail::corrupt(batch[i].y0, sched, stream.derive("sample", i));
        const std::vector<double> eps_hat =
            predict(std::span<const double>(c.z_t), c.t, batch[i].class_id,
                    std::span<const double>(c.eps));
        if (eps_hat.size() != c.eps.size())
            throw DimensionMismatch("batch_loss: predictor output has wrong dimension");
        double acc = 0.0;
        for (std::size_t k = 0; k < c.eps.size(); ++k) {
            const double d = eps_hat[k] - c.eps[k];
            acc += d * d;
        }
        loss += acc / static_cast<double>(c.eps.size());
    }
    return loss / static_cast<double>(batch.size());
}

// Batch loss plus analytic gradients. Backbone gradients are skipped (not
// computed, not returned) when bg is null; table gradients land in the dense
// tg buffer, one row per class.
inline double batch_loss_and_grads(const DenoiserBackbone& bb, const ClassEmbeddingTable& table,
                                   std::span<const TrainingExample> batch,
                                   const NoiseSchedule& sched, const SeededStream& stream,
                                   BackboneGrads* bg, std::vector<double>* tg) {
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    ForwardCache cache;
    std::vector<double> gout(bb.data_dim);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& ex = batch[i];
        const auto c = detail::corrupt(ex.y0, sched, stream.derive("sample", i));
        detail::forward_cached(bb, table.row(ex.class_id), c.z_t, c.t, sched.T, cache);

        const double inv_d = 1.0 / static_cast<double>(bb.data_dim);
        double acc = 0.0;
        for (int k = 0; k < bb.data_dim; ++k) {
            const double d = cache.out[k] - c.eps[k];
            acc += d * d;
            gout[k] = 2.0 * d * inv_d * inv_b;
        }
        loss += acc * inv_d;

        std::span<double> emb_grad;
        if (tg != nullptr)
            emb_grad = {tg->data() + static_cast<std::size_t>(ex.class_id) * table.embed_dim,
                        static_cast<std::size_t>(table.embed_dim)};
        detail::backward(bb, cache, gout, bg, emb_grad);
    }
    return loss * inv_b;
}

// Embedding-only step against a frozen backbone. The backbone is taken by
// const reference, so concurrent component trainings can share it safely.
inline double training_step_table_only(const DenoiserBackbone& bb, ClassEmbeddingTable& table,
                                       std::span<const TrainingExample> batch,
                                       const NoiseSchedule& sched, Optimizer& opt,
                                       const SeededStream& stream) {
    std::vector<double> tg(table.rows.size(), 0.0);
    const double loss = batch_loss_and_grads(bb, table, batch, sched, stream, nullptr, &tg);
    if (!std::isfinite(loss))
        throw TrainingDiverged("training_step: non-finite loss at optimizer step " +
                               std::to_string(opt.t + 1));
    ++opt.t;
    opt.table.apply(table.rows, tg, opt.t, opt.cfg);
    return loss;
}

// One optimization step on the selected parameter set. Under TableOnly the
// backbone is left bit-identical. Throws TrainingDiverged on a non-finite
// loss so a blown-up learning rate surfaces immediately.
inline double training_step(DenoiserBackbone& bb, ClassEmbeddingTable& table,
                            std::span<const TrainingExample> batch, const NoiseSchedule& sched,
                            Optimizer& opt, Trainable mode, const SeededStream& stream) {
    if (mode == Trainable::TableOnly)
        return training_step_table_only(bb, table, batch, sched, opt, stream);

    auto bg = BackboneGrads::zeros(bb);
    std::vector<double> tg(table.rows.size(), 0.0);
    const double loss = batch_loss_and_grads(bb, table, batch, sched, stream, &bg, &tg);
    if (!std::isfinite(loss))
        throw TrainingDiverged("training_step: non-finite loss at optimizer step " +
                               std::to_string(opt.t + 1));

    ++opt.t;
    opt.w1.apply(bb.w1, bg.w1, opt.t, opt.cfg);
    opt.b1.apply(bb.b1, bg.b1, opt.t, opt.cfg);
    opt.w2.apply(bb.w2, bg.w2, opt.t, opt.cfg);
    opt.b2.apply(bb.b2, bg.b2, opt.t, opt.cfg);
    opt.w3.apply(bb.w3, bg.w3, opt.t, opt.cfg);
    opt.b3.apply(bb.b3, bg.b3, opt.t, opt.cfg);
    opt.table.apply(table.rows, tg, opt.t, opt.cfg);
    return loss;
}

} // namespace decu
