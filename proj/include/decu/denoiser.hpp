#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "decu/errors.hpp"
#include "decu/rng.hpp"

namespace decu {

inline constexpr int kTimeEmbedDim = 8;

// Sinusoidal features of t/T at four octaves.
inline std::array<double, kTimeEmbedDim> time_embedding(int t, int T) {
    std::array<double, kTimeEmbedDim> f{};
    const double tau = static_cast<double>(t) / static_cast<double>(T);
    double freq = 2.0 * std::numbers::pi;
    for (int k = 0; k < kTimeEmbedDim / 2; ++k) {
        f[2 * k] = std::sin(freq * tau);
        f[2 * k + 1] = std::cos(freq * tau);
        freq *= 2.0;
    }
    return f;
}

// Two-hidden-layer tanh network predicting the corruption noise from
// [z_t | time features | class embedding]. This is the shared piece of every
// ensemble component; only the embedding fed into it differs.
struct DenoiserBackbone {
    int data_dim = 0;        // d
    int hidden = 0;          // h
    int class_embed_dim = 0; // e_c

    // Row-major [out][in] weight tables, declaration order is the checkpoint
    // block order.
    std::vector<double> w1, b1, w2, b2, w3, b3;

    int input_dim() const noexcept { return data_dim + kTimeEmbedDim + class_embed_dim; }

    std::size_t param_count() const noexcept {
        return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
    }

    static DenoiserBackbone init(int data_dim, int hidden, int class_embed_dim,
                                 SeededStream stream) {
        if (data_dim < 1 || hidden < 1 || class_embed_dim < 1)
            throw std::invalid_argument("DenoiserBackbone: dims must be >= 1");
        DenoiserBackbone bb;
        bb.data_dim = data_dim;
        bb.hidden = hidden;
        bb.class_embed_dim = class_embed_dim;
        const int in = bb.input_dim();
        bb.w1.resize(static_cast<std::size_t>(hidden) * in);
        bb.b1.assign(hidden, 0.0);
        bb.w2.resize(static_cast<std::size_t>(hidden) * hidden);
        bb.b2.assign(hidden, 0.0);
        bb.w3.resize(static_cast<std::size_t>(data_dim) * hidden);
        bb.b3.assign(data_dim, 0.0);
        const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
        const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
        for (auto& w : bb.w1) w = s1 * stream.normal();
        for (auto& w : bb.w2) w = s2 * stream.normal();
        for (auto& w : bb.w3) w = s2 * stream.normal();
        return bb;
    }
};

inline std::uint64_t backbone_hash(const DenoiserBackbone& bb) {
    std::uint64_t h = fnv1a64_bytes(&bb.data_dim, sizeof bb.data_dim);
    h ^= fnv1a64_bytes(bb.w1.data(), bb.w1.size() * sizeof(double));
    h = mix64(h);
    h ^= fnv1a64_bytes(bb.b1.data(), bb.b1.size() * sizeof(double));
    h = mix64(h);
    h ^= fnv1a64_bytes(bb.w2.data(), bb.w2.size() * sizeof(double));
    h = mix64(h);
    h ^= fnv1a64_bytes(bb.b2.data(), bb.b2.size() * sizeof(double));
    h = mix64(h);
    h ^= fnv1a64_bytes(bb.w3.data(), bb.w3.size() * sizeof(double));
    h = mix64(h);
    h ^= fnv1a64_bytes(bb.b3.data(), bb.b3.size() * sizeof(double));
    return mix64(h);
}

// Per-class embedding rows, C x e_c. The only trainable state of an ensemble
// component.
struct ClassEmbeddingTable {
    int num_classes = 0;
    int embed_dim = 0;
    std::vector<double> rows; // row-major

    static ClassEmbeddingTable init(int num_classes, int embed_dim, double scale,
                                    SeededStream stream) {
        if (num_classes < 1 || embed_dim < 1)
            throw std::invalid_argument("ClassEmbeddingTable: dims must be >= 1");
        ClassEmbeddingTable t;
        t.num_classes = num_classes;
        t.embed_dim = embed_dim;
        t.rows.resize(static_cast<std::size_t>(num_classes) * embed_dim);
        for (auto& v : t.rows) v = scale * stream.normal();
        return t;
    }

    std::span<const double> row(int class_id) const {
        if (class_id < 0 || class_id >= num_classes)
            throw std::out_of_range("ClassEmbeddingTable: unknown class id");
        return {rows.data() + static_cast<std::size_t>(class_id) * embed_dim,
                static_cast<std::size_t>(embed_dim)};
    }

    std::span<double> row(int class_id) {
        if (class_id < 0 || class_id >= num_classes)
            throw std::out_of_range("ClassEmbeddingTable: unknown class id");
        return {rows.data() + static_cast<std::size_t>(class_id) * embed_dim,
                static_cast<std::size_t>(embed_dim)};
    }
};

// Activations kept for the backward pass.
struct ForwardCache {
    std::vector<double> x;   // input [z | time | embedding]
    std::vector<double> a1;  // tanh of layer 1
    std::vector<double> a2;  // tanh of layer 2
    std::vector<double> out; // predicted noise
};

namespace detail {

inline void forward_cached(const DenoiserBackbone& bb, std::span<const double> emb_row,
                           std::span<const double> z_t, int t, int T, ForwardCache& c) {
    const int d = bb.data_dim;
    const int h = bb.hidden;
    const int in = bb.input_dim();
    if (static_cast<int>(z_t.size()) != d)
        throw DimensionMismatch("denoiser: latent has wrong dimension");
    if (static_cast<int>(emb_row.size()) != bb.class_embed_dim)
        throw DimensionMismatch("denoiser: embedding row has wrong dimension");

    c.x.resize(in);
    std::copy(z_t.begin(), z_t.end(), c.x.begin());
    const auto tf = time_embedding(t, T);
    std::copy(tf.begin(), tf.end(), c.x.begin() + d);
    std::copy(emb_row.begin(), emb_row.end(), c.x.begin() + d + kTimeEmbedDim);

    c.a1.resize(h);
    for (int o = 0; o < h; ++o) {
        double acc = bb.b1[o];
        const double* w = bb.w1.data() + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) acc += w[i] * c.x[i];
        c.a1[o] = std::tanh(acc);
    }
    c.a2.resize(h);
    for (int o = 0; o < h; ++o) {
        double acc = bb.b2[o];
        const double* w = bb.w2.data() + static_cast<std::size_t>(o) * h;
        for (int i = 0; i < h; ++i) acc += w[i] * c.a1[i];
        c.a2[o] = std::tanh(acc);
    }
    c.out.resize(d);
    for (int o = 0; o < d; ++o) {
        double acc = bb.b3[o];
        const double* w = bb.w3.data() + static_cast<std::size_t>(o) * h;
        for (int i = 0; i < h; ++i) acc += w[i] * c.a2[i];
        c.out[o] = acc;
    }
}

} // namespace detail

// Gradient accumulators matching the backbone's blocks.
struct BackboneGrads {
    std::vector<double> w1, b1, w2, b2, w3, b3;

    static BackboneGrads zeros(const DenoiserBackbone& bb) {
        BackboneGrads g;
        g.w1.assign(bb.w1.size(), 0.0);
        g.b1.assign(bb.b1.size(), 0.0);
        g.w2.assign(bb.w2.size(), 0.0);
        g.b2.assign(bb.b2.size(), 0.0);
        g.w3.assign(bb.w3.size(), 0.0);
        g.b3.assign(bb.b3.size(), 0.0);
        return g;
    }
};

namespace detail {

// Backpropagate d(loss)/d(out) through the cached forward pass. Backbone
// gradients are accumulated only when bg is non-null (frozen-backbone
// training skips them entirely); the embedding-row gradient only when
// emb_grad is non-null.
inline void backward(const DenoiserBackbone& bb, const ForwardCache& c,
                     std::span<const double> gout, BackboneGrads* bg,
                     std::span<double> emb_grad) {
    const int d = bb.data_dim;
    const int h = bb.hidden;
    const int in = bb.input_dim();

    if (bg != nullptr) {
        for (int o = 0; o < d; ++o) {
            double* gw = bg->w3.data() + static_cast<std::size_t>(o) * h;
            for (int i = 0; i < h; ++i) gw[i] += gout[o] * c.a2[i];
            bg->b3[o] += gout[o];
        }
    }
    std::vector<double> g2(h, 0.0);
    for (int o = 0; o < d; ++o) {
        const double* w = bb.w3.data() + static_cast<std::size_t>(o) * h;
        for (int i = 0; i < h; ++i) g2[i] += w[i] * gout[o];
    }
    for (int i = 0; i < h; ++i) g2[i] *= 1.0 - c.a2[i] * c.a2[i];

    if (bg != nullptr) {
        for (int o = 0; o < h; ++o) {
            double* gw = bg->w2.data() + static_cast<std::size_t>(o) * h;
            for (int i = 0; i < h; ++i) gw[i] += g2[o] * c.a1[i];
            bg->b2[o] += g2[o];
        }
    }
    std::vector<double> g1(h, 0.0);
    for (int o = 0; o < h; ++o) {
        const double* w = bb.w2.data() + static_cast<std::size_t>(o) * h;
        for (int i = 0; i < h; ++i) g1[i] += w[i] * g2[o];
    }
    for (int i = 0; i < h; ++i) g1[i] *= 1.0 - c.a1[i] * c.a1[i];

    if (bg != nullptr) {
        for (int o = 0; o < h; ++o) {
            double* gw = bg->w1.data() + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) gw[i] += g1[o] * c.x[i];
            bg->b1[o] += g1[o];
        }
    }
    if (!emb_grad.empty()) {
        const int off = d + kTimeEmbedDim;
        for (int o = 0; o < h; ++o) {
            const double* w = bb.w1.data() + static_cast<std::size_t>(o) * in;
            const double g = g1[o];
            for (int k = 0; k < bb.class_embed_dim; ++k) emb_grad[k] += w[off + k] * g;
        }
    }
}

} // namespace detail

// Predicted noise for one latent at one step under one component's table.
inline std::vector<double> denoiser_forward(const DenoiserBackbone& bb,
                                            const ClassEmbeddingTable& table,
                                            std::span<const double> z_t, int t, int T,
                                            int class_id) {
    ForwardCache c;
    detail::forward_cached(bb, table.row(class_id), z_t, t, T, c);
    return std::move(c.out);
}

} // namespace decu
