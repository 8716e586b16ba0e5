#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "decu/ensemble.hpp"
#include "decu/errors.hpp"
#include "decu/io.hpp"

namespace decu {

// Versioned binary container: magic "DECU1", the five dims (d, h, e_c, C, T)
// as little-endian 32-bit integers, the backbone parameter blocks as
// little-endian 64-bit floats in declaration order, then the M component
// blocks (seed, subset hash, table rows) and the manifest tail. Round-trips
// are bit-exact.
inline constexpr char kCheckpointMagic[5] = {'D', 'E', 'C', 'U', '1'};

namespace detail {

struct ByteWriter {
    std::string buf;

    void raw(const void* p, std::size_t n) { buf.append(static_cast<const char*>(p), n); }
    void i32(std::int32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        raw(b, 4);
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        raw(b, 8);
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f64_block(std::span<const double> vs) {
        for (double v : vs) f64(v);
    }
};

struct ByteReader {
    std::string_view buf;
    std::size_t pos = 0;

    void raw(void* p, std::size_t n) {
        if (pos + n > buf.size()) throw CheckpointError("checkpoint truncated");
        std::memcpy(p, buf.data() + pos, n);
        pos += n;
    }
    std::int32_t i32() {
        unsigned char b[4];
        raw(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return static_cast<std::int32_t>(v);
    }
    std::uint64_t u64() {
        unsigned char b[8];
        raw(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    void f64_block(std::span<double> vs) {
        for (double& v : vs) v = f64();
    }
    bool done() const { return pos == buf.size(); }
};

} // namespace detail

struct LoadedEnsemble {
    EnsembleModel model;
    std::uint64_t config_hash = 0;
    std::vector<std::uint64_t> subset_hashes;
};

inline std::string serialize_ensemble(const EnsembleModel& model, std::uint64_t config_hash,
                                      std::span<const std::uint64_t> subset_hashes) {
    const auto& bb = model.backbone;
    const int m = model.num_components();
    if (static_cast<int>(subset_hashes.size()) != m)
        throw std::invalid_argument("serialize_ensemble: need one subset hash per component");

    detail::ByteWriter w;
    w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
    w.i32(bb.data_dim);
    w.i32(bb.hidden);
    w.i32(bb.class_embed_dim);
    w.i32(model.num_classes());
    w.i32(model.sched.T);
    w.f64_block(bb.w1);
    w.f64_block(bb.b1);
    w.f64_block(bb.w2);
    w.f64_block(bb.b2);
    w.f64_block(bb.w3);
    w.f64_block(bb.b3);
    w.i32(m);
    for (int j = 0; j < m; ++j) {
        w.u64(model.component_seeds.at(j));
        w.u64(subset_hashes[j]);
        w.f64_block(model.tables[j].rows);
    }
    w.f64(model.sched.betas.front());
    w.f64(model.sched.betas.back());
    w.i32(model.ddim_steps);
    w.i32(model.codec.image_size);
    w.i32(static_cast<std::int32_t>(model.codec.kind));
    w.u64(config_hash);
    return std::move(w.buf);
}

inline LoadedEnsemble deserialize_ensemble(std::string_view bytes) {
    detail::ByteReader r{bytes};
    char magic[5];
    r.raw(magic, 5);
    if (std::memcmp(magic, kCheckpointMagic, 5) != 0)
        throw CheckpointError("not a DECU1 checkpoint");

    const int d = r.i32();
    const int h = r.i32();
    const int e_c = r.i32();
    const int n_classes = r.i32();
    const int T = r.i32();
    if (d < 1 || h < 1 || e_c < 1 || n_classes < 1 || T < 2)
        throw CheckpointError("checkpoint has invalid dimensions");

    LoadedEnsemble out;
    auto& model = out.model;
    auto& bb = model.backbone;
    bb.data_dim = d;
    bb.hidden = h;
    bb.class_embed_dim = e_c;
    const std::size_t in = static_cast<std::size_t>(bb.input_dim());
    bb.w1.resize(in * h);
    bb.b1.resize(h);
    bb.w2.resize(static_cast<std::size_t>(h) * h);
    bb.b2.resize(h);
    bb.w3.resize(static_cast<std::size_t>(d) * h);
    bb.b3.resize(d);
    r.f64_block(bb.w1);
    r.f64_block(bb.b1);
    r.f64_block(bb.w2);
    r.f64_block(bb.b2);
    r.f64_block(bb.w3);
    r.f64_block(bb.b3);

    const int m = r.i32();
    if (m < 1) throw CheckpointError("checkpoint has no components");
    for (int j = 0; j < m; ++j) {
        model.component_seeds.push_back(r.u64());
        out.subset_hashes.push_back(r.u64());
        ClassEmbeddingTable t;
        t.num_classes = n_classes;
        t.embed_dim = e_c;
        t.rows.resize(static_cast<std::size_t>(n_classes) * e_c);
        r.f64_block(t.rows);
        model.tables.push_back(std::move(t));
    }
    model.weights.assign(m, 1.0 / static_cast<double>(m));

    const double beta_start = r.f64();
    const double beta_end = r.f64();
    model.sched = make_schedule(T, beta_start, beta_end);
    model.ddim_steps = r.i32();
    const int image_size = r.i32();
    const int codec_kind = r.i32();
    if (codec_kind != 0 && codec_kind != 1) throw CheckpointError("unknown codec kind");
    model.codec = Codec(static_cast<CodecKind>(codec_kind), image_size);
    if (model.codec.latent_dim() != d)
        throw CheckpointError("checkpoint codec does not match the backbone dimension");
    out.config_hash = r.u64();
    if (!r.done()) throw CheckpointError("trailing bytes after checkpoint payload");
    return out;
}

inline void save_ensemble(const EnsembleModel& model, std::uint64_t config_hash,
                          std::span<const std::uint64_t> subset_hashes,
                          const std::filesystem::path& path) {
    write_file(path, serialize_ensemble(model, config_hash, subset_hashes));
}

inline LoadedEnsemble load_ensemble(const std::filesystem::path& path) {
    return deserialize_ensemble(read_file(path));
}

} // namespace decu
