#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "decu/denoiser.hpp"
#include "decu/training.hpp"

using namespace decu;

namespace {

// Central finite differences of the batch loss with respect to one scalar
// parameter. The counter-based stream guarantees identical corruption draws
// on both sides of the perturbation.
double fd_grad(double* param, const DenoiserBackbone& bb, const ClassEmbeddingTable& tbl,
               std::span<const TrainingExample> batch, const NoiseSchedule& sched,
               const SeededStream& stream, double h = 1e-3) {
    const double saved = *param;
    *param = saved + h;
    const double up = batch_loss_and_grads(bb, tbl, batch, sched, stream, nullptr, nullptr);
    *param = saved - h;
    const double dn = batch_loss_and_grads(bb, tbl, batch, sched, stream, nullptr, nullptr);
    *param = saved;
    return (up - dn) / (2.0 * h);
}

struct Instance {
    DenoiserBackbone bb;
    ClassEmbeddingTable tbl;
    NoiseSchedule sched;
    std::vector<std::vector<double>> data;
    std::vector<TrainingExample> batch;
};

Instance random_instance(std::uint64_t seed, int d, int h, int e_c, int n_classes,
                         int batch_size) {
    SeededStream s(seed);
    Instance inst{DenoiserBackbone::init(d, h, e_c, s.derive("bb")),
                  ClassEmbeddingTable::init(n_classes, e_c, 0.5, s.derive("tbl")),
                  make_schedule(10, 1e-3, 2e-1),
                  {},
                  {}};
    SeededStream ds = s.derive("data");
    for (int i = 0; i < batch_size; ++i) {
        std::vector<double> y(d);
        for (auto& v : y) v = ds.uniform();
        inst.data.push_back(std::move(y));
    }
    for (int i = 0; i < batch_size; ++i)
        inst.batch.push_back({inst.data[i], static_cast<int>(ds.index_below(n_classes))});
    return inst;
}

} // namespace

TEST_CASE("all-zero weights predict zero noise") {
    SeededStream s(1);
    auto bb = DenoiserBackbone::init(4, 6, 3, s.derive("bb"));
    std::fill(bb.w1.begin(), bb.w1.end(), 0.0);
    std::fill(bb.w2.begin(), bb.w2.end(), 0.0);
    std::fill(bb.w3.begin(), bb.w3.end(), 0.0);
    const auto tbl = ClassEmbeddingTable::init(2, 3, 0.5, s.derive("tbl"));
    const auto out = denoiser_forward(bb, tbl, std::vector<double>{1.0, -2.0, 0.5, 3.0}, 5, 10, 1);
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("prediction depends on the class only through its embedding row") {
    SeededStream s(2);
    const auto bb = DenoiserBackbone::init(4, 8, 3, s.derive("bb"));
    auto tbl = ClassEmbeddingTable::init(3, 3, 0.5, s.derive("tbl"));
    auto r0 = tbl.row(0);
    auto r2 = tbl.row(2);
    std::copy(r0.begin(), r0.end(), r2.begin());

    const std::vector<double> z{0.3, -0.7, 1.1, 0.0};
    CHECK(denoiser_forward(bb, tbl, z, 4, 10, 0) == denoiser_forward(bb, tbl, z, 4, 10, 2));
    CHECK(denoiser_forward(bb, tbl, z, 4, 10, 0) != denoiser_forward(bb, tbl, z, 4, 10, 1));
}

TEST_CASE("unknown class id is rejected") {
    SeededStream s(3);
    const auto bb = DenoiserBackbone::init(2, 4, 2, s.derive("bb"));
    const auto tbl = ClassEmbeddingTable::init(2, 2, 0.5, s.derive("tbl"));
    CHECK_THROWS_AS(denoiser_forward(bb, tbl, std::vector<double>{0.0, 0.0}, 1, 10, 2),
                    std::out_of_range);
    CHECK_THROWS_AS(denoiser_forward(bb, tbl, std::vector<double>{0.0, 0.0}, 1, 10, -1),
                    std::out_of_range);
    CHECK_THROWS_AS(denoiser_forward(bb, tbl, std::vector<double>{0.0}, 1, 10, 0),
                    DimensionMismatch);
}

TEST_CASE("time embedding is bounded and varies with t") {
    const auto a = time_embedding(1, 100);
    const auto b = time_embedding(50, 100);
    CHECK(a != b);
    for (double v : a) {
        CHECK(v <= 1.0);
        CHECK(v >= -1.0);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    // Randomized small instances; rel err < 1e-4 at h = 1e-3 on every
    // parameter block and on the embedding rows.
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        auto inst = random_instance(seed, 4, 6, 3, 3, 2);
        const SeededStream stream(fnv1a64("gradcheck") + seed);

        auto bg = BackboneGrads::zeros(inst.bb);
        std::vector<double> tg(inst.tbl.rows.size(), 0.0);
        batch_loss_and_grads(inst.bb, inst.tbl, inst.batch, inst.sched, stream, &bg, &tg);

        const auto check = [&](double* param, double analytic) {
            const double fd =
                fd_grad(param, inst.bb, inst.tbl, inst.batch, inst.sched, stream);
            const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-8});
            REQUIRE(std::abs(analytic - fd) / denom < 1e-4);
        };

        // Spot-check a spread of parameters from every block.
        for (std::size_t i = 0; i < inst.bb.w1.size(); i += 7) check(&inst.bb.w1[i], bg.w1[i]);
        for (std::size_t i = 0; i < inst.bb.b1.size(); i += 2) check(&inst.bb.b1[i], bg.b1[i]);
        for (std::size_t i = 0; i < inst.bb.w2.size(); i += 5) check(&inst.bb.w2[i], bg.w2[i]);
        for (std::size_t i = 0; i < inst.bb.b2.size(); i += 2) check(&inst.bb.b2[i], bg.b2[i]);
        for (std::size_t i = 0; i < inst.bb.w3.size(); i += 3) check(&inst.bb.w3[i], bg.w3[i]);
        for (std::size_t i = 0; i < inst.bb.b3.size(); ++i) check(&inst.bb.b3[i], bg.b3[i]);
        for (std::size_t i = 0; i < inst.tbl.rows.size(); ++i) check(&inst.tbl.rows[i], tg[i]);
    }
}

TEST_CASE("backbone hash tracks parameter content") {
    SeededStream s(4);
    auto bb = DenoiserBackbone::init(4, 6, 3, s.derive("bb"));
    const auto h0 = backbone_hash(bb);
    CHECK(h0 == backbone_hash(bb));
    bb.w2[10] += 1e-12;
    CHECK(backbone_hash(bb) != h0);
}
