#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "decu/codec.hpp"
#include "decu/dataset.hpp"

using namespace decu;

namespace {

Image mean_image(const std::vector<Image>& pool) {
    Image m(pool.front().size, 0.0);
    for (const auto& img : pool)
        for (std::size_t i = 0; i < img.px.size(); ++i) m.px[i] += img.px[i];
    for (auto& v : m.px) v /= static_cast<double>(pool.size());
    return m;
}

double l2(const Image& a, const Image& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.px.size(); ++i) {
        const double d = a.px[i] - b.px[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

} // namespace

TEST_CASE("dataset generation is deterministic in the seed") {
    const DatasetConfig cfg;
    const auto a = make_binned_dataset(cfg, 42);
    const auto b = make_binned_dataset(cfg, 42);
    CHECK(a.hash() == b.hash());
    const auto c = make_binned_dataset(cfg, 43);
    CHECK(a.hash() != c.hash());
}

TEST_CASE("dataset structure follows the config") {
    DatasetConfig cfg;
    cfg.classes_per_small_bin = 3;
    cfg.classes_max_bin = 5;
    cfg.pool_per_class = 16;
    cfg.per_component_counts = {1, 2, 4, 16};
    const auto ds = make_binned_dataset(cfg, 7);

    REQUIRE(ds.num_classes() == 14);
    for (int c = 0; c < 3; ++c) CHECK(ds.class_bins[c] == BinLabel::Bin1);
    for (int c = 3; c < 6; ++c) CHECK(ds.class_bins[c] == BinLabel::Bin10);
    for (int c = 6; c < 9; ++c) CHECK(ds.class_bins[c] == BinLabel::Bin100);
    for (int c = 9; c < 14; ++c) CHECK(ds.class_bins[c] == BinLabel::Bin1300);

    for (const auto& pool : ds.pools) {
        REQUIRE(pool.size() == 16);
        for (const auto& img : pool) {
            REQUIRE(img.size == cfg.image_size);
            for (double v : img.px) {
                REQUIRE(v >= 0.0);
                REQUIRE(v <= 1.0);
            }
        }
    }
    CHECK(ds.count_for(BinLabel::Bin10) == 2);
}

TEST_CASE("dataset rejects invalid configs") {
    DatasetConfig cfg;
    cfg.image_size = 4;
    CHECK_THROWS_AS(make_binned_dataset(cfg, 1), std::invalid_argument);

    cfg = DatasetConfig{};
    cfg.classes_per_small_bin = 0;
    CHECK_THROWS_AS(make_binned_dataset(cfg, 1), std::invalid_argument);

    cfg = DatasetConfig{};
    cfg.per_component_counts = {1, 4, 4, 64};
    CHECK_THROWS_AS(make_binned_dataset(cfg, 1), std::invalid_argument);

    // Pool must cover the largest per-component draw without replacement.
    cfg = DatasetConfig{};
    cfg.pool_per_class = 32;
    CHECK_THROWS_AS(make_binned_dataset(cfg, 1), std::invalid_argument);
}

TEST_CASE("classes in the same family render distinct mean images") {
    const auto ds = make_binned_dataset(DatasetConfig{}, 11);
    std::vector<Image> means;
    means.reserve(ds.num_classes());
    for (const auto& pool : ds.pools) means.push_back(mean_image(pool));

    for (int a = 0; a < ds.num_classes(); ++a)
        for (int b = a + 1; b < ds.num_classes(); ++b) {
            if (a % 4 != b % 4) continue; // same family only
            INFO("classes " << a << " and " << b);
            CHECK(l2(means[a], means[b]) > 0.5);
        }
}

TEST_CASE("intra-class images vary but share the pattern") {
    const auto ds = make_binned_dataset(DatasetConfig{}, 13);
    const auto& pool = ds.pools[0];
    CHECK(l2(pool[0], pool[1]) > 0.0);
    // A sample stays closer to its own class mean than to another class's.
    const auto m0 = mean_image(ds.pools[0]);
    const auto m4 = mean_image(ds.pools[4]); // same family, different class
    CHECK(l2(pool[0], m0) < l2(pool[0], m4));
}

TEST_CASE("identity codec round-trips exactly") {
    const Codec codec(CodecKind::Identity, 16);
    CHECK(codec.latent_dim() == 256);
    const auto ds = make_binned_dataset(DatasetConfig{}, 3);
    const auto& img = ds.pools[5][0];
    const auto z = codec.encode(img);
    const auto back = codec.decode(z);
    CHECK(back.px == img.px);
}

TEST_CASE("avgpool codec pools and upsamples") {
    const Codec codec(CodecKind::AvgPool2x, 16);
    CHECK(codec.latent_dim() == 64);

    Image img(16, 0.0);
    img.at(0, 0) = 1.0;
    img.at(1, 0) = 0.5;
    img.at(0, 1) = 0.25;
    img.at(1, 1) = 0.25;
    const auto z = codec.encode(img);
    CHECK(z[0] == Catch::Approx(0.5).epsilon(1e-15));

    const auto up = codec.decode(z);
    CHECK(up.size == 16);
    CHECK(up.at(0, 0) == z[0]);
    CHECK(up.at(1, 1) == z[0]);

    // A constant image survives the round trip.
    Image flat(16, 0.625);
    CHECK(codec.decode(codec.encode(flat)).px == flat.px);

    CHECK_THROWS_AS(Codec(CodecKind::AvgPool2x, 15), std::invalid_argument);
    CHECK_THROWS_AS(codec.encode(Image(8, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(codec.decode(std::vector<double>(63, 0.0)), std::invalid_argument);
}
