#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "decu/dataset.hpp"
#include "decu/rng.hpp"
#include "decu/ssim.hpp"

using namespace decu;

namespace {

// Independent scalar re-implementation used as the oracle: same definition,
// written as one flat loop over window positions.
double ssim_oracle(const Image& a, const Image& b) {
    const int win = 8, n = win * win;
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0.0;
    int windows = 0;
    for (int wy = 0; wy + win <= a.size; ++wy)
        for (int wx = 0; wx + win <= a.size; ++wx) {
            double ma = 0, mb = 0;
            for (int y = 0; y < win; ++y)
                for (int x = 0; x < win; ++x) {
                    ma += a.at(wx + x, wy + y);
                    mb += b.at(wx + x, wy + y);
                }
            ma /= n;
            mb /= n;
            double va = 0, vb = 0, cab = 0;
            for (int y = 0; y < win; ++y)
                for (int x = 0; x < win; ++x) {
                    const double da = a.at(wx + x, wy + y) - ma;
                    const double db = b.at(wx + x, wy + y) - mb;
                    va += da * da;
                    vb += db * db;
                    cab += da * db;
                }
            va /= n;
            vb /= n;
            cab /= n;
            total += ((2 * ma * mb + c1) * (2 * cab + c2)) /
                     ((ma * ma + mb * mb + c1) * (va + vb + c2));
            ++windows;
        }
    return total / windows;
}

} // namespace

TEST_CASE("ssim of an image with itself is one") {
    const auto ds = make_binned_dataset(DatasetConfig{}, 5);
    for (int c : {0, 1, 2, 3}) CHECK(ssim(ds.pools[c][0], ds.pools[c][0]) == 1.0);
}

TEST_CASE("ssim degenerate constant-image case") {
    // Constant 0.25 against constant 0.75: variance terms vanish, so only the
    // luminance ratio (2 mu_a mu_b + C1) / (mu_a^2 + mu_b^2 + C1) remains.
    const Image a(16, 0.25);
    const Image b(16, 0.75);
    const double expected = (2 * 0.25 * 0.75 + 1e-4) / (0.25 * 0.25 + 0.75 * 0.75 + 1e-4);
    CHECK(ssim(a, b) == Catch::Approx(expected).epsilon(1e-14));
    CHECK(ssim(a, b) == Catch::Approx(0.6000639897616381).epsilon(1e-14));
    CHECK(ssim(a, b) == Catch::Approx(ssim_oracle(a, b)).epsilon(1e-14));
}

TEST_CASE("ssim is symmetric and bounded on random pairs") {
    const auto ds = make_binned_dataset(DatasetConfig{}, 6);
    SeededStream s(fnv1a64("ssim-pairs"));
    for (int it = 0; it < 50; ++it) {
        const auto& a = ds.pools[s.index_below(ds.num_classes())][s.index_below(8)];
        const auto& b = ds.pools[s.index_below(ds.num_classes())][s.index_below(8)];
        const double ab = ssim(a, b);
        CHECK(ab == ssim(b, a));
        CHECK(ab >= -1.0);
        CHECK(ab <= 1.0);
        CHECK(ab == Catch::Approx(ssim_oracle(a, b)).margin(1e-12));
    }
}

TEST_CASE("ssim separates similar from dissimilar images") {
    const auto ds = make_binned_dataset(DatasetConfig{}, 7);
    // Two draws of one class vs draws of different classes.
    const double same = ssim(ds.pools[8][0], ds.pools[8][1]);
    const double diff = ssim(ds.pools[8][0], ds.pools[12][0]);
    CHECK(same > diff);
}

TEST_CASE("ssim rejects mismatched shapes") {
    CHECK_THROWS_AS(ssim(Image(16, 0.0), Image(8, 0.0)), DimensionMismatch);
}
