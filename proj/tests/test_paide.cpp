#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "decu/paide.hpp"

using namespace decu;

namespace {

// M unit-variance 1-D components at the given means.
EnsemblePrediction unit_var_at(const std::vector<double>& means) {
    std::vector<DiagonalGaussian> comps;
    for (double m : means) comps.emplace_back(std::vector<double>{m}, std::vector<double>{1.0});
    return EnsemblePrediction::uniform(std::move(comps));
}

EnsemblePrediction point_masses_at(const std::vector<double>& means) {
    std::vector<DiagonalGaussian> comps;
    for (double m : means) comps.push_back(DiagonalGaussian::point_mass({m}));
    return EnsemblePrediction::uniform(std::move(comps));
}

} // namespace

TEST_CASE("ensemble prediction invariants") {
    CHECK_THROWS_AS(EnsemblePrediction({}, {}), std::invalid_argument);
    std::vector<DiagonalGaussian> comps = {DiagonalGaussian({0.0}, {1.0}),
                                           DiagonalGaussian({0.0, 0.0}, {1.0, 1.0})};
    CHECK_THROWS_AS(EnsemblePrediction::uniform(std::move(comps)), DimensionMismatch);
    CHECK_THROWS_AS(EnsemblePrediction({DiagonalGaussian({0.0}, {1.0})}, {0.9}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        EnsemblePrediction({DiagonalGaussian({0.0}, {1.0}), DiagonalGaussian({0.0}, {1.0})},
                           {1.5, -0.5}),
        std::invalid_argument);

    const auto u = EnsemblePrediction::uniform(
        {DiagonalGaussian({0.0}, {1.0}), DiagonalGaussian({1.0}, {1.0})});
    CHECK(u.weights[0] == 0.5);
    CHECK(u.weights[1] == 0.5);
}

TEST_CASE("paide of identical components is zero") {
    std::vector<DiagonalGaussian> comps(5, DiagonalGaussian({1.0, -2.0}, {0.5, 0.25}));
    const auto pred = EnsemblePrediction::uniform(std::move(comps));
    CHECK(paide(pred, Premetric::W2Squared) < 1e-12);
    CHECK(paide(pred, Premetric::KL) < 1e-12);
    CHECK(paide(pred, Premetric::Bhattacharyya) < 1e-12);
}

TEST_CASE("paide saturates to ln M for far-separated point masses") {
    // Means separated by >= 1e4 with zero variance; every off-diagonal W2
    // underflows exp to exactly zero.
    const auto pred = point_masses_at({0.0, 1e4, 2e4, 3e4, 4e4});
    CHECK(paide(pred, Premetric::W2Squared) == Catch::Approx(std::log(5.0)).epsilon(1e-15));
}

TEST_CASE("paide two-component hand value") {
    // D(p1||p2) = D(p2||p1) = ln 2 gives -ln(1/2 + 1/4) = ln(4/3).
    const double sep = std::sqrt(std::numbers::ln2);
    const auto pred = point_masses_at({0.0, sep});
    CHECK(paide(pred, Premetric::W2Squared) ==
          Catch::Approx(0.2876820724517809).epsilon(1e-12));
}

TEST_CASE("paide stays in [0, ln M] and is permutation invariant") {
    SeededStream s(fnv1a64("paide-bounds"));
    for (int it = 0; it < 300; ++it) {
        const std::size_t m = 2 + s.index_below(7);
        const std::size_t d = 1 + s.index_below(16);
        const bool zero_var = s.uniform() < 0.5;
        std::vector<DiagonalGaussian> comps;
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<double> mean(d), var(d);
            for (std::size_t k = 0; k < d; ++k) {
                mean[k] = 20.0 * s.uniform() - 10.0;
                var[k] = zero_var ? 0.0 : 0.1 + s.uniform();
            }
            comps.emplace_back(std::move(mean), std::move(var));
        }
        const auto metric = zero_var ? Premetric::W2Squared
                                     : (s.uniform() < 0.5 ? Premetric::KL : Premetric::Bhattacharyya);
        const auto pred = EnsemblePrediction::uniform(comps);
        const double v = paide(pred, metric);
        REQUIRE(v >= 0.0);
        REQUIRE(v <= std::log(static_cast<double>(m)));

        // Relabeling components leaves the estimate unchanged.
        std::rotate(comps.begin(), comps.begin() + 1, comps.end());
        const double rotated = paide(EnsemblePrediction::uniform(comps), metric);
        CHECK(rotated == Catch::Approx(v).margin(1e-12));
    }
}

TEST_CASE("paide grows monotonically to ln M as separations scale") {
    const std::vector<double> base = {0.0, 0.01, 0.02, 0.03, 0.04};
    double prev = -1.0;
    double last = 0.0;
    for (int p = 0; p <= 10; ++p) {
        const double scale = static_cast<double>(1 << p);
        std::vector<double> means;
        for (double b : base) means.push_back(b * scale * 100.0);
        last = paide(point_masses_at(means), Premetric::W2Squared);
        CHECK(last >= prev - 1e-12);
        prev = last;
    }
    CHECK(std::abs(last - std::log(5.0)) < 1e-6);
}

TEST_CASE("paide propagates metric errors") {
    const auto pred = point_masses_at({0.0, 1.0});
    CHECK_THROWS_AS(paide(pred, Premetric::KL), UndefinedForDegenerate);
    CHECK_THROWS_AS(paide(pred, Premetric::Bhattacharyya), UndefinedForDegenerate);
}

TEST_CASE("mc mutual information at the extremes") {
    // Identical components: mixture equals each component, MI is 0 up to MC
    // noise (~3 standard errors of the ln-density mean at n=1e5).
    std::vector<DiagonalGaussian> same(5, DiagonalGaussian({0.0}, {1.0}));
    const double mi0 = mc_mutual_information(EnsemblePrediction::uniform(same), 100000, 77);
    CHECK(std::abs(mi0) < 0.01);

    // Two far-separated unit-variance components: MI = ln 2.
    const double mi2 = mc_mutual_information(unit_var_at({0.0, 100.0}), 100000, 78);
    CHECK(mi2 == Catch::Approx(std::numbers::ln2).margin(0.01));

    // Five far-separated: MI = ln 5, the saturation asymptote.
    const double mi5 =
        mc_mutual_information(unit_var_at({0.0, 100.0, 200.0, 300.0, 400.0}), 100000, 79);
    CHECK(mi5 == Catch::Approx(std::log(5.0)).margin(0.02));
}

TEST_CASE("mc mutual information cross-checked by quadrature") {
    // 1-D two-component mixture with moderate separation: integrate the
    // mixture entropy directly and compare.
    const auto pred = unit_var_at({0.0, 3.0});
    const auto mix_pdf = [&](double x) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 2; ++j) {
            const double d = x - pred.components[j].mean[0];
            acc += 0.5 * std::exp(-0.5 * d * d) / std::sqrt(2.0 * std::numbers::pi);
        }
        return acc;
    };
    const int n = 40000;
    const double lo = -12.0, hi = 15.0;
    const double h = (hi - lo) / n;
    double h_mix = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = lo + i * h;
        const double f = mix_pdf(x);
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        if (f > 0) h_mix -= w * f * std::log(f);
    }
    h_mix *= h / 3.0;
    const double mi_exact = h_mix - 1.4189385332046727;

    const double mi_mc = mc_mutual_information(pred, 200000, 4242);
    CHECK(mi_mc == Catch::Approx(mi_exact).margin(0.01));
}

TEST_CASE("mc mutual information is reproducible and thread-count independent") {
    const auto pred = unit_var_at({0.0, 1.0, 2.0});
    const double a = mc_mutual_information(pred, 20000, 123);
    const double b = mc_mutual_information(pred, 20000, 123);
    CHECK(a == b);

    setenv("DECU_THREADS", "1", 1);
    const double serial = mc_mutual_information(pred, 20000, 123);
    setenv("DECU_THREADS", "7", 1);
    const double threaded = mc_mutual_information(pred, 20000, 123);
    unsetenv("DECU_THREADS");
    CHECK(serial == threaded);
    CHECK(serial == a);

    CHECK(mc_mutual_information(pred, 20000, 124) != a);
}

TEST_CASE("mc mutual information rejects bad inputs") {
    const auto pred = unit_var_at({0.0, 1.0});
    CHECK_THROWS_AS(mc_mutual_information(pred, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(mc_mutual_information(point_masses_at({0.0, 1.0}), 10, 1),
                    UndefinedForDegenerate);
}

TEST_CASE("paide agrees with the MC oracle at the extremes") {
    // Well-separated unit-variance components, KL premetric.
    const auto sep = unit_var_at({0.0, 30.0, 60.0, 90.0, 120.0});
    const double est = paide(sep, Premetric::KL);
    const double mc = mc_mutual_information(sep, 100000, 314);
    CHECK(std::abs(est - mc) <= 0.05);

    std::vector<DiagonalGaussian> same(5, DiagonalGaussian({0.0}, {1.0}));
    const auto id = EnsemblePrediction::uniform(same);
    CHECK(paide(id, Premetric::KL) <= 0.01);
    CHECK(std::abs(mc_mutual_information(id, 100000, 315)) <= 0.01);
}
