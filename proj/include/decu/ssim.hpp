#pragma once

#include <vector>

#include "decu/errors.hpp"
#include "decu/image.hpp"

namespace decu {

// Structural similarity with 8x8 uniform windows at stride 1, dynamic range
// L = 1, C1 = (0.01 L)^2, C2 = (0.03 L)^2; the result is the mean over all
// window positions. Window variance/covariance use the biased (1/N)
// normalization.
inline double ssim(const Image& a, const Image& b) {
    if (a.size != b.size) throw DimensionMismatch("ssim: image shapes differ");
    constexpr int kWin = 8;
    constexpr double kC1 = 1e-4;   // (0.01)^2
    constexpr double kC2 = 9e-4;   // (0.03)^2
    if (a.size < kWin) throw std::invalid_argument("ssim: image smaller than the 8x8 window");

    const int positions = a.size - kWin + 1;
    const double inv_n = 1.0 / (kWin * kWin);
    double total = 0.0;
    for (int wy = 0; wy < positions; ++wy) {
        for (int wx = 0; wx < positions; ++wx) {
            double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
            for (int y = wy; y < wy + kWin; ++y)
                for (int x = wx; x < wx + kWin; ++x) {
                    const double va = a.at(x, y);
                    const double vb = b.at(x, y);
                    sa += va;
                    sb += vb;
                    saa += va * va;
                    sbb += vb * vb;
                    sab += va * vb;
                }
            const double mu_a = sa * inv_n;
            const double mu_b = sb * inv_n;
            const double var_a = saa * inv_n - mu_a * mu_a;
            const double var_b = sbb * inv_n - mu_b * mu_b;
            const double cov = sab * inv_n - mu_a * mu_b;
            total += ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
                     ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
        }
    }
    return total / (static_cast<double>(positions) * positions);
}

} // namespace decu
