#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace decu {

// Square single-channel raster, row-major, values nominally in [0, 1]
// (uncertainty maps reuse the type with values in [0, ln M]).
struct Image {
    int size = 0;
    std::vector<double> px;

    Image() = default;
    Image(int size_, double fill)
        : size(size_), px(static_cast<std::size_t>(size_) * size_, fill) {
        if (size_ < 1) throw std::invalid_argument("Image: size must be >= 1");
    }

    double& at(int x, int y) { return px[static_cast<std::size_t>(y) * size + x]; }
    double at(int x, int y) const { return px[static_cast<std::size_t>(y) * size + x]; }

    void clamp01() {
        for (auto& v : px) v = std::clamp(v, 0.0, 1.0);
    }
};

} // namespace decu
