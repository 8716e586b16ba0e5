#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "decu/image.hpp"
#include "decu/rng.hpp"

namespace decu {

// Classes are grouped by how many training images each ensemble component
// sees of them. Labels keep the source-scale names; the per-component counts
// are the desk-scale defaults {1, 4, 16, 64}.
enum class BinLabel { Bin1 = 0, Bin10 = 1, Bin100 = 2, Bin1300 = 3 };

inline constexpr int kNumBins = 4;

inline const char* to_string(BinLabel b) {
    switch (b) {
        case BinLabel::Bin1: return "bin1";
        case BinLabel::Bin10: return "bin10";
        case BinLabel::Bin100: return "bin100";
        case BinLabel::Bin1300: return "bin1300";
    }
    return "?";
}

struct DatasetConfig {
    int image_size = 16;
    int classes_per_small_bin = 10; // each of bin1 / bin10 / bin100
    int classes_max_bin = 20;       // bin1300
    int pool_per_class = 64;
    std::array<int, kNumBins> per_component_counts = {1, 4, 16, 64};
    double pixel_noise = 0.05;
};

// Synthetic class-conditional corpus: each class is a procedural pattern
// (disk, bar, checkerboard or gradient) with class-specific parameters, and
// each pool image jitters those parameters and adds pixel noise.
struct BinnedDataset {
    int image_size = 0;
    std::array<int, kNumBins> per_component_counts{};
    std::vector<BinLabel> class_bins;      // per class
    std::vector<std::vector<Image>> pools; // per class

    int num_classes() const noexcept { return static_cast<int>(class_bins.size()); }

    int count_for(BinLabel b) const {
        return per_component_counts[static_cast<int>(b)];
    }

    std::uint64_t hash() const {
        std::uint64_t h = fnv1a64_bytes(&image_size, sizeof image_size);
        for (int c = 0; c < num_classes(); ++c) {
            const auto bin = static_cast<int>(class_bins[c]);
            h = mix64(h ^ fnv1a64_bytes(&bin, sizeof bin));
            for (const auto& img : pools[c])
                h = mix64(h ^ fnv1a64_bytes(img.px.data(), img.px.size() * sizeof(double)));
        }
        return h;
    }
};

namespace detail {

inline void render_disk(Image& img, double cx, double cy, double r, double bg, double fg) {
    for (int y = 0; y < img.size; ++y)
        for (int x = 0; x < img.size; ++x) {
            const double dx = x + 0.5 - cx;
            const double dy = y + 0.5 - cy;
            const double cover = std::clamp(r - std::sqrt(dx * dx + dy * dy) + 0.5, 0.0, 1.0);
            img.at(x, y) = bg + (fg - bg) * cover;
        }
}

inline void render_bar(Image& img, double pos, double width, bool vertical, double bg,
                       double fg) {
    for (int y = 0; y < img.size; ++y)
        for (int x = 0; x < img.size; ++x) {
            const double c = vertical ? x : y;
            // Overlap of the pixel [c, c+1) with the band [pos, pos+width).
            const double cover =
                std::clamp(std::min(pos + width, c + 1.0) - std::max(pos, c), 0.0, 1.0);
            img.at(x, y) = bg + (fg - bg) * cover;
        }
}

inline void render_checker(Image& img, int cell, double ox, double oy, double lo, double hi) {
    for (int y = 0; y < img.size; ++y)
        for (int x = 0; x < img.size; ++x) {
            const auto cx = static_cast<long>(std::floor((x + ox) / cell));
            const auto cy = static_cast<long>(std::floor((y + oy) / cell));
            img.at(x, y) = ((cx + cy) & 1) == 0 ? lo : hi;
        }
}

inline void render_gradient(Image& img, double angle, double offset, double lo, double hi) {
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    for (int y = 0; y < img.size; ++y)
        for (int x = 0; x < img.size; ++x) {
            const double sx = (x + 0.5) / img.size - 0.5;
            const double sy = (y + 0.5) / img.size - 0.5;
            const double u = std::clamp(0.5 + sx * ca + sy * sa + offset, 0.0, 1.0);
            img.at(x, y) = lo + (hi - lo) * u;
        }
}

// Class-constant pattern parameters. Within a family, the lattice position /
// stripe position / cell geometry is spaced deterministically by the
// within-family index so any two classes render visibly different mean
// images; gray levels come from the class stream.
struct ClassPattern {
    int family; // 0 disk, 1 bar, 2 checker, 3 gradient
    double a, b, c, lo, hi;
    bool flag;
};

inline ClassPattern make_class_pattern(int class_id, SeededStream s) {
    ClassPattern p{};
    p.family = class_id % 4;
    const int k = class_id / 4;
    switch (p.family) {
        case 0:
            p.a = 0.22 + 0.125 * (k % 5);       // cx / size
            p.b = 0.22 + 0.125 * ((k / 5) % 5); // cy / size
            p.c = 0.14 + 0.05 * (k % 3);        // r / size
            p.lo = 0.04 + 0.10 * s.uniform();   // background
            p.hi = 0.78 + 0.18 * s.uniform();   // disk
            break;
        case 1:
            p.flag = (k % 2) == 0; // vertical?
            p.a = 0.05 + 0.75 * ((k * 2) % 13) / 13.0; // pos / size
            p.b = 0.12 + 0.04 * (k % 3);               // width / size
            p.lo = 0.04 + 0.10 * s.uniform();
            p.hi = 0.78 + 0.18 * s.uniform();
            break;
        case 2:
            p.a = 2.0 + k % 3;                       // cell (pixels)
            p.b = ((k / 3) % 2) * 0.5 * p.a;         // phase offset
            p.lo = 0.03 + 0.12 * (k / 6) + 0.04 * s.uniform();
            p.hi = 0.97 - 0.10 * (k / 6) - 0.04 * s.uniform();
            break;
        default:
            p.a = 3.14159265358979323846 * k / 13.0 + 0.05 * s.uniform(); // angle
            p.b = 0.06 * s.uniform() - 0.03;                              // offset
            p.lo = 0.02 + 0.08 * s.uniform();
            p.hi = 0.90 + 0.08 * s.uniform();
            break;
    }
    return p;
}

// Intra-class variation comes from parameter jitter wide enough that two
// draws of one class are visibly different placements of the same pattern,
// plus pixel noise.
inline Image render_class_image(const ClassPattern& p, int size, SeededStream s,
                                double pixel_noise) {
    Image img(size, 0.0);
    const double px_jit = 0.1 * size; // position jitter, ~1.6 px at 16
    switch (p.family) {
        case 0:
            render_disk(img, p.a * size + px_jit * s.normal(), p.b * size + px_jit * s.normal(),
                        p.c * size + 0.05 * size * s.normal(), p.lo, p.hi);
            break;
        case 1:
            render_bar(img, p.a * size + 1.25 * px_jit * s.normal(),
                       std::max(1.5, p.b * size + 0.04 * size * s.normal()), p.flag, p.lo,
                       p.hi);
            break;
        case 2:
            render_checker(img, static_cast<int>(p.a), p.b + 1.0 * s.normal(),
                           1.0 * s.normal(), p.lo, p.hi);
            break;
        default:
            render_gradient(img, p.a + 0.15 * s.normal(), p.b + 0.12 * s.normal(), p.lo,
                            p.hi);
            break;
    }
    for (auto& v : img.px) v += pixel_noise * s.normal();
    img.clamp01();
    return img;
}

} // namespace detail

inline BinnedDataset make_binned_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
    if (cfg.image_size < 8) throw std::invalid_argument("dataset: image size must be >= 8");
    if (cfg.classes_per_small_bin < 1 || cfg.classes_max_bin < 1)
        throw std::invalid_argument("dataset: class counts must be >= 1 per bin");
    for (int i = 1; i < kNumBins; ++i)
        if (cfg.per_component_counts[i] <= cfg.per_component_counts[i - 1])
            throw std::invalid_argument("dataset: per-bin counts must be strictly increasing");
    if (cfg.per_component_counts[0] < 1)
        throw std::invalid_argument("dataset: per-bin counts must be >= 1");
    if (cfg.pool_per_class < cfg.per_component_counts[kNumBins - 1])
        throw std::invalid_argument(
            "dataset: pool too small; per-component draws must never need replacement");

    BinnedDataset ds;
    ds.image_size = cfg.image_size;
    ds.per_component_counts = cfg.per_component_counts;
    const int n_classes = 3 * cfg.classes_per_small_bin + cfg.classes_max_bin;
    ds.class_bins.resize(n_classes);
    ds.pools.resize(n_classes);

    const SeededStream root(seed);
    for (int c = 0; c < n_classes; ++c) {
        if (c < cfg.classes_per_small_bin)
            ds.class_bins[c] = BinLabel::Bin1;
        else if (c < 2 * cfg.classes_per_small_bin)
            ds.class_bins[c] = BinLabel::Bin10;
        else if (c < 3 * cfg.classes_per_small_bin)
            ds.class_bins[c] = BinLabel::Bin100;
        else
            ds.class_bins[c] = BinLabel::Bin1300;

        const SeededStream cs = root.derive("class", c);
        const auto pattern = detail::make_class_pattern(c, cs.derive("pattern"));
        ds.pools[c].reserve(cfg.pool_per_class);
        for (int i = 0; i < cfg.pool_per_class; ++i)
            ds.pools[c].push_back(detail::render_class_image(
                pattern, cfg.image_size, cs.derive("image", i), cfg.pixel_noise));
    }
    return ds;
}

} // namespace decu
