#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "decu/image.hpp"

namespace decu {

// Image <-> latent map standing in for a learned autoencoder. Identity keeps
// the diffusion in pixel space; AvgPool2x halves each side (mean pooling) and
// decodes by nearest-neighbor upsampling.
enum class CodecKind { Identity = 0, AvgPool2x = 1 };

inline const char* to_string(CodecKind k) {
    return k == CodecKind::Identity ? "identity" : "avgpool2x";
}

struct Codec {
    CodecKind kind = CodecKind::Identity;
    int image_size = 0;

    Codec() = default;
    Codec(CodecKind kind_, int image_size_) : kind(kind_), image_size(image_size_) {
        if (image_size < 1) throw std::invalid_argument("Codec: image size must be >= 1");
        if (kind == CodecKind::AvgPool2x && image_size % 2 != 0)
            throw std::invalid_argument("Codec: AvgPool2x needs an even image size");
    }

    int latent_side() const noexcept {
        return kind == CodecKind::Identity ? image_size : image_size / 2;
    }
    int latent_dim() const noexcept { return latent_side() * latent_side(); }

    std::vector<double> encode(const Image& img) const {
        if (img.size != image_size) throw std::invalid_argument("Codec: image has wrong size");
        if (kind == CodecKind::Identity) return img.px;
        const int side = latent_side();
        std::vector<double> z(static_cast<std::size_t>(side) * side);
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                z[static_cast<std::size_t>(y) * side + x] =
                    0.25 * (img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) +
                            img.at(2 * x, 2 * y + 1) + img.at(2 * x + 1, 2 * y + 1));
        return z;
    }

    Image decode(std::span<const double> z) const {
        if (static_cast<int>(z.size()) != latent_dim())
            throw std::invalid_argument("Codec: latent has wrong dimension");
        Image img(image_size, 0.0);
        if (kind == CodecKind::Identity) {
            std::copy(z.begin(), z.end(), img.px.begin());
            return img;
        }
        const int side = latent_side();
        for (int y = 0; y < image_size; ++y)
            for (int x = 0; x < image_size; ++x)
                img.at(x, y) = z[static_cast<std::size_t>(y / 2) * side + x / 2];
        return img;
    }
};

} // namespace decu
