// Deterministic image generators for tests: photo-like scenes (gradients,
// blobs, mild texture) and dyadic-valued images whose floats survive affine
// tricks and 8-bit round-trips exactly.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "pf/image.hpp"
#include "pf/rng.hpp"

namespace synth {

// Photo-like scene: oriented linear gradient + radial falloff + soft color
// blobs + hard-edged "objects" (rectangles and disks with their own albedo)
// + faint noise, lightly blurred. The hard edges matter: graph-based
// segmenters behave pathologically on purely smooth ramps, while anything
// camera-shot has occlusion boundaries everywhere. Values land in [0,1].
inline pf::PixelImage photo(uint64_t seed, int w = 224, int h = 224) {
    pf::Rng rng(pf::mix_seed(seed, 0x70686f746fULL));
    pf::PixelImage img(w, h, 3);

    const double theta = rng.uniform(0.0, 6.28318530717958647692);
    const double gx = std::cos(theta), gy = std::sin(theta);
    double base[3], tilt[3];
    for (int c = 0; c < 3; ++c) {
        base[c] = rng.uniform(0.3, 0.7);
        tilt[c] = (rng.uniform_int(0, 1) ? 1.0 : -1.0) * rng.uniform(0.25, 0.5);
    }
    const double cx = rng.uniform(0.3, 0.7) * w;
    const double cy = rng.uniform(0.3, 0.7) * h;
    const double vign = rng.uniform(0.15, 0.35);

    struct Blob {
        double x, y, r, amp[3];
    };
    Blob blobs[5];
    const int n_blobs = 3 + static_cast<int>(rng.uniform_int(0, 2));
    for (int i = 0; i < n_blobs; ++i) {
        blobs[i].x = rng.uniform(0.1, 0.9) * w;
        blobs[i].y = rng.uniform(0.1, 0.9) * h;
        blobs[i].r = rng.uniform(0.08, 0.25) * std::min(w, h);
        for (int c = 0; c < 3; ++c)
            blobs[i].amp[c] = (rng.uniform_int(0, 1) ? 1.0 : -1.0) * rng.uniform(0.25, 0.55);
    }

    struct Shape {
        bool disk;
        double x, y, rw, rh, color[3], mix;
    };
    Shape shapes[24];
    const int n_shapes = 16 + static_cast<int>(rng.uniform_int(0, 8));
    const double scale = std::min(w, h) / 224.0;
    for (int i = 0; i < n_shapes; ++i) {
        shapes[i].disk = rng.uniform_int(0, 1) == 0;
        shapes[i].x = rng.uniform(0.05, 0.95) * w;
        shapes[i].y = rng.uniform(0.05, 0.95) * h;
        shapes[i].rw = rng.uniform(7.0, 26.0) * scale;
        shapes[i].rh = shapes[i].disk ? shapes[i].rw : rng.uniform(7.0, 26.0) * scale;
        for (int c = 0; c < 3; ++c) shapes[i].color[c] = rng.uniform(0.05, 0.95);
        shapes[i].mix = rng.uniform(0.55, 0.95);
    }

    const double diag = std::sqrt(static_cast<double>(w) * w + static_cast<double>(h) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double t = (gx * x + gy * y) / diag;
            const double dx = (x - cx) / (0.5 * w), dy = (y - cy) / (0.5 * h);
            const double rad = vign * (dx * dx + dy * dy);
            double px[3];
            for (int c = 0; c < 3; ++c) {
                double v = base[c] + tilt[c] * t - rad;
                for (int i = 0; i < n_blobs; ++i) {
                    const double bx = x - blobs[i].x, by = y - blobs[i].y;
                    v += blobs[i].amp[c] *
                         std::exp(-(bx * bx + by * by) / (2.0 * blobs[i].r * blobs[i].r));
                }
                px[c] = v;
            }
            for (int i = 0; i < n_shapes; ++i) {
                const Shape& s = shapes[i];
                const double ox = (x - s.x) / s.rw, oy = (y - s.y) / s.rh;
                const bool inside =
                    s.disk ? ox * ox + oy * oy <= 1.0
                           : std::abs(ox) <= 1.0 && std::abs(oy) <= 1.0;
                if (inside)
                    for (int c = 0; c < 3; ++c)
                        px[c] = (1.0 - s.mix) * px[c] + s.mix * s.color[c];
            }
            for (int c = 0; c < 3; ++c) {
                const double v = px[c] + 0.01 * rng.normal();
                img.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    return pf::gaussian_blur(img, 0.6);
}

// Every channel value is k/256 for integer k: exact in float and stable
// under multiplication by powers of two.
inline pf::PixelImage dyadic(uint64_t seed, int w, int h, int channels = 3) {
    pf::Rng rng(pf::mix_seed(seed, 0x64796164ULL));
    pf::PixelImage img(w, h, channels);
    for (float& v : img.data) v = static_cast<float>(rng.uniform_int(0, 224)) / 256.0f;
    return img;
}

// Values on the k/255 grid: what an 8-bit PNG decodes to, so a save/load
// round-trip reproduces them bit-exactly.
inline pf::PixelImage eightbit(uint64_t seed, int w, int h, int channels = 3) {
    pf::Rng rng(pf::mix_seed(seed, 0x38626974ULL));
    pf::PixelImage img(w, h, channels);
    for (float& v : img.data) v = static_cast<float>(rng.uniform_int(0, 255)) / 255.0f;
    return img;
}

inline pf::PixelImage constant(int w, int h, int channels, float value) {
    pf::PixelImage img(w, h, channels);
    std::fill(img.data.begin(), img.data.end(), value);
    return img;
}

// Adds clamped Gaussian pixel noise; used for similarity monotonicity.
inline pf::PixelImage noisy(const pf::PixelImage& img, double sigma, uint64_t seed) {
    pf::Rng rng(pf::mix_seed(seed, 0x6e6f6973ULL));
    pf::PixelImage out = img;
    for (float& v : out.data)
        v = static_cast<float>(std::clamp(static_cast<double>(v) + sigma * rng.normal(), 0.0, 1.0));
    return out;
}

}  // namespace synth
