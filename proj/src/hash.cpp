#include "pf/hash.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

namespace pf {

char algorithm_tag(HashAlgorithm a) {
    switch (a) {
        case HashAlgorithm::A: return 'a';
        case HashAlgorithm::P: return 'p';
        case HashAlgorithm::D: return 'd';
        case HashAlgorithm::W: return 'w';
    }
    return '?';
}

HashAlgorithm algorithm_from_tag(char c) {
    switch (c) {
        case 'a': return HashAlgorithm::A;
        case 'p': return HashAlgorithm::P;
        case 'd': return HashAlgorithm::D;
        case 'w': return HashAlgorithm::W;
    }
    throw std::invalid_argument("unknown hash tag");
}

std::string to_wire(const BitHash& h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%c:%016llx", algorithm_tag(h.algorithm),
                  static_cast<unsigned long long>(h.bits));
    return buf;
}

BitHash from_wire(const std::string& s) {
    if (s.size() != 18 || s[1] != ':') throw std::invalid_argument("bad hash wire format");
    BitHash h;
    h.algorithm = algorithm_from_tag(s[0]);
    uint64_t bits = 0;
    for (int i = 2; i < 18; ++i) {
        char c = s[i];
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else throw std::invalid_argument("bad hash wire format");
        bits = (bits << 4) | static_cast<uint64_t>(v);
    }
    h.bits = bits;
    return h;
}

namespace {

/// Grayscale plane of the given size, as doubles (hash math runs in double;
/// the float raster is only the storage format).
std::vector<double> gray_plane(const PixelImage& img, int w, int h) {
    PixelImage small = resize(to_grayscale(img), w, h);
    return std::vector<double>(small.data.begin(), small.data.end());
}

/// Sets bit i (row-major scan order) so that i=0 lands on the MSB.
inline void set_bit(uint64_t& bits, int i) { bits |= 1ULL << (63 - i); }

uint64_t threshold_bits(const std::vector<double>& values, double pivot) {
    uint64_t bits = 0;
    for (int i = 0; i < 64; ++i)
        if (values[i] > pivot) set_bit(bits, i);
    return bits;
}

}  // namespace

BitHash ahash(const PixelImage& img) {
    if (img.empty()) throw std::invalid_argument("empty image");
    std::vector<double> px = gray_plane(img, 8, 8);
    double mean = 0.0;
    for (double v : px) mean += v;
    mean /= 64.0;
    return {threshold_bits(px, mean), HashAlgorithm::A};
}

std::vector<double> dct2_orthonormal(const std::vector<double>& plane, int n) {
    // Separable orthonormal DCT-II: 1D transform over rows, then columns.
    std::vector<double> table(static_cast<std::size_t>(n) * n);
    const double c0 = std::sqrt(1.0 / n);
    const double ck = std::sqrt(2.0 / n);
    for (int u = 0; u < n; ++u)
        for (int x = 0; x < n; ++x)
            table[u * n + x] = (u == 0 ? c0 : ck) *
                               std::cos(std::numbers::pi * (2.0 * x + 1.0) * u / (2.0 * n));

    std::vector<double> rows(plane.size()), out(plane.size());
    for (int y = 0; y < n; ++y)
        for (int u = 0; u < n; ++u) {
            double acc = 0.0;
            for (int x = 0; x < n; ++x) acc += table[u * n + x] * plane[y * n + x];
            rows[y * n + u] = acc;
        }
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
            double acc = 0.0;
            for (int y = 0; y < n; ++y) acc += table[v * n + y] * rows[y * n + u];
            out[v * n + u] = acc;
        }
    return out;
}

BitHash phash(const PixelImage& img) {
    if (img.empty()) throw std::invalid_argument("empty image");
    constexpr int N = 32;
    std::vector<double> px = gray_plane(img, N, N);

    // Transform the zero-mean plane and restore the DC term analytically:
    // a constant image then yields exactly-zero AC coefficients instead of
    // accumulated rounding noise, which would turn its bits into coin flips.
    double mean = 0.0;
    for (double v : px) mean += v;
    mean /= (N * N);
    for (double& v : px) v -= mean;

    std::vector<double> coef = dct2_orthonormal(px, N);
    coef[0] += static_cast<double>(N) * mean;  // DC of orthonormal DCT = N * mean

    std::vector<double> block(64);
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 8; ++u) block[v * 8 + u] = coef[v * N + u];

    std::vector<double> ac(block.begin() + 1, block.end());
    std::nth_element(ac.begin(), ac.begin() + 31, ac.end());
    const double median = ac[31];  // median of 63 values; DC excluded

    return {threshold_bits(block, median), HashAlgorithm::P};
}

BitHash dhash(const PixelImage& img) {
    if (img.empty()) throw std::invalid_argument("empty image");
    std::vector<double> px = gray_plane(img, 9, 8);
    uint64_t bits = 0;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c)
            if (px[r * 9 + c] < px[r * 9 + c + 1]) set_bit(bits, r * 8 + c);
    return {bits, HashAlgorithm::D};
}

BitHash whash(const PixelImage& img) {
    if (img.empty()) throw std::invalid_argument("empty image");
    std::vector<double> plane = gray_plane(img, 64, 64);
    // Three Haar LL levels, averaged variant: each level halves the plane by
    // taking (a+b+c+d)/4 per 2x2 block. Multiplying by 0.25 is exact, so
    // constant planes stay bit-exactly constant through all levels.
    int n = 64;
    for (int level = 0; level < 3; ++level) {
        int half = n / 2;
        std::vector<double> next(static_cast<std::size_t>(half) * half);
        for (int y = 0; y < half; ++y)
            for (int x = 0; x < half; ++x)
                next[y * half + x] = (plane[(2 * y) * n + 2 * x] + plane[(2 * y) * n + 2 * x + 1] +
                                      plane[(2 * y + 1) * n + 2 * x] +
                                      plane[(2 * y + 1) * n + 2 * x + 1]) *
                                     0.25;
        plane = std::move(next);
        n = half;
    }

    std::vector<double> sorted = plane;
    std::sort(sorted.begin(), sorted.end());
    const double median = (sorted[31] + sorted[32]) * 0.5;
    return {threshold_bits(plane, median), HashAlgorithm::W};
}

int hamming(const BitHash& h1, const BitHash& h2) {
    if (h1.algorithm != h2.algorithm) throw std::invalid_argument("incomparable hashes");
    return std::popcount(h1.bits ^ h2.bits);
}

HashComparison compare_all(const PixelImage& original, const PixelImage& suspect, int threshold) {
    if (original.empty() || suspect.empty()) throw std::invalid_argument("empty image");
    HashComparison cmp;
    cmp.threshold = threshold;
    cmp.original_hashes = {ahash(original), phash(original), dhash(original), whash(original)};
    cmp.suspect_hashes = {ahash(suspect), phash(suspect), dhash(suspect), whash(suspect)};
    for (int i = 0; i < 4; ++i) {
        cmp.distance[i] = hamming(cmp.original_hashes[i], cmp.suspect_hashes[i]);
        cmp.detected[i] = cmp.distance[i] > threshold;
    }
    return cmp;
}

}  // namespace pf
