#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "pf/image.hpp"

namespace pf {

enum class HashAlgorithm { A, P, D, W };

char algorithm_tag(HashAlgorithm a);
HashAlgorithm algorithm_from_tag(char c);

/// 64-bit perceptual fingerprint. Bit 63 (MSB) is the first pixel in
/// row-major scan order; distances only make sense between equal tags.
struct BitHash {
    uint64_t bits = 0;
    HashAlgorithm algorithm = HashAlgorithm::A;

    bool operator==(const BitHash&) const = default;
};

/// Wire format: "<tag>:<16 lowercase hex chars>", e.g. "p:ffd8a10000000000".
std::string to_wire(const BitHash& h);
BitHash from_wire(const std::string& s);

BitHash ahash(const PixelImage& img);
BitHash phash(const PixelImage& img);
BitHash dhash(const PixelImage& img);
BitHash whash(const PixelImage& img);

/// Throws std::invalid_argument("incomparable hashes") on tag mismatch.
int hamming(const BitHash& h1, const BitHash& h2);

struct HashComparison {
    std::array<BitHash, 4> original_hashes;  // order: a, p, d, w
    std::array<BitHash, 4> suspect_hashes;
    std::array<int, 4> distance;
    std::array<bool, 4> detected;
    int threshold = 5;

    bool any_detected() const { return detected[0] || detected[1] || detected[2] || detected[3]; }
};

HashComparison compare_all(const PixelImage& original, const PixelImage& suspect,
                           int threshold = 5);

/// Exposed for the pHash oracle tests: orthonormal type-II DCT-II of an n×n
/// grayscale plane, row-major doubles.
std::vector<double> dct2_orthonormal(const std::vector<double>& plane, int n);

}  // namespace pf
