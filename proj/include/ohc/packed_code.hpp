#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ohc {

// K-bit binary code packed into 64-bit words, LSB-first within
// little-endian words: bit k lives in words[k / 64] at position k % 64,
// set iff the sign is +1. Unused high bits in the last word stay zero so
// codes compare and hash cleanly.
struct PackedCode {
    int bits = 0;
    std::vector<std::uint64_t> words;

    bool operator==(const PackedCode&) const = default;
};

inline int words_for_bits(int bits) { return (bits + 63) / 64; }

// signs must be exactly +1/-1.
PackedCode pack_code(std::span<const std::int8_t> signs);

std::vector<std::int8_t> unpack_code(const PackedCode& code);

// Element-wise sign with ties to +1: v >= 0 maps to +1, otherwise -1.
// Rejects non-finite entries.
std::vector<std::int8_t> sign_binarize(std::span<const double> values);

// XOR + popcount over the packed words. Codes must have equal bit width.
std::uint64_t hamming_distance(const PackedCode& a, const PackedCode& b);

// cos(theta) between the two sign vectors at Hamming distance d: 1 - 2d/K.
double cosine_from_hamming(std::uint64_t distance, int bits);

// Angle in degrees between a continuous code v and the sign vector of b:
// arccos(<v, sb> / (||v|| * sqrt(K))), cosine clamped to [-1, 1].
double quantization_angle_deg(std::span<const double> v, const PackedCode& b);

// Random-hyperplane collision probability for an angle in [0, pi]: 1 - theta/pi.
double collision_probability(double theta_rad);

}  // namespace ohc
