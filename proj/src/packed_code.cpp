#include "ohc/packed_code.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ohc {

PackedCode pack_code(std::span<const std::int8_t> signs) {
    PackedCode code;
    code.bits = static_cast<int>(signs.size());
    code.words.assign(static_cast<std::size_t>(words_for_bits(code.bits)), 0);
    for (std::size_t k = 0; k < signs.size(); ++k) {
        if (signs[k] == 1) {
            code.words[k / 64] |= std::uint64_t{1} << (k % 64);
        } else if (signs[k] != -1) {
            throw std::invalid_argument("pack_code: entry " + std::to_string(k) +
                                        " is not +1/-1");
        }
    }
    return code;
}

std::vector<std::int8_t> unpack_code(const PackedCode& code) {
    std::vector<std::int8_t> signs(static_cast<std::size_t>(code.bits));
    for (std::size_t k = 0; k < signs.size(); ++k) {
        const bool set = (code.words[k / 64] >> (k % 64)) & 1;
        signs[k] = set ? std::int8_t{1} : std::int8_t{-1};
    }
    return signs;
}

std::vector<std::int8_t> sign_binarize(std::span<const double> values) {
    std::vector<std::int8_t> signs(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!std::isfinite(values[k])) {
            throw std::invalid_argument("sign_binarize: non-finite entry at " +
                                        std::to_string(k));
        }
        signs[k] = values[k] >= 0.0 ? std::int8_t{1} : std::int8_t{-1};
    }
    return signs;
}

std::uint64_t hamming_distance(const PackedCode& a, const PackedCode& b) {
    if (a.bits != b.bits) {
        throw std::invalid_argument("hamming_distance: code widths differ (" +
                                    std::to_string(a.bits) + " vs " +
                                    std::to_string(b.bits) + ")");
    }
    std::uint64_t distance = 0;
    for (std::size_t w = 0; w < a.words.size(); ++w) {
        distance += static_cast<std::uint64_t>(std::popcount(a.words[w] ^ b.words[w]));
    }
    return distance;
}

double cosine_from_hamming(std::uint64_t distance, int bits) {
    if (bits <= 0 || distance > static_cast<std::uint64_t>(bits)) {
        throw std::invalid_argument("cosine_from_hamming: distance exceeds bit count");
    }
    return 1.0 - 2.0 * static_cast<double>(distance) / static_cast<double>(bits);
}

double quantization_angle_deg(std::span<const double> v, const PackedCode& b) {
    if (static_cast<int>(v.size()) != b.bits) {
        throw std::invalid_argument("quantization_angle_deg: length mismatch");
    }
    double dot = 0.0;
    double norm_sq = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const bool set = (b.words[k / 64] >> (k % 64)) & 1;
        dot += set ? v[k] : -v[k];
        norm_sq += v[k] * v[k];
    }
    if (norm_sq == 0.0) {
        throw std::invalid_argument("quantization_angle_deg: zero vector");
    }
    // Float dots can land a few ulps outside [-1, 1].
    const double cosine = std::clamp(
            dot / (std::sqrt(norm_sq) * std::sqrt(static_cast<double>(b.bits))), -1.0, 1.0);
    return std::acos(cosine) * (180.0 / 3.14159265358979323846);
}

double collision_probability(double theta_rad) {
    constexpr double kPi = 3.14159265358979323846;
    if (!(theta_rad >= 0.0 && theta_rad <= kPi)) {
        throw std::invalid_argument("collision_probability: angle outside [0, pi]");
    }
    return 1.0 - theta_rad / kPi;
}

}  // namespace ohc
