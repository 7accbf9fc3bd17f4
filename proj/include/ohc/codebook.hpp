#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ohc/packed_code.hpp"

namespace ohc {

enum class CodebookMethod { hadamard, bernoulli, heuristic };

const char* to_string(CodebookMethod method);
CodebookMethod codebook_method_from_string(std::string_view name);

// Binary class-target matrix O in {-1,+1}^{C x K}, one row per class.
// packed_rows mirrors rows bit for bit and is what the distance kernels use.
struct Codebook {
    int classes = 0;
    int bits = 0;
    std::vector<std::int8_t> rows;  // classes * bits, row-major, entries +1/-1
    std::vector<PackedCode> packed_rows;
    CodebookMethod method = CodebookMethod::hadamard;
    std::optional<std::uint64_t> seed;

    std::span<const std::int8_t> row(int i) const {
        return {rows.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(bits),
                static_cast<std::size_t>(bits)};
    }

    void rebuild_packed();
    void validate() const;
};

// Sylvester recursion: K = 2^log2_k rows of a Hadamard matrix, pairwise
// Hamming distance exactly K/2. With extended=true returns [H; -H]
// (2K rows; complements keep the K/2 minimum).
Codebook sylvester_hadamard(int log2_k, bool extended = false);

// First `classes` rows of [H; -H] for K = bits (a power of two).
// classes > 2*bits is an error; larger class counts need more bits.
Codebook hadamard_codebook(int classes, int bits);

// Each bit +1 with probability 0.5; duplicate rows are resampled within a
// budget of 100 * classes attempts. 2^bits < classes is an error since
// distinct rows are impossible.
Codebook bernoulli_codebook(int classes, int bits, std::uint64_t seed);

// Greedy local search: repeatedly take a worst (minimum-distance) row pair
// and flip the single bit that most improves the minimum pairwise distance,
// tie-breaking with the seeded generator. Never decreases the minimum.
Codebook improve_codebook(const Codebook& base, int iterations, std::uint64_t seed);

std::uint64_t min_pairwise_distance(const Codebook& cb);

// E[D(b_i, b_j)] = 2 * K * p * (1 - p) for codes sampled with P(+1) = p.
double expected_hamming(int bits, double p);

}  // namespace ohc
