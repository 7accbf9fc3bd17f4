#include "ohc/codebook.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "ohc/rng.hpp"

namespace ohc {

const char* to_string(CodebookMethod method) {
    switch (method) {
        case CodebookMethod::hadamard: return "hadamard";
        case CodebookMethod::bernoulli: return "bernoulli";
        case CodebookMethod::heuristic: return "heuristic";
    }
    throw std::logic_error("to_string: bad CodebookMethod");
}

CodebookMethod codebook_method_from_string(std::string_view name) {
    if (name == "hadamard") return CodebookMethod::hadamard;
    if (name == "bernoulli") return CodebookMethod::bernoulli;
    if (name == "heuristic") return CodebookMethod::heuristic;
    throw std::invalid_argument("unknown codebook method: " + std::string(name));
}

void Codebook::rebuild_packed() {
    packed_rows.clear();
    packed_rows.reserve(static_cast<std::size_t>(classes));
    for (int i = 0; i < classes; ++i) {
        packed_rows.push_back(pack_code(row(i)));
    }
}

void Codebook::validate() const {
    if (classes < 1 || bits < 1) {
        throw std::invalid_argument("codebook: classes and bits must be >= 1");
    }
    if (rows.size() != static_cast<std::size_t>(classes) * static_cast<std::size_t>(bits)) {
        throw std::invalid_argument("codebook: row buffer size mismatch");
    }
    for (const std::int8_t entry : rows) {
        if (entry != 1 && entry != -1) {
            throw std::invalid_argument("codebook: entry not +1/-1");
        }
    }
    if (packed_rows.size() != static_cast<std::size_t>(classes)) {
        throw std::invalid_argument("codebook: packed row count mismatch");
    }
    for (int i = 0; i < classes; ++i) {
        if (packed_rows[static_cast<std::size_t>(i)] != pack_code(row(i))) {
            throw std::invalid_argument("codebook: packed row " + std::to_string(i) +
                                        " out of sync");
        }
    }
}

Codebook sylvester_hadamard(int log2_k, bool extended) {
    if (log2_k < 0 || log2_k > 16) {
        throw std::invalid_argument("sylvester_hadamard: log2_k must be in [0, 16]");
    }
    const int k = 1 << log2_k;

    Codebook cb;
    cb.bits = k;
    cb.classes = extended ? 2 * k : k;
    cb.method = CodebookMethod::hadamard;
    cb.rows.assign(static_cast<std::size_t>(cb.classes) * static_cast<std::size_t>(k), 0);

    // Doubling step: H(2n) = [[H, H], [H, -H]] starting from H(1) = [+1].
    cb.rows[0] = 1;
    for (int size = 1; size < k; size *= 2) {
        for (int i = 0; i < size; ++i) {
            for (int j = 0; j < size; ++j) {
                const std::int8_t v = cb.rows[static_cast<std::size_t>(i) * k + j];
                cb.rows[static_cast<std::size_t>(i) * k + (j + size)] = v;
                cb.rows[static_cast<std::size_t>(i + size) * k + j] = v;
                cb.rows[static_cast<std::size_t>(i + size) * k + (j + size)] =
                        static_cast<std::int8_t>(-v);
            }
        }
    }
    if (extended) {
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                cb.rows[static_cast<std::size_t>(k + i) * k + j] =
                        static_cast<std::int8_t>(-cb.rows[static_cast<std::size_t>(i) * k + j]);
            }
        }
    }
    cb.rebuild_packed();
    return cb;
}

Codebook hadamard_codebook(int classes, int bits) {
    if (classes < 1) {
        throw std::invalid_argument("hadamard_codebook: classes must be >= 1");
    }
    if (bits < 1 || (bits & (bits - 1)) != 0) {
        throw std::invalid_argument(
                "hadamard_codebook: bits must be a power of two (Sylvester construction); "
                "use bernoulli or heuristic for other widths");
    }
    if (classes > 2 * bits) {
        throw std::invalid_argument("hadamard_codebook: at most 2*bits classes (" +
                                    std::to_string(2 * bits) + ") available from [H; -H]; "
                                    "increase bits");
    }
    int log2_k = 0;
    while ((1 << log2_k) < bits) ++log2_k;

    // Interleave each Hadamard row with its complement (H_0, -H_0, H_1, ...).
    // Any prefix keeps the K/2 minimum distance, and each target column sums
    // to 0 (odd class counts: +-1), so aligned codes stay bit-balanced.
    const Codebook full = sylvester_hadamard(log2_k, true);
    Codebook cb;
    cb.classes = classes;
    cb.bits = bits;
    cb.method = CodebookMethod::hadamard;
    cb.rows.resize(static_cast<std::size_t>(classes) * static_cast<std::size_t>(bits));
    for (int c = 0; c < classes; ++c) {
        const int source = (c % 2 == 0) ? c / 2 : bits + c / 2;
        const auto row = full.row(source);
        std::copy(row.begin(), row.end(),
                  cb.rows.begin() + static_cast<std::ptrdiff_t>(c) * bits);
    }
    cb.rebuild_packed();
    return cb;
}

Codebook bernoulli_codebook(int classes, int bits, std::uint64_t seed) {
    if (classes < 1 || bits < 1) {
        throw std::invalid_argument("bernoulli_codebook: classes and bits must be >= 1");
    }
    if (bits <= 62 &&
        (std::uint64_t{1} << bits) < static_cast<std::uint64_t>(classes)) {
        throw std::invalid_argument(
                "bernoulli_codebook: 2^bits < classes, distinct rows are impossible; "
                "increase bits");
    }

    Rng rng(seed);
    Codebook cb;
    cb.classes = classes;
    cb.bits = bits;
    cb.method = CodebookMethod::bernoulli;
    cb.seed = seed;
    cb.rows.assign(static_cast<std::size_t>(classes) * static_cast<std::size_t>(bits), 0);

    // Duplicates are vanishingly rare when 2^K >> C; the budget only matters
    // near the 2^K = C boundary.
    std::set<std::vector<std::uint64_t>> seen;
    const long budget = 100L * classes;
    long draws = 0;
    std::vector<std::int8_t> row(static_cast<std::size_t>(bits));
    for (int i = 0; i < classes;) {
        if (draws++ >= budget) {
            throw std::runtime_error(
                    "bernoulli_codebook: could not sample distinct rows within retry budget");
        }
        for (auto& s : row) {
            s = rng.next_sign_bit() ? std::int8_t{1} : std::int8_t{-1};
        }
        PackedCode packed = pack_code(row);
        if (!seen.insert(packed.words).second) {
            continue;
        }
        std::copy(row.begin(), row.end(),
                  cb.rows.begin() + static_cast<std::size_t>(i) * bits);
        ++i;
    }
    cb.rebuild_packed();
    return cb;
}

std::uint64_t min_pairwise_distance(const Codebook& cb) {
    if (cb.classes < 2) {
        throw std::invalid_argument("min_pairwise_distance: need at least 2 classes");
    }
    std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
    for (int i = 0; i < cb.classes; ++i) {
        for (int j = i + 1; j < cb.classes; ++j) {
            best = std::min(best, hamming_distance(cb.packed_rows[static_cast<std::size_t>(i)],
                                                   cb.packed_rows[static_cast<std::size_t>(j)]));
        }
    }
    return best;
}

double expected_hamming(int bits, double p) {
    if (bits < 0) {
        throw std::invalid_argument("expected_hamming: bits must be >= 0");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("expected_hamming: p outside [0, 1]");
    }
    return 2.0 * static_cast<double>(bits) * p * (1.0 - p);
}

namespace {

struct FlipCandidate {
    int row;
    int bit;
};

// Lexicographic objective: first raise the minimum distance, then shrink the
// number of pairs sitting at it.
struct PairScore {
    std::uint64_t min_dist;
    long pairs_at_min;

    bool better_than(const PairScore& other) const {
        if (min_dist != other.min_dist) return min_dist > other.min_dist;
        return pairs_at_min < other.pairs_at_min;
    }
    bool operator==(const PairScore&) const = default;
};

}  // namespace

Codebook improve_codebook(const Codebook& base, int iterations, std::uint64_t seed) {
    base.validate();
    if (iterations < 0) {
        throw std::invalid_argument("improve_codebook: iterations must be >= 0");
    }
    if (iterations == 0 || base.classes < 2) {
        return base;
    }

    Codebook cb = base;
    cb.method = CodebookMethod::heuristic;
    cb.seed = seed;
    Rng rng(seed);

    const int c = cb.classes;
    const int k = cb.bits;

    std::vector<std::uint64_t> dist(static_cast<std::size_t>(c) * c, 0);
    auto d = [&](int i, int j) -> std::uint64_t& {
        return dist[static_cast<std::size_t>(i) * c + j];
    };
    for (int i = 0; i < c; ++i) {
        for (int j = i + 1; j < c; ++j) {
            d(i, j) = d(j, i) = hamming_distance(cb.packed_rows[static_cast<std::size_t>(i)],
                                                 cb.packed_rows[static_cast<std::size_t>(j)]);
        }
    }

    auto current_score = [&]() {
        PairScore s{std::numeric_limits<std::uint64_t>::max(), 0};
        for (int i = 0; i < c; ++i) {
            for (int j = i + 1; j < c; ++j) {
                if (d(i, j) < s.min_dist) {
                    s.min_dist = d(i, j);
                    s.pairs_at_min = 1;
                } else if (d(i, j) == s.min_dist) {
                    ++s.pairs_at_min;
                }
            }
        }
        return s;
    };

    std::vector<std::uint64_t> new_dist(static_cast<std::size_t>(c), 0);
    for (int iter = 0; iter < iterations; ++iter) {
        const PairScore score = current_score();

        std::vector<std::pair<int, int>> worst;
        for (int i = 0; i < c; ++i) {
            for (int j = i + 1; j < c; ++j) {
                if (d(i, j) == score.min_dist) worst.emplace_back(i, j);
            }
        }
        const auto picked = worst[static_cast<std::size_t>(
                rng.next_below(static_cast<std::uint64_t>(worst.size())))];

        PairScore best = score;
        std::vector<FlipCandidate> best_flips;
        for (const int r : {picked.first, picked.second}) {
            // Score of the matrix with row r removed; flipped-row distances
            // are folded back in per candidate bit.
            PairScore excl{std::numeric_limits<std::uint64_t>::max(), 0};
            for (int i = 0; i < c; ++i) {
                if (i == r) continue;
                for (int j = i + 1; j < c; ++j) {
                    if (j == r) continue;
                    if (d(i, j) < excl.min_dist) {
                        excl.min_dist = d(i, j);
                        excl.pairs_at_min = 1;
                    } else if (d(i, j) == excl.min_dist) {
                        ++excl.pairs_at_min;
                    }
                }
            }

            PackedCode flipped = cb.packed_rows[static_cast<std::size_t>(r)];
            for (int bit = 0; bit < k; ++bit) {
                flipped.words[static_cast<std::size_t>(bit) / 64] ^=
                        std::uint64_t{1} << (bit % 64);

                PairScore cand = excl;
                for (int j = 0; j < c; ++j) {
                    if (j == r) continue;
                    new_dist[static_cast<std::size_t>(j)] = hamming_distance(
                            flipped, cb.packed_rows[static_cast<std::size_t>(j)]);
                    const std::uint64_t nd = new_dist[static_cast<std::size_t>(j)];
                    if (nd < cand.min_dist) {
                        cand.min_dist = nd;
                        cand.pairs_at_min = 1;
                    } else if (nd == cand.min_dist) {
                        ++cand.pairs_at_min;
                    }
                }

                if (cand.better_than(best)) {
                    best = cand;
                    best_flips.assign(1, {r, bit});
                } else if (cand == best && !best_flips.empty()) {
                    best_flips.push_back({r, bit});
                }

                flipped.words[static_cast<std::size_t>(bit) / 64] ^=
                        std::uint64_t{1} << (bit % 64);
            }
        }

        if (best_flips.empty()) {
            break;  // local optimum among single-bit flips on the worst pair
        }
        const FlipCandidate flip = best_flips[static_cast<std::size_t>(
                rng.next_below(static_cast<std::uint64_t>(best_flips.size())))];

        const std::size_t idx =
                static_cast<std::size_t>(flip.row) * static_cast<std::size_t>(k) +
                static_cast<std::size_t>(flip.bit);
        cb.rows[idx] = static_cast<std::int8_t>(-cb.rows[idx]);
        cb.packed_rows[static_cast<std::size_t>(flip.row)]
                .words[static_cast<std::size_t>(flip.bit) / 64] ^=
                std::uint64_t{1} << (flip.bit % 64);
        for (int j = 0; j < c; ++j) {
            if (j == flip.row) continue;
            const std::uint64_t nd =
                    hamming_distance(cb.packed_rows[static_cast<std::size_t>(flip.row)],
                                     cb.packed_rows[static_cast<std::size_t>(j)]);
            d(flip.row, j) = d(j, flip.row) = nd;
        }
    }

    return cb;
}

}  // namespace ohc
