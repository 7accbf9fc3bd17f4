#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ohc/labels.hpp"
#include "ohc/packed_code.hpp"

namespace ohc {

struct IndexEntry {
    std::uint64_t id = 0;
    PackedCode code;
};

struct HammingIndex {
    int bits = 0;
    std::vector<IndexEntry> entries;
};

// Validates uniform width and unique ids; entries keep their input order.
HammingIndex build_index(std::vector<IndexEntry> entries, int bits);

struct QueryHit {
    std::uint64_t id = 0;
    std::uint64_t distance = 0;
};

// Exhaustive scan returning min(r, N) hits sorted by ascending distance,
// ties broken by ascending id.
std::vector<QueryHit> query_top_r(const HammingIndex& index, const PackedCode& query,
                                  std::size_t r);

// Average precision over one ranked relevance string, denominator
// min(total_relevant, r).
double average_precision(const std::vector<bool>& relevance, std::size_t total_relevant,
                         std::size_t r);

// Mean AP over queries that have at least one relevant database item; queries
// with none are skipped. Returns nullopt when every query was skipped.
std::optional<double> map_at_r(const std::vector<std::vector<bool>>& rankings,
                               const std::vector<std::size_t>& total_relevant,
                               std::size_t r);

// E[inter-class distance] - E[intra-class distance] over all code pairs.
// Pairs are intra iff their label sets intersect. Requires at least one pair
// of each kind.
double separability(const std::vector<PackedCode>& codes, const LabelSets& labels);

// Frobenius norm of (1/bits) * H * H^T - I, where row c of H is the sign of
// the mean code of class c (mean 0 -> +1). Lower is better; 0 is exactly
// mutually orthogonal centers.
double orthogonality_score(const std::vector<PackedCode>& codes, const LabelSets& labels,
                           int classes);

// Per-bit mean of sign values, in [-1, 1]; 0 is perfectly balanced.
std::vector<double> bit_balance(const std::vector<PackedCode>& codes);

struct DistanceHistograms {
    std::vector<double> bin_low;   // inclusive lower edges
    std::vector<double> bin_high;  // exclusive upper edges (last is inclusive)
    std::vector<double> intra;     // frequencies, sum 1
    std::vector<double> inter;     // frequencies, sum 1
};

// Histograms of pairwise Hamming distances over [0, bits] with integer-aligned
// bin edges, each normalized to sum 1.
DistanceHistograms distance_histograms(const std::vector<PackedCode>& codes,
                                       const LabelSets& labels, int bins);

// Mean quantization angle in degrees between each continuous code row and its
// packed binary counterpart.
double mean_quantization_angle_deg(const Eigen::MatrixXd& continuous,
                                   const std::vector<PackedCode>& binary);

struct EvalReport {
    std::optional<double> map_at_r;
    std::size_t queries_evaluated = 0;
    std::size_t queries_skipped = 0;  // queries with zero relevant items
    std::size_t top_r = 0;
    std::optional<double> separability;
    std::optional<double> orthogonality;
    std::optional<double> mean_quantization_angle_deg;
    std::vector<double> bit_balance;
    std::optional<DistanceHistograms> histograms;
};

}  // namespace ohc
