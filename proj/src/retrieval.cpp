#include "ohc/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace ohc {

HammingIndex build_index(std::vector<IndexEntry> entries, int bits) {
    if (bits < 1) {
        throw std::invalid_argument("build_index: bits must be >= 1");
    }
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(entries.size());
    for (const IndexEntry& entry : entries) {
        if (entry.code.bits != bits) {
            throw std::invalid_argument("build_index: entry " +
                                        std::to_string(entry.id) + " has mixed code width");
        }
        if (!seen.insert(entry.id).second) {
            throw std::invalid_argument("build_index: duplicate id " +
                                        std::to_string(entry.id));
        }
    }
    HammingIndex index;
    index.bits = bits;
    index.entries = std::move(entries);
    return index;
}

std::vector<QueryHit> query_top_r(const HammingIndex& index, const PackedCode& query,
                                  std::size_t r) {
    if (query.bits != index.bits) {
        throw std::invalid_argument("query_top_r: query width != index width");
    }
    if (r == 0 || index.entries.empty()) {
        return {};
    }

    // Bounded selection: a max-heap of the best r (distance, id) pairs seen so
    // far; the pair ordering is exactly the ranking tie rule.
    using Key = std::pair<std::uint64_t, std::uint64_t>;
    std::priority_queue<Key> worst_first;
    for (const IndexEntry& entry : index.entries) {
        const Key key{hamming_distance(entry.code, query), entry.id};
        if (worst_first.size() < r) {
            worst_first.push(key);
        } else if (key < worst_first.top()) {
            worst_first.pop();
            worst_first.push(key);
        }
    }

    std::vector<QueryHit> hits(worst_first.size());
    for (std::size_t i = worst_first.size(); i-- > 0;) {
        hits[i] = {worst_first.top().second, worst_first.top().first};
        worst_first.pop();
    }
    return hits;
}

double average_precision(const std::vector<bool>& relevance, std::size_t total_relevant,
                         std::size_t r) {
    if (r == 0) {
        throw std::invalid_argument("average_precision: r must be >= 1");
    }
    if (total_relevant == 0) {
        throw std::invalid_argument("average_precision: query has no relevant items");
    }
    const std::size_t limit = std::min(r, relevance.size());
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t k = 0; k < limit; ++k) {
        if (relevance[k]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    if (hits > total_relevant) {
        throw std::invalid_argument(
                "average_precision: more relevant retrieved than exist in the database");
    }
    return sum / static_cast<double>(std::min(total_relevant, r));
}

std::optional<double> map_at_r(const std::vector<std::vector<bool>>& rankings,
                               const std::vector<std::size_t>& total_relevant,
                               std::size_t r) {
    if (rankings.size() != total_relevant.size()) {
        throw std::invalid_argument("map_at_r: one relevant-count per query required");
    }
    if (r == 0) {
        throw std::invalid_argument("map_at_r: r must be >= 1");
    }
    double sum = 0.0;
    std::size_t evaluated = 0;
    for (std::size_t q = 0; q < rankings.size(); ++q) {
        if (total_relevant[q] == 0) continue;  // nothing to retrieve: skip
        sum += average_precision(rankings[q], total_relevant[q], r);
        ++evaluated;
    }
    if (evaluated == 0) return std::nullopt;
    return sum / static_cast<double>(evaluated);
}

namespace {

void check_aligned_codes(const std::vector<PackedCode>& codes, const LabelSets& labels) {
    if (codes.empty()) {
        throw std::invalid_argument("need at least one code");
    }
    if (codes.size() != labels.size()) {
        throw std::invalid_argument("one label set per code required");
    }
    for (const PackedCode& code : codes) {
        if (code.bits != codes.front().bits) {
            throw std::invalid_argument("codes must share one width");
        }
    }
}

}  // namespace

double separability(const std::vector<PackedCode>& codes, const LabelSets& labels) {
    check_aligned_codes(codes, labels);
    double intra_sum = 0.0, inter_sum = 0.0;
    std::size_t intra_count = 0, inter_count = 0;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        for (std::size_t j = i + 1; j < codes.size(); ++j) {
            const auto distance =
                    static_cast<double>(hamming_distance(codes[i], codes[j]));
            if (label_sets_intersect(labels[i], labels[j])) {
                intra_sum += distance;
                ++intra_count;
            } else {
                inter_sum += distance;
                ++inter_count;
            }
        }
    }
    if (intra_count == 0) {
        throw std::invalid_argument("separability: no intra-class pair exists");
    }
    if (inter_count == 0) {
        throw std::invalid_argument("separability: no inter-class pair exists");
    }
    return inter_sum / static_cast<double>(inter_count) -
           intra_sum / static_cast<double>(intra_count);
}

double orthogonality_score(const std::vector<PackedCode>& codes, const LabelSets& labels,
                           int classes) {
    check_aligned_codes(codes, labels);
    if (classes < 1) {
        throw std::invalid_argument("orthogonality_score: classes must be >= 1");
    }
    validate_label_sets(labels, classes);
    const int bits = codes.front().bits;

    // Per-class mean of sign values; a multi-label code contributes to every
    // class it carries.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(classes, bits);
    std::vector<std::size_t> counts(static_cast<std::size_t>(classes), 0);
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const std::vector<std::int8_t> signs = unpack_code(codes[i]);
        for (const int c : labels[i]) {
            for (int k = 0; k < bits; ++k) {
                sums(c, k) += static_cast<double>(signs[static_cast<std::size_t>(k)]);
            }
            ++counts[static_cast<std::size_t>(c)];
        }
    }
    Eigen::MatrixXd centers(classes, bits);
    for (int c = 0; c < classes; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) {
            throw std::invalid_argument("orthogonality_score: class " + std::to_string(c) +
                                        " has no samples");
        }
        for (int k = 0; k < bits; ++k) {
            centers(c, k) = sums(c, k) >= 0.0 ? 1.0 : -1.0;  // mean 0 -> +1
        }
    }

    const Eigen::MatrixXd gram = centers * centers.transpose() / static_cast<double>(bits);
    return (gram - Eigen::MatrixXd::Identity(classes, classes)).norm();
}

std::vector<double> bit_balance(const std::vector<PackedCode>& codes) {
    if (codes.empty()) {
        throw std::invalid_argument("bit_balance: need at least one code");
    }
    const int bits = codes.front().bits;
    std::vector<double> sums(static_cast<std::size_t>(bits), 0.0);
    for (const PackedCode& code : codes) {
        if (code.bits != bits) {
            throw std::invalid_argument("bit_balance: codes must share one width");
        }
        const std::vector<std::int8_t> signs = unpack_code(code);
        for (int k = 0; k < bits; ++k) {
            sums[static_cast<std::size_t>(k)] += static_cast<double>(
                    signs[static_cast<std::size_t>(k)]);
        }
    }
    for (double& s : sums) {
        s /= static_cast<double>(codes.size());
    }
    return sums;
}

DistanceHistograms distance_histograms(const std::vector<PackedCode>& codes,
                                       const LabelSets& labels, int bins) {
    check_aligned_codes(codes, labels);
    const int bits = codes.front().bits;
    if (bins < 1 || bins > bits + 1) {
        throw std::invalid_argument(
                "distance_histograms: bins must lie in [1, bits + 1]");
    }

    // Integer-aligned edges over the distance values {0, ..., bits}: bin b
    // covers distances in [edge_b, edge_{b+1}).
    std::vector<std::uint64_t> edges(static_cast<std::size_t>(bins) + 1);
    for (int b = 0; b <= bins; ++b) {
        edges[static_cast<std::size_t>(b)] = static_cast<std::uint64_t>(
                (static_cast<long long>(b) * (bits + 1)) / bins);
    }

    DistanceHistograms h;
    h.bin_low.resize(static_cast<std::size_t>(bins));
    h.bin_high.resize(static_cast<std::size_t>(bins));
    h.intra.assign(static_cast<std::size_t>(bins), 0.0);
    h.inter.assign(static_cast<std::size_t>(bins), 0.0);
    for (int b = 0; b < bins; ++b) {
        h.bin_low[static_cast<std::size_t>(b)] =
                static_cast<double>(edges[static_cast<std::size_t>(b)]);
        h.bin_high[static_cast<std::size_t>(b)] =
                static_cast<double>(edges[static_cast<std::size_t>(b) + 1]);
    }

    std::size_t intra_count = 0, inter_count = 0;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        for (std::size_t j = i + 1; j < codes.size(); ++j) {
            const std::uint64_t distance = hamming_distance(codes[i], codes[j]);
            const auto it = std::upper_bound(edges.begin(), edges.end(), distance);
            const auto bin = static_cast<std::size_t>(it - edges.begin()) - 1;
            if (label_sets_intersect(labels[i], labels[j])) {
                h.intra[bin] += 1.0;
                ++intra_count;
            } else {
                h.inter[bin] += 1.0;
                ++inter_count;
            }
        }
    }
    if (intra_count == 0) {
        throw std::invalid_argument("distance_histograms: no intra-class pair exists");
    }
    if (inter_count == 0) {
        throw std::invalid_argument("distance_histograms: no inter-class pair exists");
    }
    for (double& f : h.intra) f /= static_cast<double>(intra_count);
    for (double& f : h.inter) f /= static_cast<double>(inter_count);
    return h;
}

double mean_quantization_angle_deg(const Eigen::MatrixXd& continuous,
                                   const std::vector<PackedCode>& binary) {
    if (static_cast<std::size_t>(continuous.rows()) != binary.size()) {
        throw std::invalid_argument(
                "mean_quantization_angle_deg: row count != code count");
    }
    if (binary.empty()) {
        throw std::invalid_argument("mean_quantization_angle_deg: need at least one code");
    }
    std::vector<double> row(static_cast<std::size_t>(continuous.cols()));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < continuous.rows(); ++i) {
        for (Eigen::Index k = 0; k < continuous.cols(); ++k) {
            row[static_cast<std::size_t>(k)] = continuous(i, k);
        }
        sum += quantization_angle_deg(row, binary[static_cast<std::size_t>(i)]);
    }
    return sum / static_cast<double>(binary.size());
}

}  // namespace ohc
