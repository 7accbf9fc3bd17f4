#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ohc/codebook.hpp"
#include "ohc/encoder.hpp"
#include "ohc/labels.hpp"
#include "ohc/retrieval.hpp"
#include "ohc/trainer.hpp"

// File formats. Binary formats carry a one-line JSON header (canonical: keys
// sorted, shortest round-trip numbers) followed by a little-endian payload;
// the model, config, history, and report files are plain JSON. Reading and
// re-writing any headered file reproduces it byte for byte.
namespace ohc::io {

// "OHDS1": float32 row-major descriptor matrix.
void write_descriptors(const std::string& path, const Eigen::MatrixXd& data);
Eigen::MatrixXd read_descriptors(const std::string& path);

// Text lines "id,class[;class...]"; ids unique, classes non-negative.
struct LabelFile {
    std::vector<std::uint64_t> ids;
    LabelSets labels;  // aligned with ids
};
void write_labels(const std::string& path, const LabelFile& file);
LabelFile read_labels(const std::string& path);

// "OHCB1": packed codebook rows.
void write_codebook(const std::string& path, const Codebook& codebook);
Codebook read_codebook(const std::string& path);

// "OHMD1": encoder parameters as JSON (decimal doubles, exact round-trip).
void write_model(const std::string& path, const EncoderParams& params);
EncoderParams read_model(const std::string& path);

// "OHIX1": (id, packed code) records.
void write_index(const std::string& path, const HammingIndex& index);
HammingIndex read_index(const std::string& path);

// Training configuration JSON; absent keys fall back to TrainConfig defaults.
TrainConfig read_train_config(const std::string& path);
void write_train_config(const std::string& path, const TrainConfig& cfg);

void write_history(const std::string& path, const TrainHistory& history);

// Evaluation/analysis report JSON; only the metrics actually computed are
// written, plus the conventions they were computed under.
void write_report(const std::string& path, const EvalReport& report);

// CSV rows bin_low,bin_high,intra_freq,inter_freq with a header line.
void write_histograms_csv(const std::string& path, const DistanceHistograms& histograms);

// Ranked query hits as CSV rows query_id,rank,db_id,distance.
struct QueryResults {
    std::vector<std::uint64_t> query_ids;          // one per query
    std::vector<std::vector<QueryHit>> hits;       // aligned with query_ids
};
void write_query_results(const std::string& path, const QueryResults& results);

// Reads the file at path_in (dispatching on its magic), writes it back to
// path_out, and reports whether the bytes match.
bool roundtrip_check(const std::string& path_in, const std::string& path_out);

}  // namespace ohc::io
