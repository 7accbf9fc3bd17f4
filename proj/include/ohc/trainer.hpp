#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ohc/codebook.hpp"
#include "ohc/encoder.hpp"
#include "ohc/labels.hpp"
#include "ohc/loss.hpp"

namespace ohc {

struct TrainConfig {
    Architecture arch;
    double learning_rate = 1e-4;
    int epochs = 100;
    int batch_size = 64;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double margin = 0.0;
    MarginKind margin_kind = MarginKind::none;

    void validate() const;
};

struct LabeledDataset {
    Eigen::MatrixXd descriptors;  // N x dim
    LabelSets labels;             // one set per row
    int classes = 0;

    void validate() const;
};

struct EpochStats {
    double mean_loss = 0.0;            // size-weighted mean over the epoch's batches
    double max_abs_bit_balance = 0.0;  // worst per-bit sign mean after the epoch
    double seconds = 0.0;
};

using TrainHistory = std::vector<EpochStats>;

struct TrainResult {
    EncoderParams params;
    TrainHistory history;
};

// Gaussian blobs around class centers drawn on a sphere of radius
// `separation` (centers re-drawn until pairwise cosine <= 0.5 so no two
// collide). multilabel=true labels each point with its two nearest centers.
LabeledDataset make_gaussian_clusters(int classes, int dim, int per_class, double spread,
                                      double separation, std::uint64_t seed,
                                      bool multilabel = false);

struct AdamState {
    Eigen::VectorXd first_moment;
    Eigen::VectorXd second_moment;
    std::int64_t step = 0;
};

AdamState init_adam_state(Eigen::Index size);

// Standard bias-corrected Adam update, elementwise over flat vectors.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               double learning_rate, double beta1, double beta2, double epsilon);

// Trainable parameters (MLP, latent, BN gamma/beta) as one flat vector; the
// BN running statistics are state, not parameters, and stay out.
Eigen::VectorXd flatten_params(const EncoderParams& params);
Eigen::VectorXd flatten_grads(const EncoderGrads& grads);
void unflatten_params(const Eigen::VectorXd& flat, EncoderParams& params);

// Mini-batch training loop: seeded shuffle per epoch, forward in train mode,
// loss gradient, hand-derived backward, Adam. Deterministic per (cfg, data,
// codebook). A final partial batch of fewer than 2 rows is dropped. on_epoch,
// when set, is called after each epoch with its index and stats.
using EpochCallback = std::function<void(int, const EpochStats&)>;
TrainResult train(const TrainConfig& cfg, const LabeledDataset& data,
                  const Codebook& codebook, const EpochCallback& on_epoch = {});

}  // namespace ohc
