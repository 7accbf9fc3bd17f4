#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ohc/packed_code.hpp"

namespace ohc {

enum class BatchMode { train, infer };

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

// Encoder shape: input_dim -> (hidden ReLU layers) -> feature_dim -> bits.
// An empty hidden list with feature_dim == input_dim means no MLP at all;
// otherwise the MLP's last layer outputs feature_dim. use_bn toggles the
// batch-normalization stage between the latent layer and L2 normalization.
struct Architecture {
    int input_dim = 0;
    std::vector<int> hidden;
    int feature_dim = 0;
    int bits = 0;
    bool use_bn = true;

    std::vector<std::pair<int, int>> mlp_shapes() const;  // (in, out) per layer
    void validate() const;
};

struct EncoderParams {
    Architecture arch;
    std::vector<DenseLayer> mlp;     // ReLU after each layer
    Eigen::MatrixXd latent_weight;   // bits x feature_dim, no bias
    Eigen::VectorXd bn_gamma;
    Eigen::VectorXd bn_beta;
    Eigen::VectorXd bn_running_mean;
    Eigen::VectorXd bn_running_var;
    double bn_momentum = 0.1;
    double bn_epsilon = 1e-5;

    void validate() const;
};

// Seeded Kaiming-style uniform init (fan-in scaling), zero biases,
// gamma = 1, beta = 0, running stats (0, 1).
EncoderParams init_encoder(const Architecture& arch, std::uint64_t seed);

struct ForwardCache {
    BatchMode mode = BatchMode::infer;
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> mlp_pre;   // pre-ReLU
    std::vector<Eigen::MatrixXd> mlp_act;   // post-ReLU
    Eigen::MatrixXd pre_bn;                 // latent output, N x K
    Eigen::RowVectorXd inv_std;             // 1 / sqrt(var + eps)
    Eigen::MatrixXd normalized;             // BN output before gamma/beta
    Eigen::MatrixXd bn_out;                 // input of the L2 stage
    Eigen::VectorXd row_norms;
    Eigen::MatrixXd codes;                  // unit rows
};

struct ForwardResult {
    Eigen::MatrixXd codes;  // N x K, unit-norm rows
    ForwardCache cache;
};

// Train mode normalizes with batch statistics and updates running stats
// (momentum-mixed, unbiased batch variance); infer mode uses running stats.
// A pre-normalization row of exact zeros is an error, never a NaN.
ForwardResult encoder_forward(EncoderParams& params, const Eigen::MatrixXd& batch,
                              BatchMode mode);

struct EncoderGrads {
    std::vector<DenseLayer> mlp;
    Eigen::MatrixXd latent_weight;
    Eigen::VectorXd bn_gamma;
    Eigen::VectorXd bn_beta;
    Eigen::MatrixXd input;
};

// Exact gradients of the forward chain (L2-norm Jacobian, train-mode BN
// Jacobian with batch-statistics terms, linear, ReLU). Requires a cache
// produced in train mode.
EncoderGrads encoder_backward(const EncoderParams& params, const ForwardCache& cache,
                              const Eigen::MatrixXd& grad_codes);

// Replace the BN running statistics with the mean and population variance
// of the pre-BN activations over a database. Other parameters unchanged.
EncoderParams recalibrate_bn(const EncoderParams& params, const Eigen::MatrixXd& database);

// Infer-mode forward on an immutable parameter snapshot.
Eigen::MatrixXd encode_continuous(const EncoderParams& params, const Eigen::MatrixXd& batch);

// encode_continuous + sign (ties to +1) + bit packing, one code per row.
std::vector<PackedCode> encode_binary(const EncoderParams& params,
                                      const Eigen::MatrixXd& batch);

}  // namespace ohc
