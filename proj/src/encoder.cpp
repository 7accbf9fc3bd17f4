#include "ohc/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ohc/rng.hpp"

namespace ohc {

std::vector<std::pair<int, int>> Architecture::mlp_shapes() const {
    std::vector<std::pair<int, int>> shapes;
    if (hidden.empty() && feature_dim == input_dim) {
        return shapes;  // identity feature map
    }
    int in = input_dim;
    for (const int width : hidden) {
        shapes.emplace_back(in, width);
        in = width;
    }
    shapes.emplace_back(in, feature_dim);
    return shapes;
}

void Architecture::validate() const {
    if (input_dim < 1 || feature_dim < 1 || bits < 1) {
        throw std::invalid_argument("architecture: dims must be >= 1");
    }
    for (const int width : hidden) {
        if (width < 1) {
            throw std::invalid_argument("architecture: hidden width must be >= 1");
        }
    }
}

void EncoderParams::validate() const {
    arch.validate();
    const auto shapes = arch.mlp_shapes();
    if (mlp.size() != shapes.size()) {
        throw std::invalid_argument("encoder: MLP layer count mismatch");
    }
    for (std::size_t l = 0; l < mlp.size(); ++l) {
        if (mlp[l].weight.rows() != shapes[l].second ||
            mlp[l].weight.cols() != shapes[l].first ||
            mlp[l].bias.size() != shapes[l].second) {
            throw std::invalid_argument("encoder: MLP layer " + std::to_string(l) +
                                        " shape mismatch");
        }
    }
    if (latent_weight.rows() != arch.bits || latent_weight.cols() != arch.feature_dim) {
        throw std::invalid_argument("encoder: latent weight must be bits x feature_dim");
    }
    if (bn_gamma.size() != arch.bits || bn_beta.size() != arch.bits ||
        bn_running_mean.size() != arch.bits || bn_running_var.size() != arch.bits) {
        throw std::invalid_argument("encoder: BN vectors must have length bits");
    }
    if ((bn_running_var.array() < 0.0).any()) {
        throw std::invalid_argument("encoder: running variance must be >= 0");
    }
    if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) {
        throw std::invalid_argument("encoder: BN momentum must be in (0, 1]");
    }
    if (!(bn_epsilon > 0.0)) {
        throw std::invalid_argument("encoder: BN epsilon must be > 0");
    }
}

EncoderParams init_encoder(const Architecture& arch, std::uint64_t seed) {
    arch.validate();
    Rng rng(seed);
    auto uniform = [&rng](double bound) { return (2.0 * rng.next_double() - 1.0) * bound; };

    EncoderParams params;
    params.arch = arch;
    for (const auto& [in, out] : arch.mlp_shapes()) {
        DenseLayer layer;
        layer.weight.resize(out, in);
        const double bound = std::sqrt(6.0 / in);  // ReLU gain
        for (int r = 0; r < out; ++r) {
            for (int c = 0; c < in; ++c) {
                layer.weight(r, c) = uniform(bound);
            }
        }
        layer.bias = Eigen::VectorXd::Zero(out);
        params.mlp.push_back(std::move(layer));
    }

    params.latent_weight.resize(arch.bits, arch.feature_dim);
    const double bound = std::sqrt(3.0 / arch.feature_dim);  // linear gain
    for (int r = 0; r < arch.bits; ++r) {
        for (int c = 0; c < arch.feature_dim; ++c) {
            params.latent_weight(r, c) = uniform(bound);
        }
    }

    params.bn_gamma = Eigen::VectorXd::Ones(arch.bits);
    params.bn_beta = Eigen::VectorXd::Zero(arch.bits);
    params.bn_running_mean = Eigen::VectorXd::Zero(arch.bits);
    params.bn_running_var = Eigen::VectorXd::Ones(arch.bits);
    return params;
}

namespace {

// MLP + latent layer, optionally recording intermediates for backward.
Eigen::MatrixXd pre_bn_activations(const EncoderParams& params, const Eigen::MatrixXd& batch,
                                   std::vector<Eigen::MatrixXd>* pre,
                                   std::vector<Eigen::MatrixXd>* act) {
    Eigen::MatrixXd a = batch;
    for (const auto& layer : params.mlp) {
        Eigen::MatrixXd z = a * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        if (pre != nullptr) pre->push_back(z);
        a = z.cwiseMax(0.0);
        if (act != nullptr) act->push_back(a);
    }
    return a * params.latent_weight.transpose();
}

}  // namespace

ForwardResult encoder_forward(EncoderParams& params, const Eigen::MatrixXd& batch,
                              BatchMode mode) {
    params.validate();
    const auto n = batch.rows();
    if (n < 1) {
        throw std::invalid_argument("encoder_forward: empty batch");
    }
    if (batch.cols() != params.arch.input_dim) {
        throw std::invalid_argument("encoder_forward: batch dim " +
                                    std::to_string(batch.cols()) + " != input dim " +
                                    std::to_string(params.arch.input_dim));
    }
    if (mode == BatchMode::train && n < 2) {
        throw std::invalid_argument("encoder_forward: train mode needs a batch of >= 2");
    }

    ForwardResult result;
    ForwardCache& cache = result.cache;
    cache.mode = mode;
    cache.input = batch;
    cache.pre_bn = pre_bn_activations(params, batch, &cache.mlp_pre, &cache.mlp_act);

    if (params.arch.use_bn) {
        Eigen::RowVectorXd mean;
        Eigen::RowVectorXd var;
        if (mode == BatchMode::train) {
            mean = cache.pre_bn.colwise().mean();
            var = (cache.pre_bn.rowwise() - mean).array().square().colwise().sum() /
                  static_cast<double>(n);

            params.bn_running_mean =
                    (1.0 - params.bn_momentum) * params.bn_running_mean +
                    params.bn_momentum * mean.transpose();
            const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
            params.bn_running_var =
                    (1.0 - params.bn_momentum) * params.bn_running_var +
                    params.bn_momentum * unbias * var.transpose();
        } else {
            mean = params.bn_running_mean.transpose();
            var = params.bn_running_var.transpose();
        }
        cache.inv_std = (var.array() + params.bn_epsilon).rsqrt();
        cache.normalized =
                (cache.pre_bn.rowwise() - mean).array().rowwise() * cache.inv_std.array();
        cache.bn_out = cache.normalized.array().rowwise() *
                       params.bn_gamma.transpose().array();
        cache.bn_out.rowwise() += params.bn_beta.transpose();
    } else {
        cache.bn_out = cache.pre_bn;
    }

    cache.row_norms = cache.bn_out.rowwise().norm();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (cache.row_norms(i) == 0.0) {
            throw std::runtime_error("encoder_forward: zero-norm code at row " +
                                     std::to_string(i));
        }
    }
    cache.codes = cache.bn_out.array().colwise() / cache.row_norms.array();
    result.codes = cache.codes;
    return result;
}

EncoderGrads encoder_backward(const EncoderParams& params, const ForwardCache& cache,
                              const Eigen::MatrixXd& grad_codes) {
    if (cache.mode != BatchMode::train) {
        throw std::invalid_argument("encoder_backward: cache must come from train mode");
    }
    const auto n = cache.codes.rows();
    if (grad_codes.rows() != n || grad_codes.cols() != cache.codes.cols()) {
        throw std::invalid_argument("encoder_backward: gradient shape mismatch");
    }

    EncoderGrads grads;

    // L2 stage: code = y / ||y||, so dy = (g - <g, code> code) / ||y||.
    Eigen::MatrixXd grad_bn_out(n, cache.codes.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double inv_norm = 1.0 / std::max(cache.row_norms(i), 1e-12);
        const double along = grad_codes.row(i).dot(cache.codes.row(i));
        grad_bn_out.row(i) = (grad_codes.row(i) - along * cache.codes.row(i)) * inv_norm;
    }

    Eigen::MatrixXd grad_pre_bn;
    if (params.arch.use_bn) {
        grads.bn_gamma = (grad_bn_out.array() * cache.normalized.array())
                                 .colwise()
                                 .sum()
                                 .transpose();
        grads.bn_beta = grad_bn_out.colwise().sum().transpose();

        // Train-mode BN Jacobian: the batch mean and variance both depend on
        // every row, hence the two correction sums.
        const Eigen::MatrixXd grad_norm =
                grad_bn_out.array().rowwise() * params.bn_gamma.transpose().array();
        const Eigen::RowVectorXd sum_grad = grad_norm.colwise().sum();
        const Eigen::RowVectorXd sum_grad_dot_norm =
                (grad_norm.array() * cache.normalized.array()).colwise().sum();
        grad_pre_bn =
                ((grad_norm * static_cast<double>(n)).rowwise() - sum_grad).array() -
                cache.normalized.array().rowwise() * sum_grad_dot_norm.array();
        grad_pre_bn.array().rowwise() *=
                cache.inv_std.array() / static_cast<double>(n);
    } else {
        grads.bn_gamma = Eigen::VectorXd::Zero(params.arch.bits);
        grads.bn_beta = Eigen::VectorXd::Zero(params.arch.bits);
        grad_pre_bn = grad_bn_out;
    }

    const Eigen::MatrixXd& features =
            params.mlp.empty() ? cache.input : cache.mlp_act.back();
    grads.latent_weight = grad_pre_bn.transpose() * features;

    Eigen::MatrixXd grad_act = grad_pre_bn * params.latent_weight;
    grads.mlp.resize(params.mlp.size());
    for (std::size_t l = params.mlp.size(); l-- > 0;) {
        const Eigen::MatrixXd grad_pre =
                (cache.mlp_pre[l].array() > 0.0).cast<double>() * grad_act.array();
        const Eigen::MatrixXd& layer_in = l == 0 ? cache.input : cache.mlp_act[l - 1];
        grads.mlp[l].weight = grad_pre.transpose() * layer_in;
        grads.mlp[l].bias = grad_pre.colwise().sum().transpose();
        grad_act = grad_pre * params.mlp[l].weight;
    }
    grads.input = grad_act;
    return grads;
}

EncoderParams recalibrate_bn(const EncoderParams& params, const Eigen::MatrixXd& database) {
    params.validate();
    if (!params.arch.use_bn) {
        throw std::invalid_argument("recalibrate_bn: encoder has no BN stage");
    }
    const auto m = database.rows();
    if (m < 2) {
        throw std::invalid_argument("recalibrate_bn: need at least 2 database rows");
    }
    if (database.cols() != params.arch.input_dim) {
        throw std::invalid_argument("recalibrate_bn: database dim mismatch");
    }

    const Eigen::MatrixXd pre_bn = pre_bn_activations(params, database, nullptr, nullptr);
    const Eigen::RowVectorXd mean = pre_bn.colwise().mean();
    // Population variance: the database statistic itself, not an estimate.
    const Eigen::RowVectorXd var =
            (pre_bn.rowwise() - mean).array().square().colwise().sum() /
            static_cast<double>(m);

    EncoderParams updated = params;
    updated.bn_running_mean = mean.transpose();
    updated.bn_running_var = var.transpose();
    return updated;
}

Eigen::MatrixXd encode_continuous(const EncoderParams& params, const Eigen::MatrixXd& batch) {
    EncoderParams snapshot = params;  // infer mode never writes, copy keeps the API const
    return encoder_forward(snapshot, batch, BatchMode::infer).codes;
}

std::vector<PackedCode> encode_binary(const EncoderParams& params,
                                      const Eigen::MatrixXd& batch) {
    const Eigen::MatrixXd codes = encode_continuous(params, batch);
    std::vector<PackedCode> packed;
    packed.reserve(static_cast<std::size_t>(codes.rows()));
    std::vector<double> row(static_cast<std::size_t>(codes.cols()));
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
        for (Eigen::Index k = 0; k < codes.cols(); ++k) {
            row[static_cast<std::size_t>(k)] = codes(i, k);
        }
        packed.push_back(pack_code(sign_binarize(row)));
    }
    return packed;
}

}  // namespace ohc
