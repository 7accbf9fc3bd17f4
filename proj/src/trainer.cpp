#include "ohc/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ohc/retrieval.hpp"
#include "ohc/rng.hpp"

namespace ohc {

void TrainConfig::validate() const {
    arch.validate();
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("train: learning rate must be > 0");
    }
    if (epochs < 0) {
        throw std::invalid_argument("train: epochs must be >= 0");
    }
    if (batch_size < 2) {
        throw std::invalid_argument("train: batch size must be >= 2");
    }
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) ||
        !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
        throw std::invalid_argument("train: Adam betas must lie in (0, 1)");
    }
    if (!(adam_epsilon > 0.0)) {
        throw std::invalid_argument("train: Adam epsilon must be > 0");
    }
    if (!(margin >= 0.0) || !std::isfinite(margin)) {
        throw std::invalid_argument("train: margin must be >= 0 and finite");
    }
}

void LabeledDataset::validate() const {
    if (classes < 1) {
        throw std::invalid_argument("dataset: classes must be >= 1");
    }
    if (static_cast<Eigen::Index>(labels.size()) != descriptors.rows()) {
        throw std::invalid_argument("dataset: one label set per descriptor row required");
    }
    validate_label_sets(labels, classes);
    if (!descriptors.allFinite()) {
        throw std::invalid_argument("dataset: descriptors must be finite");
    }
}

LabeledDataset make_gaussian_clusters(int classes, int dim, int per_class, double spread,
                                      double separation, std::uint64_t seed,
                                      bool multilabel) {
    if (classes < 2) {
        throw std::invalid_argument("make_gaussian_clusters: classes must be >= 2");
    }
    if (dim < 1 || per_class < 1) {
        throw std::invalid_argument("make_gaussian_clusters: dim and per_class must be >= 1");
    }
    if (!(spread > 0.0) || !(separation > 0.0)) {
        throw std::invalid_argument(
                "make_gaussian_clusters: spread and separation must be > 0");
    }

    Rng rng(seed);
    auto draw_normal_row = [&rng, dim]() {
        Eigen::RowVectorXd row(dim);
        for (int k = 0; k < dim; ++k) {
            row(k) = rng.next_normal();
        }
        return row;
    };

    // Centers on the sphere of radius `separation`, re-drawn until every pair
    // subtends at least 60 degrees so clusters cannot collide.
    Eigen::MatrixXd centers(classes, dim);
    const long budget = 1000L * classes;
    long attempts = 0;
    for (int c = 0; c < classes;) {
        if (++attempts > budget) {
            throw std::runtime_error(
                    "make_gaussian_clusters: could not place separated centers "
                    "(dimension too small for this many classes)");
        }
        Eigen::RowVectorXd g = draw_normal_row();
        const double norm = g.norm();
        if (norm == 0.0) continue;
        const Eigen::RowVectorXd candidate = g * (separation / norm);
        bool ok = true;
        for (int prev = 0; prev < c; ++prev) {
            const double cosine =
                    candidate.dot(centers.row(prev)) / (separation * separation);
            if (cosine > 0.5) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        centers.row(c) = candidate;
        ++c;
    }

    LabeledDataset data;
    data.classes = classes;
    data.descriptors.resize(static_cast<Eigen::Index>(classes) * per_class, dim);
    data.labels.resize(static_cast<std::size_t>(classes) * per_class);
    for (int c = 0; c < classes; ++c) {
        for (int j = 0; j < per_class; ++j) {
            const Eigen::Index row = static_cast<Eigen::Index>(c) * per_class + j;
            data.descriptors.row(row) = centers.row(c) + spread * draw_normal_row();
            data.labels[static_cast<std::size_t>(row)] = {c};
        }
    }

    if (multilabel) {
        for (Eigen::Index row = 0; row < data.descriptors.rows(); ++row) {
            int best = 0, second = 1;
            double best_d = (data.descriptors.row(row) - centers.row(0)).squaredNorm();
            double second_d = (data.descriptors.row(row) - centers.row(1)).squaredNorm();
            if (second_d < best_d) {
                std::swap(best, second);
                std::swap(best_d, second_d);
            }
            for (int c = 2; c < classes; ++c) {
                const double d = (data.descriptors.row(row) - centers.row(c)).squaredNorm();
                if (d < best_d) {
                    second = best;
                    second_d = best_d;
                    best = c;
                    best_d = d;
                } else if (d < second_d) {
                    second = c;
                    second_d = d;
                }
            }
            data.labels[static_cast<std::size_t>(row)] =
                    normalize_label_set({best, second});
        }
    }
    return data;
}

AdamState init_adam_state(Eigen::Index size) {
    AdamState state;
    state.first_moment = Eigen::VectorXd::Zero(size);
    state.second_moment = Eigen::VectorXd::Zero(size);
    state.step = 0;
    return state;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               double learning_rate, double beta1, double beta2, double epsilon) {
    if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
        state.second_moment.size() != params.size()) {
        throw std::invalid_argument("adam_step: size mismatch");
    }
    state.step += 1;
    state.first_moment = beta1 * state.first_moment + (1.0 - beta1) * grads;
    state.second_moment =
            beta2 * state.second_moment + (1.0 - beta2) * grads.array().square().matrix();
    const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    params.array() -= learning_rate * (state.first_moment.array() / bias1) /
                      ((state.second_moment.array() / bias2).sqrt() + epsilon);
}

namespace {

Eigen::Index trainable_size(const EncoderParams& params) {
    Eigen::Index total = 0;
    for (const auto& layer : params.mlp) {
        total += layer.weight.size() + layer.bias.size();
    }
    total += params.latent_weight.size();
    total += params.bn_gamma.size() + params.bn_beta.size();
    return total;
}

template <typename Block>
void copy_out(Eigen::VectorXd& flat, Eigen::Index& offset, const Block& block) {
    flat.segment(offset, block.size()) =
            Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
    offset += block.size();
}

template <typename Block>
void copy_in(const Eigen::VectorXd& flat, Eigen::Index& offset, Block& block) {
    Eigen::Map<Eigen::VectorXd>(block.data(), block.size()) =
            flat.segment(offset, block.size());
    offset += block.size();
}

}  // namespace

Eigen::VectorXd flatten_params(const EncoderParams& params) {
    Eigen::VectorXd flat(trainable_size(params));
    Eigen::Index offset = 0;
    for (const auto& layer : params.mlp) {
        copy_out(flat, offset, layer.weight);
        copy_out(flat, offset, layer.bias);
    }
    copy_out(flat, offset, params.latent_weight);
    copy_out(flat, offset, params.bn_gamma);
    copy_out(flat, offset, params.bn_beta);
    return flat;
}

Eigen::VectorXd flatten_grads(const EncoderGrads& grads) {
    Eigen::Index total = 0;
    for (const auto& layer : grads.mlp) {
        total += layer.weight.size() + layer.bias.size();
    }
    total += grads.latent_weight.size() + grads.bn_gamma.size() + grads.bn_beta.size();

    Eigen::VectorXd flat(total);
    Eigen::Index offset = 0;
    for (const auto& layer : grads.mlp) {
        copy_out(flat, offset, layer.weight);
        copy_out(flat, offset, layer.bias);
    }
    copy_out(flat, offset, grads.latent_weight);
    copy_out(flat, offset, grads.bn_gamma);
    copy_out(flat, offset, grads.bn_beta);
    return flat;
}

void unflatten_params(const Eigen::VectorXd& flat, EncoderParams& params) {
    if (flat.size() != trainable_size(params)) {
        throw std::invalid_argument("unflatten_params: size mismatch");
    }
    Eigen::Index offset = 0;
    for (auto& layer : params.mlp) {
        copy_in(flat, offset, layer.weight);
        copy_in(flat, offset, layer.bias);
    }
    copy_in(flat, offset, params.latent_weight);
    copy_in(flat, offset, params.bn_gamma);
    copy_in(flat, offset, params.bn_beta);
}

TrainResult train(const TrainConfig& cfg, const LabeledDataset& data,
                  const Codebook& codebook, const EpochCallback& on_epoch) {
    cfg.validate();
    data.validate();
    codebook.validate();
    if (codebook.classes != data.classes) {
        throw std::invalid_argument("train: codebook classes != dataset classes");
    }
    if (codebook.bits != cfg.arch.bits) {
        throw std::invalid_argument("train: codebook bits != architecture bits");
    }
    if (data.descriptors.cols() != cfg.arch.input_dim) {
        throw std::invalid_argument("train: descriptor dim != architecture input dim");
    }
    const Eigen::Index n = data.descriptors.rows();
    if (n < 2) {
        throw std::invalid_argument("train: need at least 2 samples");
    }

    const Eigen::MatrixXd targets = smooth_labels(data.labels, data.classes);
    const LossConfig loss_cfg = make_loss_config(codebook, cfg.margin, cfg.margin_kind);

    TrainResult result;
    result.params = init_encoder(cfg.arch, cfg.seed);
    Eigen::VectorXd flat = flatten_params(result.params);
    AdamState adam = init_adam_state(flat.size());

    std::vector<std::size_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        Rng shuffle_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        Eigen::Index rows_seen = 0;
        for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
            const Eigen::Index count = std::min<Eigen::Index>(cfg.batch_size, n - start);
            if (count < 2) break;  // final partial batch too small for BN

            Eigen::MatrixXd batch(count, data.descriptors.cols());
            Eigen::MatrixXd batch_targets(count, data.classes);
            for (Eigen::Index i = 0; i < count; ++i) {
                const auto src = static_cast<Eigen::Index>(
                        order[static_cast<std::size_t>(start + i)]);
                batch.row(i) = data.descriptors.row(src);
                batch_targets.row(i) = targets.row(src);
            }

            ForwardResult fw = encoder_forward(result.params, batch, BatchMode::train);
            LossResult loss = loss_and_grad(fw.codes, codebook, batch_targets, loss_cfg);
            EncoderGrads grads = encoder_backward(result.params, fw.cache, loss.grad_codes);

            adam_step(flat, flatten_grads(grads), adam, cfg.learning_rate, cfg.adam_beta1,
                      cfg.adam_beta2, cfg.adam_epsilon);
            unflatten_params(flat, result.params);

            loss_sum += loss.loss * static_cast<double>(count);
            rows_seen += count;
        }

        if (!flat.allFinite() || !result.params.bn_running_mean.allFinite() ||
            !result.params.bn_running_var.allFinite()) {
            throw std::runtime_error("train: non-finite parameter after epoch " +
                                     std::to_string(epoch));
        }

        EpochStats stats;
        stats.mean_loss = loss_sum / static_cast<double>(rows_seen);
        const std::vector<double> balance =
                bit_balance(encode_binary(result.params, data.descriptors));
        for (const double b : balance) {
            stats.max_abs_bit_balance = std::max(stats.max_abs_bit_balance, std::abs(b));
        }
        stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                      started)
                                .count();
        result.history.push_back(stats);
        if (on_epoch) {
            on_epoch(epoch, stats);
        }
    }
    return result;
}

}  // namespace ohc
