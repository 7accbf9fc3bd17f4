#include "ohc/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ohc {

namespace {

constexpr double kCosineTolerance = 1e-6;  // slack before |cos| > 1 is an error
constexpr double kCosineClamp = 1e-7;      // keeps acos away from the poles

void check_targets(const Eigen::MatrixXd& soft_targets) {
    if ((soft_targets.array() < 0.0).any()) {
        throw std::invalid_argument("soft targets must be non-negative");
    }
    for (Eigen::Index i = 0; i < soft_targets.rows(); ++i) {
        if (std::abs(soft_targets.row(i).sum() - 1.0) > 1e-9) {
            throw std::invalid_argument("soft target row " + std::to_string(i) +
                                        " does not sum to 1");
        }
    }
}

}  // namespace

std::string to_string(MarginKind kind) {
    switch (kind) {
        case MarginKind::none: return "none";
        case MarginKind::cosine: return "cosine";
        case MarginKind::angular: return "angular";
    }
    throw std::invalid_argument("unknown margin kind");
}

MarginKind margin_kind_from_string(const std::string& name) {
    if (name == "none") return MarginKind::none;
    if (name == "cosine") return MarginKind::cosine;
    if (name == "angular") return MarginKind::angular;
    throw std::invalid_argument("unknown margin kind: " + name);
}

void LossConfig::validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw std::invalid_argument("loss: scale must be a positive finite number");
    }
    if (!(margin >= 0.0) || !std::isfinite(margin)) {
        throw std::invalid_argument("loss: margin must be >= 0 and finite");
    }
    if (kind == MarginKind::angular && margin >= std::numbers::pi) {
        throw std::invalid_argument("loss: angular margin must be < pi");
    }
}

LossConfig make_loss_config(const Codebook& codebook, double margin, MarginKind kind) {
    LossConfig config;
    config.scale = std::sqrt(static_cast<double>(codebook.bits));
    config.margin = margin;
    config.kind = kind;
    config.validate();
    return config;
}

Eigen::MatrixXd smooth_labels(const LabelSets& labels, int classes) {
    validate_label_sets(labels, classes);
    Eigen::MatrixXd targets =
            Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), classes);
    for (std::size_t n = 0; n < labels.size(); ++n) {
        const double weight = 1.0 / static_cast<double>(labels[n].size());
        for (const int c : labels[n]) {
            targets(static_cast<Eigen::Index>(n), c) = weight;
        }
    }
    return targets;
}

Eigen::MatrixXd target_matrix(const Codebook& codebook) {
    Eigen::MatrixXd targets(codebook.classes, codebook.bits);
    for (int i = 0; i < codebook.classes; ++i) {
        const auto row = codebook.row(i);
        for (int k = 0; k < codebook.bits; ++k) {
            targets(i, k) = static_cast<double>(row[static_cast<std::size_t>(k)]);
        }
    }
    return targets;
}

Eigen::MatrixXd class_logits(const Codebook& codebook, const Eigen::MatrixXd& codes) {
    codebook.validate();
    if (codes.cols() != codebook.bits) {
        throw std::invalid_argument("class_logits: code width != codebook bits");
    }
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
        if (std::abs(codes.row(i).norm() - 1.0) > kCosineTolerance) {
            throw std::invalid_argument("class_logits: code row " + std::to_string(i) +
                                        " is not unit length");
        }
    }
    return codes * target_matrix(codebook).transpose();
}

Eigen::MatrixXd apply_margin(const Eigen::MatrixXd& logits,
                             const Eigen::MatrixXd& soft_targets,
                             const LossConfig& config) {
    config.validate();
    if (config.margin == 0.0 || config.kind == MarginKind::none) {
        return logits;
    }
    if (logits.rows() != soft_targets.rows() || logits.cols() != soft_targets.cols()) {
        throw std::invalid_argument("apply_margin: logits and targets must match in shape");
    }
    check_targets(soft_targets);

    Eigen::MatrixXd out = logits;
    for (Eigen::Index n = 0; n < logits.rows(); ++n) {
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
            if (soft_targets(n, c) <= 0.0) continue;
            const double cosine = logits(n, c) / config.scale;
            double margined = 0.0;
            if (config.kind == MarginKind::cosine) {
                margined = cosine - config.margin;
            } else {
                if (std::abs(cosine) > 1.0 + kCosineTolerance) {
                    throw std::invalid_argument(
                            "apply_margin: logit / scale is not a cosine");
                }
                const double clamped =
                        std::clamp(cosine, -1.0 + kCosineClamp, 1.0 - kCosineClamp);
                margined = std::cos(std::acos(clamped) + config.margin);
            }
            out(n, c) = config.scale * margined;
        }
    }
    return out;
}

CeResult ce_loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& soft_targets) {
    if (logits.rows() != soft_targets.rows() || logits.cols() != soft_targets.cols()) {
        throw std::invalid_argument("ce_loss: logits and targets must match in shape");
    }
    const auto n = logits.rows();
    if (n < 1) {
        throw std::invalid_argument("ce_loss: empty batch");
    }
    check_targets(soft_targets);

    CeResult result;
    result.grad_logits.resize(n, logits.cols());
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::RowVectorXd shifted =
                logits.row(i).array() - logits.row(i).maxCoeff();
        const Eigen::RowVectorXd exps = shifted.array().exp();
        const double sum_exp = exps.sum();
        const Eigen::RowVectorXd log_softmax = shifted.array() - std::log(sum_exp);
        total -= soft_targets.row(i).dot(log_softmax);
        result.grad_logits.row(i) = exps / sum_exp - soft_targets.row(i);
    }
    result.loss = total / static_cast<double>(n);
    result.grad_logits /= static_cast<double>(n);
    return result;
}

LossResult loss_and_grad(const Eigen::MatrixXd& codes, const Codebook& codebook,
                         const Eigen::MatrixXd& soft_targets, const LossConfig& config) {
    config.validate();
    const double sqrt_bits = std::sqrt(static_cast<double>(codebook.bits));
    if (std::abs(config.scale - sqrt_bits) > 1e-12) {
        throw std::invalid_argument("loss_and_grad: scale must be sqrt(bits)");
    }
    if (soft_targets.rows() != codes.rows()) {
        throw std::invalid_argument("loss_and_grad: one target row per code row required");
    }
    const Eigen::MatrixXd raw = class_logits(codebook, codes);
    const Eigen::MatrixXd margined = apply_margin(raw, soft_targets, config);
    CeResult ce = ce_loss(margined, soft_targets);

    // Chain through the margin on positive entries. The cosine margin only
    // shifts the logit, so its slope is 1; the angular slope follows from
    // d cos(theta + m) / d cos(theta) = sin(theta + m) / sin(theta), and is 0
    // where the cosine was pinned by the clamp.
    if (config.margin != 0.0 && config.kind == MarginKind::angular) {
        for (Eigen::Index n = 0; n < raw.rows(); ++n) {
            for (Eigen::Index c = 0; c < raw.cols(); ++c) {
                if (soft_targets(n, c) <= 0.0) continue;
                const double cosine = raw(n, c) / config.scale;
                double slope = 0.0;
                if (std::abs(cosine) < 1.0 - kCosineClamp) {
                    slope = std::sin(std::acos(cosine) + config.margin) /
                            std::sqrt(1.0 - cosine * cosine);
                }
                ce.grad_logits(n, c) *= slope;
            }
        }
    }

    LossResult result;
    result.loss = ce.loss;
    result.grad_codes = ce.grad_logits * target_matrix(codebook);
    return result;
}

}  // namespace ohc
