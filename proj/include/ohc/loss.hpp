#pragma once

#include <string>

#include <Eigen/Dense>

#include "ohc/codebook.hpp"
#include "ohc/labels.hpp"

namespace ohc {

// How positive-class logits are pushed below their unmargined value.
enum class MarginKind { none, cosine, angular };

std::string to_string(MarginKind kind);
MarginKind margin_kind_from_string(const std::string& name);

struct LossConfig {
    double scale = 1.0;   // logit scale s = sqrt(bits); logits are s * cos(theta)
    double margin = 0.0;  // margin m, applied to every positive class
    MarginKind kind = MarginKind::none;

    void validate() const;
};

// scale = sqrt(bits), so logits equal the plain <target_row, code> dot product.
LossConfig make_loss_config(const Codebook& codebook, double margin, MarginKind kind);

// Soft target rows: 1/|set| on each labeled class, 0 elsewhere. Rows sum to 1.
Eigen::MatrixXd smooth_labels(const LabelSets& labels, int classes);

// Codebook rows as a classes x bits double matrix of +-1 entries.
Eigen::MatrixXd target_matrix(const Codebook& codebook);

// Entry (n, i) = <target_i, code_n> = sqrt(bits) * cos(theta_ni). Codes must
// be unit rows (checked to 1e-6).
Eigen::MatrixXd class_logits(const Codebook& codebook, const Eigen::MatrixXd& codes);

// Rewrites each logit s*cos(theta) with a positive target (soft target > 0)
// as s*(cos(theta) - m) (cosine) or s*cos(theta + m) (angular). Margin 0 or
// kind none returns the input unchanged.
Eigen::MatrixXd apply_margin(const Eigen::MatrixXd& logits,
                             const Eigen::MatrixXd& soft_targets,
                             const LossConfig& config);

struct CeResult {
    double loss = 0.0;            // mean over rows of -sum(y * log softmax)
    Eigen::MatrixXd grad_logits;  // (softmax - y) / n_rows
};

// Cross-entropy against soft targets, computed via shifted log-softmax.
CeResult ce_loss(const Eigen::MatrixXd& logits, const Eigen::MatrixXd& soft_targets);

struct LossResult {
    double loss = 0.0;
    Eigen::MatrixXd grad_codes;  // d loss / d code rows
};

// Full pipeline: logits -> margin -> cross-entropy, with the gradient chained
// back to the continuous codes (including the arccos/cos chain for the
// angular margin).
LossResult loss_and_grad(const Eigen::MatrixXd& codes, const Codebook& codebook,
                         const Eigen::MatrixXd& soft_targets, const LossConfig& config);

}  // namespace ohc
