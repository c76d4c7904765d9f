#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qkm/kernel.hpp"

namespace qkm {

// ---- Gaussian baseline ------------------------------------------------------

/// 1 / (m * population variance of every entry of the training matrix).
double default_gaussian_alpha(std::span<const FeatureRow> train);

/// K(x, x') = exp(-alpha |x - x'|^2). The training kind requires rows and
/// cols to be the same list and yields an exactly symmetric matrix.
GramMatrix gaussian_gram(std::span<const FeatureRow> rows, std::span<const FeatureRow> cols,
                         double alpha, GramKind kind);

// ---- SVM on a precomputed kernel --------------------------------------------

/// Eight log-spaced regularization values from 0.01 to 4.
std::vector<double> c_grid();

struct SvmOptions {
  double C = 1.0;
  double tol = 1e-3;
  std::size_t max_iter = 100000;
  bool record_objective = false;
};

struct SvmModel {
  std::vector<double> alphas;      // in [0, C]
  std::vector<double> dual_coefs;  // alpha_i * y_i
  double bias = 0.0;
  double C = 1.0;
  double tol = 1e-3;
  std::vector<std::size_t> support_indices;  // alpha_i > 0
  std::size_t iterations = 0;
  double final_violation = 0.0;
  /// Dual objective sum(alpha) - alpha' Q alpha / 2 after each update.
  std::vector<double> objective_history;
};

/// SMO with maximal-violating-pair selection. Throws ValidationError on an
/// asymmetric, indefinite (min eigenvalue < -1e-6, checked for N <= 2048) or
/// mislabelled input and ConvergenceError at the iteration cap.
SvmModel svm_train(const GramMatrix& K, std::span<const int> labels, const SvmOptions& options = {});

/// score_j = sum_i dual_coefs_i K_eval(j, i) + bias.
std::vector<double> decision_scores(const SvmModel& model, const GramMatrix& K_eval);

// ---- Metrics ----------------------------------------------------------------

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct Metrics {
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> auc;  // empty when only one class is present
  std::string auc_error;
  std::vector<RocPoint> roc;
};

/// ROC sweep over descending scores; tied scores advance in one diagonal step.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);
double trapezoid_area(std::span<const RocPoint> roc);

/// Predicted positive when score > threshold.
Metrics evaluate(std::span<const double> scores, std::span<const int> labels, double threshold = 0.0);

}  // namespace qkm
