#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "qkm/errors.hpp"
#include "qkm/learn.hpp"

namespace qkm {

namespace {

constexpr double kMinCurvature = 1e-12;
constexpr double kPsdTolerance = -1e-6;
constexpr std::size_t kPsdCheckLimit = 2048;

void check_inputs(const GramMatrix& K, std::span<const int> y, const SvmOptions& o) {
  if (K.rows != K.cols) fail_validation("SVM kernel must be square");
  if (K.rows != y.size()) fail_validation("kernel size does not match the label count");
  if (K.rows == 0) fail_validation("SVM needs at least one training point");
  if (!(o.C > 0.0)) fail_validation("C must be positive");
  if (!(o.tol > 0.0)) fail_validation("tolerance must be positive");
  for (int v : y)
    if (v != 1 && v != -1) fail_validation("labels must be +1 or -1");
  const std::size_t n = K.rows;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!std::isfinite(K(i, j))) fail_validation("kernel contains non-finite entries");
      if (j > i && std::abs(K(i, j) - K(j, i)) > 1e-10) fail_validation("kernel is not symmetric");
    }
  if (n <= kPsdCheckLimit) {
    Eigen::MatrixXd M(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) M(long(i), long(j)) = 0.5 * (K(i, j) + K(j, i));
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(M, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .minCoeff();
    if (min_eig < kPsdTolerance)
      fail_validation("kernel is not positive semidefinite (min eigenvalue " + std::to_string(min_eig) + ")");
  }
}

}  // namespace

// Minimises f(a) = a'Qa/2 - sum(a), Q_ij = y_i y_j K_ij, subject to
// 0 <= a_i <= C and y'a = 0. G holds the gradient Qa - 1.
SvmModel svm_train(const GramMatrix& K, std::span<const int> y, const SvmOptions& o) {
  check_inputs(K, y, o);
  const std::size_t n = K.rows;
  const double C = o.C;
  std::vector<double> a(n, 0.0), G(n, -1.0);
  auto Q = [&](std::size_t i, std::size_t j) { return double(y[i] * y[j]) * K(i, j); };
  auto in_up = [&](std::size_t t) { return y[t] == 1 ? a[t] < C : a[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return y[t] == 1 ? a[t] > 0.0 : a[t] < C; };
  auto objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += a[t] * (G[t] - 1.0);
    return -0.5 * f;
  };

  SvmModel model;
  model.C = C;
  model.tol = o.tol;
  if (o.record_objective) model.objective_history.push_back(0.0);

  double gap = 0.0;
  std::size_t iter = 0;
  for (;; ++iter) {
    double up_max = -std::numeric_limits<double>::infinity();
    double low_min = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -double(y[t]) * G[t];
      if (in_up(t) && v > up_max) up_max = v, i = t;
      if (in_low(t) && v < low_min) low_min = v, j = t;
    }
    gap = (i == n || j == n) ? 0.0 : up_max - low_min;
    if (gap < o.tol) break;
    if (iter >= o.max_iter)
      throw ConvergenceError("SMO did not converge in " + std::to_string(o.max_iter) +
                                 " iterations (KKT gap " + std::to_string(gap) + ")",
                             gap);

    const double old_i = a[i], old_j = a[j];
    const double quad = std::max(K(i, i) + K(j, j) - 2.0 * K(i, j), kMinCurvature);
    if (y[i] != y[j]) {
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) a[j] = 0, a[i] = diff;
      } else if (a[i] < 0) {
        a[i] = 0, a[j] = -diff;
      }
      if (diff > 0) {
        if (a[i] > C) a[i] = C, a[j] = C - diff;
      } else if (a[j] > C) {
        a[j] = C, a[i] = C + diff;
      }
    } else {
      const double delta = (G[i] - G[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) a[i] = C, a[j] = sum - C;
      } else if (a[j] < 0) {
        a[j] = 0, a[i] = sum;
      }
      if (sum > C) {
        if (a[j] > C) a[j] = C, a[i] = sum - C;
      } else if (a[i] < 0) {
        a[i] = 0, a[j] = sum;
      }
    }
    const double di = a[i] - old_i, dj = a[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
    if (o.record_objective) model.objective_history.push_back(objective());
  }

  // rho from free vectors, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = double(y[t]) * G[t];
    if (a[t] >= C) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (a[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      free_sum += yg;
      ++free_count;
    }
  }
  double rho = 0.0;
  if (free_count > 0) rho = free_sum / double(free_count);
  else if (std::isfinite(ub) && std::isfinite(lb)) rho = 0.5 * (ub + lb);
  else if (std::isfinite(ub)) rho = ub;
  else if (std::isfinite(lb)) rho = lb;

  model.alphas = a;
  model.dual_coefs.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    model.dual_coefs[t] = a[t] * double(y[t]);
    if (a[t] > 0.0) model.support_indices.push_back(t);
  }
  model.bias = -rho;
  model.iterations = iter;
  model.final_violation = gap;
  return model;
}

std::vector<double> decision_scores(const SvmModel& model, const GramMatrix& K_eval) {
  if (K_eval.cols != model.dual_coefs.size())
    fail_validation("evaluation kernel has " + std::to_string(K_eval.cols) + " columns but the model has " +
                    std::to_string(model.dual_coefs.size()) + " training points");
  std::vector<double> scores(K_eval.rows, model.bias);
  for (std::size_t r = 0; r < K_eval.rows; ++r) {
    double s = 0.0;
    for (auto i : model.support_indices) s += model.dual_coefs[i] * K_eval(r, i);
    scores[r] += s;
  }
  return scores;
}

}  // namespace qkm
