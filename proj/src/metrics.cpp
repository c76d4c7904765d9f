#include <algorithm>
#include <numeric>

#include "qkm/errors.hpp"
#include "qkm/learn.hpp"

namespace qkm {

namespace {

void check_scores(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) fail_validation("score and label counts differ");
  if (scores.empty()) fail_validation("no scores to evaluate");
  for (int v : labels)
    if (v != 1 && v != -1) fail_validation("labels must be +1 or -1");
}

}  // namespace

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_scores(scores, labels);
  const auto pos = double(std::count(labels.begin(), labels.end(), 1));
  const auto neg = double(labels.size()) - pos;
  if (pos == 0 || neg == 0) fail_validation("ROC needs both classes");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> roc{{0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double s = scores[order[k]];
    for (; k < order.size() && scores[order[k]] == s; ++k) (labels[order[k]] == 1 ? tp : fp) += 1;
    roc.push_back({fp / neg, tp / pos});
  }
  return roc;
}

double trapezoid_area(std::span<const RocPoint> roc) {
  double area = 0.0;
  for (std::size_t k = 1; k < roc.size(); ++k)
    area += (roc[k].fpr - roc[k - 1].fpr) * (roc[k].tpr + roc[k - 1].tpr) * 0.5;
  return area;
}

Metrics evaluate(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_scores(scores, labels);
  Metrics m;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    const bool predicted = scores[k] > threshold;
    const bool actual = labels[k] == 1;
    if (predicted && actual) ++m.tp;
    else if (predicted) ++m.fp;
    else if (actual) ++m.fn;
    else ++m.tn;
  }
  const auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : double(a) / double(b); };
  m.accuracy = ratio(m.tp + m.tn, scores.size());
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = ratio(m.tp, m.tp + m.fn);
  const double tnr = ratio(m.tn, m.tn + m.fp);
  const bool both = m.tp + m.fn > 0 && m.tn + m.fp > 0;
  m.balanced_accuracy = both ? 0.5 * (m.recall + tnr) : m.accuracy;
  if (both) {
    m.roc = roc_curve(scores, labels);
    m.auc = trapezoid_area(m.roc);
  } else {
    m.auc_error = "AUC undefined: only one class present";
  }
  return m;
}

}  // namespace qkm
