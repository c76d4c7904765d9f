#include "qkm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "qkm/errors.hpp"

namespace qkm {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  cells.push_back(cell);
  for (auto& c : cells) {
    const auto first = c.find_first_not_of(" \t");
    const auto last = c.find_last_not_of(" \t");
    c = first == std::string::npos ? std::string() : c.substr(first, last - first + 1);
  }
  return cells;
}

// +1, -1, or 0 for rows to skip.
int parse_label(const std::string& cell, std::size_t line) {
  std::string v = cell;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "+1" || v == "1.0" || v == "illicit") return 1;
  if (v == "-1" || v == "-1.0" || v == "licit") return -1;
  if (v == "unknown") return 0;
  throw IoError("line " + std::to_string(line) + ": unrecognised class label '" + cell + "'");
}

}  // namespace

std::size_t Dataset::count(int label) const {
  return std::size_t(std::count(labels.begin(), labels.end(), label));
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset " + path.string() + " is empty");
  const auto header = split_csv_line(line);
  const auto label_it = std::find(header.begin(), header.end(), "class");
  if (label_it == header.end()) throw IoError("dataset " + path.string() + " has no 'class' column");
  const std::size_t label_col = std::size_t(label_it - header.begin());

  Dataset data;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_col) data.feature_names.push_back(header[c]);

  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw IoError("line " + std::to_string(n) + ": expected " + std::to_string(header.size()) +
                    " fields, got " + std::to_string(cells.size()));
    const int label = parse_label(cells[label_col], n);
    if (label == 0) continue;
    FeatureRow row;
    row.reserve(header.size() - 1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) continue;
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (cells[c].empty() || *end != '\0')
        throw IoError("line " + std::to_string(n) + ": non-numeric feature '" + cells[c] + "'");
      row.push_back(v);
    }
    data.features.push_back(std::move(row));
    data.labels.push_back(label);
  }
  return data;
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "class";
  for (const auto& name : data.feature_names) out << ',' << name;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < data.size(); ++r) {
    out << data.labels[r];
    for (double v : data.features[r]) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.m < 1) fail_validation("synthetic data needs at least one feature");
  if (spec.blobs < 1) fail_validation("synthetic data needs at least one blob per class");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double axis = 1.0 / std::sqrt(double(spec.m));

  Dataset data;
  for (std::size_t f = 0; f < spec.m; ++f) data.feature_names.push_back("f" + std::to_string(f));

  for (int label : {1, -1}) {
    std::vector<FeatureRow> centers;
    for (std::size_t b = 0; b < spec.blobs; ++b) {
      FeatureRow offset(spec.m);
      for (auto& v : offset) v = normal(rng);
      double along = 0.0;
      for (double v : offset) along += v * axis;
      double len = 0.0;
      for (auto& v : offset) {
        v -= along * axis;
        len += v * v;
      }
      len = std::sqrt(len);
      FeatureRow c(spec.m);
      for (std::size_t f = 0; f < spec.m; ++f) {
        const double spread = (spec.blobs > 1 && len > 0) ? 0.5 * spec.separation * offset[f] / len : 0.0;
        c[f] = label * 0.5 * spec.separation * axis + spread;
      }
      centers.push_back(std::move(c));
    }
    for (std::size_t n = 0; n < spec.per_class; ++n) {
      FeatureRow row = centers[n % spec.blobs];
      for (auto& v : row) v += normal(rng);
      data.features.push_back(std::move(row));
      data.labels.push_back(label);
    }
  }
  return data;
}

Dataset select_features(const Dataset& data, std::size_t m) {
  if (m == 0 || m > data.num_features())
    fail_validation("requested " + std::to_string(m) + " features but the dataset has " +
                    std::to_string(data.num_features()));
  Dataset out;
  out.feature_names.assign(data.feature_names.begin(), data.feature_names.begin() + long(m));
  out.labels = data.labels;
  for (const auto& row : data.features) out.features.emplace_back(row.begin(), row.begin() + long(m));
  return out;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out;
  out.feature_names = data.feature_names;
  for (auto i : indices) {
    if (i >= data.size()) fail_validation("subset index out of range");
    out.features.push_back(data.features[i]);
    out.labels.push_back(data.labels[i]);
  }
  return out;
}

Dataset balanced_sample(const Dataset& data, std::size_t per_class, std::uint64_t seed) {
  const std::size_t pos = data.count(1), neg = data.count(-1);
  if (pos < per_class || neg < per_class)
    fail_validation("requested " + std::to_string(per_class) + " rows per class but only " +
                    std::to_string(pos) + " positive and " + std::to_string(neg) +
                    " negative rows are available");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (int label : {1, -1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.size(); ++i)
      if (data.labels[i] == label) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + long(per_class));
  }
  std::sort(chosen.begin(), chosen.end());
  return subset(data, chosen);
}

SplitIndices split_indices(std::span<const int> labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail_validation("train fraction must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  SplitIndices out;
  for (int label : {1, -1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != 1 && labels[i] != -1) fail_validation("labels must be +1 or -1");
      if (labels[i] == label) idx.push_back(i);
    }
    if (idx.empty()) fail_validation(std::string("class ") + (label > 0 ? "+1" : "-1") + " is absent");
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = std::size_t(std::llround(train_fraction * double(idx.size())));
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + long(n_train));
    out.test.insert(out.test.end(), idx.begin() + long(n_train), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

RescaleParams fit_rescale(std::span<const FeatureRow> train) {
  if (train.empty()) fail_validation("cannot rescale with an empty training split");
  const std::size_t m = train.front().size();
  RescaleParams p{FeatureRow(m, INFINITY), FeatureRow(m, -INFINITY)};
  for (const auto& row : train) {
    if (row.size() != m) fail_validation("ragged feature rows");
    for (std::size_t f = 0; f < m; ++f) {
      if (!std::isfinite(row[f])) fail_validation("non-finite feature value");
      p.min[f] = std::min(p.min[f], row[f]);
      p.max[f] = std::max(p.max[f], row[f]);
    }
  }
  return p;
}

std::vector<FeatureRow> apply_rescale(std::span<const FeatureRow> rows, const RescaleParams& params) {
  const std::size_t m = params.min.size();
  std::vector<FeatureRow> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() != m) fail_validation("row width does not match rescale parameters");
    FeatureRow r(m);
    for (std::size_t f = 0; f < m; ++f) {
      if (!std::isfinite(row[f])) fail_validation("non-finite feature value");
      const double span = params.max[f] - params.min[f];
      r[f] = span > 0.0 ? std::clamp(2.0 * (row[f] - params.min[f]) / span, 0.0, 2.0) : 1.0;
    }
    out.push_back(std::move(r));
  }
  return out;
}

Rescaled rescale(std::span<const FeatureRow> train, std::span<const FeatureRow> other) {
  Rescaled r;
  r.params = fit_rescale(train);
  r.train = apply_rescale(train, r.params);
  r.other = apply_rescale(other, r.params);
  return r;
}

}  // namespace qkm
