#include "qkm/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <fstream>
#include <json.hpp>
#include <ostream>

#include "qkm/errors.hpp"
#include "qkm/kernel.hpp"
#include "qkm/learn.hpp"

namespace qkm {

using nlohmann::json;

namespace {

// Re-raise a module error with the failing stage prepended, keeping its family.
template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  const auto label = [&](const std::exception& e) { return std::string(name) + ": " + e.what(); };
  try {
    return fn();
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(label(e), e.final_violation());
  } catch (const ValidationError& e) {
    throw ValidationError(label(e));
  } catch (const IoError& e) {
    throw IoError(label(e));
  } catch (const Error& e) {
    throw Error(label(e));
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> effective_c_values(const ExperimentConfig& c) {
  return c.c_values.empty() ? c_grid() : c.c_values;
}

struct Prepared {
  Dataset data;
  SplitIndices split;
  Rescaled scaled;
  std::vector<int> train_labels, test_labels;
};

Prepared prepare(const ExperimentConfig& c) {
  Prepared p;
  p.data = load_balanced(c);
  p.split = stage("split", [&] { return split_indices(p.data.labels, c.train_fraction, c.seed + 2); });
  std::vector<FeatureRow> train, test;
  for (auto i : p.split.train) {
    train.push_back(p.data.features[i]);
    p.train_labels.push_back(p.data.labels[i]);
  }
  for (auto i : p.split.test) {
    test.push_back(p.data.features[i]);
    p.test_labels.push_back(p.data.labels[i]);
  }
  p.scaled = stage("rescale", [&] { return rescale(train, test); });
  return p;
}

struct QuantumGrams {
  DistributedResult train, test;
  std::size_t train_workers = 1, test_workers = 1;
};

QuantumGrams quantum_grams(const ExperimentConfig& c, const Prepared& p) {
  const auto fm = c.feature_map();
  QuantumGrams q;
  stage("gram", [&] {
    fm.validate();
    const auto& tr = p.scaled.train;
    const auto& te = p.scaled.other;
    const auto s_train = make_schedule(tr.size(), tr.size(), c.workers, c.strategy, GramKind::train);
    q.train = run_distributed({}, tr, fm, s_train);
    q.train_workers = s_train.workers;
    const auto s_test = make_schedule(te.size(), tr.size(), c.workers, c.strategy, GramKind::test);
    q.test = run_distributed(te, tr, fm, s_test);
    q.test_workers = s_test.workers;
  });
  return q;
}

void write_grams(const ExperimentConfig& c, const QuantumGrams& q) {
  stage("output", [&] {
    std::filesystem::create_directories(c.out_dir);
    const auto emit = [&](const DistributedResult& r, std::size_t workers, const char* stem) {
      write_gram_csv(r.gram, c.out_dir / (std::string(stem) + ".csv"));
      write_gram_sidecar(r.gram, {c.feature_map(), c.strategy, workers, r.counters, r.timing},
                         c.out_dir / (std::string(stem) + ".json"));
    };
    emit(q.train, q.train_workers, "gram_train");
    emit(q.test, q.test_workers, "gram_test");
  });
}

json metrics_json(const Metrics& m) {
  json j{{"accuracy", m.accuracy},   {"balanced_accuracy", m.balanced_accuracy},
         {"precision", m.precision}, {"recall", m.recall},
         {"tp", m.tp},               {"fp", m.fp},
         {"tn", m.tn},               {"fn", m.fn}};
  j["auc"] = m.auc ? json(*m.auc) : json(nullptr);
  if (!m.auc) j["auc_error"] = m.auc_error;
  return j;
}

// Per-C rows and the best-AUC row; ties keep the smaller C.
json sweep(const GramMatrix& K_train, const GramMatrix& K_test, const Prepared& p,
           const std::vector<double>& cs) {
  json rows = json::array();
  std::optional<std::size_t> best;
  double best_auc = -1.0;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    SvmOptions opts;
    opts.C = cs[k];
    const auto model = stage("train", [&] { return svm_train(K_train, p.train_labels, opts); });
    const auto scores = stage("evaluate", [&] { return decision_scores(model, K_test); });
    const auto m = stage("evaluate", [&] { return evaluate(scores, p.test_labels); });
    json row = metrics_json(m);
    row["C"] = cs[k];
    row["iterations"] = model.iterations;
    row["support_vectors"] = model.support_indices.size();
    row["bias"] = model.bias;
    rows.push_back(std::move(row));
    if (m.auc && *m.auc > best_auc) best_auc = *m.auc, best = k;
  }
  json out{{"per_c", rows}};
  out["best"] = best ? rows[*best] : json(nullptr);
  return out;
}

json config_json(const ExperimentConfig& c) {
  json j{{"features", c.features},   {"per_class", c.per_class},   {"layers", c.layers},
         {"distance", c.distance},   {"gamma", c.gamma},           {"strategy", to_string(c.strategy)},
         {"workers", c.workers},     {"seed", c.seed},             {"train_fraction", c.train_fraction},
         {"gaussian", c.gaussian},   {"samples", c.samples},       {"c_values", effective_c_values(c)}};
  if (c.data) j["data"] = c.data->string();
  else j["synthetic"] = {{"blobs", c.blobs}, {"separation", c.separation}};
  return j;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

json quartiles(std::vector<double> v) {
  if (v.empty()) return nullptr;
  std::sort(v.begin(), v.end());
  const auto at = [&](double q) {
    const double pos = q * double(v.size() - 1);
    const auto lo = std::size_t(pos);
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
  };
  return {{"q1", at(0.25)}, {"median", at(0.5)}, {"q3", at(0.75)}};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (features < 1) fail_validation("features must be >= 1");
  if (per_class < 1) fail_validation("per_class must be >= 1");
  if (workers < 1) fail_validation("workers must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail_validation("train_fraction must lie in (0, 1)");
  if (!data && blobs < 1) fail_validation("blobs must be >= 1");
  for (double c : c_values)
    if (!(c > 0.0)) fail_validation("C values must be positive");
  feature_map().validate();
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("config " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "data") c.data = v.get<std::string>();
      else if (key == "blobs") c.blobs = v.get<std::size_t>();
      else if (key == "separation") c.separation = v.get<double>();
      else if (key == "features") c.features = v.get<std::size_t>();
      else if (key == "per_class") c.per_class = v.get<std::size_t>();
      else if (key == "layers") c.layers = v.get<std::size_t>();
      else if (key == "distance") c.distance = v.get<std::size_t>();
      else if (key == "gamma") c.gamma = v.get<double>();
      else if (key == "strategy") c.strategy = parse_strategy(v.get<std::string>());
      else if (key == "workers") c.workers = v.get<std::size_t>();
      else if (key == "c_values") c.c_values = v.get<std::vector<double>>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "train_fraction") c.train_fraction = v.get<double>();
      else if (key == "gaussian") c.gaussian = v.get<bool>();
      else if (key == "samples") c.samples = v.get<std::size_t>();
      else if (key == "out_dir") c.out_dir = v.get<std::string>();
      else throw ValidationError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return c;
}

Dataset load_balanced(const ExperimentConfig& c) {
  stage("config", [&] { c.validate(); });
  Dataset raw = stage("load", [&] {
    if (c.data) return read_dataset_csv(*c.data);
    return make_synthetic({c.per_class, c.features, c.blobs, c.separation, c.seed});
  });
  return stage("select", [&] {
    return balanced_sample(select_features(raw, c.features), c.per_class, c.seed + 1);
  });
}

std::size_t cmd_preprocess(const ExperimentConfig& config, const std::filesystem::path& out_csv) {
  Dataset d = load_balanced(config);
  d.features = stage("rescale", [&] { return apply_rescale(d.features, fit_rescale(d.features)); });
  stage("output", [&] {
    if (out_csv.has_parent_path()) std::filesystem::create_directories(out_csv.parent_path());
    write_dataset_csv(d, out_csv);
  });
  return d.size();
}

void cmd_gram(const ExperimentConfig& config) {
  const auto p = prepare(config);
  write_grams(config, quantum_grams(config, p));
}

void cmd_experiment(const ExperimentConfig& config) {
  const auto p = prepare(config);
  const auto q = quantum_grams(config, p);
  write_grams(config, q);
  const auto cs = effective_c_values(config);

  json out{{"config", config_json(config)},
           {"split", {{"train", p.split.train}, {"test", p.split.test}}},
           {"quantum", sweep(q.train.gram, q.test.gram, p, cs)}};
  if (config.gaussian) {
    const double alpha = stage("gaussian", [&] { return default_gaussian_alpha(p.scaled.train); });
    const auto kt = gaussian_gram(p.scaled.train, p.scaled.train, alpha, GramKind::train);
    const auto ke = gaussian_gram(p.scaled.other, p.scaled.train, alpha, GramKind::test);
    out["gaussian"] = sweep(kt, ke, p, cs);
    out["gaussian"]["alpha"] = alpha;
    out["gaussian"]["split"] = {{"train", p.split.train}, {"test", p.split.test}};
  }
  out["quantum"]["split"] = {{"train", p.split.train}, {"test", p.split.test}};
  stage("output", [&] { write_json(out, config.out_dir / "metrics.json"); });
}

void cmd_benchmark(const ExperimentConfig& config) {
  const auto p = prepare(config);
  const auto fm = config.feature_map();
  const auto& rows = p.scaled.train;
  if (config.samples < 2) fail_validation("benchmark needs at least two samples");
  if (rows.size() < config.samples)
    fail_validation("benchmark requested " + std::to_string(config.samples) + " samples but the training split has " +
                    std::to_string(rows.size()));

  std::vector<MpsState> states;
  json sim_times = json::array(), chis = json::array(), memory = json::array(), discards = json::array();
  std::vector<double> sim_v, chi_v;
  for (std::size_t s = 0; s < config.samples; ++s) {
    const auto circuit = simulation_circuit(rows[s], fm);
    const auto t0 = std::chrono::steady_clock::now();
    MpsState state = MpsState::init(fm.m, Basis::zero);
    apply_circuit(state, circuit.gates);
    const double dt = seconds_since(t0);

    // Separate pass so the per-gate bookkeeping stays out of the timing.
    MpsState traced = MpsState::init(fm.m, Basis::zero);
    std::vector<std::size_t> series;
    series.reserve(circuit.gates.size());
    apply_circuit(traced, circuit.gates, [&](const MpsState& st) { series.push_back(st.stats().memory_bytes); });

    const auto stats = state.stats();
    sim_times.push_back(dt);
    sim_v.push_back(dt);
    chis.push_back(stats.max_chi);
    chi_v.push_back(double(stats.max_chi));
    memory.push_back(series);
    discards.push_back(state.accumulated_discard());
    states.push_back(std::move(state));
  }
  json ip_times = json::array();
  std::vector<double> ip_v;
  for (std::size_t i = 0; i < states.size(); ++i)
    for (std::size_t j = i + 1; j < states.size(); ++j) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto v = inner_product(states[i], states[j]);
      const double dt = seconds_since(t0);
      ip_times.push_back({{"i", i}, {"j", j}, {"seconds", dt}, {"overlap", std::norm(v)}});
      ip_v.push_back(dt);
    }

  json out{{"config", config_json(config)},
           {"simulation_seconds", sim_times},
           {"inner_products", ip_times},
           {"max_chi", chis},
           {"accumulated_discard", discards},
           {"memory_bytes_per_gate", memory},
           {"summary",
            {{"simulation_seconds", quartiles(sim_v)},
             {"inner_product_seconds", quartiles(ip_v)},
             {"max_chi", quartiles(chi_v)}}}};
  stage("output", [&] { write_json(out, config.out_dir / "benchmark.json"); });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum kernel toolkit: MPS simulation, Gram matrices and SVM evaluation"};
  app.require_subcommand(1);

  std::optional<std::string> config_path, data, strategy, out_dir, output;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers, features, distance, layers, per_class, samples, blobs;
  std::optional<double> gamma, separation, train_fraction;
  std::vector<double> c_values;
  bool gaussian = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON file with experiment settings");
    sub->add_option("--data", data, "dataset CSV with a 'class' column");
    sub->add_option("--seed", seed);
    sub->add_option("--features", features, "number of features m (= qubits)");
    sub->add_option("--per-class", per_class, "rows drawn per class");
    sub->add_option("--blobs", blobs, "synthetic blobs per class");
    sub->add_option("--separation", separation, "synthetic class separation");
    sub->add_option("--out-dir", out_dir);
  };
  auto add_kernel = [&](CLI::App* sub) {
    sub->add_option("--workers", workers);
    sub->add_option("--strategy", strategy, "no-messaging | round-robin");
    sub->add_option("--distance", distance, "interaction distance d");
    sub->add_option("--layers", layers, "repetitions r");
    sub->add_option("--gamma", gamma);
    sub->add_option("--train-fraction", train_fraction);
  };

  auto* pre = app.add_subcommand("preprocess", "write a balanced, down-selected, rescaled CSV");
  add_common(pre);
  pre->add_option("--output", output, "output CSV (default <out-dir>/dataset.csv)");
  auto* exp = app.add_subcommand("experiment", "Gram matrices, C sweep and metrics");
  add_common(exp);
  add_kernel(exp);
  exp->add_option("--c", c_values, "regularization values (default: 8-point grid on [0.01, 4])");
  exp->add_flag("--gaussian", gaussian, "also evaluate the Gaussian-kernel baseline");
  auto* gram = app.add_subcommand("gram", "train and test Gram matrices");
  add_common(gram);
  add_kernel(gram);
  auto* bench = app.add_subcommand("benchmark", "per-sample simulation and inner-product timings");
  add_common(bench);
  add_kernel(bench);
  bench->add_option("--samples", samples);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig c = config_path ? load_config(*config_path) : ExperimentConfig{};
    if (data) c.data = *data;
    if (seed) c.seed = *seed;
    if (features) c.features = *features;
    if (per_class) c.per_class = *per_class;
    if (blobs) c.blobs = *blobs;
    if (separation) c.separation = *separation;
    if (out_dir) c.out_dir = *out_dir;
    if (workers) c.workers = *workers;
    if (strategy) c.strategy = parse_strategy(*strategy);
    if (distance) c.distance = *distance;
    if (layers) c.layers = *layers;
    if (gamma) c.gamma = *gamma;
    if (train_fraction) c.train_fraction = *train_fraction;
    if (samples) c.samples = *samples;
    if (!c_values.empty()) c.c_values = c_values;
    if (gaussian) c.gaussian = true;

    if (pre->parsed()) {
      const std::filesystem::path path = output ? std::filesystem::path(*output) : c.out_dir / "dataset.csv";
      const auto n = cmd_preprocess(c, path);
      out << "wrote " << n << " rows to " << path.string() << '\n';
    } else if (exp->parsed()) {
      cmd_experiment(c);
      out << "wrote " << (c.out_dir / "metrics.json").string() << '\n';
    } else if (gram->parsed()) {
      cmd_gram(c);
      out << "wrote Gram matrices to " << c.out_dir.string() << '\n';
    } else if (bench->parsed()) {
      cmd_benchmark(c);
      out << "wrote " << (c.out_dir / "benchmark.json").string() << '\n';
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return IoError("").exit_code();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace qkm
