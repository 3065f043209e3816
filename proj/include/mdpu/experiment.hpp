#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "mdpu/config.hpp"
#include "mdpu/datasets.hpp"
#include "mdpu/kmeans.hpp"
#include "mdpu/train.hpp"

namespace mdpu {

inline constexpr int kResultsSchemaVersion = 1;
inline constexpr int kSummarySchemaVersion = 1;
inline constexpr const char* kCsvColumns[] = {
    "method", "loss", "pi_plus", "m", "n_mdp", "n_u", "seed", "epoch",
    "train_risk_raw", "train_risk_corrected", "test_accuracy"};

/// One line of the results CSV: one (run, epoch).
struct ResultRow {
  std::string method;
  std::string loss;
  double pi_plus = 0.0;
  int m = 0;
  std::size_t n_mdp = 0;
  std::size_t n_u = 0;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  double train_risk_raw = 0.0;
  double train_risk_corrected = 0.0;
  double test_accuracy = 0.0;
};

/// %.17g, so that every double survives a text round trip.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const std::vector<ResultRow>& rows) {
  std::string out;
  for (std::size_t i = 0; i < std::size(kCsvColumns); ++i) {
    if (i) out += ',';
    out += kCsvColumns[i];
  }
  out += '\n';
  for (const auto& r : rows) {
    out += r.method + ',' + r.loss + ',' + format_double(r.pi_plus) + ',' + std::to_string(r.m) + ',' +
           std::to_string(r.n_mdp) + ',' + std::to_string(r.n_u) + ',' + std::to_string(r.seed) + ',' +
           std::to_string(r.epoch) + ',' + format_double(r.train_risk_raw) + ',' +
           format_double(r.train_risk_corrected) + ',' + format_double(r.test_accuracy) + '\n';
  }
  return out;
}

inline std::vector<ResultRow> parse_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  bool header = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::string_view rest = line;
    while (true) {
      const auto c = rest.find(',');
      f.emplace_back(rest.substr(0, c));
      if (c == std::string_view::npos) break;
      rest.remove_prefix(c + 1);
    }
    if (f.size() != std::size(kCsvColumns)) throw std::runtime_error("results CSV: wrong field count");
    auto num = [](const std::string& s) { return s == "nan" ? std::nan("") : std::stod(s); };
    ResultRow r;
    r.method = f[0];
    r.loss = f[1];
    r.pi_plus = num(f[2]);
    r.m = std::stoi(f[3]);
    r.n_mdp = std::stoull(f[4]);
    r.n_u = std::stoull(f[5]);
    r.seed = std::stoull(f[6]);
    r.epoch = std::stoull(f[7]);
    r.train_risk_raw = num(f[8]);
    r.train_risk_corrected = num(f[9]);
    r.test_accuracy = num(f[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Canonical key/value echo of a config, as accepted by ExperimentConfig::set.
inline ConfigMap config_entries(const ExperimentConfig& c) {
  auto join = [](const auto& xs, auto fmt) {
    std::string s;
    for (const auto& x : xs) s += (s.empty() ? "" : ",") + fmt(x);
    return s;
  };
  auto num = [](auto x) { return std::to_string(x); };
  ConfigMap e;
  e["data.source"] = c.source;
  if (c.source == "synthetic") {
    e["data.synthetic.pool_per_class"] = num(c.synthetic_pool_per_class);
    e["data.synthetic.test_per_class"] = num(c.synthetic_test_per_class);
    e["data.synthetic.dim"] = num(c.synthetic_dim);
    e["data.synthetic.offset"] = format_double(c.synthetic_offset);
    e["data.synthetic.sigma"] = format_double(c.synthetic_sigma);
  } else if (c.source == "idx") {
    e["data.train_images"] = c.train_images;
    e["data.train_labels"] = c.train_labels;
    e["data.test_images"] = c.test_images;
    e["data.test_labels"] = c.test_labels;
    e["data.relabel"] = c.relabel;
  } else {
    e["data.train_file"] = c.train_file;
    e["data.test_file"] = c.test_file;
  }
  e["data.test_limit"] = num(c.test_limit);
  e["problem.pi"] = join(c.pi_plus, format_double);
  e["problem.m"] = join(c.m, num);
  e["problem.n_mdp"] = join(c.n_mdp, num);
  e["problem.n_u"] = join(c.n_u, num);
  e["model"] = c.model;
  e["optim.algorithm"] = std::string(to_string(c.optim.algorithm));
  e["optim.learning_rate"] = format_double(c.optim.learning_rate);
  e["optim.weight_decay"] = format_double(c.optim.weight_decay);
  e["optim.momentum"] = format_double(c.optim.momentum);
  e["train.epochs"] = num(c.epochs);
  e["train.batch_mdp"] = num(c.batch_mdp);
  e["train.batch_u"] = num(c.batch_u);
  e["train.loss"] = join(c.losses, [](LossKind k) { return std::string(to_string(k)); });
  e["train.correction"] = join(c.methods, [](const Correction& f) { return f.name(); });
  e["train.scope"] = std::string(to_string(c.scope));
  e["seeds"] = join(c.seeds, num);
  e["out"] = c.out;
  return e;
}

// ---------------------------------------------------------------------------
// Data for one seed

/// Seed streams for data construction, kept apart from the training streams.
namespace data_streams {
inline constexpr std::uint64_t kDomain = 0x64617461;
inline constexpr std::uint64_t kPool = 0, kTest = 1, kTuples = 2, kUnlabeled = 3, kKMeans = 4,
                               kTestSubsample = 5;
inline std::uint64_t seed_for(std::uint64_t seed, std::uint64_t stream) {
  return derive_seed(derive_seed(seed, kDomain), stream);
}
}  // namespace data_streams

struct DataSplit {
  LabeledPool pool;
  LabeledSet test;
};

/// Source of labeled pools. File-backed sources are read once; synthetic
/// pools are regenerated per seed.
class DataProvider {
 public:
  explicit DataProvider(const ExperimentConfig& cfg) : cfg_(cfg) {
    if (cfg.source == "idx") {
      const auto rule = relabel_rule(cfg.relabel);
      auto train = load_idx_dataset(cfg.train_images, cfg.train_labels, rule);
      test_ = load_idx_dataset(cfg.test_images, cfg.test_labels, rule);
      pool_.emplace(std::move(train.features), std::move(train.labels));
    } else if (cfg.source == "files") {
      auto train = read_matrix(cfg.train_file);
      auto test = read_matrix(cfg.test_file);
      if (!train.labels || !test.labels) throw std::runtime_error("matrix files must carry labels");
      pool_.emplace(std::move(train.matrix), std::move(*train.labels));
      test_ = {std::move(test.matrix), std::move(*test.labels)};
    }
  }

  DataSplit get(std::uint64_t seed) const {
    if (cfg_.source == "synthetic") {
      const std::vector<double> mp(cfg_.synthetic_dim, cfg_.synthetic_offset);
      const std::vector<double> mm(cfg_.synthetic_dim, -cfg_.synthetic_offset);
      auto pool = gen_gaussians(cfg_.synthetic_pool_per_class, mp, mm, cfg_.synthetic_sigma,
                                data_streams::seed_for(seed, data_streams::kPool));
      const auto tp = gen_gaussians(cfg_.synthetic_test_per_class, mp, mm, cfg_.synthetic_sigma,
                                    data_streams::seed_for(seed, data_streams::kTest));
      return {std::move(pool), limit({tp.features(), tp.labels()}, seed)};
    }
    return {*pool_, limit(test_, seed)};
  }

  std::size_t input_dim() const {
    return cfg_.source == "synthetic" ? cfg_.synthetic_dim : static_cast<std::size_t>(pool_->dim());
  }

 private:
  LabeledSet limit(const LabeledSet& s, std::uint64_t seed) const {
    if (cfg_.test_limit == 0) return s;
    return subsample(s, cfg_.test_limit, data_streams::seed_for(seed, data_streams::kTestSubsample));
  }

  ExperimentConfig cfg_;
  std::optional<LabeledPool> pool_;
  LabeledSet test_;
};

/// Weakly supervised training data and the evaluation set for one run.
struct Task {
  ProblemSpec spec;
  Coefficients coeffs;
  MTupleBatch tuples;
  UnlabeledBatch unlabeled;
  LabeledSet test;
};

inline Task make_task(const DataSplit& data, const ProblemSpec& spec, std::size_t n_mdp, std::size_t n_u,
                      std::uint64_t seed) {
  return {spec, compute_coefficients(spec),
          sample_mdp_tuples(data.pool, spec, n_mdp, data_streams::seed_for(seed, data_streams::kTuples)),
          sample_unlabeled(data.pool, spec.pi_plus(), n_u, data_streams::seed_for(seed, data_streams::kUnlabeled)),
          data.test};
}

// ---------------------------------------------------------------------------
// Runs and summaries

/// Identity of one group of runs that differ only in seed.
struct RunKey {
  std::string method;
  std::string loss;
  double pi_plus = 0.0;
  int m = 0;
  std::size_t n_mdp = 0;
  std::size_t n_u = 0;

  auto tie() const { return std::tie(method, loss, pi_plus, m, n_mdp, n_u); }
  friend bool operator<(const RunKey& a, const RunKey& b) { return a.tie() < b.tie(); }
  friend bool operator==(const RunKey& a, const RunKey& b) { return a.tie() == b.tie(); }
};

inline RunKey key_of(const ResultRow& r) { return {r.method, r.loss, r.pi_plus, r.m, r.n_mdp, r.n_u}; }

struct TestSetInfo {
  std::uint64_t seed = 0;
  std::size_t size = 0;
  double positive_fraction = 0.0;
};

struct ExperimentResult {
  std::string kind;  // train | sweep | baseline-kmeans
  std::vector<RunKey> groups;   // in execution order, without duplicates
  std::vector<std::uint64_t> seeds;
  std::vector<ResultRow> rows;
  std::vector<TestSetInfo> test_sets;
};

namespace detail {

inline nlohmann::json mean_std(const std::vector<double>& xs) {
  nlohmann::json j;
  j["values"] = xs;
  if (xs.empty()) {
    j["mean"] = nullptr;
    j["std"] = nullptr;
    return j;
  }
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  j["mean"] = mean;
  if (xs.size() < 2) {
    j["std"] = nullptr;
  } else {
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    j["std"] = std::sqrt(var / static_cast<double>(xs.size() - 1));
  }
  return j;
}

}  // namespace detail

/// Summary groups derived from rows alone (plus the list of groups and
/// seeds that were run), so the CSV is enough to recompute them.
inline nlohmann::json summarize_groups(const std::vector<RunKey>& groups, const std::vector<std::uint64_t>& seeds,
                                       const std::vector<ResultRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& g : groups) {
    std::vector<double> final_acc, avg_acc;
    std::vector<std::uint64_t> seeds_with_rows;
    for (std::uint64_t s : seeds) {
      const ResultRow* last = nullptr;
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& r : rows) {
        if (r.seed != s || !(key_of(r) == g)) continue;
        if (!last || r.epoch >= last->epoch) last = &r;
        sum += r.test_accuracy;
        ++count;
      }
      if (!last) continue;
      seeds_with_rows.push_back(s);
      final_acc.push_back(last->test_accuracy);
      avg_acc.push_back(sum / static_cast<double>(count));
    }
    nlohmann::json j;
    j["method"] = g.method;
    j["loss"] = g.loss;
    j["pi_plus"] = g.pi_plus;
    j["m"] = g.m;
    j["n_mdp"] = g.n_mdp;
    j["n_u"] = g.n_u;
    j["runs"] = seeds.size();
    j["seeds"] = seeds_with_rows;
    j["empty_trajectory"] = final_acc.empty();
    j["final_accuracy"] = detail::mean_std(final_acc);
    j["epoch_averaged_accuracy"] = detail::mean_std(avg_acc);
    out.push_back(std::move(j));
  }
  return out;
}

inline nlohmann::json summary_json(const ExperimentResult& r, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["kind"] = r.kind;
  j["rows"] = {{"file", "results.csv"},
               {"schema_version", kResultsSchemaVersion},
               {"columns", std::vector<std::string>(std::begin(kCsvColumns), std::end(kCsvColumns))},
               {"count", r.rows.size()}};
  j["config"] = config_entries(cfg);
  nlohmann::json tests = nlohmann::json::array();
  for (const auto& t : r.test_sets)
    tests.push_back({{"seed", t.seed}, {"size", t.size}, {"positive_fraction", t.positive_fraction}});
  j["test_sets"] = tests;
  j["groups"] = summarize_groups(r.groups, r.seeds, r.rows);
  return j;
}

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

struct GridPoint {
  double pi;
  int m;
  std::size_t n_mdp;
  std::size_t n_u;
};

inline std::vector<GridPoint> grid(const ExperimentConfig& cfg) {
  std::vector<GridPoint> g;
  for (double pi : cfg.pi_plus)
    for (int m : cfg.m)
      for (auto n : cfg.n_mdp)
        for (auto nu : cfg.n_u) g.push_back({pi, m, n, nu});
  return g;
}

inline void add_group(ExperimentResult& r, const RunKey& k) {
  for (const auto& g : r.groups)
    if (g == k) return;
  r.groups.push_back(k);
}

inline void require_single_point(const ExperimentConfig& cfg) {
  if (cfg.pi_plus.size() != 1 || cfg.m.size() != 1 || cfg.n_mdp.size() != 1 || cfg.n_u.size() != 1 ||
      cfg.losses.size() != 1)
    throw std::invalid_argument("train takes one value each for pi, m, n-mdp, n-u and loss; use sweep for grids");
}

}  // namespace detail

/// Trains every (grid point, loss, method, seed) combination.
inline ExperimentResult run_training(const ExperimentConfig& cfg, bool sweep, const ProgressFn& progress = {}) {
  cfg.validate();
  if (!sweep) detail::require_single_point(cfg);
  const DataProvider provider(cfg);
  const ModelConfig model = parse_model(cfg.model, provider.input_dim());

  ExperimentResult result;
  result.kind = sweep ? "sweep" : "train";
  result.seeds = cfg.seeds;
  for (std::uint64_t seed : cfg.seeds) {
    const DataSplit data = provider.get(seed);
    result.test_sets.push_back({seed, data.test.size(), data.test.positive_fraction()});
    for (const auto& gp : detail::grid(cfg)) {
      const Task task = make_task(data, ProblemSpec(gp.pi, gp.m), gp.n_mdp, gp.n_u, seed);
      for (LossKind loss : cfg.losses)
        for (const Correction& method : cfg.methods) {
          TrainConfig tc;
          tc.epochs = cfg.epochs;
          tc.batch_size_mdp = cfg.batch_mdp;
          tc.batch_size_u = cfg.batch_u;
          tc.seed = seed;
          tc.loss = loss;
          tc.correction = method;
          tc.scope = cfg.scope;
          const auto report = train(model, cfg.optim, tc, task.tuples, task.unlabeled, task.test, task.coeffs,
                                    task.spec);
          const RunKey key{method.name(), std::string(to_string(loss)), gp.pi, gp.m, gp.n_mdp, gp.n_u};
          detail::add_group(result, key);
          for (const auto& e : report.epochs)
            result.rows.push_back({key.method, key.loss, gp.pi, gp.m, gp.n_mdp, gp.n_u, seed, e.epoch,
                                   e.full_raw_risk, e.full_corrected_risk, e.test_accuracy});
          if (progress) {
            std::ostringstream msg;
            msg << key.method << " " << key.loss << " pi=" << gp.pi << " m=" << gp.m << " n_mdp=" << gp.n_mdp
                << " n_u=" << gp.n_u << " seed=" << seed;
            if (!report.epochs.empty()) msg << " acc=" << report.epochs.back().test_accuracy;
            progress(msg.str());
          }
        }
    }
  }
  return result;
}

/// K-Means on concatenated tuples for every (grid point, seed).
inline ExperimentResult run_kmeans(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  const DataProvider provider(cfg);
  ExperimentResult result;
  result.kind = "baseline-kmeans";
  result.seeds = cfg.seeds;
  for (std::uint64_t seed : cfg.seeds) {
    const DataSplit data = provider.get(seed);
    result.test_sets.push_back({seed, data.test.size(), data.test.positive_fraction()});
    for (const auto& gp : detail::grid(cfg)) {
      const Task task = make_task(data, ProblemSpec(gp.pi, gp.m), gp.n_mdp, gp.n_u, seed);
      const auto km = kmeans_baseline(task.tuples, task.test, data_streams::seed_for(seed, data_streams::kKMeans));
      const RunKey key{"kmeans", "none", gp.pi, gp.m, gp.n_mdp, gp.n_u};
      detail::add_group(result, key);
      result.rows.push_back({key.method, key.loss, gp.pi, gp.m, gp.n_mdp, gp.n_u, seed, 0, std::nan(""),
                             std::nan(""), km.accuracy});
      if (progress)
        progress("kmeans pi=" + format_double(gp.pi) + " m=" + std::to_string(gp.m) + " seed=" +
                 std::to_string(seed) + " acc=" + format_double(km.accuracy));
    }
  }
  return result;
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_bytes_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

/// Writes <out>/results.csv and <out>/summary.json.
inline void write_results(const ExperimentResult& r, const ExperimentConfig& cfg) {
  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  write_text_atomic(dir / "results.csv", to_csv(r.rows));
  write_text_atomic(dir / "summary.json", summary_json(r, cfg).dump(2) + "\n");
}

/// Writes the pool, test set and one seed's tuples and unlabeled sample as
/// matrix files, plus a small JSON manifest.
inline nlohmann::json generate_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const DataProvider provider(cfg);
  const std::uint64_t seed = cfg.seeds.front();
  const DataSplit data = provider.get(seed);
  const ProblemSpec spec(cfg.pi_plus.front(), cfg.m.front());
  const Task task = make_task(data, spec, cfg.n_mdp.front(), cfg.n_u.front(), seed);

  const std::filesystem::path dir(cfg.out);
  std::filesystem::create_directories(dir);
  write_matrix(dir / "pool.mdpu", data.pool.features(), &data.pool.labels());
  write_matrix(dir / "test.mdpu", data.test.features, &data.test.labels);
  write_matrix(dir / "tuples.mdpu", task.tuples.features(), &audit::Access::labels(task.tuples));
  write_matrix(dir / "unlabeled.mdpu", task.unlabeled.features(), &audit::Access::labels(task.unlabeled));

  nlohmann::json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["seed"] = seed;
  j["pi_plus"] = spec.pi_plus();
  j["m"] = spec.m();
  j["n_mdp"] = task.tuples.size();
  j["n_u"] = task.unlabeled.size();
  j["files"] = {{"pool", "pool.mdpu"}, {"test", "test.mdpu"}, {"tuples", "tuples.mdpu"},
                {"unlabeled", "unlabeled.mdpu"}};
  j["config"] = config_entries(cfg);
  write_text_atomic(dir / "manifest.json", j.dump(2) + "\n");
  return j;
}

}  // namespace mdpu
