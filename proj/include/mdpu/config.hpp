#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mdpu/losses.hpp"
#include "mdpu/optim.hpp"
#include "mdpu/risk.hpp"

namespace mdpu {

/// Ordered `key = value` pairs. Later assignments to the same key win.
using ConfigMap = std::map<std::string, std::string>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("bad value '" + std::string(s) + "' for " + std::string(key));
  return v;
}

template <typename T>
std::vector<T> parse_number_list(std::string_view key, std::string_view s) {
  std::vector<T> out;
  for (const auto& item : split_list(s)) out.push_back(parse_number<T>(key, item));
  if (out.empty()) throw std::invalid_argument("empty list for " + std::string(key));
  return out;
}

}  // namespace detail

/// Parses line-based `key = value` text. '#' starts a comment.
inline ConfigMap parse_config_text(std::string_view text) {
  ConfigMap out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    out[std::string(key)] = std::string(detail::trim(line.substr(eq + 1)));
  }
  return out;
}

inline ConfigMap read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Everything a run needs. List-valued fields are grid axes for `sweep`;
/// `train` requires them to hold one value each, except `methods`.
struct ExperimentConfig {
  // data
  std::string source = "synthetic";  // synthetic | idx | files
  std::size_t synthetic_pool_per_class = 5000;
  std::size_t synthetic_test_per_class = 2500;
  std::size_t synthetic_dim = 2;
  double synthetic_offset = 1.5;  // class means +-(offset, ..., offset)
  double synthetic_sigma = 1.0;
  std::string train_images, train_labels, test_images, test_labels;
  std::string relabel = "mnist";
  std::string train_file, test_file;  // matrix files with labels
  std::size_t test_limit = 0;         // 0 keeps the whole test set

  // problem grid
  std::vector<double> pi_plus = {0.5};
  std::vector<int> m = {2};
  std::vector<std::size_t> n_mdp = {2000};
  std::vector<std::size_t> n_u = {2000};

  // model, optimizer, training
  std::string model = "linear";
  OptimConfig optim;
  std::size_t epochs = 50;
  std::size_t batch_mdp = 100;
  std::size_t batch_u = 100;
  std::vector<LossKind> losses = {LossKind::Logistic};
  std::vector<Correction> methods = {Correction::relu()};
  CorrectionScope scope = CorrectionScope::Whole;

  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string out = "results";

  void set(const std::string& key, const std::string& value);
  void validate() const;
};

inline void ExperimentConfig::set(const std::string& key, const std::string& v) {
  using detail::parse_number;
  using detail::parse_number_list;
  if (key == "data.source") {
    if (v != "synthetic" && v != "idx" && v != "files")
      throw std::invalid_argument("data.source must be synthetic, idx or files");
    source = v;
  } else if (key == "data.synthetic.pool_per_class") {
    synthetic_pool_per_class = parse_number<std::size_t>(key, v);
  } else if (key == "data.synthetic.test_per_class") {
    synthetic_test_per_class = parse_number<std::size_t>(key, v);
  } else if (key == "data.synthetic.dim") {
    synthetic_dim = parse_number<std::size_t>(key, v);
  } else if (key == "data.synthetic.offset") {
    synthetic_offset = parse_number<double>(key, v);
  } else if (key == "data.synthetic.sigma") {
    synthetic_sigma = parse_number<double>(key, v);
  } else if (key == "data.train_images") {
    train_images = v;
  } else if (key == "data.train_labels") {
    train_labels = v;
  } else if (key == "data.test_images") {
    test_images = v;
  } else if (key == "data.test_labels") {
    test_labels = v;
  } else if (key == "data.relabel") {
    relabel = v;
  } else if (key == "data.train_file") {
    train_file = v;
  } else if (key == "data.test_file") {
    test_file = v;
  } else if (key == "data.test_limit") {
    test_limit = parse_number<std::size_t>(key, v);
  } else if (key == "problem.pi") {
    pi_plus = parse_number_list<double>(key, v);
  } else if (key == "problem.m") {
    m = parse_number_list<int>(key, v);
  } else if (key == "problem.n_mdp") {
    n_mdp = parse_number_list<std::size_t>(key, v);
  } else if (key == "problem.n_u") {
    n_u = parse_number_list<std::size_t>(key, v);
  } else if (key == "model") {
    model = v;
  } else if (key == "optim.algorithm") {
    optim.algorithm = parse_optimizer(v);
  } else if (key == "optim.learning_rate") {
    optim.learning_rate = parse_number<double>(key, v);
  } else if (key == "optim.weight_decay") {
    optim.weight_decay = parse_number<double>(key, v);
  } else if (key == "optim.momentum") {
    optim.momentum = parse_number<double>(key, v);
  } else if (key == "train.epochs") {
    epochs = parse_number<std::size_t>(key, v);
  } else if (key == "train.batch_mdp") {
    batch_mdp = parse_number<std::size_t>(key, v);
  } else if (key == "train.batch_u") {
    batch_u = parse_number<std::size_t>(key, v);
  } else if (key == "train.loss") {
    losses.clear();
    for (const auto& s : detail::split_list(v)) losses.push_back(parse_loss_kind(s));
    if (losses.empty()) throw std::invalid_argument("empty list for train.loss");
  } else if (key == "train.correction") {
    methods.clear();
    for (const auto& s : detail::split_list(v)) methods.push_back(parse_correction(s));
    if (methods.empty()) throw std::invalid_argument("empty list for train.correction");
  } else if (key == "train.scope") {
    scope = parse_scope(v);
  } else if (key == "seeds") {
    seeds = parse_number_list<std::uint64_t>(key, v);
  } else if (key == "out") {
    out = v;
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

inline void ExperimentConfig::validate() const {
  optim.validate();
  if (batch_mdp == 0 || batch_u == 0) throw std::invalid_argument("batch sizes must be >= 1");
  for (double p : pi_plus) ProblemSpec(p, 1);
  for (int mm : m) ProblemSpec(0.5, mm);
  for (auto n : n_mdp)
    if (n == 0) throw std::invalid_argument("n_mdp must be >= 1");
  for (auto n : n_u)
    if (n == 0) throw std::invalid_argument("n_u must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (source == "synthetic") {
    if (synthetic_dim == 0 || synthetic_pool_per_class == 0 || synthetic_test_per_class == 0)
      throw std::invalid_argument("synthetic sizes must be >= 1");
    if (!(synthetic_sigma > 0.0)) throw std::invalid_argument("data.synthetic.sigma must be > 0");
  } else if (source == "idx") {
    if (train_images.empty() || train_labels.empty() || test_images.empty() || test_labels.empty())
      throw std::invalid_argument("idx source needs data.train_images, data.train_labels, "
                                  "data.test_images and data.test_labels");
  } else if (train_file.empty() || test_file.empty()) {
    throw std::invalid_argument("files source needs data.train_file and data.test_file");
  }
}

inline ExperimentConfig make_experiment_config(const ConfigMap& entries) {
  ExperimentConfig c;
  for (const auto& [k, v] : entries) c.set(k, v);
  return c;
}

}  // namespace mdpu
