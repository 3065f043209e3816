#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mdpu/experiment.hpp"
#include "mdpu/verify.hpp"

namespace {

struct CommonFlags {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;  // config key -> raw value
  bool quiet = false;
};

// Flags that map one-to-one onto config keys.
const std::vector<std::pair<std::string, std::string>> kFlagKeys = {
    {"--pi", "problem.pi"},           {"--m", "problem.m"},
    {"--n-mdp", "problem.n_mdp"},     {"--n-u", "problem.n_u"},
    {"--loss", "train.loss"},         {"--correction", "train.correction"},
    {"--scope", "train.scope"},       {"--model", "model"},
    {"--lr", "optim.learning_rate"},  {"--weight-decay", "optim.weight_decay"},
    {"--epochs", "train.epochs"},     {"--batch-mdp", "train.batch_mdp"},
    {"--batch-u", "train.batch_u"},   {"--seeds", "seeds"},
    {"--out", "out"}};

void add_common(CLI::App* app, CommonFlags& c) {
  app->add_option("--config", c.config_file, "key = value config file; flags override it");
  app->add_option("--set", c.sets, "extra key=value override (repeatable), e.g. data.source=idx");
  app->add_flag("--quiet", c.quiet, "no progress lines on stderr");
  for (const auto& [flag, key] : kFlagKeys) {
    app->add_option_function<std::string>(
        flag, [&c, key = key](const std::string& v) { c.flags[key] = v; }, "sets " + key);
  }
}

mdpu::ExperimentConfig build_config(const CommonFlags& c) {
  mdpu::ConfigMap entries;
  if (!c.config_file.empty()) entries = mdpu::read_config_file(c.config_file);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    entries[std::string(mdpu::detail::trim(s.substr(0, eq)))] = std::string(mdpu::detail::trim(s.substr(eq + 1)));
  }
  for (const auto& [k, v] : c.flags) entries[k] = v;
  auto cfg = mdpu::make_experiment_config(entries);
  cfg.validate();
  return cfg;
}

mdpu::ProgressFn progress_fn(const CommonFlags& c) {
  if (c.quiet) return {};
  return [](const std::string& msg) { std::cerr << msg << "\n"; };
}

void print_summary(const nlohmann::json& summary) {
  for (const auto& g : summary["groups"]) {
    std::printf("%-8s %-9s pi=%-5g m=%-2d n_mdp=%-6zu n_u=%-6zu ", g["method"].get<std::string>().c_str(),
                g["loss"].get<std::string>().c_str(), g["pi_plus"].get<double>(), g["m"].get<int>(),
                g["n_mdp"].get<std::size_t>(), g["n_u"].get<std::size_t>());
    if (g["empty_trajectory"].get<bool>()) {
      std::printf("(no epochs)\n");
      continue;
    }
    const auto& f = g["final_accuracy"];
    const auto& a = g["epoch_averaged_accuracy"];
    auto sd = [](const nlohmann::json& x) { return x["std"].is_null() ? 0.0 : x["std"].get<double>(); };
    std::printf("final %.4f +- %.4f   epoch-avg %.4f +- %.4f\n", f["mean"].get<double>(), sd(f),
                a["mean"].get<double>(), sd(a));
  }
}

int finish(const mdpu::ExperimentResult& r, const mdpu::ExperimentConfig& cfg) {
  mdpu::write_results(r, cfg);
  print_summary(mdpu::summary_json(r, cfg));
  std::printf("wrote %s/results.csv and %s/summary.json\n", cfg.out.c_str(), cfg.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classifiers from dominant-positive tuples and unlabeled data"};
  app.require_subcommand(1);

  CommonFlags gen_flags, train_flags, sweep_flags, km_flags;
  auto* gen = app.add_subcommand("gen-data", "write pool, test set, tuples and unlabeled sample as matrix files");
  add_common(gen, gen_flags);
  auto* tr = app.add_subcommand("train", "train one configuration for each correction and seed");
  add_common(tr, train_flags);
  auto* sw = app.add_subcommand("sweep", "train over comma-separated grids of priors, tuple sizes, sizes and losses");
  add_common(sw, sweep_flags);
  auto* km = app.add_subcommand("baseline-kmeans", "K-Means (K=2) on concatenated tuples");
  add_common(km, km_flags);

  auto* ver = app.add_subcommand("verify", "run the brute-force oracle checks and print a JSON report");
  std::string verify_out;
  ver->add_option("--out", verify_out, "also write the report to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto cfg = build_config(gen_flags);
      const auto manifest = mdpu::generate_data(cfg);
      std::printf("wrote %s/{pool,test,tuples,unlabeled}.mdpu and manifest.json (%zu tuples, %zu unlabeled)\n",
                  cfg.out.c_str(), manifest["n_mdp"].get<std::size_t>(), manifest["n_u"].get<std::size_t>());
      return 0;
    }
    if (*tr) {
      const auto cfg = build_config(train_flags);
      return finish(mdpu::run_training(cfg, false, progress_fn(train_flags)), cfg);
    }
    if (*sw) {
      const auto cfg = build_config(sweep_flags);
      return finish(mdpu::run_training(cfg, true, progress_fn(sweep_flags)), cfg);
    }
    if (*km) {
      const auto cfg = build_config(km_flags);
      return finish(mdpu::run_kmeans(cfg, progress_fn(km_flags)), cfg);
    }
    if (*ver) {
      const auto checks = mdpu::run_verification();
      const std::string report = mdpu::verification_json(checks).dump(2) + "\n";
      std::fputs(report.c_str(), stdout);
      if (!verify_out.empty()) mdpu::write_text_atomic(verify_out, report);
      return mdpu::all_passed(checks) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
