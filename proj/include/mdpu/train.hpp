#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "mdpu/coeffs.hpp"
#include "mdpu/model.hpp"
#include "mdpu/optim.hpp"
#include "mdpu/random.hpp"
#include "mdpu/risk.hpp"
#include "mdpu/tuplegen.hpp"

namespace mdpu {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size_mdp = 100;
  std::size_t batch_size_u = 100;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::Logistic;
  Correction correction = Correction::relu();
  CorrectionScope scope = CorrectionScope::Whole;

  void validate() const {
    if (batch_size_mdp == 0 || batch_size_u == 0) throw std::invalid_argument("batch sizes must be >= 1");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double minibatch_corrected_risk = 0.0;  // mean over the epoch's steps
  double full_raw_risk = 0.0;
  double full_corrected_risk = 0.0;
  double test_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::vector<double> minibatch_risks;  // every step, in order
  ModelParams params;
};

/// Seed streams used by a run; all derived from TrainConfig::seed.
namespace streams {
inline constexpr std::uint64_t kInit = 0;
inline std::uint64_t epoch(std::size_t e) { return 1 + static_cast<std::uint64_t>(e); }
}  // namespace streams

/// Minimizes the (corrected) empirical risk with paired mini-batches.
///
/// Each epoch shuffles both streams with that epoch's seed and runs
/// max(ceil(n_MDP / B_MDP), ceil(n_U / B_U)) steps; the stream that runs out
/// first wraps around its own permutation.
inline TrainReport train(const ModelConfig& model, const OptimConfig& optim, const TrainConfig& cfg,
                         const MTupleBatch& tuples, const UnlabeledBatch& unlabeled,
                         const LabeledSet& test, const Coefficients& coeffs,
                         const ProblemSpec& spec) {
  cfg.validate();
  if (tuples.m() != spec.m()) throw std::invalid_argument("tuple batch size does not match spec");
  if (tuples.size() == 0 || unlabeled.size() == 0) throw std::invalid_argument("empty training data");
  const auto dim = static_cast<Eigen::Index>(model.input_dim);
  if (tuples.dim() != dim || unlabeled.dim() != dim || (test.size() > 0 && test.features.cols() != dim))
    throw std::invalid_argument("data dimension does not match model input dimension");

  TrainReport report{{}, {}, init_params(model, derive_seed(cfg.seed, streams::kInit))};
  Optimizer opt(optim, report.params.values().size());

  const std::size_t m = static_cast<std::size_t>(spec.m());
  const std::size_t n_t = tuples.size();
  const std::size_t n_u = unlabeled.size();
  const std::size_t bt = std::min(cfg.batch_size_mdp, n_t);
  const std::size_t bu = std::min(cfg.batch_size_u, n_u);
  const std::size_t steps = std::max((n_t + bt - 1) / bt, (n_u + bu - 1) / bu);

  std::vector<std::size_t> perm_t(n_t), perm_u(n_u);
  std::vector<std::size_t> rows_t(bt * m), rows_u(bu);

  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    Rng rng(derive_seed(cfg.seed, streams::epoch(e)));
    std::iota(perm_t.begin(), perm_t.end(), 0);
    std::iota(perm_u.begin(), perm_u.end(), 0);
    rng.shuffle(perm_t);
    rng.shuffle(perm_u);

    std::vector<double> step_risks;
    step_risks.reserve(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      for (std::size_t i = 0; i < bt; ++i) {
        const std::size_t tuple = perm_t[(s * bt + i) % n_t];
        for (std::size_t j = 0; j < m; ++j) rows_t[i * m + j] = tuple * m + j;
      }
      for (std::size_t i = 0; i < bu; ++i) rows_u[i] = perm_u[(s * bu + i) % n_u];

      const Matrix xt = gather_rows(tuples.features(), rows_t);
      const Matrix xu = gather_rows(unlabeled.features(), rows_u);
      const Vector st = forward_batch(report.params, xt);
      const Vector su = forward_batch(report.params, xu);
      const RiskGradient g = corrected_risk_grad({st.data(), static_cast<std::size_t>(st.size())},
                                                 {su.data(), static_cast<std::size_t>(su.size())},
                                                 cfg.loss, coeffs, spec, cfg.correction, cfg.scope);
      step_risks.push_back(g.report.corrected_total);

      const Vector grad =
          backward_batch(report.params, xt, Eigen::Map<const Vector>(g.d_mdp.data(), st.size())) +
          backward_batch(report.params, xu, Eigen::Map<const Vector>(g.d_u.data(), su.size()));
      opt.step(report.params.values(), grad);
    }

    EpochRecord rec;
    rec.epoch = e;
    rec.minibatch_corrected_risk = pairwise_mean(step_risks);
    const Vector ft = forward_batch(report.params, tuples.features());
    const Vector fu = forward_batch(report.params, unlabeled.features());
    const RiskReport full = empirical_risk({ft.data(), static_cast<std::size_t>(ft.size())},
                                           {fu.data(), static_cast<std::size_t>(fu.size())},
                                           cfg.loss, coeffs, spec, cfg.correction, cfg.scope);
    rec.full_raw_risk = full.raw_total;
    rec.full_corrected_risk = full.corrected_total;
    rec.test_accuracy = test.size() > 0 ? evaluate(report.params, test) : 0.0;
    report.epochs.push_back(rec);
    report.minibatch_risks.insert(report.minibatch_risks.end(), step_risks.begin(), step_risks.end());
  }
  return report;
}

}  // namespace mdpu
