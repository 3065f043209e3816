#include <gtest/gtest.h>

#include "mdpu/config.hpp"

using namespace mdpu;

TEST(ConfigText, CommentsBlankLinesAndWhitespace) {
  const auto m = parse_config_text(
      "# experiment\n"
      "\n"
      "  problem.pi = 0.3, 0.5   # two priors\n"
      "train.epochs=7\r\n"
      "model = mlp:32\n");
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m.at("problem.pi"), "0.3, 0.5");
  EXPECT_EQ(m.at("train.epochs"), "7");
  EXPECT_EQ(m.at("model"), "mlp:32");
}

TEST(ConfigText, LaterAssignmentWins) {
  const auto m = parse_config_text("seeds = 1\nseeds = 4,5\n");
  EXPECT_EQ(m.at("seeds"), "4,5");
}

TEST(ConfigText, MalformedLinesReportLineNumber) {
  try {
    parse_config_text("a = 1\nnot a pair\n");
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_config_text(" = 3\n"), std::invalid_argument);
}

TEST(ExperimentConfigSet, DottedKeysReachFields) {
  const auto c = make_experiment_config(parse_config_text(
      "problem.pi = 0.4,0.6\nproblem.m = 3\nproblem.n_mdp = 100\nproblem.n_u = 50\n"
      "optim.algorithm = sgd\noptim.learning_rate = 0.05\noptim.weight_decay = 1e-4\noptim.momentum = 0.8\n"
      "train.loss = squared, ramp\ntrain.correction = ure,abs\ntrain.scope = per-component\n"
      "train.batch_mdp = 10\ntrain.batch_u = 20\ntrain.epochs = 3\nseeds = 9\nout = /tmp/x\n"
      "data.synthetic.dim = 5\ndata.synthetic.offset = 2\n"));
  EXPECT_EQ(c.pi_plus, (std::vector<double>{0.4, 0.6}));
  EXPECT_EQ(c.m, std::vector<int>{3});
  EXPECT_EQ(c.n_mdp, std::vector<std::size_t>{100});
  EXPECT_EQ(c.n_u, std::vector<std::size_t>{50});
  EXPECT_EQ(c.optim.algorithm, OptimConfig::Algorithm::Sgd);
  EXPECT_DOUBLE_EQ(c.optim.learning_rate, 0.05);
  EXPECT_DOUBLE_EQ(c.optim.weight_decay, 1e-4);
  EXPECT_DOUBLE_EQ(c.optim.momentum, 0.8);
  EXPECT_EQ(c.losses, (std::vector<LossKind>{LossKind::Squared, LossKind::Ramp}));
  ASSERT_EQ(c.methods.size(), 2u);
  EXPECT_EQ(c.methods[0].name(), "ure");
  EXPECT_EQ(c.methods[1].name(), "abs");
  EXPECT_EQ(c.scope, CorrectionScope::PerComponent);
  EXPECT_EQ(c.batch_mdp, 10u);
  EXPECT_EQ(c.batch_u, 20u);
  EXPECT_EQ(c.epochs, 3u);
  EXPECT_EQ(c.seeds, std::vector<std::uint64_t>{9});
  EXPECT_EQ(c.out, "/tmp/x");
  EXPECT_EQ(c.synthetic_dim, 5u);
  EXPECT_DOUBLE_EQ(c.synthetic_offset, 2.0);
  EXPECT_NO_THROW(c.validate());
}

TEST(ExperimentConfigSet, RejectsUnknownKeysAndBadValues) {
  ExperimentConfig c;
  EXPECT_THROW(c.set("problem.prior", "0.5"), std::invalid_argument);
  EXPECT_THROW(c.set("problem.m", "two"), std::invalid_argument);
  EXPECT_THROW(c.set("problem.m", "2x"), std::invalid_argument);
  EXPECT_THROW(c.set("problem.pi", ""), std::invalid_argument);
  EXPECT_THROW(c.set("train.loss", "cauchy"), std::invalid_argument);
  EXPECT_THROW(c.set("data.source", "web"), std::invalid_argument);
}

TEST(ExperimentConfigValidate, CatchesOutOfRangeValues) {
  auto bad = [](const char* key, const char* value) {
    ExperimentConfig c;
    c.set(key, value);
    return c;
  };
  EXPECT_THROW(bad("problem.pi", "1.0").validate(), std::logic_error);
  EXPECT_THROW(bad("problem.pi", "0").validate(), std::logic_error);
  EXPECT_THROW(bad("problem.m", "0").validate(), std::logic_error);
  EXPECT_THROW(bad("problem.n_mdp", "0").validate(), std::logic_error);
  EXPECT_THROW(bad("train.batch_u", "0").validate(), std::logic_error);
  EXPECT_THROW(bad("optim.learning_rate", "-1").validate(), std::logic_error);
  EXPECT_THROW(bad("data.source", "idx").validate(), std::logic_error);
  EXPECT_THROW(bad("data.source", "files").validate(), std::logic_error);
  EXPECT_NO_THROW(ExperimentConfig{}.validate());
}
