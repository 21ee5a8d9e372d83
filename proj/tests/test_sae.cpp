#include <gtest/gtest.h>

#include <cmath>

#include "iyow/error.hpp"
#include "iyow/sae.hpp"
#include "iyow/util.hpp"
#include "support/synthetic.hpp"

namespace iyow {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

TEST(TopK, Examples) {
  EXPECT_EQ(top_k(vec({0.1, 0.9, -0.3, 0.5}), 2), vec({0, 0.9, 0, 0.5}));
  EXPECT_EQ(top_k(vec({-0.1, -0.9, -0.3}), 2), vec({0, 0, 0}));
  EXPECT_EQ(top_k(vec({0.2, 0.4, 0.1}), 3), vec({0.2, 0.4, 0.1}));
  // Ties go to the lowest index.
  EXPECT_EQ(top_k(vec({0.5, 0.5, 0.5, 0.1}), 2), vec({0.5, 0.5, 0, 0}));
  EXPECT_EQ(top_k(vec({0.1, 0.5, 0.2, 0.5}), 1), vec({0, 0.5, 0, 0}));
}

TEST(Encode, MatchesFormulaAndChecksLength) {
  Rng rng(1);
  SaeConfig cfg;
  cfg.latent_dim = 6;
  cfg.sparsity = 2;
  const Eigen::MatrixXd data = random_matrix(rng, 20, 5);
  SaeModel m = initialize_model(cfg, data);
  m.encoder_bias = random_matrix(rng, 6, 1);
  const Eigen::VectorXd x = random_matrix(rng, 5, 1);
  const Eigen::VectorXd pre = m.encoder_weights * (x - m.pre_bias) + m.encoder_bias;
  EXPECT_LT((pre_activations(m, x) - pre).norm(), 1e-14);
  EXPECT_EQ(encode(m, x), top_k(pre, 2));
  EXPECT_THROW(encode(m, Eigen::VectorXd::Zero(4)), Error);
  EXPECT_THROW(decode(m, Eigen::VectorXd::Zero(5)), Error);
}

TEST(Decode, AffineIdentities) {
  Rng rng(2);
  SaeConfig cfg;
  cfg.latent_dim = 4;
  cfg.sparsity = 2;
  SaeModel m = initialize_model(cfg, random_matrix(rng, 10, 6));
  EXPECT_LT((decode(m, Eigen::VectorXd::Zero(4)) - m.pre_bias).norm(), 1e-15);
  EXPECT_LT((decode(m, Eigen::VectorXd::Unit(4, 2)) - (m.pre_bias + m.decoder_weights.col(2))).norm(), 1e-15);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd a = random_matrix(rng, 4, 1), b = random_matrix(rng, 4, 1);
    EXPECT_LT((decode(m, a + b) - (decode(m, a) + decode(m, b) - m.pre_bias)).norm(), 1e-12);
  }
}

TEST(Initialize, WarmStartConvention) {
  Rng rng(3);
  SaeConfig cfg;
  cfg.latent_dim = 7;
  cfg.sparsity = 3;
  const Eigen::MatrixXd data = random_matrix(rng, 30, 5);
  const SaeModel m = initialize_model(cfg, data);
  EXPECT_LT((m.encoder_weights - m.decoder_weights.transpose()).norm(), 1e-15);
  EXPECT_LT((m.pre_bias - data.colwise().mean().transpose()).norm(), 1e-12);
  EXPECT_EQ(m.encoder_bias, Eigen::VectorXd::Zero(7));
  for (int j = 0; j < 7; ++j) EXPECT_NEAR(m.decoder_weights.col(j).norm(), 1.0, 1e-12);
}

TEST(Config, Validation) {
  SaeConfig c;
  c.latent_dim = 4;
  c.sparsity = 5;
  EXPECT_THROW(c.validate(), Error);
  c.sparsity = 0;
  EXPECT_THROW(c.validate(), Error);
  c.sparsity = 2;
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Train, SingleRepeatedVectorIsLearned) {
  Eigen::MatrixXd data(64, 6);
  Rng rng(4);
  const Eigen::RowVectorXd v = random_matrix(rng, 1, 6);
  for (Eigen::Index i = 0; i < data.rows(); ++i) data.row(i) = v;
  SaeConfig cfg;
  cfg.latent_dim = 1;
  cfg.sparsity = 1;
  cfg.epochs = 50;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-2;
  const auto result = train(data, cfg);
  const double scale = v.squaredNorm() / 6.0;
  EXPECT_LT(result.loss_trace.back(), 1e-4 * scale);
}

TEST(Train, DeterministicAndUnitNorm) {
  Rng rng(5);
  const Eigen::MatrixXd data = random_matrix(rng, 128, 8);
  SaeConfig cfg;
  cfg.latent_dim = 6;
  cfg.sparsity = 2;
  cfg.epochs = 10;
  cfg.batch_size = 32;
  cfg.learning_rate = 1e-2;
  cfg.seed = 99;
  cfg.dead_latent_patience = 5;
  int progress_calls = 0;
  const auto a = train(data, cfg, [&](int, double) { ++progress_calls; });
  const auto b = train(data, cfg);
  EXPECT_EQ(progress_calls, 10);
  EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  ASSERT_EQ(a.loss_trace.size(), 10u);
  EXPECT_LE(a.loss_trace.back(), a.loss_trace.front());
  for (int j = 0; j < 6; ++j) EXPECT_NEAR(a.model.decoder_weights.col(j).norm(), 1.0, 1e-6);

  cfg.seed = 100;
  EXPECT_NE(serialize_model(train(data, cfg).model), serialize_model(a.model));
}

TEST(Train, DivergenceIsReported) {
  Rng rng(6);
  Eigen::MatrixXd data = random_matrix(rng, 16, 4);
  data(3, 2) = std::nan("");
  SaeConfig cfg;
  cfg.latent_dim = 2;
  cfg.sparsity = 1;
  cfg.epochs = 2;
  EXPECT_THROW(train(data, cfg), Error);
}

TEST(Activations, StackOfEncodes) {
  Rng rng(7);
  SaeConfig cfg;
  cfg.latent_dim = 8;
  cfg.sparsity = 3;
  const Eigen::MatrixXd data = random_matrix(rng, 25, 5);
  const SaeModel m = initialize_model(cfg, data);
  const auto acts = activations(m, data);
  ASSERT_EQ(acts.values.rows(), 25);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const Eigen::VectorXd z = encode(m, data.row(i).transpose());
    EXPECT_EQ(acts.values.row(i), z.transpose());
    EXPECT_LE((z.array() != 0.0).count(), 3);
    EXPECT_GE(z.minCoeff(), 0.0);
  }
  EXPECT_EQ(activations(m, Eigen::MatrixXd(0, 5)).values.rows(), 0);
  EXPECT_THROW(activations(m, Eigen::MatrixXd::Zero(3, 4)), Error);
}

TEST(Serialization, RoundTripIsExact) {
  Rng rng(8);
  SaeConfig cfg;
  cfg.latent_dim = 5;
  cfg.sparsity = 2;
  cfg.learning_rate = 3e-4;
  cfg.seed = 1234567890123ull;
  SaeModel m = initialize_model(cfg, random_matrix(rng, 10, 3));
  m.encoder_bias = random_matrix(rng, 5, 1);
  const std::string bytes = serialize_model(m);
  const SaeModel back = deserialize_model(bytes);
  EXPECT_EQ(back.encoder_weights, m.encoder_weights);
  EXPECT_EQ(back.decoder_weights, m.decoder_weights);
  EXPECT_EQ(back.encoder_bias, m.encoder_bias);
  EXPECT_EQ(back.pre_bias, m.pre_bias);
  EXPECT_EQ(back.config.seed, cfg.seed);
  EXPECT_EQ(back.config.learning_rate, cfg.learning_rate);
  EXPECT_EQ(serialize_model(back), bytes);
  EXPECT_THROW(deserialize_model(bytes.substr(0, bytes.size() / 2)), Error);
  EXPECT_THROW(deserialize_model("garbage"), Error);

  const auto dir = testing::scratch_dir("sae");
  save_model(m, dir / "m.bin");
  EXPECT_EQ(serialize_model(load_model(dir / "m.bin")), bytes);
  std::filesystem::remove_all(dir);
}

TEST(LossTrace, CsvLayout) {
  EXPECT_EQ(loss_trace_csv({0.5, 0.25}), "epoch,mean_loss\n1,0.5\n2,0.25\n");
}

}  // namespace
}  // namespace iyow
