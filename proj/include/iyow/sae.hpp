#pragma once

// Top-K sparse autoencoder over embedding vectors.
//
//   pre = W_enc (x - b_pre) + b_enc
//   z   = TopK(pre), negatives clamped to zero
//   x^  = W_dec z + b_pre
//
// Training minimizes ||x - x^||^2 / d with mini-batch Adam. Decoder columns
// are kept at unit norm and latents that stay silent for
// dead_latent_patience steps are reinitialized.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace iyow {

struct SaeConfig {
  int latent_dim = 32;  // M
  int sparsity = 4;     // K
  int input_dim = 0;    // d; 0 means "take it from the data"
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 5e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  int dead_latent_patience = 50;

  void validate() const;
};

struct SaeModel {
  SaeConfig config;
  Eigen::MatrixXd encoder_weights;  // M x d
  Eigen::VectorXd encoder_bias;     // M
  Eigen::VectorXd pre_bias;         // d
  Eigen::MatrixXd decoder_weights;  // d x M

  int latent_dim() const { return static_cast<int>(encoder_weights.rows()); }
  int input_dim() const { return static_cast<int>(encoder_weights.cols()); }
  bool all_finite() const;
};

// Keeps the k largest entries (ties to the lowest index), zeroes the rest and
// clamps retained negatives to zero.
Eigen::VectorXd top_k(const Eigen::VectorXd& pre_activations, int k);

Eigen::VectorXd pre_activations(const SaeModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd encode(const SaeModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd decode(const SaeModel& model, const Eigen::VectorXd& z);

// Decoder columns random unit vectors, encoder = decoder^T, biases zero,
// pre_bias = data mean (rows of `data` are samples).
SaeModel initialize_model(const SaeConfig& config, const Eigen::MatrixXd& data);

struct SaeGradients {
  Eigen::MatrixXd encoder_weights;
  Eigen::VectorXd encoder_bias;
  Eigen::VectorXd pre_bias;
  Eigen::MatrixXd decoder_weights;
};

// Active set per sample: the latents whose encoded value is nonzero.
using TopKSupport = std::vector<std::vector<int>>;

// Columns of `batch` are samples (d x B).
TopKSupport compute_support(const SaeModel& model, const Eigen::MatrixXd& batch);
// Mean over the batch of ||x - x^||^2 / d with the latent code restricted
// to `support` (z_j = pre_j on the support, 0 elsewhere). Smooth in every
// parameter, which makes it suitable for finite-difference checks.
double loss_on_support(const SaeModel& model, const Eigen::MatrixXd& batch, const TopKSupport& support);
// Loss at the model's own Top-K support together with its analytic gradient.
double loss_and_gradients(const SaeModel& model, const Eigen::MatrixXd& batch, SaeGradients& grads);

struct TrainResult {
  SaeModel model;
  std::vector<double> loss_trace;  // per-epoch mean loss
  int reinitialized_latents = 0;
};

using ProgressSink = std::function<void(int epoch, double mean_loss)>;

// `embeddings` is N x d. Throws NumericError on divergence.
TrainResult train(const Eigen::MatrixXd& embeddings, const SaeConfig& config, const ProgressSink& progress = {});

// Renormalizes every decoder column to unit Euclidean norm.
void normalize_decoder(SaeModel& model);

struct ActivationMatrix {
  std::vector<std::string> row_ids;
  Eigen::MatrixXd values;  // N x M
};

ActivationMatrix activations(const SaeModel& model, const Eigen::MatrixXd& embeddings,
                             std::vector<std::string> row_ids = {});

// Binary model file: magic, layout version, config JSON, then matrices.
void save_model(const SaeModel& model, const std::filesystem::path& path);
SaeModel load_model(const std::filesystem::path& path);
std::string serialize_model(const SaeModel& model);
SaeModel deserialize_model(std::string_view bytes);

// "epoch,mean_loss" with 1-based epochs.
std::string loss_trace_csv(const std::vector<double>& trace);

}  // namespace iyow
