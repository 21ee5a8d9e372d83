#include "iyow/sae.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "iyow/error.hpp"
#include "iyow/util.hpp"

namespace iyow {

void SaeConfig::validate() const {
  if (latent_dim < 1) throw ConfigError("sae.latent_dim must be positive");
  if (sparsity < 1) throw ConfigError("sae.sparsity must be positive");
  if (sparsity > latent_dim) throw ConfigError("sae.sparsity must not exceed sae.latent_dim");
  if (input_dim < 0) throw ConfigError("sae.input_dim must be non-negative");
  if (epochs < 1) throw ConfigError("sae.epochs must be positive");
  if (batch_size < 1) throw ConfigError("sae.batch_size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("sae.learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("sae.adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("sae.adam_beta2 must lie in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("sae.adam_epsilon must be positive");
  if (dead_latent_patience < 1) throw ConfigError("sae.dead_latent_patience must be positive");
}

bool SaeModel::all_finite() const {
  return encoder_weights.allFinite() && encoder_bias.allFinite() && pre_bias.allFinite() &&
         decoder_weights.allFinite();
}

namespace {

// Indices of the k largest entries, ties to the lower index.
std::vector<int> top_indices(const double* values, int n, int k) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  k = std::clamp(k, 0, n);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [values](int a, int b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

void check_length(const char* what, Eigen::Index got, Eigen::Index want) {
  if (got != want) {
    throw Error(std::string(what) + ": expected length " + std::to_string(want) + ", got " + std::to_string(got));
  }
}

}  // namespace

Eigen::VectorXd top_k(const Eigen::VectorXd& pre, int k) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(pre.size());
  for (int j : top_indices(pre.data(), static_cast<int>(pre.size()), k)) {
    if (pre[j] > 0.0) z[j] = pre[j];
  }
  return z;
}

Eigen::VectorXd pre_activations(const SaeModel& model, const Eigen::VectorXd& x) {
  check_length("encode", x.size(), model.encoder_weights.cols());
  if (!x.allFinite()) throw NumericError("encode: input contains non-finite values");
  return model.encoder_weights * (x - model.pre_bias) + model.encoder_bias;
}

Eigen::VectorXd encode(const SaeModel& model, const Eigen::VectorXd& x) {
  return top_k(pre_activations(model, x), model.config.sparsity);
}

Eigen::VectorXd decode(const SaeModel& model, const Eigen::VectorXd& z) {
  check_length("decode", z.size(), model.decoder_weights.cols());
  if (!z.allFinite()) throw NumericError("decode: code contains non-finite values");
  return model.decoder_weights * z + model.pre_bias;
}

namespace {

Eigen::VectorXd random_unit(Rng& rng, Eigen::Index d) {
  Eigen::VectorXd v(d);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < d; ++i) v[i] = rng.normal();
    norm = v.norm();
  } while (!(norm > 0.0));
  return v / norm;
}

}  // namespace

void normalize_decoder(SaeModel& model) {
  for (Eigen::Index j = 0; j < model.decoder_weights.cols(); ++j) {
    const double n = model.decoder_weights.col(j).norm();
    if (n > 0.0) model.decoder_weights.col(j) /= n;
  }
}

SaeModel initialize_model(const SaeConfig& config, const Eigen::MatrixXd& data) {
  config.validate();
  const Eigen::Index d = data.cols();
  if (d < 1) throw Error("SAE needs at least one input dimension");
  if (config.input_dim != 0 && config.input_dim != d) {
    throw Error("SAE input_dim " + std::to_string(config.input_dim) + " does not match data dimension " +
                std::to_string(d));
  }
  SaeModel m;
  m.config = config;
  m.config.input_dim = static_cast<int>(d);
  const Eigen::Index M = config.latent_dim;
  Rng rng(derive_seed(config.seed, "sae/init"));
  m.decoder_weights.resize(d, M);
  for (Eigen::Index j = 0; j < M; ++j) m.decoder_weights.col(j) = random_unit(rng, d);
  m.encoder_weights = m.decoder_weights.transpose();
  m.encoder_bias = Eigen::VectorXd::Zero(M);
  m.pre_bias = data.rows() > 0 ? Eigen::VectorXd(data.colwise().mean().transpose()) : Eigen::VectorXd::Zero(d);
  return m;
}

TopKSupport compute_support(const SaeModel& model, const Eigen::MatrixXd& batch) {
  const Eigen::MatrixXd pre = (model.encoder_weights * (batch.colwise() - model.pre_bias)).colwise() +
                              model.encoder_bias;
  TopKSupport support(static_cast<std::size_t>(batch.cols()));
  for (Eigen::Index b = 0; b < batch.cols(); ++b) {
    const double* col = pre.col(b).data();
    for (int j : top_indices(col, static_cast<int>(pre.rows()), model.config.sparsity)) {
      if (col[j] > 0.0) support[static_cast<std::size_t>(b)].push_back(j);
    }
  }
  return support;
}

double loss_on_support(const SaeModel& model, const Eigen::MatrixXd& batch, const TopKSupport& support) {
  const Eigen::Index d = batch.rows(), B = batch.cols();
  if (static_cast<std::size_t>(B) != support.size()) throw Error("support size does not match batch");
  double total = 0.0;
  for (Eigen::Index b = 0; b < B; ++b) {
    const Eigen::VectorXd pre = model.encoder_weights * (batch.col(b) - model.pre_bias) + model.encoder_bias;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(pre.size());
    for (int j : support[static_cast<std::size_t>(b)]) z[j] = pre[j];
    total += (model.decoder_weights * z + model.pre_bias - batch.col(b)).squaredNorm();
  }
  return total / static_cast<double>(d * B);
}

namespace {

// Forward and backward pass over one batch (d x B). Fills `codes` (M x B).
double forward_backward(const SaeModel& model, const Eigen::MatrixXd& batch, SaeGradients& g,
                        Eigen::MatrixXd& codes) {
  const Eigen::Index d = batch.rows(), B = batch.cols(), M = model.encoder_weights.rows();
  const Eigen::MatrixXd centered = batch.colwise() - model.pre_bias;
  const Eigen::MatrixXd pre = (model.encoder_weights * centered).colwise() + model.encoder_bias;
  codes = Eigen::MatrixXd::Zero(M, B);
  for (Eigen::Index b = 0; b < B; ++b) {
    const double* col = pre.col(b).data();
    for (int j : top_indices(col, static_cast<int>(M), model.config.sparsity)) {
      if (col[j] > 0.0) codes(j, b) = col[j];
    }
  }
  const Eigen::MatrixXd residual = (model.decoder_weights * codes).colwise() + model.pre_bias - batch;
  const double scale = 1.0 / static_cast<double>(d * B);
  const double loss = residual.squaredNorm() * scale;

  const Eigen::MatrixXd grad_out = (2.0 * scale) * residual;  // d x B
  g.decoder_weights = grad_out * codes.transpose();
  Eigen::MatrixXd grad_pre = model.decoder_weights.transpose() * grad_out;  // M x B
  grad_pre = (codes.array() != 0.0).select(grad_pre, 0.0);
  g.encoder_bias = grad_pre.rowwise().sum();
  g.encoder_weights = grad_pre * centered.transpose();
  g.pre_bias = grad_out.rowwise().sum() - model.encoder_weights.transpose() * g.encoder_bias;
  return loss;
}

struct AdamMoments {
  Eigen::MatrixXd m, v;
  void init(Eigen::Index r, Eigen::Index c) {
    m = Eigen::MatrixXd::Zero(r, c);
    v = Eigen::MatrixXd::Zero(r, c);
  }
};

template <typename Param, typename Grad>
void adam_update(Param& p, const Grad& g, AdamMoments& s, const SaeConfig& c, double bias1, double bias2) {
  auto gm = Eigen::Map<const Eigen::MatrixXd>(g.data(), p.rows(), p.cols());
  auto pm = Eigen::Map<Eigen::MatrixXd>(p.data(), p.rows(), p.cols());
  s.m = c.adam_beta1 * s.m + (1.0 - c.adam_beta1) * gm;
  s.v = c.adam_beta2 * s.v + (1.0 - c.adam_beta2) * gm.cwiseProduct(gm);
  pm.array() -= c.learning_rate * (s.m.array() / bias1) / ((s.v.array() / bias2).sqrt() + c.adam_epsilon);
}

}  // namespace

double loss_and_gradients(const SaeModel& model, const Eigen::MatrixXd& batch, SaeGradients& grads) {
  Eigen::MatrixXd codes;
  return forward_backward(model, batch, grads, codes);
}

TrainResult train(const Eigen::MatrixXd& embeddings, const SaeConfig& config, const ProgressSink& progress) {
  config.validate();
  const Eigen::Index N = embeddings.rows();
  if (N < 1) throw Error("cannot train an SAE on an empty dataset");
  if (!embeddings.allFinite()) throw NumericError("training data contains non-finite values");

  TrainResult result;
  SaeModel& model = result.model;
  model = initialize_model(config, embeddings);
  const Eigen::Index d = model.input_dim(), M = model.latent_dim();
  const Eigen::MatrixXd data = embeddings.transpose();  // d x N, samples as columns
  const Eigen::Index batch = std::min<Eigen::Index>(config.batch_size, N);

  AdamMoments s_enc, s_benc, s_pre, s_dec;
  s_enc.init(M, d);
  s_benc.init(M, 1);
  s_pre.init(d, 1);
  s_dec.init(d, M);

  Rng shuffle_rng(derive_seed(config.seed, "sae/shuffle"));
  Rng reinit_rng(derive_seed(config.seed, "sae/reinit"));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> silent_steps(static_cast<std::size_t>(M), 0);

  SaeGradients grads;
  Eigen::MatrixXd codes, xb;
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (Eigen::Index start = 0; start < N; start += batch) {
      const Eigen::Index B = std::min(batch, N - start);
      xb.resize(d, B);
      for (Eigen::Index b = 0; b < B; ++b) xb.col(b) = data.col(order[static_cast<std::size_t>(start + b)]);

      const double loss = forward_backward(model, xb, grads, codes);
      if (!std::isfinite(loss)) {
        throw NumericError("SAE training diverged at epoch " + std::to_string(epoch + 1) + ", step " +
                           std::to_string(step + 1) + " (loss " + format_double(loss) + ")");
      }
      epoch_loss += loss * static_cast<double>(B);

      ++step;
      const double bias1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(step));
      const double bias2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(step));
      adam_update(model.encoder_weights, grads.encoder_weights, s_enc, config, bias1, bias2);
      adam_update(model.encoder_bias, grads.encoder_bias, s_benc, config, bias1, bias2);
      adam_update(model.pre_bias, grads.pre_bias, s_pre, config, bias1, bias2);
      adam_update(model.decoder_weights, grads.decoder_weights, s_dec, config, bias1, bias2);
      normalize_decoder(model);
      if (!model.all_finite()) {
        throw NumericError("SAE parameters became non-finite at step " + std::to_string(step));
      }

      for (Eigen::Index j = 0; j < M; ++j) {
        auto& silent = silent_steps[static_cast<std::size_t>(j)];
        if ((codes.row(j).array() != 0.0).any()) {
          silent = 0;
          continue;
        }
        if (++silent < config.dead_latent_patience) continue;
        const Eigen::VectorXd dir = random_unit(reinit_rng, d);
        model.decoder_weights.col(j) = dir;
        model.encoder_weights.row(j) = dir.transpose();
        model.encoder_bias[j] = 0.0;
        s_dec.m.col(j).setZero();
        s_dec.v.col(j).setZero();
        s_enc.m.row(j).setZero();
        s_enc.v.row(j).setZero();
        s_benc.m(j, 0) = 0.0;
        s_benc.v(j, 0) = 0.0;
        silent = 0;
        ++result.reinitialized_latents;
      }
    }
    const double mean = epoch_loss / static_cast<double>(N);
    result.loss_trace.push_back(mean);
    if (progress) progress(epoch + 1, mean);
  }
  return result;
}

ActivationMatrix activations(const SaeModel& model, const Eigen::MatrixXd& embeddings,
                             std::vector<std::string> row_ids) {
  if (embeddings.rows() > 0 && embeddings.cols() != model.input_dim()) {
    throw Error("activations: embeddings have dimension " + std::to_string(embeddings.cols()) +
                ", model expects " + std::to_string(model.input_dim()));
  }
  if (!row_ids.empty() && static_cast<Eigen::Index>(row_ids.size()) != embeddings.rows()) {
    throw Error("activations: row id count does not match embeddings");
  }
  ActivationMatrix out;
  out.values = Eigen::MatrixXd::Zero(embeddings.rows(), model.latent_dim());
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    out.values.row(i) = encode(model, embeddings.row(i).transpose()).transpose();
  }
  if (row_ids.empty()) {
    for (Eigen::Index i = 0; i < embeddings.rows(); ++i) row_ids.push_back(std::to_string(i));
  }
  out.row_ids = std::move(row_ids);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

constexpr char kMagic[8] = {'I', 'Y', 'O', 'W', 'S', 'A', 'E', '\0'};
constexpr std::uint32_t kLayoutVersion = 1;

static_assert(std::endian::native == std::endian::little, "model files are little-endian");

template <typename T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::string_view& in) {
  if (in.size() < sizeof(T)) throw Error("model file is truncated");
  T v;
  std::memcpy(&v, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return v;
}

void put_matrix(std::string& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put(out, m(r, c));
}

Eigen::MatrixXd take_matrix(std::string_view& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = take<double>(in);
  return m;
}

nlohmann::json config_json(const SaeConfig& c) {
  return {{"latent_dim", c.latent_dim},       {"sparsity", c.sparsity},
          {"input_dim", c.input_dim},         {"epochs", c.epochs},
          {"batch_size", c.batch_size},       {"learning_rate", c.learning_rate},
          {"adam_beta1", c.adam_beta1},       {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon},   {"seed", c.seed},
          {"dead_latent_patience", c.dead_latent_patience}};
}

SaeConfig config_from_json(const nlohmann::json& j) {
  SaeConfig c;
  c.latent_dim = j.at("latent_dim").get<int>();
  c.sparsity = j.at("sparsity").get<int>();
  c.input_dim = j.at("input_dim").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_epsilon = j.at("adam_epsilon").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.dead_latent_patience = j.at("dead_latent_patience").get<int>();
  return c;
}

}  // namespace

std::string serialize_model(const SaeModel& model) {
  std::string out(kMagic, sizeof(kMagic));
  put(out, kLayoutVersion);
  const std::string cfg = config_json(model.config).dump();
  put(out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  put(out, static_cast<std::uint64_t>(model.latent_dim()));
  put(out, static_cast<std::uint64_t>(model.input_dim()));
  put_matrix(out, model.encoder_weights);
  put_matrix(out, model.encoder_bias);
  put_matrix(out, model.pre_bias);
  put_matrix(out, model.decoder_weights);
  return out;
}

SaeModel deserialize_model(std::string_view in) {
  if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error("not an SAE model file");
  }
  in.remove_prefix(sizeof(kMagic));
  const auto version = take<std::uint32_t>(in);
  if (version != kLayoutVersion) throw Error("unsupported SAE model layout version " + std::to_string(version));
  const auto cfg_len = take<std::uint32_t>(in);
  if (in.size() < cfg_len) throw Error("model file is truncated");
  SaeModel m;
  m.config = config_from_json(nlohmann::json::parse(in.substr(0, cfg_len)));
  in.remove_prefix(cfg_len);
  const auto M = static_cast<Eigen::Index>(take<std::uint64_t>(in));
  const auto d = static_cast<Eigen::Index>(take<std::uint64_t>(in));
  m.encoder_weights = take_matrix(in, M, d);
  m.encoder_bias = take_matrix(in, M, 1);
  m.pre_bias = take_matrix(in, d, 1);
  m.decoder_weights = take_matrix(in, d, M);
  if (!in.empty()) throw Error("model file has trailing bytes");
  return m;
}

void save_model(const SaeModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

SaeModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

std::string loss_trace_csv(const std::vector<double>& trace) {
  std::string out = "epoch,mean_loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out += std::to_string(i + 1) + "," + format_double(trace[i]) + "\n";
  return out;
}

}  // namespace iyow
