#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddtd {

/// Fully-connected VAE: encoder k_in -> h1 -> h2 (ReLU) with linear heads
/// for mu and log(sigma^2), decoder n_latent -> h2 -> h1 -> k_in with ReLU
/// on hidden layers and no output activation (score rows are unbounded).
struct VaeArch {
  int k_in = 0;
  int hidden1 = 10000;
  int hidden2 = 500;
  int n_latent = 8;
};

/// Paper-scale hidden sizes (10000/500); shrinks to [4*k_in,
/// max(2*n_latent, k_in)] for small inputs so desk-scale runs stay cheap.
VaeArch default_arch(int k_in, int n_latent);

struct VaeModel {
  VaeArch arch;
  // encoder: x (row) -> relu -> relu -> {mu, log_var}
  Eigen::MatrixXd w1, w2, w_mu, w_lv;
  Eigen::VectorXd b1, b2, b_mu, b_lv;
  // decoder: z -> relu -> relu -> linear
  Eigen::MatrixXd v1, v2, v3;
  Eigen::VectorXd c1, c2, c3;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 20;
  int epochs = 400;
  int n_latent = 8;
  double beta = 4.0;
  std::uint64_t rng_seed = 0;
  int hidden1 = 0;  // 0 = size from default_arch
  int hidden2 = 0;
};

struct LossBreakdown {
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
};

/// Raised when a training loss stops being finite.
struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(int epoch, int batch, LossBreakdown loss);
  int epoch;
  int batch;
  LossBreakdown loss;
};

/// Glorot-uniform weights, zero biases.
VaeModel init_model(const VaeArch& arch, std::uint64_t seed);

/// Deterministic encoder pass for one score row.
std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const VaeModel& model,
                                                   const Eigen::VectorXd& x);

/// z_i = mu_i + exp(log_var_i / 2) * epsilon_i
Eigen::VectorXd reparameterize(const Eigen::VectorXd& mu,
                               const Eigen::VectorXd& log_var,
                               const Eigen::VectorXd& epsilon);

/// Deterministic decoder pass; output range is unbounded.
Eigen::VectorXd decode(const VaeModel& model, const Eigen::VectorXd& z);

/// -1/2 sum(1 + log_var - mu^2 - exp(log_var)); zero exactly at the prior.
double kl_loss(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var);

/// Loss of one batch (rows of `batch`, one epsilon row per batch row).
/// reconstruction = mean over rows and components of squared error,
/// kl = mean over rows of kl_loss, total = reconstruction + beta * kl.
LossBreakdown loss(const VaeModel& model, const Eigen::MatrixXd& batch,
                   double beta, const Eigen::MatrixXd& epsilons);

/// Same tensor layout as VaeModel; gradient of `loss` w.r.t. every tensor.
struct VaeGradients {
  Eigen::MatrixXd w1, w2, w_mu, w_lv, v1, v2, v3;
  Eigen::VectorXd b1, b2, b_mu, b_lv, c1, c2, c3;
};

std::pair<LossBreakdown, VaeGradients> loss_and_gradients(
    const VaeModel& model, const Eigen::MatrixXd& batch, double beta,
    const Eigen::MatrixXd& epsilons);

/// Per-tensor Adam accumulator. beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
struct AdamState {
  Eigen::ArrayXXd m, v;
  std::int64_t t = 0;
};

void adam_step(Eigen::MatrixXd& weights, const Eigen::MatrixXd& gradients,
               AdamState& state, double learning_rate);
void adam_step(Eigen::VectorXd& weights, const Eigen::VectorXd& gradients,
               AdamState& state, double learning_rate);

struct TrainResult {
  VaeModel model;
  std::vector<LossBreakdown> trace;  // one entry per epoch (mean over steps)
};

/// Mini-batch Adam on the Eq.-style loss. Rows of S are the training set;
/// each epoch reshuffles with the config seed, short final batches are
/// kept. Throws TrainingDiverged with the offending epoch/batch when the
/// loss stops being finite. Optionally continues from `warm_start`.
TrainResult train(const Eigen::MatrixXd& S, const TrainConfig& config,
                  const VaeModel* warm_start = nullptr);

enum class LatentSampler {
  Crossover,  // BLX-alpha blend of encoded parent means
  Prior,      // z ~ N(0, I)
};

struct GenerateResult {
  Eigen::MatrixXd scores;   // n_gen x k_in
  Eigen::MatrixXd latents;  // n_gen x n_latent
};

/// Generates n_gen score rows. Crossover: encode every row of S to its mu
/// vector, draw parent pairs uniformly without replacement within a pair,
/// blend per component with t ~ U(-alpha, 1+alpha) so t = 0 reproduces
/// parent A, then decode.
GenerateResult generate(const VaeModel& model, const Eigen::MatrixXd& S,
                        int n_gen, std::uint64_t rng_seed,
                        LatentSampler sampler = LatentSampler::Crossover,
                        double alpha = 0.5);

/// Variant drawing randomness from a live RNG (used by the driver so one
/// run stream covers training and generation).
GenerateResult generate(const VaeModel& model, const Eigen::MatrixXd& S,
                        int n_gen, std::mt19937_64& rng,
                        LatentSampler sampler = LatentSampler::Crossover,
                        double alpha = 0.5);

/// Model checkpoint: layer-size manifest + tensors, little-endian doubles.
void save_vae(const std::string& path, const VaeModel& model);
VaeModel load_vae(const std::string& path);

/// CSV trace `epoch,total,rcn,kl`.
void write_loss_trace(const std::string& path,
                      const std::vector<LossBreakdown>& trace);

}  // namespace ddtd
