#include "ddtd/vae.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

namespace ddtd {

namespace {

// Stateless draws on top of mt19937_64: no distribution-object state to
// carry through checkpoints.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

double standard_normal(std::mt19937_64& rng) {
  // Box-Muller, spare value discarded
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

Eigen::MatrixXd glorot(Eigen::Index rows, Eigen::Index cols,
                       std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      w(i, j) = uniform_in(rng, -bound, bound);
    }
  }
  return w;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) {
  return x.cwiseMax(0.0);
}

// forward activations kept for backprop
struct Forward {
  Eigen::MatrixXd z1, a1, z2, a2, mu, lv, sd, z;
  Eigen::MatrixXd y1, d1, y2, d2, xh;
};

Forward forward_pass(const VaeModel& m, const Eigen::MatrixXd& X,
                     const Eigen::MatrixXd& E) {
  Forward f;
  f.z1 = (X * m.w1).rowwise() + m.b1.transpose();
  f.a1 = relu(f.z1);
  f.z2 = (f.a1 * m.w2).rowwise() + m.b2.transpose();
  f.a2 = relu(f.z2);
  f.mu = (f.a2 * m.w_mu).rowwise() + m.b_mu.transpose();
  f.lv = (f.a2 * m.w_lv).rowwise() + m.b_lv.transpose();
  f.sd = (0.5 * f.lv).array().exp();
  f.z = f.mu + f.sd.cwiseProduct(E);
  f.y1 = (f.z * m.v1).rowwise() + m.c1.transpose();
  f.d1 = relu(f.y1);
  f.y2 = (f.d1 * m.v2).rowwise() + m.c2.transpose();
  f.d2 = relu(f.y2);
  f.xh = (f.d2 * m.v3).rowwise() + m.c3.transpose();
  return f;
}

LossBreakdown loss_from_forward(const Forward& f, const Eigen::MatrixXd& X,
                                double beta) {
  const double b = static_cast<double>(X.rows());
  const double k = static_cast<double>(X.cols());
  LossBreakdown out;
  out.reconstruction = (f.xh - X).squaredNorm() / (b * k);
  out.kl = -0.5 *
           (1.0 + f.lv.array() - f.mu.array().square() - f.lv.array().exp())
               .sum() /
           b;
  out.total = out.reconstruction + beta * out.kl;
  return out;
}

void check_batch(const VaeModel& model, const Eigen::MatrixXd& batch,
                 const Eigen::MatrixXd& epsilons) {
  if (batch.rows() == 0) throw std::domain_error("empty batch");
  if (batch.cols() != model.arch.k_in) {
    throw std::invalid_argument("batch width != encoder input size");
  }
  if (epsilons.rows() != batch.rows() ||
      epsilons.cols() != model.arch.n_latent) {
    throw std::invalid_argument("need one epsilon row per batch row");
  }
}

}  // namespace

VaeArch default_arch(int k_in, int n_latent) {
  VaeArch arch;
  arch.k_in = k_in;
  arch.n_latent = n_latent;
  if (k_in < 100) {
    arch.hidden1 = 4 * k_in;
    arch.hidden2 = std::max(2 * n_latent, k_in);
  } else {
    arch.hidden1 = 10000;
    arch.hidden2 = 500;
  }
  return arch;
}

TrainingDiverged::TrainingDiverged(int epoch_, int batch_, LossBreakdown loss_)
    : std::runtime_error("VAE training diverged at epoch " +
                         std::to_string(epoch_) + ", batch " +
                         std::to_string(batch_) + " (total=" +
                         std::to_string(loss_.total) + ", rcn=" +
                         std::to_string(loss_.reconstruction) + ", kl=" +
                         std::to_string(loss_.kl) + ")"),
      epoch(epoch_),
      batch(batch_),
      loss(loss_) {}

VaeModel init_model(const VaeArch& arch, std::uint64_t seed) {
  if (arch.k_in < 1 || arch.hidden1 < 1 || arch.hidden2 < 1 ||
      arch.n_latent < 1) {
    throw std::domain_error("VAE layer sizes must be positive");
  }
  std::mt19937_64 rng(seed);
  VaeModel m;
  m.arch = arch;
  m.w1 = glorot(arch.k_in, arch.hidden1, rng);
  m.w2 = glorot(arch.hidden1, arch.hidden2, rng);
  m.w_mu = glorot(arch.hidden2, arch.n_latent, rng);
  m.w_lv = glorot(arch.hidden2, arch.n_latent, rng);
  m.v1 = glorot(arch.n_latent, arch.hidden2, rng);
  m.v2 = glorot(arch.hidden2, arch.hidden1, rng);
  m.v3 = glorot(arch.hidden1, arch.k_in, rng);
  m.b1 = Eigen::VectorXd::Zero(arch.hidden1);
  m.b2 = Eigen::VectorXd::Zero(arch.hidden2);
  m.b_mu = Eigen::VectorXd::Zero(arch.n_latent);
  m.b_lv = Eigen::VectorXd::Zero(arch.n_latent);
  m.c1 = Eigen::VectorXd::Zero(arch.hidden2);
  m.c2 = Eigen::VectorXd::Zero(arch.hidden1);
  m.c3 = Eigen::VectorXd::Zero(arch.k_in);
  return m;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encode(const VaeModel& model,
                                                   const Eigen::VectorXd& x) {
  if (x.size() != model.arch.k_in) {
    throw std::invalid_argument("encode: input size != k_in");
  }
  const Eigen::VectorXd a1 = relu((model.w1.transpose() * x + model.b1));
  const Eigen::VectorXd a2 = relu((model.w2.transpose() * a1 + model.b2));
  return {model.w_mu.transpose() * a2 + model.b_mu,
          model.w_lv.transpose() * a2 + model.b_lv};
}

Eigen::VectorXd reparameterize(const Eigen::VectorXd& mu,
                               const Eigen::VectorXd& log_var,
                               const Eigen::VectorXd& epsilon) {
  if (mu.size() != log_var.size() || mu.size() != epsilon.size()) {
    throw std::invalid_argument("reparameterize: length mismatch");
  }
  return mu.array() + (0.5 * log_var.array()).exp() * epsilon.array();
}

Eigen::VectorXd decode(const VaeModel& model, const Eigen::VectorXd& z) {
  if (z.size() != model.arch.n_latent) {
    throw std::invalid_argument("decode: input size != n_latent");
  }
  const Eigen::VectorXd d1 = relu((model.v1.transpose() * z + model.c1));
  const Eigen::VectorXd d2 = relu((model.v2.transpose() * d1 + model.c2));
  return model.v3.transpose() * d2 + model.c3;
}

double kl_loss(const Eigen::VectorXd& mu, const Eigen::VectorXd& log_var) {
  if (mu.size() != log_var.size()) {
    throw std::invalid_argument("kl_loss: length mismatch");
  }
  return -0.5 * (1.0 + log_var.array() - mu.array().square() -
                 log_var.array().exp())
                    .sum();
}

LossBreakdown loss(const VaeModel& model, const Eigen::MatrixXd& batch,
                   double beta, const Eigen::MatrixXd& epsilons) {
  check_batch(model, batch, epsilons);
  return loss_from_forward(forward_pass(model, batch, epsilons), batch, beta);
}

std::pair<LossBreakdown, VaeGradients> loss_and_gradients(
    const VaeModel& model, const Eigen::MatrixXd& batch, double beta,
    const Eigen::MatrixXd& epsilons) {
  check_batch(model, batch, epsilons);
  const Forward f = forward_pass(model, batch, epsilons);
  const LossBreakdown lb = loss_from_forward(f, batch, beta);
  const double b = static_cast<double>(batch.rows());
  const double k = static_cast<double>(batch.cols());

  VaeGradients g;
  // decoder
  const Eigen::MatrixXd g_xh = 2.0 * (f.xh - batch) / (b * k);
  g.v3 = f.d2.transpose() * g_xh;
  g.c3 = g_xh.colwise().sum();
  Eigen::MatrixXd g_y2 =
      (g_xh * model.v3.transpose()).cwiseProduct((f.y2.array() > 0.0).cast<double>().matrix());
  g.v2 = f.d1.transpose() * g_y2;
  g.c2 = g_y2.colwise().sum();
  Eigen::MatrixXd g_y1 =
      (g_y2 * model.v2.transpose()).cwiseProduct((f.y1.array() > 0.0).cast<double>().matrix());
  g.v1 = f.z.transpose() * g_y1;
  g.c1 = g_y1.colwise().sum();
  const Eigen::MatrixXd g_z = g_y1 * model.v1.transpose();

  // latent heads: reparameterized path plus the KL term
  const Eigen::MatrixXd g_mu = g_z + (beta / b) * f.mu;
  const Eigen::MatrixXd g_lv =
      g_z.cwiseProduct(0.5 * f.sd.cwiseProduct(epsilons)) +
      (beta / (2.0 * b)) * (f.lv.array().exp() - 1.0).matrix();
  g.w_mu = f.a2.transpose() * g_mu;
  g.b_mu = g_mu.colwise().sum();
  g.w_lv = f.a2.transpose() * g_lv;
  g.b_lv = g_lv.colwise().sum();

  // encoder trunk
  Eigen::MatrixXd g_z2 =
      (g_mu * model.w_mu.transpose() + g_lv * model.w_lv.transpose())
          .cwiseProduct((f.z2.array() > 0.0).cast<double>().matrix());
  g.w2 = f.a1.transpose() * g_z2;
  g.b2 = g_z2.colwise().sum();
  Eigen::MatrixXd g_z1 =
      (g_z2 * model.w2.transpose()).cwiseProduct((f.z1.array() > 0.0).cast<double>().matrix());
  g.w1 = batch.transpose() * g_z1;
  g.b1 = g_z1.colwise().sum();
  return {lb, std::move(g)};
}

namespace {

void adam_update(Eigen::Map<Eigen::ArrayXd> w,
                 Eigen::Map<const Eigen::ArrayXd> grad, AdamState& state,
                 double lr) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  if (state.t == 0) {
    state.m = Eigen::ArrayXXd::Zero(w.size(), 1);
    state.v = Eigen::ArrayXXd::Zero(w.size(), 1);
  }
  ++state.t;
  Eigen::Map<Eigen::ArrayXd> m(state.m.data(), state.m.size());
  Eigen::Map<Eigen::ArrayXd> v(state.v.data(), state.v.size());
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad.square();
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  w -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
}

}  // namespace

void adam_step(Eigen::MatrixXd& weights, const Eigen::MatrixXd& gradients,
               AdamState& state, double learning_rate) {
  if (weights.rows() != gradients.rows() ||
      weights.cols() != gradients.cols()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  adam_update(Eigen::Map<Eigen::ArrayXd>(weights.data(), weights.size()),
              Eigen::Map<const Eigen::ArrayXd>(gradients.data(),
                                               gradients.size()),
              state, learning_rate);
}

void adam_step(Eigen::VectorXd& weights, const Eigen::VectorXd& gradients,
               AdamState& state, double learning_rate) {
  if (weights.size() != gradients.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  adam_update(Eigen::Map<Eigen::ArrayXd>(weights.data(), weights.size()),
              Eigen::Map<const Eigen::ArrayXd>(gradients.data(),
                                               gradients.size()),
              state, learning_rate);
}

TrainResult train(const Eigen::MatrixXd& S, const TrainConfig& config,
                  const VaeModel* warm_start) {
  const int m = static_cast<int>(S.rows());
  if (config.batch_size < 1 || config.epochs < 1 || config.n_latent < 1 ||
      !(config.learning_rate > 0.0) || config.beta < 0.0) {
    throw std::domain_error("invalid training configuration");
  }
  if (m < config.batch_size) {
    throw std::domain_error("batch size exceeds training-set size");
  }

  VaeArch arch = default_arch(static_cast<int>(S.cols()), config.n_latent);
  if (config.hidden1 > 0) arch.hidden1 = config.hidden1;
  if (config.hidden2 > 0) arch.hidden2 = config.hidden2;

  std::mt19937_64 rng(config.rng_seed);
  TrainResult result;
  if (warm_start != nullptr) {
    if (warm_start->arch.k_in != arch.k_in ||
        warm_start->arch.n_latent != arch.n_latent) {
      throw std::invalid_argument("warm start has incompatible architecture");
    }
    result.model = *warm_start;
    arch = result.model.arch;
  } else {
    result.model = init_model(arch, rng());
  }
  VaeModel& model = result.model;

  // one Adam accumulator per tensor, fixed order
  std::vector<AdamState> states(14);
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown epoch_loss;
    int steps = 0;
    for (int start = 0; start < m; start += config.batch_size) {
      const int rows = std::min(config.batch_size, m - start);
      Eigen::MatrixXd batch(rows, S.cols());
      for (int r = 0; r < rows; ++r) batch.row(r) = S.row(order[start + r]);
      Eigen::MatrixXd eps(rows, arch.n_latent);
      for (int r = 0; r < rows; ++r) {
        for (int j = 0; j < arch.n_latent; ++j) eps(r, j) = standard_normal(rng);
      }

      auto [lb, grads] = loss_and_gradients(model, batch, config.beta, eps);
      if (!std::isfinite(lb.total)) {
        throw TrainingDiverged(epoch, start / config.batch_size, lb);
      }
      const double lr = config.learning_rate;
      adam_step(model.w1, grads.w1, states[0], lr);
      adam_step(model.b1, grads.b1, states[1], lr);
      adam_step(model.w2, grads.w2, states[2], lr);
      adam_step(model.b2, grads.b2, states[3], lr);
      adam_step(model.w_mu, grads.w_mu, states[4], lr);
      adam_step(model.b_mu, grads.b_mu, states[5], lr);
      adam_step(model.w_lv, grads.w_lv, states[6], lr);
      adam_step(model.b_lv, grads.b_lv, states[7], lr);
      adam_step(model.v1, grads.v1, states[8], lr);
      adam_step(model.c1, grads.c1, states[9], lr);
      adam_step(model.v2, grads.v2, states[10], lr);
      adam_step(model.c2, grads.c2, states[11], lr);
      adam_step(model.v3, grads.v3, states[12], lr);
      adam_step(model.c3, grads.c3, states[13], lr);

      epoch_loss.total += lb.total;
      epoch_loss.reconstruction += lb.reconstruction;
      epoch_loss.kl += lb.kl;
      ++steps;
    }
    epoch_loss.total /= steps;
    epoch_loss.reconstruction /= steps;
    epoch_loss.kl /= steps;
    result.trace.push_back(epoch_loss);
  }
  return result;
}

GenerateResult generate(const VaeModel& model, const Eigen::MatrixXd& S,
                        int n_gen, std::uint64_t rng_seed,
                        LatentSampler sampler, double alpha) {
  std::mt19937_64 rng(rng_seed);
  return generate(model, S, n_gen, rng, sampler, alpha);
}

GenerateResult generate(const VaeModel& model, const Eigen::MatrixXd& S,
                        int n_gen, std::mt19937_64& rng,
                        LatentSampler sampler, double alpha) {
  if (n_gen < 1) throw std::domain_error("n_gen must be >= 1");
  const int m = static_cast<int>(S.rows());
  const int nl = model.arch.n_latent;

  Eigen::MatrixXd mus(m, nl);
  if (sampler == LatentSampler::Crossover) {
    if (m < 1) throw std::domain_error("crossover needs at least one row");
    for (int i = 0; i < m; ++i) {
      mus.row(i) = encode(model, S.row(i).transpose()).first.transpose();
    }
  }

  GenerateResult out;
  out.scores.resize(n_gen, model.arch.k_in);
  out.latents.resize(n_gen, nl);
  for (int g = 0; g < n_gen; ++g) {
    Eigen::VectorXd z(nl);
    if (sampler == LatentSampler::Prior) {
      for (int j = 0; j < nl; ++j) {
        z[j] = standard_normal(rng);
      }
    } else {
      int a = static_cast<int>(rng() % static_cast<std::uint64_t>(m));
      int b = a;
      if (m > 1) {
        b = static_cast<int>(rng() % static_cast<std::uint64_t>(m - 1));
        if (b >= a) ++b;
      }
      for (int j = 0; j < nl; ++j) {
        const double t = -alpha + (1.0 + 2.0 * alpha) * uniform01(rng);
        z[j] = mus(a, j) + t * (mus(b, j) - mus(a, j));
      }
    }
    out.latents.row(g) = z.transpose();
    out.scores.row(g) = decode(model, z).transpose();
  }
  return out;
}

namespace {

constexpr char kVaeMagic[8] = {'D', 'D', 'T', 'D', 'V', 'A', 'E', '\n'};

void write_tensor(std::ofstream& out, const Eigen::MatrixXd& t) {
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * 8));
}
void write_tensor(std::ofstream& out, const Eigen::VectorXd& t) {
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * 8));
}
void read_tensor(std::ifstream& in, Eigen::MatrixXd& t) {
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size() * 8));
}
void read_tensor(std::ifstream& in, Eigen::VectorXd& t) {
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(t.size() * 8));
}

}  // namespace

void save_vae(const std::string& path, const VaeModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(kVaeMagic, 8);
  const std::int32_t sizes[4] = {model.arch.k_in, model.arch.hidden1,
                                 model.arch.hidden2, model.arch.n_latent};
  out.write(reinterpret_cast<const char*>(sizes), sizeof(sizes));
  write_tensor(out, model.w1);
  write_tensor(out, model.b1);
  write_tensor(out, model.w2);
  write_tensor(out, model.b2);
  write_tensor(out, model.w_mu);
  write_tensor(out, model.b_mu);
  write_tensor(out, model.w_lv);
  write_tensor(out, model.b_lv);
  write_tensor(out, model.v1);
  write_tensor(out, model.c1);
  write_tensor(out, model.v2);
  write_tensor(out, model.c2);
  write_tensor(out, model.v3);
  write_tensor(out, model.c3);
  if (!out) throw std::runtime_error("write failed: " + path);
}

VaeModel load_vae(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kVaeMagic, 8) != 0) {
    throw std::runtime_error(path + ": not a VAE checkpoint");
  }
  std::int32_t sizes[4];
  in.read(reinterpret_cast<char*>(sizes), sizeof(sizes));
  if (!in) throw std::runtime_error(path + ": truncated header");
  VaeArch arch{sizes[0], sizes[1], sizes[2], sizes[3]};
  VaeModel m = init_model(arch, 0);
  read_tensor(in, m.w1);
  read_tensor(in, m.b1);
  read_tensor(in, m.w2);
  read_tensor(in, m.b2);
  read_tensor(in, m.w_mu);
  read_tensor(in, m.b_mu);
  read_tensor(in, m.w_lv);
  read_tensor(in, m.b_lv);
  read_tensor(in, m.v1);
  read_tensor(in, m.c1);
  read_tensor(in, m.v2);
  read_tensor(in, m.c2);
  read_tensor(in, m.v3);
  read_tensor(in, m.c3);
  if (!in) throw std::runtime_error(path + ": truncated payload");
  return m;
}

void write_loss_trace(const std::string& path,
                      const std::vector<LossBreakdown>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "epoch,total,rcn,kl\n";
  char buf[96];
  for (size_t e = 0; e < trace.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", e,
                  trace[e].total, trace[e].reconstruction, trace[e].kl);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace ddtd
