#include "ddtd/pca.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <utility>

namespace ddtd {

namespace {

constexpr double kRankTol = 1e-10;   // relative numerical-rank threshold
constexpr double kGramFloor = 1e-6;  // smallest resolvable sigma, Gram route

// Flip every coefficient column so its largest-magnitude entry is positive;
// score columns flip with them. Removes the SVD sign ambiguity.
void fix_signs(Eigen::MatrixXd& C, Eigen::MatrixXd& S) {
  for (Eigen::Index j = 0; j < C.cols(); ++j) {
    Eigen::Index at = 0;
    C.col(j).cwiseAbs().maxCoeff(&at);
    if (C(at, j) < 0.0) {
      C.col(j) = -C.col(j);
      S.col(j) = -S.col(j);
    }
  }
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::VectorXd> center(const Eigen::MatrixXd& X) {
  if (X.rows() < 2) {
    throw std::domain_error("PCA needs at least two rows");
  }
  const Eigen::VectorXd mean = X.colwise().mean();
  Eigen::MatrixXd Xc = X.rowwise() - mean.transpose();
  return {std::move(Xc), mean};
}

PcaFit fit(const Eigen::MatrixXd& X, int k, PcaRoute route) {
  auto [Xc, mean] = center(X);
  const Eigen::Index m = Xc.rows();
  const Eigen::Index n = Xc.cols();

  if (route == PcaRoute::Auto) {
    route = n >= 4 * m ? PcaRoute::Gram : PcaRoute::DirectSvd;
  }

  Eigen::VectorXd sigma;  // nonincreasing
  Eigen::MatrixXd C;      // n x (candidate count)
  if (route == PcaRoute::DirectSvd) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(
        Xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    sigma = svd.singularValues();
    C = svd.matrixV();
  } else {
    const Eigen::MatrixXd gram = Xc * Xc.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) {
      throw std::runtime_error("Gram eigendecomposition failed");
    }
    // eigenvalues come back ascending; walk them in reverse
    const Eigen::Index total = eig.eigenvalues().size();
    const double lambda_max = std::max(eig.eigenvalues()(total - 1), 0.0);
    const double floor = kGramFloor * kGramFloor * lambda_max;
    Eigen::Index count = 0;
    while (count < total && eig.eigenvalues()(total - 1 - count) > floor) {
      ++count;
    }
    sigma.resize(count);
    C.resize(n, count);
    for (Eigen::Index j = 0; j < count; ++j) {
      const Eigen::Index src = total - 1 - j;
      sigma[j] = std::sqrt(eig.eigenvalues()(src));
      C.col(j) = Xc.transpose() * eig.eigenvectors().col(src);
      C.col(j) /= C.col(j).norm();
    }
  }

  // numerical rank: components with sigma above kRankTol of the largest
  const double sigma_max = sigma.size() > 0 ? sigma[0] : 0.0;
  Eigen::Index available = 0;
  while (available < sigma.size() &&
         sigma[available] > kRankTol * sigma_max && sigma[available] > 0.0) {
    ++available;
  }
  Eigen::Index keep = available;
  if (k >= 0) keep = std::min<Eigen::Index>(k, available);

  PcaFit out;
  out.model.mean = std::move(mean);
  out.model.training_rows = m;
  out.model.k = static_cast<int>(keep);
  out.model.degenerate = available == 0;
  out.model.coefficients = C.leftCols(keep);
  out.model.singular_values = sigma.head(keep);
  out.scores = Xc * out.model.coefficients;
  fix_signs(out.model.coefficients, out.scores);
  return out;
}

Eigen::MatrixXd transform(const PcaModel& model,
                          const Eigen::MatrixXd& X_new) {
  if (X_new.cols() != model.mean.size()) {
    throw std::invalid_argument("transform: column count mismatch");
  }
  return (X_new.rowwise() - model.mean.transpose()) * model.coefficients;
}

Eigen::MatrixXd restore(const PcaModel& model, const Eigen::MatrixXd& S) {
  if (S.cols() != model.k) {
    throw std::invalid_argument("restore: score column count mismatch");
  }
  Eigen::MatrixXd X = S * model.coefficients.transpose();
  X.rowwise() += model.mean.transpose();
  return X;
}

namespace {
constexpr char kPcaMagic[8] = {'D', 'D', 'T', 'D', 'P', 'C', 'A', '\n'};
}

void save_pca(const std::string& path, const PcaModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(kPcaMagic, 8);
  const std::uint64_t m = static_cast<std::uint64_t>(model.training_rows);
  const std::uint64_t n = static_cast<std::uint64_t>(model.mean.size());
  const std::uint64_t k = static_cast<std::uint64_t>(model.k);
  out.write(reinterpret_cast<const char*>(&m), 8);
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&k), 8);
  out.write(reinterpret_cast<const char*>(model.mean.data()),
            static_cast<std::streamsize>(n * 8));
  out.write(reinterpret_cast<const char*>(model.singular_values.data()),
            static_cast<std::streamsize>(k * 8));
  out.write(reinterpret_cast<const char*>(model.coefficients.data()),
            static_cast<std::streamsize>(n * k * 8));
  if (!out) throw std::runtime_error("write failed: " + path);
}

PcaModel load_pca(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kPcaMagic, 8) != 0) {
    throw std::runtime_error(path + ": not a PCA checkpoint");
  }
  std::uint64_t m = 0, n = 0, k = 0;
  in.read(reinterpret_cast<char*>(&m), 8);
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&k), 8);
  if (!in) throw std::runtime_error(path + ": truncated header");
  PcaModel model;
  model.training_rows = static_cast<std::int64_t>(m);
  model.k = static_cast<int>(k);
  model.degenerate = k == 0;
  model.mean.resize(static_cast<Eigen::Index>(n));
  model.singular_values.resize(static_cast<Eigen::Index>(k));
  model.coefficients.resize(static_cast<Eigen::Index>(n),
                            static_cast<Eigen::Index>(k));
  in.read(reinterpret_cast<char*>(model.mean.data()),
          static_cast<std::streamsize>(n * 8));
  in.read(reinterpret_cast<char*>(model.singular_values.data()),
          static_cast<std::streamsize>(k * 8));
  in.read(reinterpret_cast<char*>(model.coefficients.data()),
          static_cast<std::streamsize>(n * k * 8));
  if (!in) throw std::runtime_error(path + ": truncated payload");
  return model;
}

}  // namespace ddtd
