#pragma once

#include <Eigen/Core>

#include <string>

namespace ddtd {

/// PCA of a row-per-sample data matrix. Maps centered rows to score rows
/// via the orthonormal coefficient matrix: scores = (X - mean) * C,
/// restored rows = S * C^T + mean.
struct PcaModel {
  Eigen::VectorXd mean;             // column means, length n
  Eigen::MatrixXd coefficients;     // n x k, orthonormal columns
  Eigen::VectorXd singular_values;  // length k, nonincreasing
  int k = 0;
  std::int64_t training_rows = 0;
  bool degenerate = false;  // all rows identical; k == 0
};

struct PcaFit {
  PcaModel model;
  Eigen::MatrixXd scores;  // m x k
};

enum class PcaRoute {
  Auto,       // Gram when n >= 4 m, direct SVD otherwise
  Gram,       // eigendecomposition of the m x m matrix Xc * Xc^T
  DirectSvd,  // thin SVD of the centered matrix
};

/// Subtracts column means. Throws std::domain_error when X has fewer than
/// two rows.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> center(const Eigen::MatrixXd& X);

/// Fits the principal-component basis of X. k = -1 keeps every component
/// whose singular value clears the numerical-rank threshold; an explicit k
/// is capped at that count. Column signs are fixed so the largest-magnitude
/// entry of each coefficient column is positive.
///
/// The Gram route cannot resolve singular values below ~1e-6 of the largest
/// (they fall under the noise floor of the squared spectrum), so it drops
/// them regardless of k.
PcaFit fit(const Eigen::MatrixXd& X, int k = -1,
           PcaRoute route = PcaRoute::Auto);

/// Projects new rows onto an existing basis: (X_new - mean) * C.
Eigen::MatrixXd transform(const PcaModel& model, const Eigen::MatrixXd& X_new);

/// Restores score rows to data space: S * C^T + mean. Output is not
/// clamped to [0, 1]; normalization is a separate step.
Eigen::MatrixXd restore(const PcaModel& model, const Eigen::MatrixXd& S);

/// Binary checkpoint: header (m, n, k) + mean + singular values + C,
/// little-endian 64-bit floats.
void save_pca(const std::string& path, const PcaModel& model);
PcaModel load_pca(const std::string& path);

}  // namespace ddtd
