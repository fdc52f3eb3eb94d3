#include "ddtd/pca.hpp"

#include <doctest.h>

#include <filesystem>
#include <random>

using namespace ddtd;

namespace {

Eigen::MatrixXd random_matrix(int m, int n, std::mt19937_64& rng) {
  Eigen::MatrixXd X(m, n);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      X(i, j) = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    }
  }
  return X;
}

double max_abs(const Eigen::MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("center removes column means and returns them") {
  Eigen::MatrixXd X(2, 2);
  X << 1, 1, 3, 3;
  const auto [Xc, mean] = center(X);
  CHECK(mean[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(mean[1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(Xc(0, 0) == doctest::Approx(-1.0));
  CHECK(Xc(1, 1) == doctest::Approx(1.0));

  Eigen::MatrixXd Y(2, 2);
  Y << 0, 0, 2, 0;
  const auto [Yc, ymean] = center(Y);
  CHECK(ymean[0] == doctest::Approx(1.0));
  CHECK(ymean[1] == 0.0);
  CHECK(Yc(0, 0) == doctest::Approx(-1.0));
  CHECK(Yc(1, 0) == doctest::Approx(1.0));

  // identical rows center to the zero matrix
  Eigen::MatrixXd Z(3, 4);
  Z.rowwise() = Eigen::RowVector4d(1, 2, 3, 4);
  CHECK(max_abs(center(Z).first) == 0.0);

  CHECK_THROWS_AS(center(Eigen::MatrixXd::Zero(1, 3)), std::domain_error);
}

TEST_CASE("fit on a two-point set reproduces the hand SVD") {
  Eigen::MatrixXd X(2, 2);
  X << 0, 0, 2, 0;
  const PcaFit f = fit(X);
  REQUIRE(f.model.k == 1);
  // sign convention: largest coefficient entry positive
  CHECK(f.model.coefficients(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.model.coefficients(1, 0) == doctest::Approx(0.0));
  CHECK(f.scores(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(f.scores(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.model.singular_values[0] ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("round-trip restore(fit scores) reproduces the data") {
  std::mt19937_64 rng(5);
  for (const auto [m, n] :
       {std::pair{6, 4}, std::pair{20, 300}, std::pair{50, 50}}) {
    const Eigen::MatrixXd X = random_matrix(m, n, rng);
    const PcaFit f = fit(X);
    CHECK(max_abs(restore(f.model, f.scores) - X) < 1e-8);
    CHECK(f.model.k <= m - 1);  // centering removes one rank
  }
}

TEST_CASE("coefficients are orthonormal, singular values nonincreasing") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 3 + static_cast<int>(rng() % 30);
    const int n = 2 + static_cast<int>(rng() % 200);
    const PcaFit f = fit(random_matrix(m, n, rng));
    const Eigen::MatrixXd gram =
        f.model.coefficients.transpose() * f.model.coefficients;
    CHECK(max_abs(gram - Eigen::MatrixXd::Identity(f.model.k, f.model.k)) <
          1e-10);
    for (int j = 1; j < f.model.k; ++j) {
      CHECK(f.model.singular_values[j] <= f.model.singular_values[j - 1]);
      CHECK(f.model.singular_values[j] >= 0.0);
    }
    // score columns have zero mean: centering commutes with projection
    CHECK(f.scores.colwise().mean().cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("truncated reconstruction error matches the singular tail") {
  std::mt19937_64 rng(13);
  const Eigen::MatrixXd X = random_matrix(24, 40, rng);
  const PcaFit full = fit(X);
  const auto [Xc, mean] = center(X);
  for (int k : {1, 5, 10}) {
    const PcaFit trunc = fit(X, k);
    REQUIRE(trunc.model.k == k);
    const double err2 =
        (trunc.scores * trunc.model.coefficients.transpose() - Xc)
            .squaredNorm();
    double tail = 0.0;
    for (int j = k; j < full.model.k; ++j) {
      tail += full.model.singular_values[j] * full.model.singular_values[j];
    }
    CHECK(err2 == doctest::Approx(tail).epsilon(1e-6));
  }
}

TEST_CASE("transform projects onto the fitted basis") {
  std::mt19937_64 rng(17);
  const Eigen::MatrixXd X = random_matrix(12, 30, rng);
  const PcaFit f = fit(X);

  // training data reproduces the fit scores
  CHECK(max_abs(transform(f.model, X) - f.scores) < 1e-8);

  // the mean row projects to zero
  Eigen::MatrixXd mean_row = f.model.mean.transpose();
  CHECK(max_abs(transform(f.model, mean_row)) < 1e-10);

  // mean + column j of C projects to e_j
  for (int j : {0, f.model.k - 1}) {
    Eigen::MatrixXd row =
        (f.model.mean + f.model.coefficients.col(j)).transpose();
    Eigen::MatrixXd score = transform(f.model, row);
    for (int i = 0; i < f.model.k; ++i) {
      CHECK(score(0, i) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
    }
  }

  CHECK_THROWS_AS(transform(f.model, Eigen::MatrixXd::Zero(2, 7)),
                  std::invalid_argument);
}

TEST_CASE("restore is affine in the scores") {
  std::mt19937_64 rng(21);
  const Eigen::MatrixXd X = random_matrix(10, 25, rng);
  const PcaFit f = fit(X);
  const Eigen::MatrixXd S1 = random_matrix(4, f.model.k, rng);
  const Eigen::MatrixXd S2 = random_matrix(4, f.model.k, rng);
  const double alpha = 0.3;
  const Eigen::MatrixXd lhs = restore(f.model, alpha * S1 + (1 - alpha) * S2);
  const Eigen::MatrixXd rhs =
      alpha * restore(f.model, S1) + (1 - alpha) * restore(f.model, S2);
  CHECK(max_abs(lhs - rhs) < 1e-8);

  // zero scores restore the mean field
  const Eigen::MatrixXd from_zero =
      restore(f.model, Eigen::MatrixXd::Zero(1, f.model.k));
  CHECK(max_abs(from_zero.row(0).transpose() - f.model.mean) < 1e-10);

  // doubling a score row doubles its centered part
  const Eigen::MatrixXd twice = restore(f.model, 2.0 * f.scores.row(0));
  const Eigen::MatrixXd expected =
      (f.model.mean + 2.0 * (X.row(0).transpose() - f.model.mean)).transpose();
  CHECK(max_abs(twice - expected) < 1e-8);

  CHECK_THROWS_AS(restore(f.model, Eigen::MatrixXd::Zero(2, f.model.k + 1)),
                  std::invalid_argument);
}

TEST_CASE("gram route and direct SVD agree") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::MatrixXd X = random_matrix(50, 200, rng);
    const PcaFit a = fit(X, -1, PcaRoute::Gram);
    const PcaFit b = fit(X, -1, PcaRoute::DirectSvd);
    REQUIRE(a.model.k == b.model.k);
    const double scale = std::max(1.0, a.model.singular_values[0]);
    CHECK(max_abs(a.model.singular_values - b.model.singular_values) <
          1e-8 * scale);
    CHECK(max_abs(a.model.coefficients - b.model.coefficients) < 1e-8);
    CHECK(max_abs(a.scores - b.scores) < 1e-8 * scale);
  }
}

TEST_CASE("degenerate all-identical input flags k = 0") {
  Eigen::MatrixXd X(4, 6);
  X.rowwise() = Eigen::RowVectorXd::Constant(6, 0.25);
  const PcaFit f = fit(X);
  CHECK(f.model.degenerate);
  CHECK(f.model.k == 0);
  CHECK(f.scores.cols() == 0);
}

TEST_CASE("pca checkpoint round-trips") {
  std::mt19937_64 rng(29);
  const PcaFit f = fit(random_matrix(8, 20, rng));
  const auto path =
      (std::filesystem::temp_directory_path() / "ddtd_pca.bin").string();
  save_pca(path, f.model);
  const PcaModel back = load_pca(path);
  CHECK(back.k == f.model.k);
  CHECK(back.training_rows == f.model.training_rows);
  CHECK(max_abs(back.mean - f.model.mean) == 0.0);
  CHECK(max_abs(back.singular_values - f.model.singular_values) == 0.0);
  CHECK(max_abs(back.coefficients - f.model.coefficients) == 0.0);
}
