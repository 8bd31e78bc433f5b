#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "frfnet/linalg.hpp"

using namespace frfnet;

namespace {

Eigen::MatrixXd random_symmetric(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i) a(i, j) = a(j, i) = u(rng);
  return a;
}

// roots of t^3 + b t^2 + c t + d with three real roots, descending
std::array<double, 3> cubic_roots(double b, double c, double d) {
  const double p = c - b * b / 3.0;
  const double q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
  const double r = 2.0 * std::sqrt(-p / 3.0);
  const double phi = std::acos(std::clamp(3.0 * q / (p * r), -1.0, 1.0)) / 3.0;
  std::array<double, 3> t{};
  for (int k = 0; k < 3; ++k) t[k] = r * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) - b / 3.0;
  std::sort(t.begin(), t.end(), std::greater<>());
  return t;
}

}  // namespace

TEST(Covariance, ConstantColumnsGiveZero) {
  Eigen::MatrixXd x(4, 2);
  x << 1, 5, 1, 5, 1, 5, 1, 5;
  EXPECT_EQ(covariance(x), Eigen::MatrixXd::Zero(2, 2));
}

TEST(Covariance, TwoPointHandCase) {
  Eigen::MatrixXd x(2, 2);
  x << 0, 0, 2, 0;
  Eigen::Matrix2d expected;
  expected << 2, 0, 0, 0;
  EXPECT_TRUE(covariance(x).isApprox(expected, 1e-15));
}

TEST(Covariance, MatchesDoubleLoop) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 2.0);
  Eigen::MatrixXd x(5, 3);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = n(rng);
  const Eigen::MatrixXd cov = covariance(x);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double ma = 0, mb = 0;
      for (int i = 0; i < 5; ++i) ma += x(i, a), mb += x(i, b);
      ma /= 5, mb /= 5;
      double s = 0;
      for (int i = 0; i < 5; ++i) s += (x(i, a) - ma) * (x(i, b) - mb);
      EXPECT_NEAR(cov(a, b), s / 4.0, 1e-12);
    }
}

TEST(Covariance, NeedsTwoSamples) { EXPECT_THROW(covariance(Eigen::MatrixXd::Ones(1, 3)), ContractError); }

TEST(EigSym, DiagonalCase) {
  const Eigen::Matrix2d a = Eigen::Vector2d(1, 4).asDiagonal();
  const auto eig = eig_sym(a);
  EXPECT_DOUBLE_EQ(eig.values(0), 4.0);
  EXPECT_DOUBLE_EQ(eig.values(1), 1.0);
  EXPECT_TRUE(eig.vectors.col(0).isApprox(Eigen::Vector2d(0, 1)));
  EXPECT_TRUE(eig.vectors.col(1).isApprox(Eigen::Vector2d(1, 0)));
}

TEST(EigSym, TwoByTwoCharacteristicPolynomial) {
  Eigen::Matrix2d a;
  a << 2, -1, -1, 2;
  auto eig = eig_sym(a);
  EXPECT_NEAR(eig.values(0), 3.0, 1e-9);
  EXPECT_NEAR(eig.values(1), 1.0, 1e-9);

  for (unsigned seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd m = random_symmetric(2, seed);
    const double tr = m.trace(), det = m.determinant();
    const double disc = std::sqrt(tr * tr / 4.0 - det);
    eig = eig_sym(m);
    EXPECT_NEAR(eig.values(0), tr / 2.0 + disc, 1e-9);
    EXPECT_NEAR(eig.values(1), tr / 2.0 - disc, 1e-9);
  }
}

TEST(EigSym, ThreeByThreeCharacteristicPolynomial) {
  for (unsigned seed = 100; seed < 120; ++seed) {
    const Eigen::MatrixXd m = random_symmetric(3, seed);
    // det(tI - A) = t^3 - tr t^2 + c2 t - det
    const double tr = m.trace();
    const double c2 = m(0, 0) * m(1, 1) + m(0, 0) * m(2, 2) + m(1, 1) * m(2, 2) - m(0, 1) * m(0, 1) -
                      m(0, 2) * m(0, 2) - m(1, 2) * m(1, 2);
    const auto roots = cubic_roots(-tr, c2, -m.determinant());
    const auto eig = eig_sym(m);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(eig.values(k), roots[k], 1e-9) << "seed " << seed;
  }
}

TEST(EigSym, ResidualsAndOrthonormality) {
  for (unsigned seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd a = random_symmetric(6, seed);
    const auto eig = eig_sym(a);
    EXPECT_LT(max_eigen_residual(a, eig), 1e-8 * a.norm());
    EXPECT_TRUE((eig.vectors.transpose() * eig.vectors).isIdentity(1e-12));
    for (int k = 1; k < 6; ++k) EXPECT_GE(eig.values(k - 1), eig.values(k));
  }
}

TEST(EigSym, AgreesWithEigenSolver) {
  const Eigen::MatrixXd a = random_symmetric(40, 11);
  const auto eig = eig_sym(a);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
  const Eigen::VectorXd expected = ref.eigenvalues().reverse();
  EXPECT_LT((eig.values - expected).cwiseAbs().maxCoeff(), 1e-11);
}

TEST(EigSym, LongDoubleOracle) {
  const Eigen::MatrixXd a = random_symmetric(8, 3);
  const auto d = eig_sym(a);
  const auto ld = eig_sym(MatrixX<long double>(a.cast<long double>()));
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(d.values(k), static_cast<double>(ld.values(k)), 1e-13);
}

TEST(EigSym, SweepCapRaises) {
  const Eigen::MatrixXd a = random_symmetric(10, 5);
  EXPECT_THROW(eig_sym(a, JacobiOptions{1e-12, 1}), ConvergenceError);
}

TEST(EigSym, RejectsNonSymmetric) {
  Eigen::Matrix2d a;
  a << 1, 2, 3, 4;
  EXPECT_THROW(eig_sym(a), ContractError);
  EXPECT_THROW(eig_sym(Eigen::MatrixXd::Ones(2, 3)), ContractError);
}
