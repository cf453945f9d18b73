#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qcdma/gaussian.hpp"

using namespace qcdma;

namespace {

Eigen::MatrixXd tmsv(double w, double phi) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(4, 4);
  s.diagonal().setConstant(w);
  s(0, 2) = s(2, 0) = phi;
  s(1, 3) = s(3, 1) = -phi;
  return s;
}

// Phase rotation on mode k of an n-mode system.
Eigen::MatrixXd rotation(int n, int k, double theta) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  s(2 * k, 2 * k) = std::cos(theta);
  s(2 * k, 2 * k + 1) = std::sin(theta);
  s(2 * k + 1, 2 * k) = -std::sin(theta);
  s(2 * k + 1, 2 * k + 1) = std::cos(theta);
  return s;
}

// Beam splitter with transmissivity t between modes a and b.
Eigen::MatrixXd beam_splitter(int n, int a, int b, double t) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  const double c = std::sqrt(t);
  const double r = std::sqrt(1.0 - t);
  for (int q = 0; q < 2; ++q) {
    s(2 * a + q, 2 * a + q) = c;
    s(2 * a + q, 2 * b + q) = r;
    s(2 * b + q, 2 * a + q) = -r;
    s(2 * b + q, 2 * b + q) = c;
  }
  return s;
}

// Random physical state: thermal modes with random symplectic mixing.
Eigen::MatrixXd random_state(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int k = 0; k < 2 * n; ++k) s(k, k) = 1.0 + 5.0 * u(rng);
  for (int k = 0; k < n; ++k) s(2 * k + 1, 2 * k + 1) = s(2 * k, 2 * k);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) {
    const double r = 0.8 * u(rng);
    sq(2 * k, 2 * k) = std::exp(r);
    sq(2 * k + 1, 2 * k + 1) = std::exp(-r);
  }
  Eigen::MatrixXd m = sq;
  for (int k = 0; k + 1 < n; ++k) m = beam_splitter(n, k, k + 1, u(rng)) * rotation(n, k, 6.0 * u(rng)) * m;
  return m * s * m.transpose();
}

}  // namespace

TEST(Symplectic, DiagonalModes) {
  Eigen::MatrixXd s = Eigen::Vector4d(2, 2, 5, 5).asDiagonal();
  const auto sp = symplectic_eigenvalues(s);
  ASSERT_EQ(sp.values.size(), 2u);
  EXPECT_NEAR(sp.values[0], 5.0, 1e-12);
  EXPECT_NEAR(sp.values[1], 2.0, 1e-12);
  EXPECT_FALSE(sp.any_clamped());
}

TEST(Symplectic, PureTmsv) {
  const auto sp = symplectic_eigenvalues(tmsv(3.0, std::sqrt(8.0)));
  EXPECT_NEAR(sp.values[0], 1.0, 1e-10);
  EXPECT_NEAR(sp.values[1], 1.0, 1e-10);
  EXPECT_NEAR(von_neumann_entropy(tmsv(3.0, std::sqrt(8.0))), 0.0, 1e-9);
}

TEST(Symplectic, EveStateAgainstClosedForm) {
  const double ev = 4.0, w = 2.0, eta = 0.5;
  const double phi = std::sqrt(eta * (w * w - 1.0));
  Eigen::MatrixXd s = tmsv(w, phi);
  s(0, 0) = s(1, 1) = ev;
  const double root = std::sqrt((ev + w) * (ev + w) - 4.0 * phi * phi);
  const auto sp = symplectic_eigenvalues(s);
  EXPECT_NEAR(sp.values[0], 0.5 * (root + (ev - w)), 1e-10);
  EXPECT_NEAR(sp.values[1], 0.5 * (root - (ev - w)), 1e-10);
}

TEST(Symplectic, SubVacuumIsFlaggedNotRejected) {
  Eigen::MatrixXd s = Eigen::Vector4d(0.5, 0.5, 3, 3).asDiagonal();
  const auto sp = symplectic_eigenvalues(s);
  EXPECT_NEAR(sp.values[1], 0.5, 1e-12);
  EXPECT_TRUE(sp.clamped[1]);
  EXPECT_FALSE(sp.clamped[0]);
  EXPECT_NEAR(entropy(sp), 2.0, 1e-12);
}

TEST(Symplectic, RejectsAsymmetricAndOddInput) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(4, 4);
  s(0, 1) = 0.1;
  EXPECT_THROW(symplectic_eigenvalues(s), ValidationError);
  EXPECT_THROW(symplectic_eigenvalues(Eigen::MatrixXd::Identity(3, 3)), ValidationError);
}

TEST(Symplectic, InvariantUnderSymplecticMaps) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    const Eigen::MatrixXd s = random_state(rng, n);
    const auto before = symplectic_eigenvalues(s);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2 * n, 2 * n);
    for (int k = 0; k < n; ++k) m = rotation(n, k, 6.3 * u(rng)) * m;
    m = beam_splitter(n, 0, n - 1, u(rng)) * m;
    EXPECT_LT((m * symplectic_form(n) * m.transpose() - symplectic_form(n)).cwiseAbs().maxCoeff(), 1e-12);
    const auto after = symplectic_eigenvalues(m * s * m.transpose());
    for (int k = 0; k < n; ++k) EXPECT_NEAR(after.values[k], before.values[k], 1e-9 * before.values[k]);
  }
}

TEST(Entropy, GFunctionValues) {
  EXPECT_EQ(g_entropy(1.0), 0.0);
  EXPECT_EQ(g_entropy(0.3), 0.0);
  EXPECT_NEAR(g_entropy(3.0), 2.0, 1e-12);
  EXPECT_NEAR(g_entropy(7.0), 3.24511249783653145564, 1e-12);
  const double big = 1e6;
  EXPECT_NEAR(g_entropy(big), std::log2(big * std::exp(1.0) / 2.0), 1e-4 * g_entropy(big));
  EXPECT_NEAR(g_entropy(big), 20.3742636102128970, 1e-9);
}

TEST(Entropy, GIsContinuousAndIncreasing) {
  EXPECT_LT(g_entropy(1.0 + 1e-9), 1e-7);
  double prev = 0.0;
  for (double x = 1.0 + 1e-6; x < 50.0; x *= 1.1) {
    const double g = g_entropy(x);
    EXPECT_GT(g, prev);
    prev = g;
  }
}

TEST(Entropy, SubVacuumThreshold) {
  EXPECT_FALSE(is_sub_vacuum(1.0));
  EXPECT_FALSE(is_sub_vacuum(1.0 - 5e-7));
  EXPECT_TRUE(is_sub_vacuum(1.0 - 2e-6));
}

TEST(Entropy, SingleModeAndAdditivity) {
  Eigen::MatrixXd one = Eigen::Vector2d(3, 3).asDiagonal();
  EXPECT_NEAR(von_neumann_entropy(one), 2.0, 1e-12);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const Eigen::MatrixXd a = random_state(rng, 2);
    const Eigen::MatrixXd b = random_state(rng, 3);
    EXPECT_NEAR(von_neumann_entropy(direct_sum(a, b)), von_neumann_entropy(a) + von_neumann_entropy(b), 1e-10);
  }
}

TEST(Entropy, EveStateAtUnitW) {
  const double ev = 6.5;
  Eigen::MatrixXd s = tmsv(1.0, 0.0);
  s(0, 0) = s(1, 1) = ev;
  EXPECT_NEAR(von_neumann_entropy(s), g_entropy(ev), 1e-12);
}

TEST(Homodyne, UncorrelatedIsUnchanged) {
  Eigen::MatrixXd s = Eigen::Vector4d(2, 3, 4, 5).asDiagonal();
  const Eigen::MatrixXd c = condition_on_homodyne(s, 0, Quadrature::kX);
  EXPECT_LT((c - Eigen::Vector2d(4, 5).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Homodyne, RankOneUpdate) {
  const double v = 3.0, c = 1.2;
  Eigen::MatrixXd s = Eigen::Vector4d(v, v, 2.0, 2.0).asDiagonal();
  s(0, 2) = s(2, 0) = c;
  s(1, 3) = s(3, 1) = -0.7;
  const Eigen::MatrixXd out = condition_on_homodyne(s, 0, Quadrature::kX);
  EXPECT_NEAR(out(0, 0), 2.0 - c * c / v, 1e-15);
  EXPECT_NEAR(out(1, 1), 2.0, 1e-15);

  const Eigen::MatrixXd outp = condition_on_homodyne(s, 0, Quadrature::kP);
  EXPECT_NEAR(outp(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(outp(1, 1), 2.0 - 0.49 / v, 1e-15);
}

TEST(Homodyne, ConditioningOnlyShrinks) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const Eigen::MatrixXd s = random_state(rng, 3);
    const Eigen::MatrixXd out = condition_on_homodyne(s, 1, Quadrature::kX);
    Eigen::MatrixXd rest(4, 4);
    const int idx[4] = {0, 1, 4, 5};
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) rest(r, c) = s(idx[r], idx[c]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rest - out);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(Homodyne, DegenerateMeasurement) {
  Eigen::MatrixXd s = Eigen::Vector4d(0.0, 1.0, 2.0, 2.0).asDiagonal();
  EXPECT_THROW(condition_on_homodyne(s, 0, Quadrature::kX), NumericalError);
}

TEST(CovarianceCsv, HeaderAndDigits) {
  Eigen::MatrixXd s = Eigen::Vector4d(1.0 / 3.0, 1, 2, 2).asDiagonal();
  std::ostringstream os;
  write_csv(os, s);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "x1,p1,x2,p2");
  EXPECT_NE(text.find("0.33333333333333331"), std::string::npos);
}
