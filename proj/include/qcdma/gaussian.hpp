#pragma once
//
// Real covariance-matrix machinery for Gaussian states: symplectic spectra,
// von Neumann entropy, and conditioning on a homodyne outcome.
//
// Mode ordering is (x1, p1, x2, p2, ...). Mode indices in this header are
// 0-based. Variances are in shot noise units, so the vacuum has
// covariance I and every physical symplectic eigenvalue is >= 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qcdma/errors.hpp"

namespace qcdma {

using CovarianceMatrix = Eigen::MatrixXd;

/// Raw values below 1 - kSubVacuumTolerance are reported as clamped.
inline constexpr double kSubVacuumTolerance = 1e-6;
/// g(x) is taken as exactly 0 for x <= 1 + kEntropyFloor.
inline constexpr double kEntropyFloor = 1e-12;
inline constexpr double kPairingTolerance = 1e-8;

enum class Quadrature { kX = 0, kP = 1 };

struct SymplecticSpectrum {
  std::vector<double> values;  // descending
  std::vector<bool> clamped;   // raw value < 1 - kSubVacuumTolerance

  bool any_clamped() const { return std::find(clamped.begin(), clamped.end(), true) != clamped.end(); }
};

/// Omega = direct sum of [[0, 1], [-1, 0]] over n modes.
inline Eigen::MatrixXd symplectic_form(Eigen::Index n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (Eigen::Index k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

namespace detail {

inline double matrix_scale(const Eigen::MatrixXd& m) { return std::max(1.0, m.cwiseAbs().maxCoeff()); }

inline void check_covariance_shape(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0 || sigma.rows() % 2 != 0)
    throw ValidationError("covariance matrix must be square with even, non-zero dimension");
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * matrix_scale(sigma))
    throw ValidationError("covariance matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
}

// |eigenvalues| of Omega*Sigma. For positive definite Sigma = L L^T the matrix is
// similar to the antisymmetric L^T Omega L, so i L^T Omega L is Hermitian and its
// spectrum {+nu, -nu} is computed with a self-adjoint solver.
inline std::vector<double> omega_sigma_moduli(const Eigen::MatrixXd& sigma) {
  const Eigen::Index dim = sigma.rows();
  const Eigen::MatrixXd omega = symplectic_form(dim / 2);
  std::vector<double> moduli;
  moduli.reserve(static_cast<std::size_t>(dim));

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() == Eigen::Success) {
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::MatrixXd k = l.transpose() * omega * l;
    const Eigen::MatrixXcd herm = std::complex<double>(0.0, 1.0) * k.cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("Hermitian eigen-solver failed");
    for (Eigen::Index j = 0; j < dim; ++j) moduli.push_back(std::abs(solver.eigenvalues()(j)));
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(omega * sigma, false);
    if (solver.info() != Eigen::Success) throw NumericalError("eigen-solver failed on Omega*Sigma");
    for (Eigen::Index j = 0; j < dim; ++j) moduli.push_back(std::abs(solver.eigenvalues()(j)));
  }
  return moduli;
}

}  // namespace detail

/// Symplectic eigenvalues of a covariance matrix: the moduli of the spectrum
/// of Omega*Sigma, which come in equal pairs; each pair yields one value.
///
/// Values are returned raw (never clamped); `clamped` marks those that
/// entropy evaluation will treat as 1.
inline SymplecticSpectrum symplectic_eigenvalues(const CovarianceMatrix& sigma) {
  detail::check_covariance_shape(sigma);
  std::vector<double> moduli = detail::omega_sigma_moduli(sigma);
  std::sort(moduli.begin(), moduli.end(), std::greater<>());

  const double abs_floor = 1e-13 * detail::matrix_scale(sigma);
  SymplecticSpectrum spectrum;
  for (std::size_t j = 0; j + 1 < moduli.size(); j += 2) {
    const double a = moduli[j];
    const double b = moduli[j + 1];
    if (std::abs(a - b) > kPairingTolerance * std::max(a, b) + abs_floor)
      throw NumericalError("symplectic eigenvalues failed to pair: " + std::to_string(a) + " vs " +
                           std::to_string(b));
    const double nu = 0.5 * (a + b);
    spectrum.values.push_back(nu);
    spectrum.clamped.push_back(nu < 1.0 - kSubVacuumTolerance);
  }
  return spectrum;
}

/// g(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2), in bits.
/// Arguments at or below 1 (up to kEntropyFloor) give 0.
inline double g_entropy(double x) {
  if (!(x > 1.0 + kEntropyFloor)) return 0.0;
  const double plus = 0.5 * (x + 1.0);
  const double minus = 0.5 * (x - 1.0);
  return plus * std::log2(plus) - minus * std::log2(minus);
}

inline bool is_sub_vacuum(double x) { return x < 1.0 - kSubVacuumTolerance; }

inline double entropy(const SymplecticSpectrum& spectrum) {
  double s = 0.0;
  for (double nu : spectrum.values) s += g_entropy(nu);
  return s;
}

/// Von Neumann entropy in bits.
inline double von_neumann_entropy(const CovarianceMatrix& sigma) {
  return entropy(symplectic_eigenvalues(sigma));
}

/// Covariance of the remaining modes after homodyning `measured_mode` along
/// `axis`: Sigma' = Sigma_rest - c c^T / v, with c the cross-covariance column
/// of the measured quadrature and v its variance.
inline CovarianceMatrix condition_on_homodyne(const CovarianceMatrix& joint, Eigen::Index measured_mode,
                                              Quadrature axis = Quadrature::kX) {
  detail::check_covariance_shape(joint);
  const Eigen::Index modes = joint.rows() / 2;
  if (modes < 2) throw ValidationError("conditioning needs at least two modes");
  if (measured_mode < 0 || measured_mode >= modes) throw ValidationError("measured mode out of range");

  std::vector<Eigen::Index> rest;
  for (Eigen::Index k = 0; k < joint.rows(); ++k)
    if (k / 2 != measured_mode) rest.push_back(k);
  const Eigen::Index measured = 2 * measured_mode + static_cast<Eigen::Index>(axis);

  const double v = joint(measured, measured);
  if (!(v > 0.0)) throw NumericalError("degenerate homodyne measurement: measured variance is not positive");

  const auto n = static_cast<Eigen::Index>(rest.size());
  CovarianceMatrix out(n, n);
  Eigen::VectorXd c(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    c(r) = joint(rest[static_cast<std::size_t>(r)], measured);
    for (Eigen::Index s = 0; s < n; ++s)
      out(r, s) = joint(rest[static_cast<std::size_t>(r)], rest[static_cast<std::size_t>(s)]);
  }
  out.noalias() -= (c * c.transpose()) / v;
  return 0.5 * (out + out.transpose());
}

/// Direct sum of two covariance matrices.
inline CovarianceMatrix direct_sum(const CovarianceMatrix& a, const CovarianceMatrix& b) {
  CovarianceMatrix out = CovarianceMatrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

/// Row-major CSV with a header naming the quadratures in mode order.
inline void write_csv(std::ostream& os, const CovarianceMatrix& sigma) {
  const auto old_precision = os.precision(17);
  for (Eigen::Index k = 0; k < sigma.cols(); ++k) {
    if (k) os << ',';
    os << (k % 2 == 0 ? 'x' : 'p') << (k / 2 + 1);
  }
  os << '\n';
  for (Eigen::Index r = 0; r < sigma.rows(); ++r) {
    for (Eigen::Index k = 0; k < sigma.cols(); ++k) {
      if (k) os << ',';
      os << sigma(r, k);
    }
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace qcdma
