#pragma once
//
// Closed-form asymptotic secret key rate under reverse reconciliation and a
// collective entangling-cloner attack, with homodyne detection at each Bob.
//
// Eve holds two modes: N, the leakage output of the channel beam splitter,
// and E', the retained arm of her EPR pair. Their covariance matrix uses the
// mode order (x_N, p_N, x_E', p_E').

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qcdma/flags.hpp"
#include "qcdma/gaussian.hpp"
#include "qcdma/model.hpp"

namespace qcdma {

struct BobVariances {
  double total = 0.0;        // V(X_B)
  double conditional = 0.0;  // V(X_B | X_A)
};

/// Sum of the interference, Eve and demux-environment contributions to Bob_i's
/// variance, i.e. everything except the (eta/N^2) V_A_i signal term.
inline double bob_noise_variance(const SystemConfig& cfg, int user, double eta) {
  const double n = cfg.n_users;
  const double mi = cfg.correction(user);
  double interference = 0.0;
  for (int k = 1; k <= cfg.n_users; ++k)
    if (k != user) interference += mi * cfg.correction(k) * cfg.input_variance(k);
  interference *= eta / (n * n);
  const double eve = (1.0 - eta) / n * mi * cfg.eve_variance;
  const double env = mi * tree_routing(cfg.n_users, user).env_coefficient * cfg.env_variance;
  return interference + eve + env;
}

inline BobVariances bob_variances(const SystemConfig& cfg, int user) {
  cfg.check_user(user);
  const double eta = cfg.eta();
  const double n = cfg.n_users;
  const double noise = bob_noise_variance(cfg, user, eta);
  return {eta / (n * n) * cfg.input_variance(user) + noise, eta / (n * n) * cfg.preparation_variance + noise};
}

/// Shannon mutual information of one homodyne quadrature, in bits.
inline double mutual_information(const BobVariances& v) { return 0.5 * std::log2(v.total / v.conditional); }

inline double mutual_information(const SystemConfig& cfg, int user) {
  return mutual_information(bob_variances(cfg, user));
}

/// Second moments that enter Eve's covariance matrices for one user.
///
/// `xi` and `psi` are the signed covariances <X_N X_B> and <X_E' X_B>, and
/// `phi` the signed x-x covariance <X_N X_E'>, all taken from the linear
/// channel model with X_N = sqrt((1-eta)/N) sum sqrt(M_k) X_A_k - sqrt(eta) X_E
/// and EPR correlations +sqrt(W^2-1) (x) and -sqrt(W^2-1) (p).
struct EveParams {
  double ev = 0.0;    // E_V, variance of X_N
  double phi = 0.0;   // <X_N X_E'> = -sqrt(eta (W^2 - 1))
  double vt = 0.0;    // (1/N) sum M_k V_A_k
  double xi = 0.0;    // <X_N X_B>
  double psi = 0.0;   // <X_E' X_B>
  double beta = 0.0;  // V(X_B)
  double w = 1.0;     // W
};

/// Eve parameters at an arbitrary channel transmittance and Bob variance.
/// The finite-size analysis calls this with worst-case estimates.
inline EveParams eve_params_at(const SystemConfig& cfg, int user, double eta, double bob_variance) {
  cfg.check_user(user);
  const double n = cfg.n_users;
  const double mi = cfg.correction(user);
  const double w = cfg.eve_variance;
  const double epr = std::sqrt(std::max(0.0, w * w - 1.0));

  double weighted_inputs = cfg.input_variance(user);
  for (int k = 1; k <= cfg.n_users; ++k)
    if (k != user) weighted_inputs += cfg.correction(k) * cfg.input_variance(k);

  EveParams p;
  p.w = w;
  p.vt = cfg.mean_channel_input();
  p.ev = (1.0 - eta) * p.vt + eta * w;
  p.phi = -std::sqrt(eta) * epr;
  p.xi = std::sqrt(eta * (1.0 - eta) * mi / (n * n * n)) * weighted_inputs -
         std::sqrt(eta * (1.0 - eta) * mi / n) * w;
  p.psi = std::sqrt((1.0 - eta) * mi / n) * epr;
  p.beta = bob_variance;
  return p;
}

inline EveParams eve_params(const SystemConfig& cfg, int user) {
  return eve_params_at(cfg, user, cfg.eta(), bob_variances(cfg, user).total);
}

inline Eigen::Matrix4d eve_cm(const EveParams& p) {
  Eigen::Matrix4d s = Eigen::Matrix4d::Zero();
  s(0, 0) = s(1, 1) = p.ev;
  s(2, 2) = s(3, 3) = p.w;
  s(0, 2) = s(2, 0) = p.phi;
  s(1, 3) = s(3, 1) = -p.phi;
  return s;
}

/// Eve's unconditional covariance; independent of the user index.
inline Eigen::Matrix4d eve_cm(const SystemConfig& cfg) {
  return eve_cm(eve_params_at(cfg, 1, cfg.eta(), 1.0));
}

/// Eve's covariance after Bob_i homodynes x.
inline Eigen::Matrix4d eve_conditional_cm(const EveParams& p) {
  if (!(p.beta > 0.0)) throw NumericalError("degenerate Bob variance in Eve conditioning");
  Eigen::Matrix4d s = eve_cm(p);
  s(0, 0) -= p.xi * p.xi / p.beta;
  s(2, 2) -= p.psi * p.psi / p.beta;
  s(0, 2) -= p.xi * p.psi / p.beta;
  s(2, 0) = s(0, 2);
  return s;
}

inline Eigen::Matrix4d eve_conditional_cm(const SystemConfig& cfg, int user) {
  return eve_conditional_cm(eve_params(cfg, user));
}

struct EveSpectrum {
  std::array<double, 2> nu{};
  Flags flags;
};

/// nu_{1,2} = ( sqrt((E_V + W)^2 - 4 phi^2) +/- (E_V - W) ) / 2.
inline EveSpectrum eve_symplectic(const EveParams& p) {
  EveSpectrum out;
  double radicand = (p.ev + p.w) * (p.ev + p.w) - 4.0 * p.phi * p.phi;
  if (radicand < 0.0) {
    out.flags |= Flag::kNegativeRadicand;
    radicand = 0.0;
  }
  const double root = std::sqrt(radicand);
  out.nu = {0.5 * (root + (p.ev - p.w)), 0.5 * (root - (p.ev - p.w))};
  return out;
}

inline EveSpectrum eve_symplectic(const SystemConfig& cfg) {
  return eve_symplectic(eve_params_at(cfg, 1, cfg.eta(), 1.0));
}

/// Determinant-route quantities of the conditional matrix [[A, D], [D^T, B]].
struct ConditionalInvariants {
  double det_a = 0.0;
  double det_b = 0.0;
  double det_d = 0.0;
  double delta = 0.0;  // det A + det B + 2 det D
  double det = 0.0;    // det of the whole 4x4
};

inline ConditionalInvariants conditional_invariants(const EveParams& p) {
  const double b = p.beta;
  ConditionalInvariants c;
  c.det_a = p.ev * (p.ev * b - p.xi * p.xi) / b;
  c.det_b = p.w * (p.w * b - p.psi * p.psi) / b;
  c.det_d = p.phi * (p.psi * p.xi - p.phi * b) / b;
  c.delta = c.det_a + c.det_b + 2.0 * c.det_d;
  c.det = (p.w * p.ev - p.phi * p.phi) / b *
          (p.w * p.ev * b - p.w * p.xi * p.xi - p.ev * p.psi * p.psi - p.phi * p.phi * b +
           2.0 * p.phi * p.xi * p.psi);
  return c;
}

/// nu_{3,4} = sqrt((Delta +/- sqrt(Delta^2 - 4 det)) / 2); the smaller root is
/// taken as det / nu_3^2 to avoid cancellation.
inline EveSpectrum conditional_symplectic(const EveParams& p) {
  if (!(p.beta > 0.0)) throw NumericalError("degenerate Bob variance in Eve conditioning");
  const ConditionalInvariants c = conditional_invariants(p);
  EveSpectrum out;
  double radicand = c.delta * c.delta - 4.0 * c.det;
  if (radicand < 0.0) {
    if (radicand < -1e-12 * c.delta * c.delta) out.flags |= Flag::kNegativeRadicand;
    radicand = 0.0;
  }
  const double big = 0.5 * (c.delta + std::sqrt(radicand));
  double small = big > 0.0 ? c.det / big : 0.5 * (c.delta - std::sqrt(radicand));
  if (small < 0.0 || big < 0.0) {
    out.flags |= Flag::kNegativeRadicand;
    small = std::max(small, 0.0);
  }
  out.nu = {std::sqrt(std::max(big, 0.0)), std::sqrt(small)};
  return out;
}

struct HolevoResult {
  double chi = 0.0;             // S(E) - S(E | X_B), bits
  std::array<double, 4> nu{};   // nu_1, nu_2 unconditional; nu_3, nu_4 conditional (raw)
  Flags flags;
};

inline HolevoResult holevo_from_values(const std::array<double, 4>& nu, Flags flags) {
  HolevoResult h;
  h.nu = nu;
  h.flags = flags;
  if (is_sub_vacuum(nu[0]) || is_sub_vacuum(nu[1])) h.flags |= Flag::kSubVacuumEve;
  if (is_sub_vacuum(nu[2]) || is_sub_vacuum(nu[3])) h.flags |= Flag::kSubVacuumConditional;
  h.chi = g_entropy(nu[0]) + g_entropy(nu[1]) - g_entropy(nu[2]) - g_entropy(nu[3]);
  return h;
}

/// Holevo bound from the closed-form eigenvalue expressions.
inline HolevoResult holevo_closed_form(const EveParams& p) {
  const EveSpectrum e = eve_symplectic(p);
  const EveSpectrum c = conditional_symplectic(p);
  return holevo_from_values({e.nu[0], e.nu[1], c.nu[0], c.nu[1]}, e.flags | c.flags);
}

/// Holevo bound from numerical symplectic spectra of the assembled matrices.
inline HolevoResult holevo_numerical(const EveParams& p) {
  const SymplecticSpectrum e = symplectic_eigenvalues(eve_cm(p));
  const SymplecticSpectrum c = symplectic_eigenvalues(eve_conditional_cm(p));
  return holevo_from_values({e.values[0], e.values[1], c.values[0], c.values[1]}, Flags{});
}

inline HolevoResult holevo_terms(const SystemConfig& cfg, int user) {
  return holevo_closed_form(eve_params(cfg, user));
}

inline double holevo(const SystemConfig& cfg, int user) { return holevo_terms(cfg, user).chi; }

// ---------------------------------------------------------------------------

struct UserRate {
  int user = 1;
  double v_b = 0.0;
  double v_b_cond = 0.0;
  double mutual_info = 0.0;  // bits
  double holevo = 0.0;       // bits
  double rate = 0.0;         // bits per channel use
  Flags flags;
};

struct SkrBreakdown {
  std::string regime = "asymptotic";  // or "finite:<K>"
  std::vector<UserRate> per_user;
  double total_rate = 0.0;  // raw sum of per-user rates

  /// Total with negative per-user rates replaced by zero.
  double clipped_total() const {
    double t = 0.0;
    for (const auto& u : per_user) t += std::max(0.0, u.rate);
    return t;
  }

  Flags flags() const {
    Flags f;
    for (const auto& u : per_user) f |= u.flags;
    return f;
  }
};

/// Per-user rates beta_rec * I - chi and their sum.
inline SkrBreakdown skr(const SystemConfig& cfg) {
  cfg.validate();
  SkrBreakdown out;
  out.per_user.reserve(static_cast<std::size_t>(cfg.n_users));
  for (int i = 1; i <= cfg.n_users; ++i) {
    UserRate u;
    u.user = i;
    const BobVariances v = bob_variances(cfg, i);
    u.v_b = v.total;
    u.v_b_cond = v.conditional;
    u.mutual_info = mutual_information(v);
    const HolevoResult h = holevo_closed_form(eve_params_at(cfg, i, cfg.eta(), v.total));
    u.holevo = h.chi;
    u.flags = h.flags;
    u.rate = cfg.reconciliation_efficiency * u.mutual_info - u.holevo;
    if (u.rate < 0.0) u.flags |= Flag::kNegativeRate;
    out.total_rate += u.rate;
    out.per_user.push_back(u);
  }
  return out;
}

}  // namespace qcdma
