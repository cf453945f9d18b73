#pragma once
//
// Finite-size key rate: the privacy-amplification/smoothing penalty Delta(n),
// worst-case parameter estimates from m disclosed samples, and a Monte Carlo
// harness for the maximum-likelihood estimators behind them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qcdma/asymptotic.hpp"
#include "qcdma/errors.hpp"
#include "qcdma/model.hpp"

namespace qcdma {

struct FiniteSizeConfig {
  std::uint64_t block_length = 2;  // K
  std::uint64_t n_key = 1;         // n, signals kept for the key
  std::uint64_t m_pe = 1;          // m = K - n, disclosed for estimation
  double eps_smooth = 1e-10;
  double eps_pa = 1e-10;
  double eps_pe = 1e-10;
  double eta_floor = 1e-12;  // eta_min is never allowed below this

  /// n = m = K/2 (m takes the odd remainder).
  static FiniteSizeConfig balanced(std::uint64_t block_length) {
    FiniteSizeConfig fs;
    fs.block_length = block_length;
    fs.n_key = block_length / 2;
    fs.m_pe = block_length - fs.n_key;
    return fs;
  }

  double key_fraction() const { return static_cast<double>(n_key) / static_cast<double>(block_length); }

  void validate() const {
    using detail::require;
    require(n_key >= 1 && m_pe >= 1, "finite_size: n_key and m_pe must both be >= 1");
    require(n_key + m_pe == block_length, "finite_size: n_key + m_pe must equal block_length");
    require(eps_smooth > 0.0 && eps_smooth < 1.0, "finite_size.eps_smooth: must lie in (0, 1)");
    require(eps_pa > 0.0 && eps_pa < 1.0, "finite_size.eps_pa: must lie in (0, 1)");
    require(eps_pe > 0.0 && eps_pe <= 1.0, "finite_size.eps_pe: must lie in (0, 1]");
    require(eta_floor > 0.0, "finite_size.eta_floor: must be > 0");
  }
};

/// Delta(n) = 7 sqrt(log2(2/eps_smooth) / n) + (2/n) log2(1/eps_pa), for a
/// two-dimensional raw-key Hilbert space (2 dim + 3 = 7).
inline double finite_correction(double n, double eps_smooth, double eps_pa) {
  detail::require(n >= 1.0, "finite_correction: n must be >= 1");
  detail::require(eps_smooth > 0.0 && eps_smooth < 1.0, "finite_correction: eps_smooth must lie in (0, 1)");
  detail::require(eps_pa > 0.0 && eps_pa < 1.0, "finite_correction: eps_pa must lie in (0, 1)");
  constexpr double kHilbertDim = 2.0;
  return (2.0 * kHilbertDim + 3.0) * std::sqrt(std::log2(2.0 / eps_smooth) / n) +
         2.0 / n * std::log2(1.0 / eps_pa);
}

/// w = sqrt(2 ln(1/eps_pe)).
inline double confidence_w(double eps_pe) {
  detail::require(eps_pe > 0.0 && eps_pe <= 1.0, "confidence_w: eps_pe must lie in (0, 1]");
  return std::sqrt(2.0 * std::log(1.0 / eps_pe));
}

/// Noise variance of the per-user linear model X_B = sqrt(eta/N^2) X_A + z.
inline double sigma2_user(const SystemConfig& cfg, int user) {
  cfg.check_user(user);
  return bob_noise_variance(cfg, user, cfg.eta());
}

struct WorstCaseParams {
  double eta_min = 0.0;
  double sigma2_max = 0.0;
  double w = 0.0;
  bool block_too_small = false;  // eta_min was at or below the floor before clamping
};

/// Lower confidence bound on eta and upper bound on the noise variance from
/// m estimation samples.
inline WorstCaseParams worst_case_params(const SystemConfig& cfg, int user, const FiniteSizeConfig& fs) {
  cfg.check_user(user);
  fs.validate();
  const double eta = cfg.eta();
  const double n = cfg.n_users;
  const double m = static_cast<double>(fs.m_pe);
  const double s2 = sigma2_user(cfg, user);
  const double signal = eta / (n * n) * cfg.input_variance(user);

  WorstCaseParams wc;
  wc.w = confidence_w(fs.eps_pe);
  wc.eta_min = eta - 2.0 * wc.w * eta / std::sqrt(m) * std::sqrt(2.0 + s2 / signal);
  if (wc.eta_min <= fs.eta_floor) {
    wc.block_too_small = true;
    wc.eta_min = fs.eta_floor;
  }
  wc.sigma2_max = s2 * (1.0 + wc.w * std::sqrt(2.0 / m));
  return wc;
}

/// Eve parameters evaluated at the worst-case estimates; one transmittance
/// (eta_min) is used throughout, and Bob's variance is
/// (eta_min/N^2) V_A + sigma2_max.
inline EveParams worst_case_eve_params(const SystemConfig& cfg, int user, const WorstCaseParams& wc) {
  const double n = cfg.n_users;
  const double beta = wc.eta_min / (n * n) * cfg.input_variance(user) + wc.sigma2_max;
  return eve_params_at(cfg, user, wc.eta_min, beta);
}

inline HolevoResult worst_case_holevo_terms(const SystemConfig& cfg, int user, const FiniteSizeConfig& fs) {
  const WorstCaseParams wc = worst_case_params(cfg, user, fs);
  HolevoResult h = holevo_closed_form(worst_case_eve_params(cfg, user, wc));
  if (wc.block_too_small) h.flags |= Flag::kBlockTooSmall;
  return h;
}

inline double worst_case_holevo(const SystemConfig& cfg, int user, const FiniteSizeConfig& fs) {
  return worst_case_holevo_terms(cfg, user, fs).chi;
}

struct FiniteOptions {
  /// Evaluate I at the worst-case estimates instead of the nominal parameters.
  bool worst_case_mi = false;
};

/// Per-user rates (n/K)(beta_rec I - chi_PE - Delta(n)).
inline SkrBreakdown finite_skr(const SystemConfig& cfg, const FiniteSizeConfig& fs, FiniteOptions options = {}) {
  cfg.validate();
  fs.validate();
  const double n_users = cfg.n_users;
  const double delta = finite_correction(static_cast<double>(fs.n_key), fs.eps_smooth, fs.eps_pa);
  SkrBreakdown out;
  out.regime = "finite:" + std::to_string(fs.block_length);
  for (int i = 1; i <= cfg.n_users; ++i) {
    const WorstCaseParams wc = worst_case_params(cfg, i, fs);
    const EveParams p = worst_case_eve_params(cfg, i, wc);
    const HolevoResult h = holevo_closed_form(p);

    UserRate u;
    u.user = i;
    if (options.worst_case_mi) {
      u.v_b = p.beta;
      u.v_b_cond = wc.eta_min / (n_users * n_users) * cfg.preparation_variance + wc.sigma2_max;
    } else {
      const BobVariances v = bob_variances(cfg, i);
      u.v_b = v.total;
      u.v_b_cond = v.conditional;
    }
    u.mutual_info = mutual_information(BobVariances{u.v_b, u.v_b_cond});
    u.holevo = h.chi;
    u.flags = h.flags;
    if (wc.block_too_small) u.flags |= Flag::kBlockTooSmall;
    u.rate = fs.key_fraction() * (cfg.reconciliation_efficiency * u.mutual_info - u.holevo - delta);
    if (u.rate < 0.0) u.flags |= Flag::kNegativeRate;
    out.total_rate += u.rate;
    out.per_user.push_back(u);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameter-estimation statistics

struct PeSampleSet {
  std::vector<double> x_a;
  std::vector<double> x_b;
  double eta_eff = 0.0;
  double sigma2_true = 0.0;
  double v_a = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return x_a.size(); }
};

/// m draws of X_A ~ N(0, V_A) and X_B = sqrt(eta_eff) X_A + z, z ~ N(0, sigma2).
/// Bit-identical for a given seed.
inline PeSampleSet simulate_pe(double eta_eff, double sigma2_true, double v_a, std::size_t m, std::uint64_t seed) {
  detail::require(m >= 2, "simulate_pe: need m >= 2 samples");
  detail::require(eta_eff >= 0.0, "simulate_pe: eta_eff must be >= 0");
  detail::require(sigma2_true >= 0.0 && std::isfinite(sigma2_true), "simulate_pe: sigma2 must be >= 0");
  detail::require(v_a > 0.0 && std::isfinite(v_a), "simulate_pe: V_A must be > 0");
  PeSampleSet s{{}, {}, eta_eff, sigma2_true, v_a, seed};
  s.x_a.resize(m);
  s.x_b.resize(m);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  const double amp_a = std::sqrt(v_a);
  const double amp_z = std::sqrt(sigma2_true);
  const double gain = std::sqrt(eta_eff);
  for (std::size_t l = 0; l < m; ++l) {
    const double xa = amp_a * unit(rng);
    const double z = amp_z * unit(rng);
    s.x_a[l] = xa;
    s.x_b[l] = gain * xa + z;
  }
  return s;
}

/// eta_hat = (C_hat / V_A)^2 with C_hat = (1/m) sum x_A x_B.
inline double mle_eta(const PeSampleSet& s, double v_a) {
  detail::require(!s.x_a.empty() && s.x_a.size() == s.x_b.size(), "mle_eta: empty or mismatched sample set");
  detail::require(v_a > 0.0, "mle_eta: V_A must be > 0");
  double c = 0.0;
  for (std::size_t l = 0; l < s.size(); ++l) c += s.x_a[l] * s.x_b[l];
  c /= static_cast<double>(s.size());
  const double r = c / v_a;
  return r * r;
}

/// sigma2_hat = (1/m) sum (x_B - sqrt(eta_hat) x_A)^2.
inline double mle_sigma2(const PeSampleSet& s, double eta_hat) {
  detail::require(!s.x_a.empty() && s.x_a.size() == s.x_b.size(), "mle_sigma2: empty or mismatched sample set");
  detail::require(eta_hat >= 0.0, "mle_sigma2: eta_hat must be >= 0");
  const double gain = std::sqrt(eta_hat);
  double acc = 0.0;
  for (std::size_t l = 0; l < s.size(); ++l) {
    const double r = s.x_b[l] - gain * s.x_a[l];
    acc += r * r;
  }
  return acc / static_cast<double>(s.size());
}

/// Large-m variance of eta_hat: (4 eta^2 / m)(2 + sigma2 / (eta V_A)).
inline double eta_estimator_variance(double eta, double sigma2, double v_a, double m) {
  return 4.0 * eta * eta / m * (2.0 + sigma2 / (eta * v_a));
}

/// Variance of sigma2_hat: 2 sigma^4 / m.
inline double sigma2_estimator_variance(double sigma2, double m) { return 2.0 * sigma2 * sigma2 / m; }

struct PeMonteCarloSpec {
  double eta_eff = 0.1;
  double sigma2 = 2.0;
  double v_a = 100.0;
  std::size_t m = 10000;
  std::size_t trials = 2000;
  std::uint64_t seed = 1;
  double eps_pe_tail = 0.05;  // eps used for the lower-tail check
};

struct PeTrial {
  std::size_t trial = 0;
  double eta_hat = 0.0;
  double sigma2_hat = 0.0;
};

/// Acceptance tolerances of the estimator checks.
struct PeTolerances {
  double mean_eta_standard_errors = 3.0;
  double var_eta_relative = 0.10;
  double mean_sigma2_relative = 0.01;
  double var_sigma2_relative = 0.10;
};

struct PeMonteCarloSummary {
  PeMonteCarloSpec spec;
  std::vector<PeTrial> trials;

  double mean_eta = 0.0;
  double var_eta = 0.0;  // unbiased sample variance across trials
  double se_mean_eta = 0.0;
  double target_var_eta = 0.0;
  double mean_sigma2 = 0.0;
  double var_sigma2 = 0.0;
  double target_var_sigma2 = 0.0;
  double w = 0.0;
  double tail_threshold = 0.0;  // eta - w sigma_eta
  double tail_fraction = 0.0;

  bool pass_mean_eta = false;
  bool pass_var_eta = false;
  bool pass_mean_sigma2 = false;
  bool pass_var_sigma2 = false;
  bool pass_tail = false;

  bool passed() const { return pass_mean_eta && pass_var_eta && pass_mean_sigma2 && pass_var_sigma2 && pass_tail; }
};

/// Repeats simulate/estimate `trials` times with seeds seed + t and compares
/// the empirical estimator moments against their closed forms.
inline PeMonteCarloSummary pe_montecarlo(const PeMonteCarloSpec& spec, const PeTolerances& tol = {}) {
  detail::require(spec.trials >= 100, "pe-mc: trials must be >= 100 for meaningful statistics");
  detail::require(spec.m >= 2, "pe-mc: m must be >= 2");
  detail::require(spec.eta_eff > 0.0, "pe-mc: eta_eff must be > 0");
  PeMonteCarloSummary s;
  s.spec = spec;
  s.trials.reserve(spec.trials);
  for (std::size_t t = 0; t < spec.trials; ++t) {
    const PeSampleSet samples = simulate_pe(spec.eta_eff, spec.sigma2, spec.v_a, spec.m, spec.seed + t);
    const double eta_hat = mle_eta(samples, spec.v_a);
    s.trials.push_back({t, eta_hat, mle_sigma2(samples, eta_hat)});
  }

  const double count = static_cast<double>(spec.trials);
  const double m = static_cast<double>(spec.m);
  for (const auto& t : s.trials) {
    s.mean_eta += t.eta_hat;
    s.mean_sigma2 += t.sigma2_hat;
  }
  s.mean_eta /= count;
  s.mean_sigma2 /= count;
  for (const auto& t : s.trials) {
    s.var_eta += (t.eta_hat - s.mean_eta) * (t.eta_hat - s.mean_eta);
    s.var_sigma2 += (t.sigma2_hat - s.mean_sigma2) * (t.sigma2_hat - s.mean_sigma2);
  }
  s.var_eta /= count - 1.0;
  s.var_sigma2 /= count - 1.0;
  s.se_mean_eta = std::sqrt(s.var_eta / count);

  s.target_var_eta = eta_estimator_variance(spec.eta_eff, spec.sigma2, spec.v_a, m);
  s.target_var_sigma2 = sigma2_estimator_variance(spec.sigma2, m);
  s.w = confidence_w(spec.eps_pe_tail);
  s.tail_threshold = spec.eta_eff - s.w * std::sqrt(s.target_var_eta);
  const auto below = std::count_if(s.trials.begin(), s.trials.end(),
                                   [&](const PeTrial& t) { return t.eta_hat < s.tail_threshold; });
  s.tail_fraction = static_cast<double>(below) / count;

  s.pass_mean_eta = std::abs(s.mean_eta - spec.eta_eff) <= tol.mean_eta_standard_errors * s.se_mean_eta;
  s.pass_var_eta = std::abs(s.var_eta - s.target_var_eta) <= tol.var_eta_relative * s.target_var_eta;
  s.pass_mean_sigma2 = std::abs(s.mean_sigma2 - spec.sigma2) <= tol.mean_sigma2_relative * spec.sigma2;
  s.pass_var_sigma2 =
      std::abs(s.var_sigma2 - s.target_var_sigma2) <= tol.var_sigma2_relative * s.target_var_sigma2;
  s.pass_tail = s.tail_fraction <= spec.eps_pe_tail;
  return s;
}

/// Monte Carlo spec for user i of a q-CDMA scenario: eta_eff = eta/N^2,
/// sigma2 = sigma2_user, V_A = V_A_i.
inline PeMonteCarloSpec pe_spec_for_user(const SystemConfig& cfg, int user, std::size_t m, std::size_t trials,
                                         std::uint64_t seed) {
  cfg.validate();
  cfg.check_user(user);
  const double n = cfg.n_users;
  PeMonteCarloSpec spec;
  spec.eta_eff = cfg.eta() / (n * n);
  spec.sigma2 = sigma2_user(cfg, user);
  spec.v_a = cfg.input_variance(user);
  spec.m = m;
  spec.trials = trials;
  spec.seed = seed;
  return spec;
}

}  // namespace qcdma
