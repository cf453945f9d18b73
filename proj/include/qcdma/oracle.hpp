#pragma once
//
// Brute-force validation path. The joint covariance of (Bob_i, N, E') is
// assembled as L * Sigma_in * L^T from the per-input linear coefficients and
// independent input covariances; every derived quantity is then obtained
// numerically through gaussian.hpp. Nothing here evaluates the closed-form
// variance, Xi/Psi, or eigenvalue expressions of asymptotic.hpp.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qcdma/asymptotic.hpp"
#include "qcdma/gaussian.hpp"
#include "qcdma/model.hpp"

namespace qcdma {

struct OracleOptions {
  std::optional<double> eta;            // replaces the configured transmittance
  std::optional<double> bob_variance;   // pads Bob's x/p variance with uncorrelated noise up to this value
};

/// Input modes and linear map of the joint Gaussian model for one user.
///
/// Input modes: S_k and O_k for each user k (modulation with variance V_S_k,
/// preparation noise with variance V_0; A_k = S_k + O_k), Eve's EPR pair
/// (E, E'), and the demux environment mode BS. Output modes, in order:
/// S_i (Alice's modulation, kept for classical conditioning), B_i, N, E'.
struct JointModel {
  Eigen::MatrixXd input_covariance;  // 2 * n_inputs square
  Eigen::MatrixXd map;               // real coefficients, n_outputs x n_inputs (per quadrature)
  double bob_padding = 0.0;

  static constexpr Eigen::Index kAliceMode = 0;
  static constexpr Eigen::Index kBobMode = 1;
  static constexpr Eigen::Index kLeakageMode = 2;
  static constexpr Eigen::Index kRetainedMode = 3;

  /// Full 8x8 output covariance over (S_i, B_i, N, E').
  Eigen::MatrixXd output_covariance() const {
    const Eigen::Index outs = map.rows();
    const Eigen::Index ins = map.cols();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(2 * outs, 2 * ins);
    for (Eigen::Index a = 0; a < outs; ++a)
      for (Eigen::Index b = 0; b < ins; ++b) {
        l(2 * a, 2 * b) = map(a, b);
        l(2 * a + 1, 2 * b + 1) = map(a, b);
      }
    Eigen::MatrixXd out = l * input_covariance * l.transpose();
    out(2 * kBobMode, 2 * kBobMode) += bob_padding;
    out(2 * kBobMode + 1, 2 * kBobMode + 1) += bob_padding;
    return 0.5 * (out + out.transpose());
  }
};

inline JointModel build_joint_model(const SystemConfig& cfg_in, int user, const OracleOptions& options = {}) {
  SystemConfig cfg = cfg_in;
  if (options.eta) cfg.channel = Transmittance{*options.eta};
  cfg.validate();
  const QuadratureModel qm = quadrature_model(cfg, user);

  const Eigen::Index n = cfg.n_users;
  // Input mode layout: S_1..S_N, O_1..O_N, E, E', BS.
  const Eigen::Index in_e = 2 * n;
  const Eigen::Index in_eprime = 2 * n + 1;
  const Eigen::Index in_bs = 2 * n + 2;
  const Eigen::Index n_inputs = 2 * n + 3;

  JointModel jm;
  jm.input_covariance = Eigen::MatrixXd::Zero(2 * n_inputs, 2 * n_inputs);
  auto set_var = [&](Eigen::Index mode, double v) {
    jm.input_covariance(2 * mode, 2 * mode) = v;
    jm.input_covariance(2 * mode + 1, 2 * mode + 1) = v;
  };
  for (Eigen::Index k = 0; k < n; ++k) {
    set_var(k, cfg.modulation(static_cast<int>(k + 1)));
    set_var(n + k, cfg.preparation_variance);
  }
  const double w = cfg.eve_variance;
  const double epr = std::sqrt(std::max(0.0, w * w - 1.0));
  set_var(in_e, w);
  set_var(in_eprime, w);
  jm.input_covariance(2 * in_e, 2 * in_eprime) = jm.input_covariance(2 * in_eprime, 2 * in_e) = epr;
  jm.input_covariance(2 * in_e + 1, 2 * in_eprime + 1) = jm.input_covariance(2 * in_eprime + 1, 2 * in_e + 1) = -epr;
  set_var(in_bs, cfg.env_variance);

  jm.map = Eigen::MatrixXd::Zero(4, n_inputs);
  const Eigen::Index i = user - 1;
  jm.map(JointModel::kAliceMode, i) = 1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double bob_coeff = k == i ? qm.signal_coeff : qm.interference_coeffs[static_cast<std::size_t>(k)];
    jm.map(JointModel::kBobMode, k) = bob_coeff;
    jm.map(JointModel::kBobMode, n + k) = bob_coeff;
    jm.map(JointModel::kLeakageMode, k) = qm.leakage_user_coeffs[static_cast<std::size_t>(k)];
    jm.map(JointModel::kLeakageMode, n + k) = qm.leakage_user_coeffs[static_cast<std::size_t>(k)];
  }
  jm.map(JointModel::kBobMode, in_e) = qm.eve_coeff;
  jm.map(JointModel::kBobMode, in_bs) = qm.env_coeff_amplitude;
  jm.map(JointModel::kLeakageMode, in_e) = qm.leakage_eve_coeff;
  jm.map(JointModel::kRetainedMode, in_eprime) = 1.0;

  if (options.bob_variance) {
    const Eigen::MatrixXd unpadded = jm.output_covariance();
    jm.bob_padding = *options.bob_variance - unpadded(2 * JointModel::kBobMode, 2 * JointModel::kBobMode);
  }
  return jm;
}

/// 6x6 covariance over (B_i, N, E').
inline CovarianceMatrix joint_covariance(const SystemConfig& cfg, int user, const OracleOptions& options = {}) {
  return build_joint_model(cfg, user, options).output_covariance().bottomRightCorner(6, 6);
}

struct OracleValues {
  double v_b = 0.0;
  double v_b_cond = 0.0;
  double xi = 0.0;   // <X_N X_B>
  double psi = 0.0;  // <X_E' X_B>
  double phi = 0.0;  // <X_N X_E'>
  CovarianceMatrix eve;              // 4x4 (N, E')
  CovarianceMatrix eve_conditional;  // 4x4 after homodyne on x_B
  SymplecticSpectrum eve_spectrum;
  SymplecticSpectrum conditional_spectrum;
  double chi = 0.0;
};

inline OracleValues oracle_values(const SystemConfig& cfg, int user, const OracleOptions& options = {}) {
  const JointModel jm = build_joint_model(cfg, user, options);
  const CovarianceMatrix full = jm.output_covariance();
  const CovarianceMatrix bne = full.bottomRightCorner(6, 6);

  OracleValues o;
  o.v_b = bne(0, 0);
  o.xi = bne(0, 2);
  o.psi = bne(0, 4);
  o.phi = bne(2, 4);
  if (full(0, 0) > 0.0) {
    const CovarianceMatrix given_alice = condition_on_homodyne(full, JointModel::kAliceMode, Quadrature::kX);
    o.v_b_cond = given_alice(0, 0);
  } else {
    o.v_b_cond = o.v_b;
  }
  o.eve = bne.bottomRightCorner(4, 4);
  o.eve_conditional = condition_on_homodyne(bne, 0, Quadrature::kX);
  o.eve_spectrum = symplectic_eigenvalues(o.eve);
  o.conditional_spectrum = symplectic_eigenvalues(o.eve_conditional);
  o.chi = entropy(o.eve_spectrum) - entropy(o.conditional_spectrum);
  return o;
}

/// Holevo bound S(N, E') - S(N, E' | x_B) computed entirely numerically.
inline double oracle_holevo(const SystemConfig& cfg, int user, const OracleOptions& options = {}) {
  return oracle_values(cfg, user, options).chi;
}

// ---------------------------------------------------------------------------
// Closed form vs oracle comparison

struct RandomConfigRanges {
  std::vector<int> n_users{2, 4, 8, 16};
  double m_lo = 0.0, m_hi = 1.0;
  double eta_lo = 1e-3, eta_hi = 1.0;  // sampled log-uniformly
  double vs_lo = 1.0, vs_hi = 1e3;
  double w_lo = 1.0, w_hi = 5.0;
  double sigma_lo = 0.5, sigma_hi = 2.0;
};

/// Draws independent per-user M and V_S; V_0 = 1.
inline SystemConfig random_config(std::mt19937_64& rng, const RandomConfigRanges& r = {}) {
  std::uniform_int_distribution<std::size_t> pick(0, r.n_users.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  SystemConfig cfg;
  cfg.n_users = r.n_users[pick(rng)];
  cfg.modulation_variance.clear();
  cfg.correction_factor.clear();
  for (int k = 0; k < cfg.n_users; ++k) {
    cfg.correction_factor.push_back(between(r.m_lo, r.m_hi));
    cfg.modulation_variance.push_back(between(r.vs_lo, r.vs_hi));
  }
  cfg.preparation_variance = 1.0;
  cfg.channel = Transmittance{std::exp(between(std::log(r.eta_lo), std::log(r.eta_hi)))};
  cfg.eve_variance = between(r.w_lo, r.w_hi);
  cfg.env_variance = between(r.sigma_lo, r.sigma_hi);
  return cfg;
}

struct OracleThresholds {
  double variance_rel = 1e-10;     // V_B, V_B|A
  double correlation_rel = 1e-10;  // Xi, Psi, relative to max(1, |value|)
  double nu_rel = 1e-8;            // nu_1..nu_4
  double chi_abs = 1e-9;
};

struct DeviationRecord {
  std::size_t case_index = 0;
  int user = 0;
  std::string quantity;
  double closed = 0.0;
  double oracle = 0.0;
  double deviation = 0.0;  // in the metric of the quantity's threshold
  double threshold = 0.0;
};

struct QuantityStats {
  std::string quantity;
  double max_deviation = 0.0;
  double threshold = 0.0;
  std::size_t failures = 0;
};

struct DeviationReport {
  std::size_t n_cases = 0;
  std::size_t n_evaluations = 0;  // (case, user) pairs
  std::vector<QuantityStats> stats;
  std::vector<DeviationRecord> worst;  // highest deviation/threshold ratios
  std::size_t xi_sign_mismatches = 0;
  /// Largest |chi_oracle - chi| when Xi is given the opposite sign; large
  /// values for W > 1 show the comparison is sign sensitive.
  double flipped_xi_chi_max_dev = 0.0;

  bool passed() const {
    return std::all_of(stats.begin(), stats.end(), [](const QuantityStats& s) { return s.failures == 0; }) &&
           xi_sign_mismatches == 0;
  }
};

inline DeviationReport compare_report(const std::vector<SystemConfig>& batch, const OracleThresholds& th = {},
                                      std::size_t keep_worst = 10) {
  DeviationReport report;
  report.n_cases = batch.size();
  report.stats = {{"V_B", 0, th.variance_rel, 0},   {"V_B_cond", 0, th.variance_rel, 0},
                  {"Xi", 0, th.correlation_rel, 0}, {"Psi", 0, th.correlation_rel, 0},
                  {"nu1", 0, th.nu_rel, 0},         {"nu2", 0, th.nu_rel, 0},
                  {"nu3", 0, th.nu_rel, 0},         {"nu4", 0, th.nu_rel, 0},
                  {"chi", 0, th.chi_abs, 0}};
  std::vector<DeviationRecord> all;

  auto rel = [](double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
  };
  auto corr = [](double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); };

  for (std::size_t c = 0; c < batch.size(); ++c) {
    const SystemConfig& cfg = batch[c];
    for (int i = 1; i <= cfg.n_users; ++i) {
      ++report.n_evaluations;
      const BobVariances bv = bob_variances(cfg, i);
      const EveParams p = eve_params(cfg, i);
      const HolevoResult h = holevo_closed_form(p);
      const OracleValues o = oracle_values(cfg, i);

      std::array<double, 2> closed_e{h.nu[0], h.nu[1]};
      std::array<double, 2> closed_c{h.nu[2], h.nu[3]};
      std::sort(closed_e.begin(), closed_e.end(), std::greater<>());
      std::sort(closed_c.begin(), closed_c.end(), std::greater<>());

      const std::array<std::pair<double, double>, 9> pairs{{
          {bv.total, o.v_b},
          {bv.conditional, o.v_b_cond},
          {p.xi, o.xi},
          {p.psi, o.psi},
          {closed_e[0], o.eve_spectrum.values[0]},
          {closed_e[1], o.eve_spectrum.values[1]},
          {closed_c[0], o.conditional_spectrum.values[0]},
          {closed_c[1], o.conditional_spectrum.values[1]},
          {h.chi, o.chi},
      }};
      for (std::size_t q = 0; q < pairs.size(); ++q) {
        const auto [a, b] = pairs[q];
        double dev = 0.0;
        if (q <= 1) dev = rel(a, b);
        else if (q <= 3) dev = corr(a, b);
        else if (q <= 7) dev = rel(a, b);
        else dev = std::abs(a - b);
        QuantityStats& st = report.stats[q];
        st.max_deviation = std::max(st.max_deviation, dev);
        // A non-positive threshold admits nothing, so the gate can be self-tested.
        if (!(dev <= st.threshold) || st.threshold <= 0.0) ++st.failures;
        all.push_back({c, i, st.quantity, a, b, dev, st.threshold});
      }
      const double xi_scale = std::max(1.0, std::abs(o.xi));
      if (std::abs(o.xi) > 1e-9 * xi_scale && (p.xi > 0) != (o.xi > 0)) ++report.xi_sign_mismatches;

      EveParams flipped = p;
      flipped.xi = -p.xi;
      report.flipped_xi_chi_max_dev =
          std::max(report.flipped_xi_chi_max_dev, std::abs(holevo_closed_form(flipped).chi - o.chi));
    }
  }

  auto ratio = [](const DeviationRecord& r) { return r.threshold > 0 ? r.deviation / r.threshold : r.deviation; };
  const std::size_t keep = std::min(keep_worst, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    [&](const auto& x, const auto& y) { return ratio(x) > ratio(y); });
  report.worst.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep));
  return report;
}

/// n_cases random configurations drawn from `ranges` with a seeded generator.
inline std::vector<SystemConfig> random_batch(std::size_t n_cases, std::uint64_t seed,
                                              const RandomConfigRanges& ranges = {}) {
  std::mt19937_64 rng(seed);
  std::vector<SystemConfig> batch;
  batch.reserve(n_cases);
  for (std::size_t c = 0; c < n_cases; ++c) batch.push_back(random_config(rng, ranges));
  return batch;
}

inline nlohmann::json to_json(const DeviationReport& r) {
  nlohmann::json j;
  j["n_cases"] = r.n_cases;
  j["n_evaluations"] = r.n_evaluations;
  j["passed"] = r.passed();
  j["xi_sign_mismatches"] = r.xi_sign_mismatches;
  j["flipped_xi_chi_max_dev"] = r.flipped_xi_chi_max_dev;
  for (const auto& s : r.stats)
    j["quantities"][s.quantity] = {{"max_deviation", s.max_deviation}, {"threshold", s.threshold},
                                   {"failures", s.failures}};
  j["worst"] = nlohmann::json::array();
  for (const auto& w : r.worst)
    j["worst"].push_back({{"case", w.case_index},
                          {"user", w.user},
                          {"quantity", w.quantity},
                          {"closed", w.closed},
                          {"oracle", w.oracle},
                          {"deviation", w.deviation},
                          {"threshold", w.threshold}});
  return j;
}

}  // namespace qcdma
