#pragma once
//
// Scenario configuration and the linear input-output model of a q-CDMA
// CV-QKD link: binary-tree demultiplexer routing, fiber loss, the chaotic
// correction factor, and per-user quadrature coefficients.
//
// Users are indexed 1..N throughout the public API. Variances are in shot
// noise units (vacuum = 1).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qcdma/errors.hpp"

namespace qcdma {

struct Transmittance {
  double value = 1.0;
};

struct FiberLink {
  double attenuation_db_per_km = 0.25;
  double distance_km = 0.0;
};

/// eta = 10^(-alpha d / 10).
inline double transmittance_from_distance(double alpha_db_per_km, double distance_km) {
  detail::require(alpha_db_per_km >= 0.0, "attenuation_db_per_km must be >= 0");
  detail::require(distance_km >= 0.0, "distance_km must be >= 0");
  return std::pow(10.0, -alpha_db_per_km * distance_km / 10.0);
}

inline bool is_power_of_two(int n) { return n >= 1 && std::has_single_bit(static_cast<unsigned>(n)); }

/// Number of tree levels q = log2(N).
inline int tree_levels(int n_users) {
  detail::require(is_power_of_two(n_users),
                  "n_users must be a power of two (got " + std::to_string(n_users) + ")");
  return std::countr_zero(static_cast<unsigned>(n_users));
}

/// All physical and protocol parameters of one N-user scenario.
struct SystemConfig {
  int n_users = 1;
  std::vector<double> modulation_variance{1000.0};  // V_S per user
  double preparation_variance = 1.0;                // V_0
  std::vector<double> correction_factor{1.0};       // M per user
  double eve_variance = 1.0;                        // W
  double env_variance = 1.0;                        // sigma
  std::variant<Transmittance, FiberLink> channel = Transmittance{};
  double reconciliation_efficiency = 1.0;

  /// Builds a configuration with identical per-user parameters.
  static SystemConfig uniform(int n_users, double modulation_variance, double correction_factor) {
    SystemConfig cfg;
    cfg.n_users = n_users;
    cfg.modulation_variance.assign(static_cast<std::size_t>(std::max(n_users, 0)), modulation_variance);
    cfg.correction_factor.assign(static_cast<std::size_t>(std::max(n_users, 0)), correction_factor);
    return cfg;
  }

  double eta() const {
    if (const auto* t = std::get_if<Transmittance>(&channel)) return t->value;
    const auto& link = std::get<FiberLink>(channel);
    return transmittance_from_distance(link.attenuation_db_per_km, link.distance_km);
  }

  double modulation(int user) const { return modulation_variance.at(static_cast<std::size_t>(user - 1)); }
  double correction(int user) const { return correction_factor.at(static_cast<std::size_t>(user - 1)); }

  /// V_A = V_S + V_0, the overall variance of one transmitted quadrature.
  double input_variance(int user) const { return modulation(user) + preparation_variance; }

  /// Average M-weighted input variance entering the channel, (1/N) sum M_k V_A_k.
  double mean_channel_input() const {
    double sum = 0.0;
    for (int k = 1; k <= n_users; ++k) sum += correction(k) * input_variance(k);
    return sum / n_users;
  }

  void check_user(int user) const {
    detail::require(user >= 1 && user <= n_users,
                    "user index " + std::to_string(user) + " out of range 1.." + std::to_string(n_users));
  }

  /// Resizes per-user vectors, replicating the first user's values.
  void resize_users(int n) {
    detail::require(n >= 1, "n_users must be >= 1");
    const double vs = modulation_variance.empty() ? 0.0 : modulation_variance.front();
    const double m = correction_factor.empty() ? 1.0 : correction_factor.front();
    n_users = n;
    modulation_variance.assign(static_cast<std::size_t>(n), vs);
    correction_factor.assign(static_cast<std::size_t>(n), m);
  }

  /// Throws ValidationError naming the offending field.
  void validate() const {
    using detail::require;
    require(is_power_of_two(n_users),
            "n_users: must be a power of two (got " + std::to_string(n_users) + ")");
    require(modulation_variance.size() == static_cast<std::size_t>(n_users),
            "modulation_variance: expected " + std::to_string(n_users) + " entries");
    require(correction_factor.size() == static_cast<std::size_t>(n_users),
            "correction_factor: expected " + std::to_string(n_users) + " entries");
    for (double v : modulation_variance)
      require(std::isfinite(v) && v >= 0.0, "modulation_variance: entries must be finite and >= 0");
    for (double m : correction_factor)
      require(m >= 0.0 && m <= 1.0, "correction_factor: entries must lie in [0, 1]");
    require(std::isfinite(preparation_variance) && preparation_variance > 0.0,
            "preparation_variance: must be > 0");
    require(std::isfinite(eve_variance) && eve_variance >= 1.0, "eve_variance: must be >= 1");
    require(std::isfinite(env_variance) && env_variance >= 0.0, "env_variance: must be >= 0");
    if (const auto* t = std::get_if<Transmittance>(&channel)) {
      require(t->value > 0.0 && t->value <= 1.0, "transmittance: must lie in (0, 1]");
    } else {
      const auto& link = std::get<FiberLink>(channel);
      require(link.attenuation_db_per_km >= 0.0, "attenuation_db_per_km: must be >= 0");
      require(link.distance_km >= 0.0, "distance_km: must be >= 0");
      require(eta() > 0.0, "distance_km: link loss underflows transmittance to 0");
    }
    require(reconciliation_efficiency > 0.0 && reconciliation_efficiency <= 1.0,
            "reconciliation_efficiency: must lie in (0, 1]");
  }
};

// ---------------------------------------------------------------------------
// Demultiplexer tree

struct TreeRouting {
  int user = 1;
  std::vector<int> sign_bits;   // p_l(i) for l = 1..q; 0 = '+', 1 = '-'
  std::vector<int> bs_indices;  // beam splitter feeding level l, breadth-first numbering from 1
  double env_amplitude = 0.0;   // sum_l (-1)^p_l 2^{-(q-l+1)/2}
  double env_coefficient = 0.0; // env_amplitude^2
};

/// Amplitude 2^{-(q-l+1)/2} with which the level-l vacuum reaches a leaf.
inline double level_amplitude(int levels, int level) {
  return std::sqrt(std::ldexp(1.0, -(levels - level + 1)));
}

/// Path of receiver `user` through the N-leaf demux tree.
///
/// Beam-splitter index at level l is 2^{l-1} + floor((i-1) / 2^{q-l+1}) and the
/// sign bit is floor((i-1) / 2^{q-l}) mod 2. This reproduces the explicit
/// eight-receiver listing term by term.
inline TreeRouting tree_routing(int n_users, int user) {
  const int q = tree_levels(n_users);
  detail::require(user >= 1 && user <= n_users,
                  "user index " + std::to_string(user) + " out of range 1.." + std::to_string(n_users));
  TreeRouting r;
  r.user = user;
  r.sign_bits.reserve(static_cast<std::size_t>(q));
  r.bs_indices.reserve(static_cast<std::size_t>(q));
  const unsigned offset = static_cast<unsigned>(user - 1);
  for (int l = 1; l <= q; ++l) {
    const int bit = static_cast<int>((offset >> (q - l)) & 1u);
    const int bs = (1 << (l - 1)) + static_cast<int>(offset >> (q - l + 1));
    r.sign_bits.push_back(bit);
    r.bs_indices.push_back(bs);
    r.env_amplitude += (bit ? -1.0 : 1.0) * level_amplitude(q, l);
  }
  r.env_coefficient = r.env_amplitude * r.env_amplitude;
  return r;
}

/// Demultiplexer with distinct vacuum inputs. Rows are receivers 1..N;
/// column 0 is the received mode R, column b is the vacuum port of BS_b.
inline Eigen::MatrixXd demux_matrix(int n_users) {
  const int q = tree_levels(n_users);
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n_users, n_users);
  for (int i = 1; i <= n_users; ++i) {
    const TreeRouting r = tree_routing(n_users, i);
    u(i - 1, 0) = 1.0 / std::sqrt(static_cast<double>(n_users));
    for (int l = 1; l <= q; ++l) {
      const std::size_t li = static_cast<std::size_t>(l - 1);
      u(i - 1, r.bs_indices[li]) = (r.sign_bits[li] ? -1.0 : 1.0) * level_amplitude(q, l);
    }
  }
  return u;
}

// ---------------------------------------------------------------------------
// Chaotic phase spreading

/// Power spectral density of the chaotic frequency signal on [omega_lower, omega_upper].
struct ChaoticSpectrum {
  std::function<double(double)> psd;
  double omega_lower = 1.0;
  double omega_upper = 2.0;

  static ChaoticSpectrum flat(double level, double omega_lower, double omega_upper) {
    return {[level](double) { return level; }, omega_lower, omega_upper};
  }

  /// Piecewise-linear PSD through (omega, S) points sorted by omega; the band is the table span.
  static ChaoticSpectrum tabulated(std::vector<std::pair<double, double>> points) {
    detail::require(points.size() >= 2, "psd table needs at least two points");
    for (std::size_t k = 1; k < points.size(); ++k)
      detail::require(points[k].first > points[k - 1].first, "psd table must be strictly increasing in omega");
    const double lo = points.front().first;
    const double hi = points.back().first;
    auto table = std::make_shared<std::vector<std::pair<double, double>>>(std::move(points));
    auto eval = [table](double w) {
      const auto& t = *table;
      auto it = std::lower_bound(t.begin(), t.end(), w,
                                 [](const auto& p, double x) { return p.first < x; });
      if (it == t.begin()) return t.front().second;
      if (it == t.end()) return t.back().second;
      const auto& [w1, s1] = *it;
      const auto& [w0, s0] = *(it - 1);
      return s0 + (s1 - s0) * (w - w0) / (w1 - w0);
    };
    return {eval, lo, hi};
  }
};

/// M = exp(-pi * integral_{w_l}^{w_u} S(w) / w^2 dw).
///
/// Integrated in u = 1/w, where the integrand becomes S(1/u) and stays bounded.
inline double correction_factor(const ChaoticSpectrum& spectrum) {
  detail::require(static_cast<bool>(spectrum.psd), "chaotic spectrum has no psd");
  detail::require(spectrum.omega_lower > 0.0, "omega_lower must be > 0 (integrand singular at 0)");
  detail::require(spectrum.omega_upper > spectrum.omega_lower, "omega_upper must exceed omega_lower");
  const auto integrand = [&](double u) {
    const double s = spectrum.psd(1.0 / u);
    if (s < 0.0) throw ValidationError("psd must be non-negative on the band");
    return s;
  };
  double error = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 1.0 / spectrum.omega_upper, 1.0 / spectrum.omega_lower, 20, 1e-12, &error);
  return std::exp(-std::numbers::pi * integral);
}

// ---------------------------------------------------------------------------
// Effective linear channel

/// Coefficients of Bob_i's quadrature on every input, and of Eve's leakage mode.
///
/// X_B = signal X_A_i + sum_k interference[k] X_A_k + eve X_E + env X_BS
/// X_N = sum_k leakage_user[k] X_A_k + leakage_eve X_E
struct QuadratureModel {
  int user = 1;
  double signal_coeff = 0.0;
  std::vector<double> interference_coeffs;  // index k-1; entry for k == user is 0
  double eve_coeff = 0.0;
  double env_coeff_amplitude = 0.0;
  std::vector<double> leakage_user_coeffs;  // index k-1
  double leakage_eve_coeff = 0.0;
};

inline QuadratureModel quadrature_model(const SystemConfig& cfg, int user) {
  cfg.check_user(user);
  const double eta = cfg.eta();
  const double n = cfg.n_users;
  const double mi = cfg.correction(user);
  QuadratureModel qm;
  qm.user = user;
  qm.signal_coeff = std::sqrt(eta) / n;
  qm.interference_coeffs.assign(static_cast<std::size_t>(cfg.n_users), 0.0);
  qm.leakage_user_coeffs.assign(static_cast<std::size_t>(cfg.n_users), 0.0);
  for (int k = 1; k <= cfg.n_users; ++k) {
    const auto idx = static_cast<std::size_t>(k - 1);
    if (k != user) qm.interference_coeffs[idx] = qm.signal_coeff * std::sqrt(mi * cfg.correction(k));
    qm.leakage_user_coeffs[idx] = std::sqrt((1.0 - eta) / n) * std::sqrt(cfg.correction(k));
  }
  qm.eve_coeff = std::sqrt((1.0 - eta) * mi / n);
  qm.env_coeff_amplitude = std::sqrt(mi) * tree_routing(cfg.n_users, user).env_amplitude;
  qm.leakage_eve_coeff = -std::sqrt(eta);
  return qm;
}

}  // namespace qcdma
