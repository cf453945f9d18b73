#pragma once
//
// JSON configuration files and JSON/CSV output of key-rate breakdowns.
//
// Config schema (all variances in SNU, distances in km):
//
//   {
//     "n_users": 4,
//     "modulation_variance": 1000,          // number or per-user array
//     "preparation_variance": 1,
//     "correction_factor": 0.1,             // number or per-user array
//     "chaotic_spectrum": {...},            // alternative to correction_factor
//     "eve_variance": 1,
//     "env_variance": 1,
//     "transmittance": 0.1,                 // or the two fields below
//     "attenuation_db_per_km": 0.25,
//     "distance_km": 100,
//     "reconciliation_efficiency": 0.95,
//     "finite_size": {"block_length": 1e8, "n_key": 5e7, "m_pe": 5e7,
//                     "eps_smooth": 1e-10, "eps_pa": 1e-10, "eps_pe": 1e-10}
//   }
//
// chaotic_spectrum is {"level": s, "omega_lower": a, "omega_upper": b} for a
// flat PSD or {"points": [[omega, S], ...]} for a piecewise-linear one.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qcdma/asymptotic.hpp"
#include "qcdma/errors.hpp"
#include "qcdma/finite_size.hpp"
#include "qcdma/model.hpp"

#ifndef QCDMA_VERSION
#define QCDMA_VERSION "1.0.0"
#endif

namespace qcdma {

using json = nlohmann::json;

inline constexpr const char* kEngineVersion = QCDMA_VERSION;

/// 17 significant digits; enough to round-trip any double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline double number_field(const json& j, const std::string& key) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ValidationError(key + ": expected a number");
  return v.get<double>();
}

inline std::uint64_t count_field(const json& j, const std::string& key, const std::string& prefix) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ValidationError(prefix + key + ": expected a number");
  const double d = v.get<double>();
  if (!(d >= 0.0) || d != std::floor(d) || d > 1.8e19)
    throw ValidationError(prefix + key + ": expected a non-negative integer");
  return v.is_number_unsigned() ? v.get<std::uint64_t>() : static_cast<std::uint64_t>(d);
}

inline std::vector<double> per_user_field(const json& j, const std::string& key, int n_users) {
  const json& v = j.at(key);
  if (v.is_number()) return std::vector<double>(static_cast<std::size_t>(n_users), v.get<double>());
  if (!v.is_array()) throw ValidationError(key + ": expected a number or an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ValidationError(key + ": array entries must be numbers");
    out.push_back(e.get<double>());
  }
  if (out.size() != static_cast<std::size_t>(n_users))
    throw ValidationError(key + ": expected " + std::to_string(n_users) + " entries, got " +
                          std::to_string(out.size()));
  return out;
}

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& prefix) {
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ValidationError(prefix + key + ": unknown field");
}

inline ChaoticSpectrum spectrum_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("chaotic_spectrum: expected an object");
  if (j.contains("points")) {
    reject_unknown(j, {"points"}, "chaotic_spectrum.");
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : j.at("points")) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
        throw ValidationError("chaotic_spectrum.points: entries must be [omega, S] pairs");
      pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return ChaoticSpectrum::tabulated(std::move(pts));
  }
  reject_unknown(j, {"level", "omega_lower", "omega_upper"}, "chaotic_spectrum.");
  for (const char* k : {"level", "omega_lower", "omega_upper"})
    if (!j.contains(k)) throw ValidationError(std::string("chaotic_spectrum.") + k + ": missing");
  return ChaoticSpectrum::flat(number_field(j, "level"), number_field(j, "omega_lower"),
                               number_field(j, "omega_upper"));
}

}  // namespace detail

inline FiniteSizeConfig finite_config_from_json(const json& j) {
  const std::string prefix = "finite_size.";
  if (!j.is_object()) throw ValidationError("finite_size: expected an object");
  detail::reject_unknown(j, {"block_length", "n_key", "m_pe", "eps_smooth", "eps_pa", "eps_pe", "eta_floor"},
                         prefix);
  if (!j.contains("block_length")) throw ValidationError("finite_size.block_length: missing");
  FiniteSizeConfig fs = FiniteSizeConfig::balanced(detail::count_field(j, "block_length", prefix));
  if (j.contains("n_key")) {
    fs.n_key = detail::count_field(j, "n_key", prefix);
    fs.m_pe = j.contains("m_pe") ? detail::count_field(j, "m_pe", prefix) : fs.block_length - fs.n_key;
  } else if (j.contains("m_pe")) {
    fs.m_pe = detail::count_field(j, "m_pe", prefix);
    fs.n_key = fs.block_length - fs.m_pe;
  }
  if (j.contains("eps_smooth")) fs.eps_smooth = detail::number_field(j, "eps_smooth");
  if (j.contains("eps_pa")) fs.eps_pa = detail::number_field(j, "eps_pa");
  if (j.contains("eps_pe")) fs.eps_pe = detail::number_field(j, "eps_pe");
  if (j.contains("eta_floor")) fs.eta_floor = detail::number_field(j, "eta_floor");
  fs.validate();
  return fs;
}

struct LoadedConfig {
  SystemConfig system;
  std::optional<FiniteSizeConfig> finite;
};

/// Parses and validates a config object. Missing optional fields keep their defaults.
inline LoadedConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config: expected a JSON object");
  detail::reject_unknown(j,
                         {"n_users", "modulation_variance", "preparation_variance", "correction_factor",
                          "chaotic_spectrum", "eve_variance", "env_variance", "transmittance",
                          "attenuation_db_per_km", "distance_km", "reconciliation_efficiency", "finite_size"},
                         "");
  LoadedConfig out;
  SystemConfig& c = out.system;
  if (!j.contains("n_users")) throw ValidationError("n_users: missing");
  const json& n = j.at("n_users");
  if (!n.is_number_integer()) throw ValidationError("n_users: expected an integer");
  c.n_users = n.get<int>();
  if (!is_power_of_two(c.n_users))
    throw ValidationError("n_users: must be a power of two (got " + std::to_string(c.n_users) + ")");

  c.modulation_variance = j.contains("modulation_variance")
                              ? detail::per_user_field(j, "modulation_variance", c.n_users)
                              : std::vector<double>(static_cast<std::size_t>(c.n_users), 1000.0);
  if (j.contains("correction_factor") && j.contains("chaotic_spectrum"))
    throw ValidationError("correction_factor: give either correction_factor or chaotic_spectrum, not both");
  if (j.contains("chaotic_spectrum")) {
    const double m = correction_factor(detail::spectrum_from_json(j.at("chaotic_spectrum")));
    c.correction_factor.assign(static_cast<std::size_t>(c.n_users), m);
  } else {
    c.correction_factor = j.contains("correction_factor")
                              ? detail::per_user_field(j, "correction_factor", c.n_users)
                              : std::vector<double>(static_cast<std::size_t>(c.n_users), 1.0);
  }
  if (j.contains("preparation_variance")) c.preparation_variance = detail::number_field(j, "preparation_variance");
  if (j.contains("eve_variance")) c.eve_variance = detail::number_field(j, "eve_variance");
  if (j.contains("env_variance")) c.env_variance = detail::number_field(j, "env_variance");
  if (j.contains("reconciliation_efficiency"))
    c.reconciliation_efficiency = detail::number_field(j, "reconciliation_efficiency");

  const bool has_eta = j.contains("transmittance");
  const bool has_link = j.contains("distance_km") || j.contains("attenuation_db_per_km");
  if (has_eta && has_link)
    throw ValidationError("transmittance: give either transmittance or distance_km, not both");
  if (has_eta) {
    c.channel = Transmittance{detail::number_field(j, "transmittance")};
  } else if (has_link) {
    if (!j.contains("distance_km")) throw ValidationError("distance_km: missing");
    FiberLink link;
    link.distance_km = detail::number_field(j, "distance_km");
    if (j.contains("attenuation_db_per_km"))
      link.attenuation_db_per_km = detail::number_field(j, "attenuation_db_per_km");
    c.channel = link;
  } else {
    throw ValidationError("transmittance: missing (give transmittance or distance_km)");
  }
  c.validate();
  if (j.contains("finite_size")) out.finite = finite_config_from_json(j.at("finite_size"));
  return out;
}

inline json to_json(const SystemConfig& c) {
  json j;
  j["n_users"] = c.n_users;
  j["modulation_variance"] = c.modulation_variance;
  j["preparation_variance"] = c.preparation_variance;
  j["correction_factor"] = c.correction_factor;
  j["eve_variance"] = c.eve_variance;
  j["env_variance"] = c.env_variance;
  if (const auto* t = std::get_if<Transmittance>(&c.channel)) {
    j["transmittance"] = t->value;
  } else {
    const auto& link = std::get<FiberLink>(c.channel);
    j["attenuation_db_per_km"] = link.attenuation_db_per_km;
    j["distance_km"] = link.distance_km;
  }
  j["reconciliation_efficiency"] = c.reconciliation_efficiency;
  return j;
}

inline json to_json(const FiniteSizeConfig& fs) {
  return {{"block_length", fs.block_length}, {"n_key", fs.n_key},   {"m_pe", fs.m_pe},
          {"eps_smooth", fs.eps_smooth},     {"eps_pa", fs.eps_pa}, {"eps_pe", fs.eps_pe}};
}

inline json to_json(const LoadedConfig& c) {
  json j = to_json(c.system);
  if (c.finite) j["finite_size"] = to_json(*c.finite);
  return j;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(origin + ": invalid JSON (" + e.what() + ")");
  }
}

inline LoadedConfig load_config(const std::filesystem::path& path) {
  return config_from_json(parse_json_text(read_text_file(path), path.string()));
}

// ---------------------------------------------------------------------------
// Key-rate output

struct RunMetadata {
  bool worst_case_mi = false;
  bool clip_negative = false;
};

inline json to_json(const UserRate& u) {
  return {{"user", u.user},
          {"V_B", u.v_b},
          {"V_B_cond", u.v_b_cond},
          {"I_bits", u.mutual_info},
          {"chi_bits", u.holevo},
          {"rate_bits", u.rate},
          {"flags", u.flags.to_string()}};
}

inline json to_json(const SkrBreakdown& r, const LoadedConfig& cfg, const RunMetadata& meta = {}) {
  json users = json::array();
  for (const auto& u : r.per_user) users.push_back(to_json(u));
  json j;
  j["engine_version"] = kEngineVersion;
  j["regime"] = r.regime;
  j["config"] = to_json(cfg);
  j["per_user"] = users;
  j["total_rate"] = r.total_rate;
  if (meta.clip_negative) j["total_rate_clipped"] = r.clipped_total();
  j["flags"] = r.flags().to_string();
  j["metadata"] = {{"beta_rec", cfg.system.reconciliation_efficiency},
                   {"eta", cfg.system.eta()},
                   {"worst_case_mi", meta.worst_case_mi},
                   {"clip_negative", meta.clip_negative}};
  return j;
}

inline void write_csv(std::ostream& os, const SkrBreakdown& r) {
  os << "user,V_B,V_B_cond,I_bits,chi_bits,rate_bits,flags\n";
  for (const auto& u : r.per_user)
    os << u.user << ',' << format_double(u.v_b) << ',' << format_double(u.v_b_cond) << ','
       << format_double(u.mutual_info) << ',' << format_double(u.holevo) << ',' << format_double(u.rate) << ','
       << u.flags.to_string() << '\n';
}

inline json to_json(const PeMonteCarloSummary& s) {
  return {{"engine_version", kEngineVersion},
          {"eta_eff", s.spec.eta_eff},
          {"sigma2", s.spec.sigma2},
          {"v_a", s.spec.v_a},
          {"m", s.spec.m},
          {"trials", s.spec.trials},
          {"seed", s.spec.seed},
          {"mean_eta", s.mean_eta},
          {"se_mean_eta", s.se_mean_eta},
          {"var_eta", s.var_eta},
          {"target_var_eta", s.target_var_eta},
          {"mean_sigma2", s.mean_sigma2},
          {"var_sigma2", s.var_sigma2},
          {"target_var_sigma2", s.target_var_sigma2},
          {"eps_pe_tail", s.spec.eps_pe_tail},
          {"w", s.w},
          {"tail_threshold", s.tail_threshold},
          {"tail_fraction", s.tail_fraction},
          {"pass",
           {{"mean_eta", s.pass_mean_eta},
            {"var_eta", s.pass_var_eta},
            {"mean_sigma2", s.pass_mean_sigma2},
            {"var_sigma2", s.pass_var_sigma2},
            {"tail", s.pass_tail}}},
          {"passed", s.passed()}};
}

inline void write_trials_csv(std::ostream& os, const PeMonteCarloSummary& s) {
  os << "trial,eta_hat,sigma2_hat\n";
  for (const auto& t : s.trials)
    os << t.trial << ',' << format_double(t.eta_hat) << ',' << format_double(t.sigma2_hat) << '\n';
}

}  // namespace qcdma
