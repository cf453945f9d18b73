#pragma once
//
// One-parameter sweeps over a base scenario, the CSV format they are written
// in, and the figure presets built from them.
//
// Sweep CSV columns: swept_param, value, regime, total_rate, rate_user_1..N,
// flags. Users absent at a grid point (n_users sweeps) leave blank cells.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qcdma/asymptotic.hpp"
#include "qcdma/errors.hpp"
#include "qcdma/finite_size.hpp"
#include "qcdma/model.hpp"
#include "qcdma/serialize.hpp"

namespace qcdma {

enum class SweepParam { kCorrection, kModulation, kDistance, kUsers, kBlockLength };
enum class OutputMode { kTotal, kPerUser, kBoth };

inline std::string to_string(SweepParam p) {
  switch (p) {
    case SweepParam::kCorrection: return "M";
    case SweepParam::kModulation: return "V_S";
    case SweepParam::kDistance: return "distance_km";
    case SweepParam::kUsers: return "n_users";
    case SweepParam::kBlockLength: return "block_length";
  }
  return "?";
}

inline SweepParam parse_sweep_param(const std::string& s) {
  for (auto p : {SweepParam::kCorrection, SweepParam::kModulation, SweepParam::kDistance, SweepParam::kUsers,
                 SweepParam::kBlockLength})
    if (to_string(p) == s) return p;
  throw ValidationError("sweep parameter: unknown '" + s + "' (use M, V_S, distance_km, n_users, block_length)");
}

inline std::string to_string(OutputMode m) {
  switch (m) {
    case OutputMode::kTotal: return "total";
    case OutputMode::kPerUser: return "per-user";
    case OutputMode::kBoth: return "both";
  }
  return "?";
}

inline OutputMode parse_output_mode(const std::string& s) {
  for (auto m : {OutputMode::kTotal, OutputMode::kPerUser, OutputMode::kBoth})
    if (to_string(m) == s) return m;
  throw ValidationError("output mode: unknown '" + s + "' (use total, per-user, both)");
}

/// n points from a to b inclusive.
inline std::vector<double> linspace(double a, double b, std::size_t n) {
  detail::require(n >= 1, "linspace: need at least one point");
  if (n == 1) return {a};
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  out.back() = b;
  return out;
}

/// n log-spaced points from a to b inclusive; a, b > 0.
inline std::vector<double> logspace(double a, double b, std::size_t n) {
  detail::require(a > 0.0 && b > 0.0, "logspace: endpoints must be > 0");
  std::vector<double> out = linspace(std::log10(a), std::log10(b), n);
  for (double& x : out) x = std::pow(10.0, x);
  out.front() = a;
  out.back() = b;
  return out;
}

struct SweepSpec {
  SystemConfig base;
  std::optional<FiniteSizeConfig> finite;
  SweepParam param = SweepParam::kDistance;
  std::vector<double> grid;
  OutputMode output = OutputMode::kBoth;
  bool clip_negative = false;
  bool worst_case_mi = false;
  std::string label = "sweep";

  void validate() const {
    detail::require(!grid.empty(), "sweep grid: must be non-empty");
    bool up = true;
    bool down = true;
    for (std::size_t k = 1; k < grid.size(); ++k) {
      up = up && grid[k] > grid[k - 1];
      down = down && grid[k] < grid[k - 1];
    }
    detail::require(grid.size() == 1 || up || down, "sweep grid: must be strictly monotone");
    for (double v : grid) detail::require(std::isfinite(v), "sweep grid: values must be finite");
    if (param == SweepParam::kBlockLength)
      detail::require(finite.has_value(), "sweep block_length: needs a finite_size configuration");
    if (param == SweepParam::kUsers)
      for (double v : grid)
        detail::require(v == std::floor(v) && is_power_of_two(static_cast<int>(v)),
                        "sweep n_users: grid values must be powers of two");
  }
};

struct ResultRecord {
  std::size_t index = 0;
  double value = 0.0;
  std::string regime;
  double total_rate = 0.0;
  std::vector<double> user_rates;
  Flags flags;
  std::string error;  // set when the point failed to evaluate
};

/// Applies one grid value to copies of the base configuration.
inline void apply_sweep_value(SweepParam param, double value, SystemConfig& cfg,
                              std::optional<FiniteSizeConfig>& fs) {
  switch (param) {
    case SweepParam::kCorrection:
      cfg.correction_factor.assign(static_cast<std::size_t>(cfg.n_users), value);
      break;
    case SweepParam::kModulation:
      cfg.modulation_variance.assign(static_cast<std::size_t>(cfg.n_users), value);
      break;
    case SweepParam::kDistance: {
      FiberLink link;
      if (const auto* l = std::get_if<FiberLink>(&cfg.channel)) link = *l;
      link.distance_km = value;
      cfg.channel = link;
      break;
    }
    case SweepParam::kUsers:
      cfg.resize_users(static_cast<int>(value));
      break;
    case SweepParam::kBlockLength: {
      detail::require(value >= 2.0, "sweep block_length: values must be >= 2");
      const double fraction = fs->key_fraction();
      const auto k = static_cast<std::uint64_t>(value);
      fs->block_length = k;
      fs->n_key = static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(k)));
      fs->n_key = std::clamp<std::uint64_t>(fs->n_key, 1, k - 1);
      fs->m_pe = k - fs->n_key;
      break;
    }
  }
}

inline SkrBreakdown evaluate(const SystemConfig& cfg, const std::optional<FiniteSizeConfig>& fs,
                             bool worst_case_mi = false) {
  return fs ? finite_skr(cfg, *fs, FiniteOptions{worst_case_mi}) : skr(cfg);
}

/// Evaluates every grid point in order. A point that throws becomes a row
/// flagged evaluation_failed with NaN rates; the sweep continues.
inline std::vector<ResultRecord> run_sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<ResultRecord> out;
  out.reserve(spec.grid.size());
  for (std::size_t k = 0; k < spec.grid.size(); ++k) {
    ResultRecord rec;
    rec.index = k;
    rec.value = spec.grid[k];
    rec.regime = spec.finite ? "finite:" + std::to_string(spec.finite->block_length) : "asymptotic";
    SystemConfig cfg = spec.base;
    std::optional<FiniteSizeConfig> fs = spec.finite;
    try {
      apply_sweep_value(spec.param, spec.grid[k], cfg, fs);
      const SkrBreakdown r = evaluate(cfg, fs, spec.worst_case_mi);
      rec.regime = r.regime;
      rec.total_rate = spec.clip_negative ? r.clipped_total() : r.total_rate;
      for (const auto& u : r.per_user) rec.user_rates.push_back(spec.clip_negative ? std::max(0.0, u.rate) : u.rate);
      rec.flags = r.flags();
    } catch (const std::exception& e) {
      rec.total_rate = std::nan("");
      rec.user_rates.clear();
      rec.flags = Flag::kEvaluationFailed;
      rec.error = e.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

inline void write_sweep_csv(std::ostream& os, SweepParam param, const std::vector<ResultRecord>& records,
                            OutputMode mode = OutputMode::kBoth) {
  std::size_t users = 0;
  for (const auto& r : records) users = std::max(users, r.user_rates.size());
  const bool total = mode != OutputMode::kPerUser;
  const bool per_user = mode != OutputMode::kTotal;
  os << "swept_param,value,regime";
  if (total) os << ",total_rate";
  if (per_user)
    for (std::size_t u = 1; u <= users; ++u) os << ",rate_user_" << u;
  os << ",flags\n";
  for (const auto& r : records) {
    os << to_string(param) << ',' << format_double(r.value) << ',' << r.regime;
    if (total) os << ',' << format_double(r.total_rate);
    if (per_user)
      for (std::size_t u = 0; u < users; ++u) {
        os << ',';
        if (u < r.user_rates.size()) os << format_double(r.user_rates[u]);
      }
    os << ',' << r.flags.to_string() << '\n';
  }
}

inline void write_sweep_csv(std::ostream& os, const SweepSpec& spec, const std::vector<ResultRecord>& records) {
  write_sweep_csv(os, spec.param, records, spec.output);
}

struct SweepRow {
  std::string swept_param;
  double value = 0.0;
  std::string regime;
  std::optional<double> total_rate;
  std::vector<std::optional<double>> user_rates;
  std::string flags;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_double_cell(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("sweep csv: bad number '" + s + "'");
  }
  if (used != s.size()) throw ValidationError("sweep csv: bad number '" + s + "'");
  return v;
}

}  // namespace detail

/// Parses a sweep CSV written by write_sweep_csv.
inline std::vector<SweepRow> parse_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("sweep csv: empty input");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 4 || header[0] != "swept_param" || header[1] != "value" || header[2] != "regime" ||
      header.back() != "flags")
    throw ValidationError("sweep csv: unexpected header '" + line + "'");
  std::vector<SweepRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ValidationError("sweep csv: row has " + std::to_string(cells.size()) + " cells, header has " +
                            std::to_string(header.size()));
    SweepRow row;
    row.swept_param = cells[0];
    row.value = detail::parse_double_cell(cells[1]);
    row.regime = cells[2];
    row.flags = cells.back();
    for (std::size_t c = 3; c + 1 < cells.size(); ++c) {
      std::optional<double> v;
      if (!cells[c].empty()) v = detail::parse_double_cell(cells[c]);
      if (header[c] == "total_rate")
        row.total_rate = v;
      else if (header[c].rfind("rate_user_", 0) == 0)
        row.user_rates.push_back(v);
      else
        throw ValidationError("sweep csv: unknown column '" + header[c] + "'");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Figure presets

struct FigurePreset {
  std::string name;
  std::string description;
  std::vector<SweepSpec> series;  // one CSV per entry, named <label>.csv
};

/// Base scenario shared by every preset: V0 = 1, V_S = 1e3, alpha = 0.25 dB/km,
/// W = 1, sigma = 1, beta_rec = 0.95.
inline SystemConfig paper_baseline(int n_users, double correction, double distance_km) {
  SystemConfig c = SystemConfig::uniform(n_users, 1000.0, correction);
  c.preparation_variance = 1.0;
  c.eve_variance = 1.0;
  c.env_variance = 1.0;
  c.channel = FiberLink{0.25, distance_km};
  c.reconciliation_efficiency = 0.95;
  return c;
}

inline const std::vector<std::string>& figure_preset_names() {
  static const std::vector<std::string> names{"fig4", "fig5", "fig6a", "fig6b", "fig7a", "fig7b", "fig8"};
  return names;
}

inline constexpr double kPresetCorrection = 0.1;      // M for fig5 - fig7
inline constexpr double kPresetFiniteCorrection = 0.01;  // M for fig8

inline FigurePreset figure_preset(const std::string& name) {
  FigurePreset p;
  p.name = name;
  const auto make = [](SystemConfig base, SweepParam param, std::vector<double> grid, OutputMode mode,
                       std::string label) {
    SweepSpec s;
    s.base = std::move(base);
    s.param = param;
    s.grid = std::move(grid);
    s.output = mode;
    s.clip_negative = true;
    s.label = std::move(label);
    return s;
  };
  const std::vector<int> small_ns{2, 4, 8, 16};

  if (name == "fig4") {
    p.description = "total SKR vs correction factor M, d = 100 km";
    for (int n : small_ns)
      p.series.push_back(make(paper_baseline(n, 1.0, 100.0), SweepParam::kCorrection, logspace(1e-4, 1.0, 30),
                              OutputMode::kBoth, "fig4_N" + std::to_string(n)));
  } else if (name == "fig5") {
    p.description = "total SKR vs modulation variance V_S, d = 100 km";
    for (int n : small_ns)
      p.series.push_back(make(paper_baseline(n, kPresetCorrection, 100.0), SweepParam::kModulation,
                              logspace(1.0, 1e7, 29), OutputMode::kBoth, "fig5_N" + std::to_string(n)));
  } else if (name == "fig6a" || name == "fig6b") {
    const bool total = name == "fig6a";
    p.description = total ? "total SKR vs distance" : "per-user SKR vs distance";
    for (int n : small_ns)
      p.series.push_back(make(paper_baseline(n, kPresetCorrection, 0.0), SweepParam::kDistance,
                              linspace(10.0, 200.0, 20), total ? OutputMode::kTotal : OutputMode::kPerUser,
                              name + "_N" + std::to_string(n)));
  } else if (name == "fig7a" || name == "fig7b") {
    const bool total = name == "fig7a";
    p.description = total ? "total SKR vs number of users" : "per-user SKR vs number of users";
    for (double d : {25.0, 50.0, 100.0})
      p.series.push_back(make(paper_baseline(2, kPresetCorrection, d), SweepParam::kUsers,
                              {2, 4, 8, 16, 32, 64, 128}, total ? OutputMode::kTotal : OutputMode::kPerUser,
                              name + "_d" + std::to_string(static_cast<int>(d))));
  } else if (name == "fig8") {
    p.description = "finite-size total SKR vs distance, K = 1e6, 1e8, 1e14, beta = 0.98";
    for (int n : {4, 8, 16, 32}) {
      SystemConfig base = paper_baseline(n, kPresetFiniteCorrection, 0.0);
      base.reconciliation_efficiency = 0.98;
      const std::string stem = "fig8_N" + std::to_string(n);
      for (std::uint64_t k : {std::uint64_t{1000000}, std::uint64_t{100000000}, std::uint64_t{100000000000000}}) {
        SweepSpec s = make(base, SweepParam::kDistance, linspace(10.0, 200.0, 20), OutputMode::kTotal,
                           stem + "_K" + std::to_string(k));
        s.finite = FiniteSizeConfig::balanced(k);
        p.series.push_back(std::move(s));
      }
      p.series.push_back(make(base, SweepParam::kDistance, linspace(10.0, 200.0, 20), OutputMode::kTotal,
                              stem + "_asymptotic"));
    }
  } else {
    throw ValidationError("figure preset: unknown '" + name + "'");
  }
  return p;
}

struct FigureSeriesResult {
  SweepSpec spec;
  std::vector<ResultRecord> records;
};

inline std::vector<FigureSeriesResult> evaluate_figure(const FigurePreset& preset) {
  std::vector<FigureSeriesResult> out;
  for (const auto& s : preset.series) out.push_back({s, run_sweep(s)});
  return out;
}

/// Writes <label>.csv per series and <preset>_manifest.json into outdir.
inline std::vector<FigureSeriesResult> run_figure(const FigurePreset& preset, const std::filesystem::path& outdir) {
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw IoError("cannot create " + outdir.string() + ": " + ec.message());
  auto results = evaluate_figure(preset);
  json series = json::array();
  for (const auto& r : results) {
    std::ostringstream csv;
    write_sweep_csv(csv, r.spec, r.records);
    const std::string file = r.spec.label + ".csv";
    write_text_file(outdir / file, csv.str());
    series.push_back({{"label", r.spec.label},
                      {"file", file},
                      {"swept_param", to_string(r.spec.param)},
                      {"n_users", r.spec.base.n_users},
                      {"regime", r.records.empty() ? "" : r.records.front().regime},
                      {"output", to_string(r.spec.output)},
                      {"clip_negative", r.spec.clip_negative},
                      {"base_config", to_json(LoadedConfig{r.spec.base, r.spec.finite})}});
  }
  const json manifest{{"preset", preset.name},
                      {"description", preset.description},
                      {"engine_version", kEngineVersion},
                      {"series", series}};
  write_text_file(outdir / (preset.name + "_manifest.json"), manifest.dump(2) + "\n");
  return results;
}

}  // namespace qcdma
