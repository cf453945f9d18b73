// qcdma: command-line front end for the q-CDMA key-rate engine.
//
// Exit codes: 0 ok, 1 validation error, 2 threshold failure, 3 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qcdma/qcdma.hpp"

namespace {

using namespace qcdma;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitThreshold = 2;
constexpr int kExitIo = 3;

// Scenario flags shared by skr, finite and sweep.
struct ScenarioArgs {
  std::string config;
  std::optional<int> n_users;
  std::optional<double> vs, v0, m, w, sigma, eta, distance, alpha, beta_rec;
  std::optional<std::uint64_t> block_length, n_key, m_pe;
  std::optional<double> eps_smooth, eps_pa, eps_pe;

  void add_to(CLI::App* app, bool finite_flags) {
    app->add_option("--config", config, "JSON config file");
    app->add_option("--n-users", n_users, "number of user pairs N (power of two)");
    app->add_option("--vs", vs, "modulation variance V_S [SNU], all users");
    app->add_option("--v0", v0, "preparation variance V_0 [SNU]");
    app->add_option("--M", m, "correction factor M, all users");
    app->add_option("--W", w, "Eve's TMSV variance W [SNU]");
    app->add_option("--sigma", sigma, "environment variance sigma [SNU]");
    app->add_option("--eta", eta, "channel transmittance (overrides distance)");
    app->add_option("--distance", distance, "fiber length [km]");
    app->add_option("--alpha", alpha, "fiber attenuation [dB/km]");
    app->add_option("--beta-rec", beta_rec, "reconciliation efficiency");
    if (!finite_flags) return;
    app->add_option("--block-length", block_length, "block length K (default split n = m = K/2)");
    app->add_option("--n-key", n_key, "signals kept for the key");
    app->add_option("--m-pe", m_pe, "signals disclosed for parameter estimation");
    app->add_option("--eps-smooth", eps_smooth);
    app->add_option("--eps-pa", eps_pa);
    app->add_option("--eps-pe", eps_pe);
  }

  /// File values (or the N=2, M=0.1, d=100 km baseline) with flags applied on top.
  LoadedConfig resolve() const {
    LoadedConfig c;
    if (!config.empty()) {
      c = load_config(config);
    } else {
      c.system = paper_baseline(2, kPresetCorrection, 100.0);
    }
    SystemConfig& s = c.system;
    if (n_users) {
      detail::require(is_power_of_two(*n_users),
                      "n_users: must be a power of two (got " + std::to_string(*n_users) + ")");
      s.resize_users(*n_users);
    }
    if (vs) s.modulation_variance.assign(static_cast<std::size_t>(s.n_users), *vs);
    if (m) s.correction_factor.assign(static_cast<std::size_t>(s.n_users), *m);
    if (v0) s.preparation_variance = *v0;
    if (w) s.eve_variance = *w;
    if (sigma) s.env_variance = *sigma;
    if (beta_rec) s.reconciliation_efficiency = *beta_rec;
    if (eta) {
      s.channel = Transmittance{*eta};
    } else if (distance || alpha) {
      FiberLink link;
      if (const auto* l = std::get_if<FiberLink>(&s.channel)) link = *l;
      if (distance) link.distance_km = *distance;
      if (alpha) link.attenuation_db_per_km = *alpha;
      s.channel = link;
    }
    s.validate();

    if (block_length) c.finite = FiniteSizeConfig::balanced(*block_length);
    if (c.finite) {
      FiniteSizeConfig& fs = *c.finite;
      if (n_key) {
        fs.n_key = *n_key;
        fs.m_pe = m_pe ? *m_pe : fs.block_length - fs.n_key;
      } else if (m_pe) {
        fs.m_pe = *m_pe;
        fs.n_key = fs.block_length - fs.m_pe;
      }
      if (eps_smooth) fs.eps_smooth = *eps_smooth;
      if (eps_pa) fs.eps_pa = *eps_pa;
      if (eps_pe) fs.eps_pe = *eps_pe;
      fs.validate();
    }
    return c;
  }
};

void print_table(std::ostream& os, const SkrBreakdown& r, bool clip) {
  os << "regime " << r.regime << '\n';
  os << "user  V_B  V_B_cond  I_bits  chi_bits  rate_bits  flags\n";
  for (const auto& u : r.per_user)
    os << u.user << "  " << format_double(u.v_b) << "  " << format_double(u.v_b_cond) << "  "
       << format_double(u.mutual_info) << "  " << format_double(u.holevo) << "  " << format_double(u.rate) << "  "
       << u.flags.to_string() << '\n';
  os << "total_rate " << format_double(r.total_rate) << '\n';
  if (clip) os << "total_rate_clipped " << format_double(r.clipped_total()) << '\n';
}

void emit_breakdown(const SkrBreakdown& r, const LoadedConfig& cfg, const RunMetadata& meta, bool as_json,
                    const std::string& csv_path) {
  if (as_json)
    std::cout << to_json(r, cfg, meta).dump(2) << '\n';
  else
    print_table(std::cout, r, meta.clip_negative);
  if (!csv_path.empty()) {
    std::ostringstream csv;
    write_csv(csv, r);
    write_text_file(csv_path, csv.str());
  }
}

std::vector<double> make_grid(const std::vector<double>& values, std::optional<double> from, std::optional<double> to,
                              std::size_t points, bool log) {
  if (!values.empty()) {
    detail::require(!from && !to, "sweep: give either --values or --from/--to, not both");
    return values;
  }
  detail::require(from && to, "sweep: grid missing (use --values or --from/--to/--points)");
  return log ? logspace(*from, *to, points) : linspace(*from, *to, points);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"q-CDMA CV-QKD secret key rate simulator"};
  app.set_version_flag("--version", std::string(kEngineVersion));
  app.require_subcommand(1);

  bool as_json = false;
  std::string csv_path;
  bool clip = false;
  bool worst_case_mi = false;

  // skr
  ScenarioArgs skr_args;
  auto* skr_cmd = app.add_subcommand("skr", "asymptotic per-user and total key rate");
  skr_args.add_to(skr_cmd, false);
  skr_cmd->add_flag("--json", as_json, "print JSON instead of a table");
  skr_cmd->add_option("--csv", csv_path, "write the per-user CSV to PATH");
  skr_cmd->add_flag("--clip-negative", clip, "also report the total with negative rates set to 0");

  // finite
  ScenarioArgs fin_args;
  auto* fin_cmd = app.add_subcommand("finite", "finite-size per-user and total key rate");
  fin_args.add_to(fin_cmd, true);
  fin_cmd->add_flag("--json", as_json);
  fin_cmd->add_option("--csv", csv_path);
  fin_cmd->add_flag("--clip-negative", clip);
  fin_cmd->add_flag("--worst-case-mi", worst_case_mi, "evaluate I at the worst-case estimates");

  // sweep
  ScenarioArgs sw_args;
  std::string sw_param;
  std::vector<double> sw_values;
  std::optional<double> sw_from, sw_to;
  std::size_t sw_points = 20;
  bool sw_log = false;
  std::string sw_output = "both";
  bool sw_finite = false;
  auto* sw_cmd = app.add_subcommand("sweep", "one-parameter sweep written as CSV");
  sw_args.add_to(sw_cmd, true);
  sw_cmd->add_option("--param", sw_param, "M, V_S, distance_km, n_users or block_length")->required();
  sw_cmd->add_option("--values", sw_values, "explicit grid");
  sw_cmd->add_option("--from", sw_from, "grid start");
  sw_cmd->add_option("--to", sw_to, "grid end");
  sw_cmd->add_option("--points", sw_points, "grid size");
  sw_cmd->add_flag("--log", sw_log, "log-spaced grid");
  sw_cmd->add_option("--output", sw_output, "total, per-user or both");
  sw_cmd->add_flag("--finite", sw_finite, "use the finite-size engine (needs a finite_size block)");
  sw_cmd->add_option("--csv", csv_path, "output CSV (default stdout)");
  sw_cmd->add_flag("--clip-negative", clip);
  sw_cmd->add_flag("--worst-case-mi", worst_case_mi);

  // figures
  std::string fig_name;
  std::string fig_out = "figures";
  auto* fig_cmd = app.add_subcommand("figures", "write the CSVs of a figure preset");
  fig_cmd->add_option("preset", fig_name, "fig4, fig5, fig6a, fig6b, fig7a, fig7b, fig8 or all")->required();
  fig_cmd->add_option("--out", fig_out, "output directory");

  // pe-mc
  std::string pe_config;
  int pe_user = 1;
  std::optional<double> pe_eta, pe_sigma2, pe_va;
  std::size_t pe_m = 10000;
  std::size_t pe_trials = 2000;
  std::uint64_t seed = 1;
  double pe_eps = 0.05;
  auto* pe_cmd = app.add_subcommand("pe-mc", "Monte Carlo check of the parameter-estimation statistics");
  pe_cmd->add_option("--config", pe_config, "derive eta_eff, sigma2, V_A from this scenario");
  pe_cmd->add_option("--user", pe_user, "user index for --config");
  pe_cmd->add_option("--eta-eff", pe_eta, "effective transmittance of the linear model");
  pe_cmd->add_option("--sigma2", pe_sigma2, "noise variance");
  pe_cmd->add_option("--va", pe_va, "Alice variance V_A");
  pe_cmd->add_option("--m", pe_m, "samples per trial");
  pe_cmd->add_option("--trials", pe_trials, "number of trials (>= 100)");
  pe_cmd->add_option("--seed", seed, "base seed; trial t uses seed + t");
  pe_cmd->add_option("--eps-pe", pe_eps, "tail probability checked");
  pe_cmd->add_option("--csv", csv_path, "write per-trial estimates to PATH");

  // oracle-check
  std::size_t oc_cases = 200;
  std::uint64_t oc_seed = 42;
  std::optional<double> oc_threshold;
  std::string oc_report;
  auto* oc_cmd = app.add_subcommand("oracle-check", "compare closed forms against the brute-force oracle");
  oc_cmd->add_option("--cases", oc_cases, "number of random configurations");
  oc_cmd->add_option("--seed", oc_seed);
  oc_cmd->add_option("--threshold", oc_threshold, "single threshold for every quantity (0 always fails)");
  oc_cmd->add_option("--report", oc_report, "write the JSON report to PATH");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*skr_cmd) {
      const LoadedConfig cfg = skr_args.resolve();
      emit_breakdown(skr(cfg.system), LoadedConfig{cfg.system, std::nullopt}, {false, clip}, as_json, csv_path);
    } else if (*fin_cmd) {
      const LoadedConfig cfg = fin_args.resolve();
      detail::require(cfg.finite.has_value(), "finite_size: missing (give --block-length or a finite_size block)");
      const SkrBreakdown r = finite_skr(cfg.system, *cfg.finite, FiniteOptions{worst_case_mi});
      emit_breakdown(r, cfg, {worst_case_mi, clip}, as_json, csv_path);
    } else if (*sw_cmd) {
      const LoadedConfig cfg = sw_args.resolve();
      SweepSpec spec;
      spec.base = cfg.system;
      spec.param = parse_sweep_param(sw_param);
      if (sw_finite || spec.param == SweepParam::kBlockLength) {
        detail::require(cfg.finite.has_value(), "finite_size: missing (give --block-length or a finite_size block)");
        spec.finite = cfg.finite;
      }
      spec.grid = make_grid(sw_values, sw_from, sw_to, sw_points, sw_log);
      spec.output = parse_output_mode(sw_output);
      spec.clip_negative = clip;
      spec.worst_case_mi = worst_case_mi;
      const auto records = run_sweep(spec);
      std::ostringstream csv;
      write_sweep_csv(csv, spec, records);
      if (csv_path.empty())
        std::cout << csv.str();
      else
        write_text_file(csv_path, csv.str());
      for (const auto& r : records)
        if (!r.error.empty()) std::cerr << "point " << r.index << " failed: " << r.error << '\n';
    } else if (*fig_cmd) {
      const std::vector<std::string> names =
          fig_name == "all" ? figure_preset_names() : std::vector<std::string>{fig_name};
      for (const auto& name : names) {
        const FigurePreset preset = figure_preset(name);
        const auto results = run_figure(preset, fig_out);
        std::cout << name << ": " << results.size() << " series -> " << fig_out << '\n';
      }
    } else if (*pe_cmd) {
      PeMonteCarloSpec spec;
      if (!pe_config.empty()) {
        spec = pe_spec_for_user(load_config(pe_config).system, pe_user, pe_m, pe_trials, seed);
      } else {
        spec.m = pe_m;
        spec.trials = pe_trials;
        spec.seed = seed;
      }
      if (pe_eta) spec.eta_eff = *pe_eta;
      if (pe_sigma2) spec.sigma2 = *pe_sigma2;
      if (pe_va) spec.v_a = *pe_va;
      spec.eps_pe_tail = pe_eps;
      const PeMonteCarloSummary summary = pe_montecarlo(spec);
      std::cout << to_json(summary).dump(2) << '\n';
      if (!csv_path.empty()) {
        std::ostringstream csv;
        write_trials_csv(csv, summary);
        write_text_file(csv_path, csv.str());
      }
      return summary.passed() ? kExitOk : kExitThreshold;
    } else if (*oc_cmd) {
      OracleThresholds th;
      if (oc_threshold) th = {*oc_threshold, *oc_threshold, *oc_threshold, *oc_threshold};
      const DeviationReport report = compare_report(random_batch(oc_cases, oc_seed), th);
      const json j = to_json(report);
      if (!oc_report.empty()) write_text_file(oc_report, j.dump(2) + "\n");
      json brief = j;
      brief.erase("worst");
      std::cout << brief.dump(2) << '\n';
      std::cout << (report.passed() ? "PASS" : "FAIL") << '\n';
      return report.passed() ? kExitOk : kExitThreshold;
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}
