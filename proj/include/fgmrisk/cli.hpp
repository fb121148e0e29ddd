#pragma once

// Command layer behind the fgmrisk tool. Each command returns a Report
// (JSON document plus a CSV view); run() adds argument parsing and exit codes.
// Needs the vendored CLI11.hpp and json.hpp on the include path.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "closedform.hpp"
#include "config.hpp"
#include "copula.hpp"
#include "error.hpp"
#include "ide.hpp"
#include "model.hpp"
#include "published.hpp"
#include "rng.hpp"
#include "simulate.hpp"

namespace fgmrisk::cli {

using json = nlohmann::ordered_json;

enum class Method { closed, mc, grid };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::closed: return "closed";
    case Method::mc: return "mc";
    case Method::grid: return "grid";
  }
  return "";
}

inline Method parse_method(std::string_view s) {
  if (s == "closed") return Method::closed;
  if (s == "mc") return Method::mc;
  if (s == "grid") return Method::grid;
  throw ParameterError("expected closed, mc or grid, got '" + std::string(s) + "'", "method");
}

enum class Format { json, csv };

inline Format parse_format(std::string_view s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  throw ParameterError("expected json or csv, got '" + std::string(s) + "'", "format");
}

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int checks_failed = 1;
inline constexpr int parameter = 2;
inline constexpr int numerical = 3;
}  // namespace exit_code

// Locale-independent number formatting.

/// Shortest decimal that reads back to the same double.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string format_fixed(double v, int precision) {
  char buf[512];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  return std::string(buf, r.ptr);
}

inline std::string format_scientific(double v, int precision) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, precision);
  return std::string(buf, r.ptr);
}

struct Report {
  json doc = json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> warnings;
  bool passed = true;  // verification outcome for verify and copula-check

  void warn(const std::string& w) {
    if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
  }

  std::string json_text() const {
    json d = doc;
    d["warnings"] = warnings;
    return d.dump(2) + "\n";
  }

  std::string csv_text() const {
    auto field = [](const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
      }
      return q + "\"";
    };
    std::string text;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) text += ',';
        text += field(cells[i]);
      }
      text += '\n';
    };
    line(columns);
    for (const auto& r : rows) line(r);
    return text;
  }
};

namespace detail {

inline json diagnostics_json(const SolverDiagnostics& d) {
  json values = json::object();
  for (const auto& [k, v] : d.values) values[k] = v;
  return json{{"branch", d.branch}, {"values", values}, {"warnings", d.warnings}};
}

/// Parameters echoed into every report. The worker count is left out on
/// purpose: reports must not depend on it.
inline json config_json(const RunConfig& c) {
  json j;
  j["model"] = {{"lambda", c.lambda}, {"lambda_bar", c.lambda_bar}, {"mu", c.mu},
                {"mu_bar", c.mu_bar}, {"theta", c.theta},   {"theta_bar", c.theta_bar}};
  if (c.b || c.d)
    j["strategy"] = {{"b", c.b.value_or(0.0)}, {"d", c.d.value_or(0.0)}};
  else
    j["strategy"] = nullptr;
  j["discounts"] = {{"delta0", c.delta0}, {"delta", c.delta}};
  return j;
}

inline json mc_json(const RunConfig& c) {
  return {{"paths", c.paths},
          {"seed", c.seed},
          {"horizon", c.horizon},
          {"event_cap", c.event_cap},
          {"arrivals", to_string(c.arrivals)}};
}

inline void require_abscissae(std::span<const double> xs) {
  fgmrisk::detail::require(!xs.empty(), "x", "need at least one abscissa");
  for (double x : xs) fgmrisk::detail::require(x >= 0.0 && std::isfinite(x), "x", "must be non-negative");
}

inline void add_mc_result(Report& r, json& row, std::vector<std::string>& cells, const McEstimate& e) {
  row["std_error"] = e.std_error;
  row["ci95_low"] = e.ci95_low;
  row["ci95_high"] = e.ci95_high;
  row["n_paths"] = e.n_paths;
  row["stopped_ruin"] = e.stopped_ruin;
  row["stopped_horizon"] = e.stopped_horizon;
  row["stopped_event_cap"] = e.stopped_event_cap;
  row["truncation_bound"] = e.truncation_bound;
  for (double v : {e.std_error, e.ci95_low, e.ci95_high}) cells.push_back(format_number(v));
  for (auto v : {e.n_paths, e.stopped_ruin, e.stopped_horizon, e.stopped_event_cap})
    cells.push_back(std::to_string(v));
  cells.push_back(format_number(e.truncation_bound));
  for (const auto& w : e.warnings) r.warn(w);
}

inline const std::vector<std::string> kMcColumns{"std_error",    "ci95_low",        "ci95_high",
                                                 "n_paths",      "stopped_ruin",    "stopped_horizon",
                                                 "stopped_event_cap", "truncation_bound"};

/// Closed form for the ruin probability under the configured model, or an
/// UnsupportedRegimeError naming the parameter that rules it out.
inline Candidate ruin_closed_form(const ModelParams& p, const ThresholdStrategy& s, Variant variant,
                                  SolverDiagnostics& diag) {
  if (!s.pays_dividends()) {
    if (!p.theta_bar.independent())
      throw UnsupportedRegimeError("no closed form when premiums are dependent (use --method grid or mc)",
                                   "theta_bar");
    if (p.theta.independent()) {
      auto sol = psi_independent_no_dividends(p);
      diag = sol.diagnostics;
      return sol;
    }
    auto sol = psi_theta_no_dividends(p, variant);
    diag = sol.diagnostics;
    return sol;
  }
  auto sol = psi_threshold_independent(p, s);
  diag = sol.diagnostics;
  return sol;
}

}  // namespace detail

/// Ruin probability (or the Gerber-Shiu function for another penalty or
/// delta0 > 0) at each abscissa.
inline Report cmd_ruin(const RunConfig& cfg, std::span<const double> xs, Method method,
                       const PenaltySpec& penalty = PenaltySpec::one()) {
  cfg.validate();
  detail::require_abscissae(xs);
  const auto p = cfg.model();
  const auto s = cfg.strategy();
  const bool plain = penalty.kind() == PenaltySpec::Kind::one && cfg.delta0 == 0.0;
  const std::string key = plain ? "psi" : "m";

  Report r;
  r.doc["command"] = "ruin";
  r.doc["method"] = to_string(method);
  r.doc["quantity"] = key;
  r.doc["penalty"] = penalty.name();
  r.doc["config"] = detail::config_json(cfg);
  r.columns = {"x", key};
  json results = json::array();

  switch (method) {
    case Method::closed: {
      if (!plain)
        throw UnsupportedRegimeError("closed forms cover the ruin probability only (penalty one, delta0 = 0)",
                                     cfg.delta0 != 0.0 ? "delta0" : "penalty");
      SolverDiagnostics diag;
      const Candidate c = detail::ruin_closed_form(p, s, cfg.variant, diag);
      r.doc["variant"] = to_string(cfg.variant);
      r.doc["diagnostics"] = detail::diagnostics_json(diag);
      for (const auto& w : diag.warnings) r.warn(w);
      for (double x : xs) {
        const double v = c(x);
        results.push_back({{"x", x}, {key, v}});
        r.rows.push_back({format_number(x), format_number(v)});
      }
      break;
    }
    case Method::mc: {
      r.doc["mc"] = detail::mc_json(cfg);
      r.columns.insert(r.columns.end(), detail::kMcColumns.begin(), detail::kMcColumns.end());
      const auto opt = cfg.mc();
      for (double x : xs) {
        const auto e = estimate_gerber_shiu(p, s, penalty, cfg.delta0, x, opt);
        json row{{"x", x}, {key, e.mean}};
        std::vector<std::string> cells{format_number(x), format_number(e.mean)};
        detail::add_mc_result(r, row, cells, e);
        results.push_back(row);
        r.rows.push_back(cells);
      }
      break;
    }
    case Method::grid: {
      if (s.pays_dividends())
        throw UnsupportedRegimeError("the grid solver covers the model without dividends", "b");
      const auto g = solve_gs_no_dividends(p, penalty, cfg.delta0, cfg.grid());
      r.doc["grid"] = {{"x_max", cfg.x_max},
                       {"n", cfg.n},
                       {"quadrature", to_string(g.quadrature)},
                       {"tail", to_string(g.tail())},
                       {"tail_rate", g.tail_rate()},
                       {"reciprocal_condition", g.reciprocal_condition}};
      for (const auto& w : g.warnings) r.warn(w);
      for (double x : xs) {
        if (x > cfg.x_max) r.warn("x beyond x_max is extrapolated by the tail rule");
        const double v = g(x);
        results.push_back({{"x", x}, {key, v}});
        r.rows.push_back({format_number(x), format_number(v)});
      }
      break;
    }
  }
  r.doc["results"] = results;
  return r;
}

/// Expected discounted dividends until ruin.
inline Report cmd_dividends(const RunConfig& cfg, std::span<const double> xs, Method method) {
  cfg.validate();
  detail::require_abscissae(xs);
  if (method == Method::grid) throw ParameterError("dividends support closed or mc", "method");
  const auto p = cfg.model();
  const auto s = cfg.strategy();

  Report r;
  r.doc["command"] = "dividends";
  r.doc["method"] = to_string(method);
  r.doc["quantity"] = "v";
  r.doc["config"] = detail::config_json(cfg);
  r.columns = {"x", "v"};
  json results = json::array();

  if (!s.pays_dividends()) {
    r.warn("no dividend strategy; value is 0");
    for (double x : xs) {
      results.push_back({{"x", x}, {"v", 0.0}});
      r.rows.push_back({format_number(x), format_number(0.0)});
    }
    r.doc["results"] = results;
    return r;
  }

  if (method == Method::closed) {
    const auto sol = dividends_threshold_independent(p, s, cfg.delta, cfg.variant);
    r.doc["variant"] = to_string(cfg.variant);
    r.doc["diagnostics"] = detail::diagnostics_json(sol.diagnostics);
    for (const auto& w : sol.diagnostics.warnings) r.warn(w);
    for (double x : xs) {
      const double v = sol(x);
      results.push_back({{"x", x}, {"v", v}});
      r.rows.push_back({format_number(x), format_number(v)});
    }
  } else {
    r.doc["mc"] = detail::mc_json(cfg);
    r.columns.insert(r.columns.end(), detail::kMcColumns.begin(), detail::kMcColumns.end());
    const auto opt = cfg.mc();
    for (double x : xs) {
      const auto e = estimate_dividend_value(p, s, cfg.delta, x, opt);
      json row{{"x", x}, {"v", e.mean}};
      std::vector<std::string> cells{format_number(x), format_number(e.mean)};
      detail::add_mc_result(r, row, cells, e);
      results.push_back(row);
      r.rows.push_back(cells);
    }
  }
  r.doc["results"] = results;
  return r;
}

/// Recomputes a published table and its difference to the archived values.
/// --table 1: ruin probability by theta. --table 2: threshold example.
inline Report cmd_reproduce(int table, Variant variant = Variant::as_printed) {
  if (table != 1 && table != 2) throw ParameterError("table must be 1 or 2", "table");
  Report r;
  r.doc["command"] = "reproduce";
  r.doc["table"] = table;
  r.doc["variant"] = to_string(variant);
  json results = json::array();
  double worst = 0.0;
  const RunConfig base;

  if (table == 1) {
    r.columns = {"x"};
    std::vector<ExpSolution> sols;
    for (double th : published::kThetas) {
      const std::string t = format_number(th);
      r.columns.push_back("psi[theta=" + t + "]");
      r.columns.push_back("diff[theta=" + t + "]");
      sols.push_back(psi_theta_no_dividends(
          exponential_model(base.lambda, base.lambda_bar, base.mu, base.mu_bar, th), variant));
    }
    for (std::size_t i = 0; i < published::kAbscissae.size(); ++i) {
      const double x = published::kAbscissae[i];
      json row{{"x", x}};
      std::vector<std::string> cells{format_number(x)};
      for (std::size_t j = 0; j < sols.size(); ++j) {
        const double v = sols[j](x), diff = v - published::kRuinByTheta[i][j];
        worst = std::max(worst, std::abs(diff));
        row[r.columns[1 + 2 * j]] = v;
        row[r.columns[2 + 2 * j]] = diff;
        cells.push_back(format_fixed(v, 6));
        cells.push_back(format_scientific(diff, 2));
      }
      results.push_back(row);
      r.rows.push_back(cells);
    }
  } else {
    r.columns = {"x", "psi0", "diff_psi0", "psi", "diff_psi", "v", "diff_v"};
    const auto p = exponential_model(base.lambda, base.lambda_bar, base.mu, base.mu_bar);
    const auto s = ThresholdStrategy::threshold(published::kThresholdB, published::kThresholdD);
    const auto psi0 = psi_independent_no_dividends(p);
    const auto psi = psi_threshold_independent(p, s);
    const auto v = dividends_threshold_independent(p, s, published::kThresholdDelta, variant);
    for (const auto& t : published::kThresholdTable) {
      const double a = psi0(t.x), b = psi(t.x), c = v(t.x);
      const double da = a - t.psi0, db = b - t.psi, dc = c - t.v;
      worst = std::max({worst, std::abs(da), std::abs(db), std::abs(dc)});
      results.push_back(
          {{"x", t.x}, {"psi0", a}, {"diff_psi0", da}, {"psi", b}, {"diff_psi", db}, {"v", c}, {"diff_v", dc}});
      r.rows.push_back({format_number(t.x), format_fixed(a, 6), format_scientific(da, 2), format_fixed(b, 6),
                        format_scientific(db, 2), format_fixed(c, 6), format_scientific(dc, 2)});
    }
  }
  r.doc["max_abs_diff"] = worst;
  r.doc["results"] = results;
  return r;
}

/// Worst |C(u2 | u1)^{-1}(C(u2 | u1)) - u2| over an n x n interior grid.
inline double copula_round_trip_error(double theta, int n = 50) {
  const FgmParam th(theta);
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u1 = (i + 0.5) / n;
    for (int j = 0; j < n; ++j) {
      const double u2 = (j + 0.5) / n;
      worst = std::max(worst, std::abs(conditional_quantile(u1, conditional_cdf(u1, u2, th), th) - u2));
    }
  }
  return worst;
}

/// Empirical Spearman rho and Kendall tau of copula draws against theta/3 and 2 theta/9.
inline Report cmd_copula_check(double theta, std::uint64_t samples, std::uint64_t seed) {
  const FgmParam th(theta);
  fgmrisk::detail::require(samples >= 2, "samples", "need at least two samples");
  Rng rng(mix64(seed));
  std::vector<double> a(samples), b(samples);
  for (std::uint64_t i = 0; i < samples; ++i) {
    a[i] = uniform01(rng);
    b[i] = fgmrisk::detail::conditional_quantile_unchecked(a[i], uniform01(rng), theta);
  }
  const double rho = spearman_rho(a, b), tau = kendall_tau(a, b);
  const double rho_t = theta / 3.0, tau_t = 2.0 * theta / 9.0;
  const double rt = copula_round_trip_error(theta);
  constexpr double tol = 0.015;

  Report r;
  r.passed = std::abs(rho - rho_t) <= tol && std::abs(tau - tau_t) <= tol && rt < 1e-12;
  r.doc["command"] = "copula-check";
  r.doc["theta"] = theta;
  r.doc["samples"] = samples;
  r.doc["seed"] = seed;
  r.doc["results"] = json::array({{{"spearman_rho", rho},
                                   {"spearman_rho_theory", rho_t},
                                   {"spearman_rho_diff", rho - rho_t},
                                   {"kendall_tau", tau},
                                   {"kendall_tau_theory", tau_t},
                                   {"kendall_tau_diff", tau - tau_t},
                                   {"round_trip_max_error", rt}}});
  r.doc["tolerance"] = tol;
  r.doc["passed"] = r.passed;
  r.columns = {"theta", "samples", "spearman_rho", "spearman_rho_theory", "kendall_tau", "kendall_tau_theory",
               "round_trip_max_error", "passed"};
  r.rows.push_back({format_number(theta), std::to_string(samples), format_number(rho), format_number(rho_t),
                    format_number(tau), format_number(tau_t), format_number(rt), r.passed ? "true" : "false"});
  return r;
}

namespace detail {

struct Checklist {
  Report& report;
  json items = json::array();

  void add(const std::string& name, const std::string& status, double value, double tolerance,
           const std::string& note = {}) {
    if (status == "fail" || status == "error") report.passed = false;
    json j{{"name", name}, {"status", status}};
    j["value"] = value;
    j["tolerance"] = tolerance;
    if (!note.empty()) j["detail"] = note;
    items.push_back(j);
    report.rows.push_back(
        {name, status, format_number(value), format_number(tolerance), note});
  }
  void bound(const std::string& name, double value, double tolerance, const std::string& note = {}) {
    add(name, std::abs(value) <= tolerance ? "pass" : "fail", value, tolerance, note);
  }
  void skip(const std::string& name, const std::string& status, const std::string& note) {
    items.push_back({{"name", name}, {"status", status}, {"detail", note}});
    report.rows.push_back({name, status, "", "", note});
  }
};

inline void check_diagnostics(Checklist& list, const std::string& prefix, const SolverDiagnostics& d) {
  for (const auto& [k, v] : d.values) {
    if (k.starts_with("root_residual")) list.bound(prefix + "." + k, v, 1e-10);
    if (k == "system_residual" || k == "continuity_gap") list.bound(prefix + "." + k, v, 1e-9);
  }
}

}  // namespace detail

/// Root, boundary-system and integral-equation residuals of every closed form
/// that applies to the configuration, plus Monte Carlo comparisons at x = 0, 5, 20.
/// Closed forms are taken in their model-consistent form.
inline Report cmd_verify(const RunConfig& cfg) {
  cfg.validate();
  const auto p = cfg.model();
  const auto s = cfg.strategy();
  const Discounts disc(0.0, cfg.delta);

  Report r;
  r.columns = {"name", "status", "value", "tolerance", "detail"};
  detail::Checklist list{r};
  r.doc["command"] = "verify";
  r.doc["config"] = detail::config_json(cfg);
  r.doc["mc"] = detail::mc_json(cfg);

  // Candidates: closed forms where available, the grid solution for
  // dependent premiums without dividends.
  std::optional<Candidate> ruin, value;
  std::optional<GridFunction> grid;
  try {
    SolverDiagnostics diag;
    ruin = detail::ruin_closed_form(p, s, Variant::model_consistent, diag);
    r.doc["ruin_diagnostics"] = detail::diagnostics_json(diag);
    detail::check_diagnostics(list, "ruin", diag);
    if (!s.pays_dividends() && !p.theta.independent()) {
      const auto br = claim_dependence_boundary_residuals(p, ruin->pieces()[0].fn);
      list.bound("ruin.boundary_residual_at_zero", br.at_zero, 1e-9);
      list.bound("ruin.boundary_residual_derivative", br.derivative_at_zero, 1e-9);
    }
  } catch (const UnsupportedRegimeError& e) {
    list.skip("ruin.closed_form", "unsupported_regime", e.what());
    if (!s.pays_dividends()) {
      grid = solve_gs_no_dividends(p, PenaltySpec::one(), 0.0, cfg.grid());
      for (const auto& w : grid->warnings) r.warn(w);
      ruin = *grid;
      const auto roots = premium_dependence_roots(p);
      r.doc["premium_dependence_roots"] = roots.roots;
    }
  }
  if (s.pays_dividends()) {
    try {
      const auto sol = dividends_threshold_independent(p, s, cfg.delta, Variant::model_consistent);
      r.doc["value_diagnostics"] = detail::diagnostics_json(sol.diagnostics);
      detail::check_diagnostics(list, "dividends", sol.diagnostics);
      value = sol;
    } catch (const UnsupportedRegimeError& e) {
      list.skip("dividends.closed_form", "unsupported_regime", e.what());
    }
  }

  for (Equation eq : kAllEquations) {
    const std::string name = "residual." + to_string(eq);
    const auto& cand = fgmrisk::detail::is_dividend_equation(eq) ? value : ruin;
    if (!cand) {
      list.skip(name, "not_applicable", "no candidate solution for this configuration");
      continue;
    }
    try {
      auto probes = default_probes(eq, s);
      // A grid solution satisfies the discrete equations at its nodes only;
      // in between it carries the O(h^2) interpolation error.
      const bool snapped = grid && !fgmrisk::detail::is_dividend_equation(eq);
      if (snapped) {
        const auto xs = grid->xs();
        const double h = xs[1] - xs[0];
        for (double& x : probes)
          x = xs[std::min(xs.size() - 1, static_cast<std::size_t>(std::llround(x / h)))];
      }
      const auto rep = residual(*cand, p, s, PenaltySpec::one(), disc, eq, probes);
      const bool ok = rep.max_abs_residual <= 1e-8 || rep.max_rel_residual <= 1e-7;
      list.add(name, ok ? "pass" : "fail", rep.max_abs_residual, 1e-8,
               "max relative " + format_number(rep.max_rel_residual) + (snapped ? "; probes at grid nodes" : ""));
    } catch (const ParameterError& e) {
      list.skip(name, "not_applicable", e.what());
    } catch (const NumericalError& e) {
      list.add(name, "error", NAN, 1e-8, e.what());
    }
  }

  if (ruin || value) {
    const auto opt = cfg.mc();
    for (double x : {0.0, 5.0, 20.0}) {
      const auto recs = simulate_paths(p, s, disc, x, opt);
      const std::string at = "[x=" + format_number(x) + "]";
      if (ruin) {
        const auto e = fgmrisk::detail::summarize(recs, [](const RuinRecord& rec) { return rec.ruined ? 1.0 : 0.0; });
        const double slack = grid ? 1e-3 : 0.0;
        list.bound("mc.psi" + at, e.mean - (*ruin)(x), 3.0 * e.std_error + slack,
                   "mc " + format_number(e.mean) + " +- " + format_number(e.std_error));
      }
      if (value) {
        const auto e = fgmrisk::detail::summarize(recs, [](const RuinRecord& rec) { return rec.discounted_dividends; });
        const double trunc = s.d() / cfg.delta * std::exp(-cfg.delta * cfg.horizon);
        list.bound("mc.v" + at, e.mean - (*value)(x), 3.0 * e.std_error + trunc,
                   "mc " + format_number(e.mean) + " +- " + format_number(e.std_error));
      }
    }
  }

  r.doc["checks"] = list.items;
  r.doc["passed"] = r.passed;
  return r;
}

namespace detail {

/// Flag bindings that override config-file values only when given.
class Overrides {
 public:
  template <class T, class F>
  void bind(CLI::App* app, const std::string& name, const std::string& help, F set) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help);
    setters_.push_back([opt, value, set](RunConfig& c) {
      if (opt->count() > 0) set(c, *value);
    });
  }

  void apply(RunConfig& c) const {
    for (const auto& f : setters_) f(c);
  }

 private:
  std::vector<std::function<void(RunConfig&)>> setters_;
};

struct Common {
  std::string preset;
  std::string config;
  std::string format;
  std::string out;
  std::string method = "closed";
  std::string penalty = "one";
  std::vector<double> xs;
  Overrides overrides;
};

inline void add_model_options(CLI::App* app, Common& c) {
  auto& o = c.overrides;
  app->add_option("--preset", c.preset, "named parameter set: paper-sec6, paper-sec6-dividends");
  app->add_option("--config", c.config, "INI file with [model] [strategy] [discounts] [mc] [grid] sections");
  o.bind<double>(app, "--lambda", "claim intensity", [](RunConfig& r, double v) { r.lambda = v; });
  o.bind<double>(app, "--lambda-bar", "premium intensity", [](RunConfig& r, double v) { r.lambda_bar = v; });
  o.bind<double>(app, "--mu", "mean claim size", [](RunConfig& r, double v) { r.mu = v; });
  o.bind<double>(app, "--mu-bar", "mean premium size", [](RunConfig& r, double v) { r.mu_bar = v; });
  o.bind<double>(app, "--theta", "claim-side FGM parameter", [](RunConfig& r, double v) { r.theta = v; });
  o.bind<double>(app, "--theta-bar", "premium-side FGM parameter", [](RunConfig& r, double v) { r.theta_bar = v; });
  o.bind<double>(app, "--b", "dividend threshold", [](RunConfig& r, double v) { r.b = v; });
  o.bind<double>(app, "--d", "dividend rate", [](RunConfig& r, double v) { r.d = v; });
  o.bind<double>(app, "--delta0", "Gerber-Shiu discount force", [](RunConfig& r, double v) { r.delta0 = v; });
  o.bind<double>(app, "--delta", "dividend discount force", [](RunConfig& r, double v) { r.delta = v; });
  o.bind<std::string>(app, "--variant", "closed-form variant: model-consistent or as-printed",
                      [](RunConfig& r, const std::string& v) { r.variant = parse_variant(v); });
}

inline void add_mc_options(CLI::App* app, Common& c) {
  auto& o = c.overrides;
  o.bind<std::int64_t>(app, "--paths", "Monte Carlo paths", [](RunConfig& r, std::int64_t v) {
    fgmrisk::detail::require(v >= 1, "paths", "need at least one path");
    r.paths = static_cast<std::uint64_t>(v);
  });
  o.bind<std::uint64_t>(app, "--seed", "master seed", [](RunConfig& r, std::uint64_t v) { r.seed = v; });
  o.bind<std::int64_t>(app, "--workers", "threads (results do not depend on it)", [](RunConfig& r, std::int64_t v) {
    fgmrisk::detail::require(v >= 1, "workers", "need at least one worker");
    r.workers = static_cast<unsigned>(v);
  });
  o.bind<double>(app, "--horizon", "time horizon per path", [](RunConfig& r, double v) { r.horizon = v; });
  o.bind<std::int64_t>(app, "--event-cap", "maximum events per path", [](RunConfig& r, std::int64_t v) {
    fgmrisk::detail::require(v >= 1, "event_cap", "must be positive");
    r.event_cap = static_cast<std::uint64_t>(v);
  });
  o.bind<std::string>(app, "--arrivals", "regenerative or renewal",
                      [](RunConfig& r, const std::string& v) { r.arrivals = parse_arrivals(v); });
}

inline void add_grid_options(CLI::App* app, Common& c) {
  auto& o = c.overrides;
  o.bind<double>(app, "--x-max", "grid upper end", [](RunConfig& r, double v) { r.x_max = v; });
  o.bind<std::int64_t>(app, "--n", "grid cells", [](RunConfig& r, std::int64_t v) {
    fgmrisk::detail::require(v >= 4, "n", "need at least 4 cells");
    r.n = static_cast<std::size_t>(v);
  });
  o.bind<std::string>(app, "--quadrature", "gauss or trapezoid",
                      [](RunConfig& r, const std::string& v) { r.quadrature = parse_quadrature(v); });
}

inline void add_output_options(CLI::App* app, Common& c, const char* default_format) {
  c.format = default_format;
  app->add_option("--format", c.format, "json or csv")->capture_default_str();
  app->add_option("--out", c.out, "write the report to this file instead of stdout");
}

inline RunConfig resolve(const Common& c) {
  RunConfig cfg = c.preset.empty() ? RunConfig{} : preset(c.preset);
  if (!c.config.empty()) cfg = load_config(c.config, cfg);
  c.overrides.apply(cfg);
  return cfg;
}

inline void emit(const Report& r, const Common& c, std::ostream& out, std::ostream& err) {
  const std::string text = parse_format(c.format) == Format::json ? r.json_text() : r.csv_text();
  for (const auto& w : r.warnings) err << "warning: " << w << "\n";
  if (c.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw ParameterError("cannot open '" + c.out + "' for writing", "out");
  f << text;
  if (!f) throw ParameterError("write failed for '" + c.out + "'", "out");
}

}  // namespace detail

/// Entry point of the fgmrisk tool. Exit codes: 0 success, 1 verification
/// failed, 2 invalid parameters, 3 numerical failure.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ruin probabilities and dividends with FGM-dependent claims and premiums"};
  app.require_subcommand(1, 1);
  detail::Common cr, cd, cp, cc, cv;

  auto* ruin = app.add_subcommand("ruin", "ruin probability (Gerber-Shiu function with --penalty/--delta0)");
  detail::add_model_options(ruin, cr);
  detail::add_mc_options(ruin, cr);
  detail::add_grid_options(ruin, cr);
  detail::add_output_options(ruin, cr, "json");
  ruin->add_option("--x", cr.xs, "initial surplus; comma-separated or repeated")->delimiter(',');
  ruin->add_option("--method", cr.method, "closed, mc or grid")->capture_default_str();
  ruin->add_option("--penalty", cr.penalty,
                   "one, deficit, surplus_prior, product or indicator_deficit_le:A (mc and grid)")
      ->capture_default_str();

  auto* div = app.add_subcommand("dividends", "expected discounted dividends until ruin");
  detail::add_model_options(div, cd);
  detail::add_mc_options(div, cd);
  detail::add_output_options(div, cd, "json");
  div->add_option("--x", cd.xs, "initial surplus; comma-separated or repeated")->delimiter(',');
  div->add_option("--method", cd.method, "closed or mc")->capture_default_str();

  int table = 0;
  std::string repro_variant;
  auto* repro = app.add_subcommand("reproduce", "recompute a published table with a diff column");
  repro->add_option("--table", table, "1 (ruin by theta) or 2 (threshold example)")->required();
  repro->add_option("--variant", repro_variant, "as-printed (default) or model-consistent");
  detail::add_output_options(repro, cp, "csv");

  double cop_theta = 0.0;
  std::int64_t cop_samples = 100'000;
  std::uint64_t cop_seed = 1;
  auto* cop = app.add_subcommand("copula-check", "empirical Spearman rho and Kendall tau of FGM draws");
  cop->add_option("--theta", cop_theta, "FGM parameter")->capture_default_str();
  cop->add_option("--samples", cop_samples, "number of draws")->capture_default_str();
  cop->add_option("--seed", cop_seed, "seed")->capture_default_str();
  detail::add_output_options(cop, cc, "json");

  auto* ver = app.add_subcommand("verify", "residual and Monte Carlo checks; exit 0 iff all pass");
  detail::add_model_options(ver, cv);
  detail::add_mc_options(ver, cv);
  detail::add_grid_options(ver, cv);
  detail::add_output_options(ver, cv, "json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::parameter;
  }

  const detail::Common& c = ruin->parsed() ? cr : div->parsed() ? cd : repro->parsed() ? cp : cop->parsed() ? cc : cv;
  try {
    (void)parse_format(c.format);
    Report r;
    if (ruin->parsed()) {
      const std::vector<double> xs = c.xs.empty() ? std::vector<double>{0.0} : c.xs;
      r = cmd_ruin(detail::resolve(c), xs, parse_method(c.method), PenaltySpec::parse(c.penalty));
    } else if (div->parsed()) {
      const std::vector<double> xs = c.xs.empty() ? std::vector<double>{0.0} : c.xs;
      r = cmd_dividends(detail::resolve(c), xs, parse_method(c.method));
    } else if (repro->parsed()) {
      r = cmd_reproduce(table, repro_variant.empty() ? Variant::as_printed : parse_variant(repro_variant));
    } else if (cop->parsed()) {
      fgmrisk::detail::require(cop_samples >= 2, "samples", "need at least two samples");
      r = cmd_copula_check(cop_theta, static_cast<std::uint64_t>(cop_samples), cop_seed);
    } else {
      r = cmd_verify(detail::resolve(c));
    }
    detail::emit(r, c, out, err);
    return r.passed ? exit_code::ok : exit_code::checks_failed;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::parameter;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return exit_code::numerical;
  }
}

}  // namespace fgmrisk::cli
