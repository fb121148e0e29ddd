#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "closedform.hpp"
#include "error.hpp"
#include "ide.hpp"
#include "model.hpp"
#include "simulate.hpp"

namespace fgmrisk {

/// Everything a command needs. Defaults are the worked example used
/// throughout the docs (lambda 0.1, lambda_bar 2.3, mu 3, mu_bar 0.2).
struct RunConfig {
  // [model]
  double lambda = 0.1;
  double lambda_bar = 2.3;
  double mu = 3.0;
  double mu_bar = 0.2;
  double theta = 0.0;
  double theta_bar = 0.0;
  // [strategy]; both absent means no dividends
  std::optional<double> b;
  std::optional<double> d;
  // [discounts]
  double delta0 = 0.0;
  double delta = 0.01;
  // [mc]
  std::uint64_t paths = 100'000;
  std::uint64_t seed = 1;
  double horizon = 5000.0;
  std::uint64_t event_cap = 10'000'000;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  Arrivals arrivals = Arrivals::regenerative;
  // [grid]
  double x_max = 150.0;
  std::size_t n = 3000;
  Quadrature quadrature = Quadrature::gauss;
  // [closedform]
  Variant variant = Variant::model_consistent;

  ModelParams model() const { return exponential_model(lambda, lambda_bar, mu, mu_bar, theta, theta_bar); }

  ThresholdStrategy strategy() const {
    if (!b && !d) return ThresholdStrategy::none();
    detail::require(b.has_value(), "b", "threshold strategy needs both b and d");
    detail::require(d.has_value(), "d", "threshold strategy needs both b and d");
    return ThresholdStrategy::threshold(*b, *d);
  }

  Discounts discounts() const { return Discounts(delta0, delta); }

  McOptions mc() const {
    detail::require(paths >= 1, "paths", "need at least one path");
    detail::require(workers >= 1, "workers", "need at least one worker");
    detail::require(horizon > 0.0, "horizon", "must be positive");
    detail::require(event_cap >= 1, "event_cap", "must be positive");
    McOptions o;
    o.n_paths = paths;
    o.master_seed = seed;
    o.workers = workers;
    o.limits.horizon = horizon;
    o.limits.event_cap = event_cap;
    o.limits.arrivals = arrivals;
    return o;
  }

  GridSpec grid() const {
    GridSpec g;
    g.x_max = x_max;
    g.n = n;
    g.quadrature = quadrature;
    return g;
  }

  /// Throws ParameterError naming the first invalid field.
  void validate() const {
    (void)model();
    (void)strategy();
    (void)discounts();
    (void)mc();
    detail::require(x_max > 0.0 && std::isfinite(x_max), "x_max", "must be positive");
    detail::require(n >= 4, "n", "need at least 4 cells");
  }
};

inline Arrivals parse_arrivals(std::string_view s) {
  if (s == "regenerative") return Arrivals::regenerative;
  if (s == "renewal") return Arrivals::renewal;
  throw ParameterError("expected regenerative or renewal, got '" + std::string(s) + "'", "arrivals");
}

inline Variant parse_variant(std::string_view s) {
  if (s == "model-consistent" || s == "model_consistent") return Variant::model_consistent;
  if (s == "as-printed" || s == "as_printed") return Variant::as_printed;
  throw ParameterError("expected model-consistent or as-printed, got '" + std::string(s) + "'", "variant");
}

inline Quadrature parse_quadrature(std::string_view s) {
  if (s == "gauss") return Quadrature::gauss;
  if (s == "trapezoid") return Quadrature::trapezoid;
  throw ParameterError("expected gauss or trapezoid, got '" + std::string(s) + "'", "quadrature");
}

/// Named parameter sets. "paper-sec6" is the worked example,
/// "paper-sec6-dividends" adds the threshold b = 5, d = 0.1 and delta = 0.01.
inline RunConfig preset(std::string_view name) {
  RunConfig c;
  if (name == "paper-sec6") return c;
  if (name == "paper-sec6-dividends") {
    c.b = 5.0;
    c.d = 0.1;
    c.delta = 0.01;
    return c;
  }
  throw ParameterError("unknown preset '" + std::string(name) + "'", "preset");
}

namespace detail {

template <class T>
T ini_number(const boost::property_tree::ptree& node, const std::string& key) {
  const auto raw = node.get_value<std::string>();
  std::size_t used = 0;
  try {
    if constexpr (std::is_floating_point_v<T>) {
      const double v = std::stod(raw, &used);
      if (used == raw.size()) return v;
    } else {
      if (!raw.empty() && raw.front() != '-') {
        const unsigned long long v = std::stoull(raw, &used);
        if (used == raw.size() && v <= std::numeric_limits<T>::max()) return static_cast<T>(v);
      }
    }
  } catch (const std::logic_error&) {
  }
  throw ParameterError("cannot parse '" + raw + "'", key.c_str());
}

}  // namespace detail

/// Reads an INI file with sections [model], [strategy], [discounts], [mc],
/// [grid] and [closedform] on top of `base`. Unknown sections or keys are errors.
inline RunConfig load_config(const std::string& path, RunConfig base = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParameterError(e.what(), "config");
  }
  RunConfig& c = base;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ParameterError("key '" + section + "' outside a section", "config");
    for (const auto& [key, node] : body) {
      const std::string name = section + "." + key;
      auto num = [&] { return detail::ini_number<double>(node, name); };
      auto count = [&] { return detail::ini_number<std::uint64_t>(node, name); };
      if (name == "model.lambda") c.lambda = num();
      else if (name == "model.lambda_bar") c.lambda_bar = num();
      else if (name == "model.mu") c.mu = num();
      else if (name == "model.mu_bar") c.mu_bar = num();
      else if (name == "model.theta") c.theta = num();
      else if (name == "model.theta_bar") c.theta_bar = num();
      else if (name == "strategy.b") c.b = num();
      else if (name == "strategy.d") c.d = num();
      else if (name == "discounts.delta0") c.delta0 = num();
      else if (name == "discounts.delta") c.delta = num();
      else if (name == "mc.paths") c.paths = count();
      else if (name == "mc.seed") c.seed = count();
      else if (name == "mc.horizon") c.horizon = num();
      else if (name == "mc.event_cap") c.event_cap = count();
      else if (name == "mc.workers") c.workers = static_cast<unsigned>(count());
      else if (name == "mc.arrivals") c.arrivals = parse_arrivals(node.data());
      else if (name == "grid.x_max") c.x_max = num();
      else if (name == "grid.n") c.n = count();
      else if (name == "grid.quadrature") c.quadrature = parse_quadrature(node.data());
      else if (name == "closedform.variant") c.variant = parse_variant(node.data());
      else throw ParameterError("unknown key '" + name + "'", "config");
    }
  }
  return c;
}

}  // namespace fgmrisk
