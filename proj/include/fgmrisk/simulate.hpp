#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "copula.hpp"
#include "error.hpp"
#include "model.hpp"
#include "rng.hpp"

namespace fgmrisk {

enum class StopReason : std::uint8_t { ruin, horizon, event_cap };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::ruin: return "ruin";
    case StopReason::horizon: return "horizon";
    case StopReason::event_cap: return "event_cap";
  }
  return "?";
}

struct RuinRecord {
  bool ruined = false;
  double tau = 0.0;            // valid iff ruined
  double surplus_prior = 0.0;  // X_{tau-}
  double deficit = 0.0;        // |X_tau|
  double discounted_dividends = 0.0;
  StopReason stopped_reason = StopReason::horizon;
  std::uint64_t events = 0;
};

/// How the two marked arrival streams evolve across events.
///
/// regenerative: after every jump both (inter-arrival, size) pairs are drawn
///   afresh and the earlier one fires. This is the law under which the
///   first-jump integral equations (and hence every closed form) are exact.
/// renewal: each stream keeps its own pending pair until it fires, so a claim
///   size stays tied to the full time since the previous claim.
/// Both coincide when theta = theta_bar = 0.
enum class Arrivals : std::uint8_t { regenerative, renewal };

inline const char* to_string(Arrivals a) { return a == Arrivals::regenerative ? "regenerative" : "renewal"; }

struct SimLimits {
  double horizon = 5000.0;
  std::uint64_t event_cap = 10'000'000;
  Arrivals arrivals = Arrivals::regenerative;
  // Without dividends and with theta_bar = 0 the premiums between two claims
  // can be drawn in one go (see claim_epoch_path). Same law, far fewer draws.
  bool aggregate_premiums = true;
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n_paths = 0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  std::uint64_t stopped_ruin = 0;
  std::uint64_t stopped_horizon = 0;
  std::uint64_t stopped_event_cap = 0;
  double truncation_bound = 0.0;  // bound on the bias from stopping at the horizon, when one is known
  double min_ruin_time = std::numeric_limits<double>::infinity();
  std::vector<std::string> warnings;
};

enum class EventType : std::uint8_t { claim, premium, horizon };

struct TraceEvent {
  double time;
  EventType type;
  double jump_size;
  double surplus_after;
};

struct NoTrace {
  void operator()(const TraceEvent&) const noexcept {}
};

/// Tracer writing event_time,event_type,jump_size,surplus_after rows.
class CsvTrace {
 public:
  explicit CsvTrace(std::ostream& os, bool header = true) : os_(&os) {
    if (header) *os_ << "event_time,event_type,jump_size,surplus_after\n";
  }
  void operator()(const TraceEvent& e) const;

 private:
  std::ostream* os_;
};

/// Deterministic motion between jumps.
///
/// Above b the surplus falls at rate d until it reaches b and then stays
/// there; dividends are paid only while strictly above b. `t0` is the
/// absolute time at the start of the interval, used for discounting.
struct DriftStep {
  double surplus;
  double discounted_dividends;
};

inline DriftStep advance_between_events(double x, double b, double d, double delta, double t0, double dt) noexcept {
  if (!(x > b) || d <= 0.0 || dt <= 0.0) return {x, 0.0};
  const double to_b = (x - b) / d;
  const double s = std::min(dt, to_b);
  const double paid = d * std::exp(-delta * t0) * -std::expm1(-delta * s) / delta;
  return {dt >= to_b ? b : x - d * dt, paid};
}

namespace detail {

// 1 - u is exact for u on the 2^-53 lattice, so log beats log1p here.
inline double exp_draw(double rate, Rng& rng) { return -std::log(1.0 - uniform01(rng)) / rate; }

/// Sum of n independent premium sizes.
template <Marginal M>
double sum_of_sizes(const M& marginal, std::uint64_t n, Rng& rng) {
  if (n == 0) return 0.0;
  if constexpr (std::is_same_v<M, ExponentialMarginal>) {
    return std::gamma_distribution<double>(static_cast<double>(n), marginal.mean())(rng);
  } else {
    double s = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) s += marginal.quantile(uniform01(rng));
    return s;
  }
}

/// Path sampled claim to claim; valid without dividends and with theta_bar = 0.
///
/// Premiums then form a Poisson stream independent of the claims. Over a
/// claim inter-arrival W the premium count is Poisson(lambda_bar W). Under
/// regenerative arrivals the claim size depends on the gap back to the last
/// event of either kind, which is min(W, E) with E ~ Exp(lambda_bar) the gap
/// back to the last premium; under renewal it depends on W itself.
template <Marginal ClaimM, Marginal PremiumM>
RuinRecord claim_epoch_path(const BasicModelParams<ClaimM, PremiumM>& params, double x0, const SimLimits& limits,
                            Rng& rng) {
  const bool renewal = limits.arrivals == Arrivals::renewal;
  const double rate = params.lambda, rate_bar = params.lambda_bar;
  RuinRecord rec;
  double x = x0, t = 0.0;
  for (;;) {
    if (rec.events >= limits.event_cap) {
      rec.stopped_reason = StopReason::event_cap;
      return rec;
    }
    double w, y;
    std::uint64_t n;
    if (renewal) {
      const auto c = sample_dependent_pair(rate, params.claim, params.theta, rng);
      w = c.time;
      y = c.amount;
      n = w * rate_bar > 0.0 ? std::poisson_distribution<std::uint64_t>(w * rate_bar)(rng) : 0;
    } else {
      w = exp_draw(rate, rng);
      const double back = exp_draw(rate_bar, rng);
      double gap = w;
      n = 0;
      if (back < w) {
        gap = back;
        n = 1 + std::poisson_distribution<std::uint64_t>((w - back) * rate_bar)(rng);
      }
      y = sample_conditional_size(-std::expm1(-rate * gap), params.claim, params.theta, rng);
    }
    if (t + w > limits.horizon) {
      rec.stopped_reason = StopReason::horizon;
      return rec;
    }
    x += sum_of_sizes(params.premium, n, rng);
    t += w;
    rec.events += n + 1;
    if (x - y < 0.0) {
      rec.ruined = true;
      rec.tau = t;
      rec.surplus_prior = x;
      rec.deficit = y - x;
      rec.stopped_reason = StopReason::ruin;
      return rec;
    }
    x -= y;
  }
}

}  // namespace detail

/// One path of the surplus process with dependent marked arrivals.
/// Ruin can only occur at a claim epoch since the surplus never drifts below
/// min(x0, b).
template <Marginal ClaimM, Marginal PremiumM, class Tracer = NoTrace>
RuinRecord simulate_path(const BasicModelParams<ClaimM, PremiumM>& params, const ThresholdStrategy& strategy,
                         const Discounts& discounts, double x0, const SimLimits& limits, Rng& rng,
                         Tracer&& trace = {}) {
  detail::require(x0 >= 0.0 && std::isfinite(x0), "x0", "initial surplus must be non-negative");
  detail::require(limits.horizon >= 0.0, "horizon", "must be non-negative");
  if constexpr (std::is_same_v<std::decay_t<Tracer>, NoTrace>) {
    if (limits.aggregate_premiums && !strategy.pays_dividends() && params.theta_bar.independent())
      return detail::claim_epoch_path(params, x0, limits, rng);
  }
  const double b = strategy.b();
  const double d = strategy.d();
  const double delta = discounts.delta;
  const bool renewal = limits.arrivals == Arrivals::renewal;

  RuinRecord rec;
  double x = x0, t = 0.0;
  const double rate = params.lambda, rate_bar = params.lambda_bar;
  const double p_claim = rate / (rate + rate_bar);
  // Under regenerative arrivals both clocks restart after every event. The
  // earlier one fires after Exp(rate + rate_bar), independently of which one
  // wins, and the winner's time rank is F(elapsed). Under renewal arrivals
  // each stream keeps its pending (time, size) pair.
  DependentPair claim{}, premium{};
  double next_claim = 0.0, next_premium = 0.0;
  double u_claim = 0.0, u_premium = 0.0;
  auto draw_claim = [&] {
    claim = sample_dependent_pair(rate, params.claim, params.theta, rng);
    next_claim = t + claim.time;
  };
  auto draw_premium = [&] {
    premium = sample_dependent_pair(rate_bar, params.premium, params.theta_bar, rng);
    next_premium = t + premium.time;
  };
  auto draw_clocks = [&] {
    const double dt = detail::exp_draw(rate + rate_bar, rng);
    if (uniform01(rng) < p_claim) {
      next_claim = t + dt;
      next_premium = HUGE_VAL;
      if (!params.theta.independent()) u_claim = -std::expm1(-rate * dt);
    } else {
      next_premium = t + dt;
      next_claim = HUGE_VAL;
      if (!params.theta_bar.independent()) u_premium = -std::expm1(-rate_bar * dt);
    }
  };
  if (renewal) {
    draw_claim();
    draw_premium();
  } else {
    draw_clocks();
  }

  for (;;) {
    const bool is_claim = next_claim <= next_premium;
    const double te = is_claim ? next_claim : next_premium;
    if (te > limits.horizon) {
      const auto step = advance_between_events(x, b, d, delta, t, limits.horizon - t);
      rec.discounted_dividends += step.discounted_dividends;
      x = step.surplus;
      trace(TraceEvent{limits.horizon, EventType::horizon, 0.0, x});
      rec.stopped_reason = StopReason::horizon;
      return rec;
    }
    if (rec.events >= limits.event_cap) {
      rec.stopped_reason = StopReason::event_cap;
      return rec;
    }
    const auto step = advance_between_events(x, b, d, delta, t, te - t);
    rec.discounted_dividends += step.discounted_dividends;
    x = step.surplus;
    t = te;
    ++rec.events;
    if (is_claim) {
      const double y = renewal ? claim.amount : sample_conditional_size(u_claim, params.claim, params.theta, rng);
      const double prior = x;
      x -= y;
      trace(TraceEvent{t, EventType::claim, y, x});
      if (x < 0.0) {
        rec.ruined = true;
        rec.tau = t;
        rec.surplus_prior = prior;
        rec.deficit = -x;
        rec.stopped_reason = StopReason::ruin;
        return rec;
      }
      if (renewal)
        draw_claim();
      else
        draw_clocks();
    } else {
      const double y =
          renewal ? premium.amount : sample_conditional_size(u_premium, params.premium, params.theta_bar, rng);
      x += y;
      trace(TraceEvent{t, EventType::premium, y, x});
      if (renewal)
        draw_premium();
      else
        draw_clocks();
    }
  }
}

inline void CsvTrace::operator()(const TraceEvent& e) const {
  static constexpr const char* names[] = {"claim", "premium", "horizon"};
  std::string line;
  auto append = [&line](double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    line.append(buf, p);
  };
  append(e.time);
  line += ',';
  line += names[static_cast<int>(e.type)];
  line += ',';
  append(e.jump_size);
  line += ',';
  append(e.surplus_after);
  line += '\n';
  *os_ << line;
}

struct McOptions {
  std::uint64_t n_paths = 100'000;
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
  SimLimits limits{};
};

/// Simulates paths [0, n) and returns the records in path order.
/// Worker count only changes who computes which index.
template <Marginal ClaimM, Marginal PremiumM>
std::vector<RuinRecord> simulate_paths(const BasicModelParams<ClaimM, PremiumM>& params,
                                       const ThresholdStrategy& strategy, const Discounts& discounts, double x0,
                                       const McOptions& opt) {
  detail::require(opt.n_paths >= 1, "paths", "need at least one path");
  detail::require(opt.workers >= 1, "workers", "need at least one worker");
  detail::require(x0 >= 0.0 && std::isfinite(x0), "x0", "initial surplus must be non-negative");
  std::vector<RuinRecord> out(opt.n_paths);
  auto run = [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t i = lo; i < hi; ++i) {
      Rng rng = path_stream(opt.master_seed, i);
      out[i] = simulate_path(params, strategy, discounts, x0, opt.limits, rng);
    }
  };
  const std::uint64_t w = std::min<std::uint64_t>(opt.workers, opt.n_paths);
  if (w == 1) {
    run(0, opt.n_paths);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::uint64_t k = 0; k < w; ++k) pool.emplace_back(run, opt.n_paths * k / w, opt.n_paths * (k + 1) / w);
  for (auto& th : pool) th.join();
  return out;
}

namespace detail {

template <class F>
McEstimate summarize(const std::vector<RuinRecord>& recs, F value) {
  McEstimate e;
  e.n_paths = recs.size();
  double mean = 0.0, m2 = 0.0;
  std::uint64_t k = 0;
  for (const auto& r : recs) {
    const double v = value(r);
    ++k;
    const double dlt = v - mean;
    mean += dlt / static_cast<double>(k);
    m2 += dlt * (v - mean);
    switch (r.stopped_reason) {
      case StopReason::ruin: ++e.stopped_ruin; break;
      case StopReason::horizon: ++e.stopped_horizon; break;
      case StopReason::event_cap: ++e.stopped_event_cap; break;
    }
    if (r.ruined) e.min_ruin_time = std::min(e.min_ruin_time, r.tau);
  }
  e.mean = mean;
  e.std_error = k > 1 ? std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k)) : 0.0;
  e.ci95_low = e.mean - 1.96 * e.std_error;
  e.ci95_high = e.mean + 1.96 * e.std_error;
  if (e.stopped_event_cap > 0)
    e.warnings.push_back(std::to_string(e.stopped_event_cap) + " paths hit the event cap");
  return e;
}

template <class P>
void warn_net_profit(McEstimate& e, const P& params, const ThresholdStrategy& strategy) {
  if (!net_profit_check(params, strategy).holds)
    e.warnings.push_back("net profit condition fails; horizon truncation bias is unbounded");
}

}  // namespace detail

template <Marginal ClaimM, Marginal PremiumM>
McEstimate estimate_ruin_probability(const BasicModelParams<ClaimM, PremiumM>& params,
                                     const ThresholdStrategy& strategy, double x0, const McOptions& opt) {
  const auto recs = simulate_paths(params, strategy, Discounts{}, x0, opt);
  auto e = detail::summarize(recs, [](const RuinRecord& r) { return r.ruined ? 1.0 : 0.0; });
  detail::warn_net_profit(e, params, strategy);
  return e;
}

template <Marginal ClaimM, Marginal PremiumM>
McEstimate estimate_gerber_shiu(const BasicModelParams<ClaimM, PremiumM>& params, const ThresholdStrategy& strategy,
                                const PenaltySpec& penalty, double delta0, double x0, const McOptions& opt) {
  detail::require(delta0 >= 0.0 && std::isfinite(delta0), "delta0", "must be non-negative");
  const auto recs = simulate_paths(params, strategy, Discounts{}, x0, opt);
  auto e = detail::summarize(recs, [&](const RuinRecord& r) {
    if (!r.ruined) return 0.0;
    const double disc = delta0 == 0.0 ? 1.0 : std::exp(-delta0 * r.tau);
    return disc * penalty(r.surplus_prior, r.deficit);
  });
  detail::warn_net_profit(e, params, strategy);
  if (!penalty.bounded()) e.warnings.push_back("penalty " + penalty.name() + " is unbounded");
  return e;
}

template <Marginal ClaimM, Marginal PremiumM>
McEstimate estimate_dividend_value(const BasicModelParams<ClaimM, PremiumM>& params,
                                   const ThresholdStrategy& strategy, double delta, double x0, const McOptions& opt) {
  detail::require(delta > 0.0 && std::isfinite(delta), "delta", "must be positive");
  McEstimate e;
  if (!strategy.pays_dividends()) {
    e.n_paths = opt.n_paths;
    e.warnings.push_back("no dividend strategy; value is 0");
    return e;
  }
  const auto recs = simulate_paths(params, strategy, Discounts(0.0, delta), x0, opt);
  e = detail::summarize(recs, [](const RuinRecord& r) { return r.discounted_dividends; });
  e.truncation_bound = strategy.d() / delta * std::exp(-delta * opt.limits.horizon);
  detail::warn_net_profit(e, params, strategy);
  return e;
}

}  // namespace fgmrisk
