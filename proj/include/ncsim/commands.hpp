#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "analysis.hpp"
#include "capacity.hpp"
#include "csv.hpp"
#include "netio.hpp"
#include "netmodel.hpp"
#include "sim.hpp"

namespace ncsim {

// Raised when a statistical estimate cannot be produced (exit code 4).
struct NoFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace cmd_detail {

inline int net_source(const NetworkSpec& net) {
  return std::visit([](const auto& n) { return n.source; }, net);
}

inline std::vector<int> net_sinks(const NetworkSpec& net) {
  return std::visit([](const auto& n) { return n.sinks; }, net);
}

inline std::string format_set(const std::set<int>& s) {
  std::string out = "{";
  bool first = true;
  for (const int n : s) {
    if (!first) out += '|';
    out += std::to_string(n);
    first = false;
  }
  return out + "}";
}

// FNV-1a over the canonical config string, recorded in the CSV metadata so
// outputs can be matched back to their configuration.
inline std::uint64_t config_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline void standard_meta(ResultsTable& t, const std::string& command,
                          const std::string& config, std::uint64_t seed) {
  t.add_meta("tool", "ncsim 1.0");
  t.add_meta("command", command);
  t.add_meta("config_hash", config_hash(config));
  t.add_meta("seed", seed);
}

inline bool all_sinks_decoded(const SimTrace& trace,
                              const std::vector<int>& sinks) {
  for (const int t : sinks) {
    const auto it = trace.sinks.find(t);
    if (it == trace.sinks.end() || !it->second.decoded) return false;
  }
  return true;
}

// Aloha hyperarcs carry only slot probabilities; derive the z maps before any
// capacity computation.
inline NetworkSpec derived_rates(NetworkSpec net) {
  if (auto* w = std::get_if<WirelessNetwork>(&net))
    if (w->aloha) *w = aloha_reception_rates(*w);
  return net;
}

} // namespace cmd_detail

// ---------------------------------------------------------------------------
// capacity

inline ResultsTable cmd_capacity(const NetworkSpec& net_in,
                                 std::vector<int> sinks = {}) {
  const NetworkSpec net = cmd_detail::derived_rates(net_in);
  const int s = cmd_detail::net_source(net);
  if (sinks.empty()) sinks = cmd_detail::net_sinks(net);
  if (sinks.empty()) throw ConfigError("capacity: network has no sinks");
  ResultsTable t({"sink", "capacity", "cut_set"});
  cmd_detail::standard_meta(t, "capacity", "capacity", 0);
  for (const int sink : sinks) {
    const Cut cut = std::visit(
        [&](const auto& n) {
          if (!n.has_node(sink)) throw ConfigError("capacity: unknown sink");
          return min_cut(n, s, sink);
        },
        net);
    t.add_row({static_cast<std::int64_t>(sink), cut.value,
               cmd_detail::format_set(cut.q)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::size_t K = 0;
  std::size_t lambda = 1;
  int field = 256;
  std::optional<double> rate;
  std::optional<double> delta;
  double headroom = 0.25; // delta = K/rate * (1 + headroom) when delta absent
  std::size_t reps = 1;
  std::uint64_t seed = 0;
  bool rateless = false;
  std::vector<int> sinks; // empty = network sinks

  double deadline() const {
    if (delta) return *delta;
    if (!rate || *rate <= 0.0)
      throw ConfigError("simulate: need --delta or a positive --rate");
    return static_cast<double>(K) / *rate * (1.0 + headroom);
  }
};

inline ResultsTable cmd_simulate(const NetworkSpec& net,
                                 const SimulateOptions& opt) {
  if (opt.K == 0) throw ConfigError("simulate: need K >= 1");
  if (opt.reps == 0) throw ConfigError("simulate: need reps >= 1");
  SimConfig cfg;
  cfg.net = net;
  cfg.K = opt.K;
  cfg.lambda = opt.lambda;
  cfg.field = opt.field;
  cfg.seed = opt.seed;
  cfg.replications = opt.reps;
  if (!opt.sinks.empty())
    std::visit([&](auto& n) { n.sinks = opt.sinks; }, cfg.net);
  const std::vector<int> sinks = cmd_detail::net_sinks(cfg.net);
  if (sinks.empty()) throw ConfigError("simulate: network has no sinks");
  const double deadline = opt.deadline();
  if (opt.rateless) {
    cfg.mode = SimMode::Rateless;
    cfg.rateless_time_cap = deadline;
  } else {
    cfg.mode = SimMode::Block;
    cfg.delta = deadline;
  }

  std::ostringstream conf;
  conf << "simulate K=" << opt.K << " lambda=" << opt.lambda
       << " field=" << opt.field << " delta=" << deadline
       << " reps=" << opt.reps << " rateless=" << opt.rateless;
  ResultsTable t({"rep", "sink", "decoded", "decode_time", "final_rank"});
  cmd_detail::standard_meta(t, "simulate", conf.str(), opt.seed);
  t.add_meta("K", static_cast<std::uint64_t>(opt.K));
  t.add_meta("delta", deadline);

  const auto results = run(cfg);
  std::uint64_t successes = 0;
  for (std::size_t r = 0; r < results.size(); ++r) {
    if (cmd_detail::all_sinks_decoded(results[r].trace, sinks)) ++successes;
    for (const int sink : sinks) {
      const auto it = results[r].trace.sinks.find(sink);
      const SinkOutcome out =
          it == results[r].trace.sinks.end() ? SinkOutcome{} : it->second;
      t.add_row({static_cast<std::uint64_t>(r), static_cast<std::int64_t>(sink),
                 static_cast<std::int64_t>(out.decoded ? 1 : 0),
                 out.decode_time, static_cast<std::uint64_t>(out.final_rank)});
    }
  }
  t.add_meta("successes", successes);
  t.add_meta("success_rate", static_cast<double>(successes) / opt.reps);
  return t;
}

// ---------------------------------------------------------------------------
// sweep: success rate against a rate grid, delta = K / R per point

struct SweepOptions {
  std::size_t K = 0;
  std::size_t lambda = 1;
  int field = 256;
  std::vector<double> rates;
  std::size_t reps = 1;
  std::uint64_t seed = 0;
};

inline ResultsTable cmd_sweep(const NetworkSpec& net, const SweepOptions& opt) {
  if (opt.K == 0) throw ConfigError("sweep: need K >= 1");
  if (opt.rates.empty()) throw ConfigError("sweep: empty rate grid");
  if (opt.reps == 0) throw ConfigError("sweep: need reps >= 1");
  const std::vector<int> sinks = cmd_detail::net_sinks(net);
  if (sinks.empty()) throw ConfigError("sweep: network has no sinks");

  std::ostringstream conf;
  conf << "sweep K=" << opt.K << " field=" << opt.field << " reps=" << opt.reps;
  ResultsTable t({"rate", "delta", "successes", "reps", "success_rate"});
  cmd_detail::standard_meta(t, "sweep", conf.str(), opt.seed);

  for (std::size_t i = 0; i < opt.rates.size(); ++i) {
    const double rate = opt.rates[i];
    if (rate <= 0.0) throw ConfigError("sweep: rates must be positive");
    SimConfig cfg;
    cfg.net = net;
    cfg.K = opt.K;
    cfg.lambda = opt.lambda;
    cfg.field = opt.field;
    cfg.mode = SimMode::Block;
    cfg.delta = static_cast<double>(opt.K) / rate;
    cfg.replications = opt.reps;
    cfg.seed = Rng::mix(opt.seed ^ (i + 1));
    std::uint64_t successes = 0;
    for (const auto& r : run(cfg))
      if (cmd_detail::all_sinks_decoded(r.trace, sinks)) ++successes;
    t.add_row({rate, cfg.delta, successes,
               static_cast<std::uint64_t>(opt.reps),
               static_cast<double>(successes) / opt.reps});
  }
  return t;
}

// ---------------------------------------------------------------------------
// exponent: empirical error-probability decay against the analytic curves

struct ExponentOptions {
  double rate = 0.0;
  std::vector<double> deltas;
  int rho = 1;
  int field = 256;
  std::size_t lambda = 1;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
};

struct ExponentOutcome {
  ResultsTable table;
  ExponentFit fit;
  double capacity = 0.0;
};

inline ExponentOutcome cmd_exponent(const NetworkSpec& net,
                                    const ExponentOptions& opt) {
  if (opt.rate <= 0.0) throw ConfigError("exponent: need a positive --rate");
  if (opt.deltas.empty()) throw ConfigError("exponent: empty delta grid");
  if (opt.reps == 0) throw ConfigError("exponent: need reps >= 1");
  const int s = cmd_detail::net_source(net);
  const std::vector<int> sinks = cmd_detail::net_sinks(net);
  if (sinks.size() != 1)
    throw ConfigError("exponent: exactly one sink required");

  const double C = std::visit(
      [&](const auto& n) { return min_cut(n, s, sinks[0]).value; },
      cmd_detail::derived_rates(net));
  if (opt.rate >= C)
    throw ConfigError("exponent: rate must be below the capacity " +
                      ResultsTable::format_double(C));
  // the Chernoff curves assume memoryless traffic; flag anything else
  bool poisson_comparable = true;
  if (const auto* w = std::get_if<WirelineNetwork>(&net)) {
    for (const Arc& a : w->arcs) {
      const bool poisson =
          (!a.injection && a.z) ||
          (a.injection && std::holds_alternative<PoissonInjection>(*a.injection));
      const bool iid = std::holds_alternative<std::monostate>(a.loss) ||
                       std::holds_alternative<IidLoss>(a.loss);
      if (!poisson || !iid) poisson_comparable = false;
    }
  } else {
    poisson_comparable = !std::get<WirelessNetwork>(net).aloha;
  }

  const ExponentCurve curve = exponent_curve(C, opt.rate, opt.field, opt.rho);

  SimConfig base;
  base.net = net;
  base.lambda = opt.lambda;
  base.field = opt.field;
  base.seed = opt.seed;
  const auto points =
      estimate_error_probability(base, opt.rate, opt.deltas, opt.reps);

  std::ostringstream conf;
  conf << "exponent rate=" << opt.rate << " rho=" << opt.rho
       << " field=" << opt.field << " reps=" << opt.reps;
  ResultsTable t({"delta", "K", "failures", "reps", "p_hat", "wilson_lo",
                  "wilson_hi", "tail_bound", "exp_upper", "exp_lower",
                  "exp_asymptotic"});
  cmd_detail::standard_meta(t, "exponent", conf.str(), opt.seed);
  t.add_meta("capacity", C);
  t.add_meta("rate", opt.rate);
  t.add_meta("poisson_comparable", poisson_comparable ? "true" : "false");

  std::vector<double> deltas;
  std::vector<std::uint64_t> failures, trials;
  for (const ErrorPoint& p : points) {
    const double bound = poisson_tail_lower_bound(C, opt.rate, p.delta);
    t.add_row({p.delta, static_cast<std::uint64_t>(p.message_count),
               p.failures, p.replications, p.p_hat, p.wilson_lo, p.wilson_hi,
               bound, curve.upper, curve.lower, curve.asymptotic});
    deltas.push_back(p.delta);
    failures.push_back(p.failures);
    trials.push_back(p.replications);
  }

  ExponentOutcome out{std::move(t), fit_empirical_exponent(deltas, failures, trials), C};
  if (out.fit.ok) {
    out.table.add_meta("fit_slope", out.fit.slope);
    out.table.add_meta("fit_slope_ci_lo", out.fit.slope_ci_lo);
    out.table.add_meta("fit_slope_ci_hi", out.fit.slope_ci_hi);
    out.table.add_meta("fit_points", static_cast<std::uint64_t>(out.fit.points_used));
  } else {
    out.table.add_meta("fit_error", out.fit.diagnostic);
  }
  return out;
}

// ---------------------------------------------------------------------------
// fluidcheck: innovative-queue growth along a wireline tandem

struct FluidcheckOptions {
  int field = 2;
  int rho = 1;
  double tau = 500.0;
  std::size_t K = 8;
  std::size_t lambda = 1;
  std::size_t reps = 3;
  std::uint64_t seed = 0;
};

// The network must be a tandem: a unique arc chain from the source to the
// single sink.
inline std::vector<int> tandem_order(const WirelineNetwork& net) {
  if (net.sinks.size() != 1)
    throw ConfigError("fluidcheck: exactly one sink required");
  std::vector<int> order{net.source};
  int at = net.source;
  while (at != net.sinks[0]) {
    int next = -1;
    for (const Arc& a : net.arcs) {
      if (a.from != at) continue;
      if (next >= 0) throw ConfigError("fluidcheck: network is not a tandem");
      next = a.to;
    }
    if (next < 0) throw ConfigError("fluidcheck: sink unreachable");
    if (std::find(order.begin(), order.end(), next) != order.end())
      throw ConfigError("fluidcheck: network is not a tandem");
    order.push_back(next);
    at = next;
  }
  if (order.size() < 3)
    throw ConfigError("fluidcheck: need at least two links");
  return order;
}

inline ResultsTable cmd_fluidcheck(const NetworkSpec& netspec,
                                   const FluidcheckOptions& opt) {
  const auto* netp = std::get_if<WirelineNetwork>(&netspec);
  if (!netp) throw ConfigError("fluidcheck: wireline network required");
  const WirelineNetwork& net = *netp;
  if (opt.tau <= 0.0) throw ConfigError("fluidcheck: need tau > 0");
  if (opt.reps == 0) throw ConfigError("fluidcheck: need reps >= 1");
  const std::vector<int> order = tandem_order(net);
  std::vector<double> z;
  for (std::size_t h = 0; h + 1 < order.size(); ++h) {
    for (std::size_t a = 0; a < net.arcs.size(); ++a)
      if (net.arcs[a].from == order[h] && net.arcs[a].to == order[h + 1])
        z.push_back(net.arc_rate(a));
  }
  const FluidPrediction pred = fluid_queue_rates(z, opt.field, opt.rho);

  SimConfig cfg;
  cfg.net = netspec;
  cfg.K = opt.K;
  cfg.lambda = opt.lambda;
  cfg.field = opt.field;
  cfg.mode = SimMode::Block;
  cfg.delta = opt.tau;
  cfg.seed = opt.seed;
  cfg.replications = opt.reps;
  cfg.intermediate_prune = false; // tandem tracking needs the full memory
  cfg.sink_prune = false;
  cfg.attempt_decode = false;
  TrackerParams tp;
  tp.rho = opt.rho;
  tp.thinning = false; // single path carries the whole flow
  tp.candidate_thinning = true; // the fluid growth rates model the thinned queue
  tp.paths.paths = {order};
  tp.paths.rates = {achievable_rate_tandem(z)};
  tp.sample_times = {opt.tau};
  cfg.tracking = tp;

  const auto results = run(cfg);

  std::ostringstream conf;
  conf << "fluidcheck field=" << opt.field << " rho=" << opt.rho
       << " tau=" << opt.tau << " reps=" << opt.reps;
  ResultsTable t({"node", "measured_slope", "predicted_slope", "rel_err"});
  cmd_detail::standard_meta(t, "fluidcheck", conf.str(), opt.seed);
  t.add_meta("tau", opt.tau);

  const std::size_t H = order.size() - 1; // number of links
  for (std::size_t l = 1; l < H; ++l) {   // interior node order[l]
    double queue = 0.0;
    for (const auto& r : results) {
      const auto& counts = r.report->v_counts[0];
      queue += static_cast<double>(counts[l - 1][0]) -
               static_cast<double>(counts[l][0]);
    }
    const double measured = queue / (opt.tau * opt.reps);
    const double predicted = pred.growth[l - 1];
    const double rel = predicted != 0.0
                           ? std::abs(measured - predicted) / predicted
                           : std::abs(measured);
    t.add_row({static_cast<std::int64_t>(order[l]), measured, predicted, rel});
  }
  return t;
}

} // namespace ncsim
