#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ncsim/sim.hpp"

using namespace ncsim;

namespace {

WirelineNetwork single_arc(double z) {
  WirelineNetwork net;
  net.nodes = {1, 2};
  Arc a;
  a.from = 1;
  a.to = 2;
  a.z = z;
  net.arcs.push_back(a);
  net.source = 1;
  net.sinks = {2};
  return net;
}

WirelineNetwork tandem3(double z1, double z2) {
  WirelineNetwork net;
  net.nodes = {1, 2, 3};
  Arc a;
  a.from = 1;
  a.to = 2;
  a.z = z1;
  net.arcs.push_back(a);
  a.from = 2;
  a.to = 3;
  a.z = z2;
  net.arcs.push_back(a);
  net.source = 1;
  net.sinks = {3};
  return net;
}

bool traces_equal(const SimTrace& x, const SimTrace& y) {
  if (x.arcs.size() != y.arcs.size()) return false;
  for (std::size_t a = 0; a < x.arcs.size(); ++a) {
    if (x.arcs[a].injections != y.arcs[a].injections) return false;
    if (x.arcs[a].receptions != y.arcs[a].receptions) return false;
    if (x.arcs[a].receptions_by_set != y.arcs[a].receptions_by_set) return false;
  }
  if (x.total_deliveries != y.total_deliveries) return false;
  if (x.sinks.size() != y.sinks.size()) return false;
  for (const auto& [t, o] : x.sinks) {
    const auto it = y.sinks.find(t);
    if (it == y.sinks.end()) return false;
    if (o.decoded != it->second.decoded) return false;
    if (o.decode_time != it->second.decode_time) return false;
    if (o.final_rank != it->second.final_rank) return false;
  }
  return true;
}

} // namespace

TEST_CASE("deterministic injection on a lossless arc") {
  WirelineNetwork net;
  net.nodes = {1, 2};
  Arc a;
  a.from = 1;
  a.to = 2;
  a.injection = DeterministicInjection{};
  net.arcs.push_back(a);
  net.source = 1;
  net.sinks = {2};

  SimConfig cfg;
  cfg.net = net;
  cfg.K = 5;
  cfg.field = 256;
  cfg.delta = 6.0;
  cfg.seed = 11;
  const auto res = run_single(cfg, 0);
  // injections at t = 0, 1, ..., 6
  REQUIRE(res.trace.arcs[0].injections == 7);
  REQUIRE(res.trace.arcs[0].receptions == 7);
  REQUIRE(res.trace.sinks.at(2).decoded);
  REQUIRE(res.trace.sinks.at(2).final_rank == 5);
}

TEST_CASE("trace injection fires only the listed times within the horizon") {
  WirelineNetwork net;
  net.nodes = {1, 2};
  Arc a;
  a.from = 1;
  a.to = 2;
  a.injection = TraceInjection{{0.5, 1.5, 2.5, 9.9}};
  net.arcs.push_back(a);
  net.source = 1;
  net.sinks = {2};

  SimConfig cfg;
  cfg.net = net;
  cfg.K = 2;
  cfg.delta = 3.0;
  cfg.seed = 12;
  const auto res = run_single(cfg, 0);
  REQUIRE(res.trace.arcs[0].injections == 3);
  REQUIRE(res.trace.arcs[0].receptions == 3);
}

TEST_CASE("iid loss thins the injection process") {
  WirelineNetwork net;
  net.nodes = {1, 2};
  Arc a;
  a.from = 1;
  a.to = 2;
  a.injection = PoissonInjection{2.0};
  a.loss = IidLoss{0.4};
  net.arcs.push_back(a);
  net.source = 1;
  net.sinks = {2};

  SimConfig cfg;
  cfg.net = net;
  cfg.K = 4;
  cfg.delta = 500.0;
  cfg.seed = 13;
  const auto res = run_single(cfg, 0);
  const auto& arc = res.trace.arcs[0];
  REQUIRE(arc.injections ==
          Catch::Approx(1000.0).margin(3.0 * std::sqrt(1000.0)));
  const double ratio =
      static_cast<double>(arc.receptions) / static_cast<double>(arc.injections);
  REQUIRE(ratio == Catch::Approx(0.6).margin(0.05));
  REQUIRE(res.trace.sinks.at(2).decoded);
}

TEST_CASE("markov-modulated arc matches its effective rate") {
  // Gilbert-Elliott: good state (eps 0.1) left at rate 1, bad state (eps 0.9)
  // left at rate 3; unit injections per state -> z = 0.7
  WirelineNetwork net;
  net.nodes = {1, 2};
  Arc a;
  a.from = 1;
  a.to = 2;
  MarkovLoss ml;
  ml.chain.rates = {{0.0, 1.0}, {3.0, 0.0}};
  ml.eps = {0.1, 0.9};
  ml.inj_rate = {1.0, 1.0};
  a.loss = ml;
  net.arcs.push_back(a);
  net.source = 1;
  net.sinks = {2};
  REQUIRE(net.arc_rate(0) == Catch::Approx(0.7).margin(1e-12));

  SimConfig cfg;
  cfg.net = net;
  cfg.K = 4;
  cfg.delta = 4000.0;
  cfg.seed = 14;
  const auto res = run_single(cfg, 0);
  const double rate = res.trace.arcs[0].receptions / 4000.0;
  REQUIRE(rate == Catch::Approx(0.7).margin(0.05));
  REQUIRE(res.trace.arcs[0].injections ==
          Catch::Approx(4000.0).margin(4.0 * std::sqrt(4000.0)));
}

TEST_CASE("rateless mode stops at full rank") {
  SimConfig cfg;
  cfg.net = single_arc(1.0);
  cfg.K = 20;
  cfg.field = 256;
  cfg.mode = SimMode::Rateless;
  cfg.rateless_time_cap = 200.0;
  cfg.seed = 15;
  const auto res = run_single(cfg, 0);
  const SinkOutcome& out = res.trace.sinks.at(2);
  REQUIRE(out.decoded);
  REQUIRE(out.final_rank == 20);
  REQUIRE(out.decode_time >= 15.0); // needs at least K receptions at z = 1
  REQUIRE(out.decode_time <= 80.0);
}

TEST_CASE("replications are deterministic and thread-count independent") {
  SimConfig cfg;
  cfg.net = single_arc(1.5);
  cfg.K = 6;
  cfg.delta = 30.0;
  cfg.seed = 16;
  cfg.replications = 4;
  cfg.threads = 2;
  const auto first = run(cfg);
  const auto second = run(cfg);
  cfg.threads = 1;
  const auto serial = run(cfg);
  REQUIRE(first.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    REQUIRE(traces_equal(first[r].trace, second[r].trace));
    REQUIRE(traces_equal(first[r].trace, serial[r].trace));
    REQUIRE(traces_equal(first[r].trace, run_single(cfg, r).trace));
  }
}

TEST_CASE("wireless reception sets follow the z masses") {
  WirelessNetwork net;
  net.nodes = {1, 2, 3};
  Hyperarc h;
  h.from = 1;
  h.to = make_node_set({2, 3});
  h.z[make_node_set({2})] = 0.3;
  h.z[make_node_set({3})] = 0.2;
  h.z[make_node_set({2, 3})] = 0.5;
  net.hyperarcs.push_back(h);
  net.source = 1;
  net.sinks = {2};

  SimConfig cfg;
  cfg.net = net;
  cfg.K = 4;
  cfg.field = 256;
  cfg.delta = 2000.0;
  cfg.seed = 17;
  const auto res = run_single(cfg, 0);
  const auto& arc = res.trace.arcs[0];
  REQUIRE(arc.injections == arc.receptions); // injection rate = total z here
  const double n = static_cast<double>(arc.receptions);
  REQUIRE(n > 1500.0);
  REQUIRE(arc.receptions_by_set.at(make_node_set({2})) / n ==
          Catch::Approx(0.3).margin(0.04));
  REQUIRE(arc.receptions_by_set.at(make_node_set({3})) / n ==
          Catch::Approx(0.2).margin(0.04));
  REQUIRE(arc.receptions_by_set.at(make_node_set({2, 3})) / n ==
          Catch::Approx(0.5).margin(0.04));
  REQUIRE(res.trace.sinks.at(2).decoded);
}

TEST_CASE("aloha slots run once per unit time") {
  WirelessNetwork net;
  net.nodes = {1, 2, 3};
  net.aloha = true;
  Hyperarc h1;
  h1.from = 1;
  h1.to = make_node_set({2, 3});
  h1.slot_q = 0.5;
  Hyperarc h2;
  h2.from = 2;
  h2.to = make_node_set({3});
  h2.slot_q = 0.5;
  net.hyperarcs = {h1, h2};
  net.interferers[2] = {};
  net.interferers[3] = make_node_set({1, 2});
  net.source = 1;
  net.sinks = {3};

  SimConfig cfg;
  cfg.net = net;
  cfg.K = 8;
  cfg.field = 256;
  cfg.delta = 999.0; // slots at t = 0..999
  cfg.seed = 18;
  const auto res = run_single(cfg, 0);
  const auto& a0 = res.trace.arcs[0];
  const auto& a1 = res.trace.arcs[1];
  REQUIRE(a0.injections == Catch::Approx(500.0).margin(3.0 * std::sqrt(250.0)));
  // node 2 hears node 1 regardless of collisions, so every transmission of
  // hyperarc (1, {2,3}) is received by someone
  REQUIRE(a0.receptions == a0.injections);
  // relay transmissions succeed only when node 1 stays silent (q = 0.5), so
  // about half of them get through; collisions are neither received nor skipped
  REQUIRE(a1.receptions + a1.skipped <= a1.injections);
  REQUIRE(a1.receptions ==
          Catch::Approx(250.0).margin(3.0 * std::sqrt(1000.0 * 0.25 * 0.75)));
  REQUIRE(res.trace.sinks.at(3).decoded);
}

TEST_CASE("per-sink deadlines in a multicast run") {
  WirelineNetwork net;
  net.nodes = {1, 2, 3};
  Arc a;
  a.from = 1;
  a.to = 2;
  a.z = 1.0;
  net.arcs.push_back(a);
  a.to = 3;
  net.arcs.push_back(a);
  net.source = 1;
  net.sinks = {2, 3};

  SimConfig cfg;
  cfg.net = net;
  cfg.K = 30;
  cfg.field = 256;
  cfg.sink_delta = {{2, 10.0}, {3, 60.0}};
  cfg.seed = 19;
  const auto res = run_single(cfg, 0);
  REQUIRE_FALSE(res.trace.sinks.at(2).decoded); // ~10 receptions, needs 30
  REQUIRE(res.trace.sinks.at(2).final_rank < 30);
  REQUIRE(res.trace.sinks.at(3).decoded);
  REQUIRE(res.trace.sinks.at(3).decode_time == 60.0);
}

TEST_CASE("innovation tracker on a tandem without thinning") {
  SimConfig cfg;
  cfg.net = tandem3(1.0, 1.0);
  cfg.K = 8;
  cfg.field = 2;
  cfg.delta = 50.0;
  cfg.seed = 20;
  cfg.intermediate_prune = false;
  cfg.sink_prune = false;
  cfg.attempt_decode = false;
  TrackerParams tp;
  tp.rho = 1;
  tp.thinning = false;
  tp.paths.paths = {{1, 2, 3}};
  tp.paths.rates = {1.0};
  tp.sample_times = {50.0};
  cfg.tracking = tp;

  const auto res = run_single(cfg, 0);
  REQUIRE(res.report.has_value());
  const InnovationReport& rep = *res.report;
  REQUIRE(rep.violations_gate == 0);
  REQUIRE(rep.violations_span_growth == 0);
  REQUIRE(rep.w_union_independent);
  REQUIRE(rep.no_path_deliveries == 0); // no thinning: every delivery assigned
  REQUIRE(rep.v_counts.size() == 1);
  REQUIRE(rep.v_counts[0].size() == 2);
  const std::size_t u = rep.v_counts[0][0][0];
  REQUIRE(u >= 25);
  REQUIRE(u <= 80); // ~ z1 * tau = 50
  REQUIRE(rep.w_final[0] <= u);
  REQUIRE(rep.w_final[0] == rep.v_counts[0][1][0]); // sample at the horizon
  REQUIRE(rep.gated_receptions + rep.gate_blocked > 0);
}

TEST_CASE("innovation tracker thinning leaves residual mass") {
  SimConfig cfg;
  cfg.net = tandem3(1.0, 1.0);
  cfg.K = 8;
  cfg.field = 2;
  cfg.delta = 80.0;
  cfg.seed = 21;
  cfg.intermediate_prune = false;
  cfg.sink_prune = false;
  cfg.attempt_decode = false;
  TrackerParams tp;
  tp.rho = 1;
  tp.thinning = true;
  tp.paths.paths = {{1, 2, 3}};
  tp.paths.rates = {0.6}; // below both z's: 40% of deliveries unassigned
  tp.sample_times = {80.0};
  cfg.tracking = tp;

  const auto res = run_single(cfg, 0);
  const InnovationReport& rep = *res.report;
  REQUIRE(rep.no_path_deliveries > 0);
  REQUIRE(rep.violations_gate == 0);
  REQUIRE(rep.violations_span_growth == 0);
  REQUIRE(rep.w_union_independent);
  // thinned first hop: |U| ~ 0.6 * 80 = 48
  const std::size_t u = rep.v_counts[0][0][0];
  REQUIRE(u >= 24);
  REQUIRE(u <= 78);
}

TEST_CASE("error-probability estimation over a delay grid") {
  SimConfig base;
  base.net = single_arc(1.0);
  base.field = 256;
  base.lambda = 1;
  base.seed = 999;
  const auto points = estimate_error_probability(base, 0.5, {6.0, 40.0}, 300);
  REQUIRE(points.size() == 2);
  REQUIRE(points[0].message_count == 3);
  REQUIRE(points[1].message_count == 20);
  REQUIRE(points[0].replications == 300);
  // Pr(Poisson(6) <= 2) ~ 0.062: essentially impossible to see zero failures
  REQUIRE(points[0].failures >= 1);
  // Pr(Poisson(40) <= 19) ~ 2e-4: failures stay rare
  REQUIRE(points[1].failures <= 5);
  for (const auto& p : points) {
    REQUIRE(p.wilson_lo <= p.p_hat + 1e-12);
    REQUIRE(p.p_hat <= p.wilson_hi + 1e-12);
    REQUIRE(p.p_hat == static_cast<double>(p.failures) / 300.0);
  }
  // same base config: byte-identical results
  const auto again = estimate_error_probability(base, 0.5, {6.0, 40.0}, 300);
  REQUIRE(again[0].failures == points[0].failures);
  REQUIRE(again[1].failures == points[1].failures);
}
