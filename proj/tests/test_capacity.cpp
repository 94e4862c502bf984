#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "ncsim/capacity.hpp"
#include "ncsim/rng.hpp"

using namespace ncsim;

namespace {

WirelineNetwork tandem(const std::vector<double>& z) {
  WirelineNetwork net;
  for (std::size_t i = 0; i <= z.size(); ++i) net.nodes.push_back(static_cast<int>(i + 1));
  net.source = 1;
  net.sinks = {static_cast<int>(z.size() + 1)};
  for (std::size_t i = 0; i < z.size(); ++i) {
    Arc a;
    a.from = static_cast<int>(i + 1);
    a.to = static_cast<int>(i + 2);
    a.z = z[i];
    net.arcs.push_back(a);
  }
  return net;
}

WirelineNetwork random_wireline(Rng& rng, int max_nodes) {
  WirelineNetwork net;
  const int n = 3 + static_cast<int>(rng.uniform_int(max_nodes - 2));
  for (int i = 1; i <= n; ++i) net.nodes.push_back(i);
  net.source = 1;
  net.sinks = {n};
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      if (i == j) continue;
      if (rng.uniform() < 0.35) {
        Arc a;
        a.from = i;
        a.to = j;
        a.z = rng.uniform() * 2.0;
        net.arcs.push_back(a);
      }
    }
  return net;
}

// Fig. 2 style relay with explicit reception rates.
WirelessNetwork relay_rates() {
  WirelessNetwork net;
  net.nodes = {1, 2, 3};
  net.source = 1;
  net.sinks = {3};
  Hyperarc h1;
  h1.from = 1;
  h1.to = {2, 3};
  h1.z[{2}] = 0.25;
  h1.z[{2, 3}] = 0.25;
  h1.injection_rate = 0.5;
  Hyperarc h2;
  h2.from = 2;
  h2.to = {3};
  h2.z[{3}] = 0.25;
  h2.injection_rate = 0.5;
  net.hyperarcs = {h1, h2};
  return net;
}

WirelessNetwork random_hypergraph(Rng& rng) {
  WirelessNetwork net;
  const int n = 3 + static_cast<int>(rng.uniform_int(4)); // 3..6 nodes
  for (int i = 1; i <= n; ++i) net.nodes.push_back(i);
  net.source = 1;
  net.sinks = {n};
  for (int i = 1; i <= n; ++i) {
    const int fanout = 1 + static_cast<int>(rng.uniform_int(2));
    for (int rep = 0; rep < fanout; ++rep) {
      NodeSet j;
      for (int v = 1; v <= n; ++v)
        if (v != i && rng.uniform() < 0.5) j.push_back(v);
      if (j.empty() || j.size() > 3) continue;
      Hyperarc h;
      h.from = i;
      h.to = j;
      // a random sub-partition of reception sets
      for (std::uint32_t mask = 1; mask < (1u << j.size()); ++mask) {
        if (rng.uniform() < 0.5) continue;
        NodeSet k;
        for (std::size_t b = 0; b < j.size(); ++b)
          if (mask & (1u << b)) k.push_back(j[b]);
        h.z[k] += rng.uniform();
      }
      if (h.z.empty()) h.z[j] = rng.uniform();
      net.hyperarcs.push_back(h);
    }
  }
  return net;
}

double bisect_capacity(const WirelessNetwork& net, int s, int t, double hi) {
  double lo = 0.0;
  hi += 1.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (feasible_flow_wireless(net, s, t, mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

} // namespace

TEST_CASE("cut values on a tandem") {
  const WirelineNetwork net = tandem({1.0, 0.5});
  REQUIRE(cut_value(net, {1}, 1, 3) == 1.0);
  REQUIRE(cut_value(net, {1, 2}, 1, 3) == 0.5);
  REQUIRE_THROWS_AS(cut_value(net, {2}, 1, 3), std::domain_error);
  REQUIRE_THROWS_AS(cut_value(net, {1, 3}, 1, 3), std::domain_error);
}

TEST_CASE("tandem min-cut is the bottleneck") {
  const Cut cut = min_cut(tandem({1.0, 0.5}), 1, 3);
  REQUIRE(cut.value == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(cut.q == std::set<int>{1, 2});
  REQUIRE_THROWS_AS(min_cut(tandem({1.0}), 1, 1), std::domain_error);
}

TEST_CASE("unreachable sink has zero capacity") {
  WirelineNetwork net = tandem({1.0, 0.5});
  net.arcs.pop_back(); // 3 is now unreachable
  REQUIRE(min_cut(net, 1, 3).value == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("max-flow equals enumerated min-cut on random graphs") {
  Rng rng(101);
  for (int it = 0; it < 15; ++it) {
    const WirelineNetwork net = random_wireline(rng, 9);
    const Cut fast = min_cut(net, 1, net.sinks[0]);
    const Cut slow = detail::min_cut_enumerate(net, 1, net.sinks[0]);
    REQUIRE(fast.value == Catch::Approx(slow.value).margin(1e-9));
    REQUIRE(cut_value(net, fast.q, 1, net.sinks[0]) ==
            Catch::Approx(slow.value).margin(1e-9));
  }
}

TEST_CASE("flow solutions satisfy conservation and capacity") {
  Rng rng(102);
  for (int it = 0; it < 10; ++it) {
    const WirelineNetwork net = random_wireline(rng, 8);
    const int t = net.sinks[0];
    const FlowSolution flow = max_flow_wireline(net, 1, t);
    // capacity per arc (parallel arcs share a key; compare against summed z)
    std::map<std::pair<int, int>, double> cap;
    for (std::size_t a = 0; a < net.arcs.size(); ++a)
      cap[{net.arcs[a].from, net.arcs[a].to}] += net.arc_rate(a);
    for (const auto& [arc, f] : flow.f) {
      REQUIRE(f >= -1e-9);
      REQUIRE(f <= cap.at(arc) + 1e-9);
    }
    // conservation
    std::map<int, double> net_out;
    for (const auto& [arc, f] : flow.f) {
      net_out[arc.first] += f;
      net_out[arc.second] -= f;
    }
    for (const int n : net.nodes) {
      const double want = n == 1 ? flow.value : (n == t ? -flow.value : 0.0);
      REQUIRE(net_out[n] == Catch::Approx(want).margin(1e-7));
    }
    // value matches the min cut
    REQUIRE(flow.value ==
            Catch::Approx(min_cut(net, 1, t).value).margin(1e-9));
  }
}

TEST_CASE("flow target caps the value") {
  const WirelineNetwork net = tandem({2.0, 1.5});
  REQUIRE(max_flow_wireline(net, 1, 3, 0.6).value ==
          Catch::Approx(0.6).margin(1e-12));
  REQUIRE(max_flow_wireline(net, 1, 3, 5.0).value ==
          Catch::Approx(1.5).margin(1e-12));
}

TEST_CASE("cycle removal preserves value and yields an acyclic flow") {
  FlowSolution flow;
  flow.value = 1.0;
  flow.f[{1, 2}] = 1.0;
  flow.f[{2, 3}] = 1.5;
  flow.f[{3, 2}] = 0.5; // circulation 2->3->2
  const FlowSolution clean = remove_cycles(flow);
  REQUIRE(clean.f.at({1, 2}) == Catch::Approx(1.0));
  REQUIRE(clean.f.at({2, 3}) == Catch::Approx(1.0));
  REQUIRE(clean.f.at({3, 2}) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE_NOTHROW(decompose_paths(clean, 1, 3));
}

TEST_CASE("path decomposition is conformal") {
  Rng rng(103);
  for (int it = 0; it < 10; ++it) {
    const WirelineNetwork net = random_wireline(rng, 8);
    const int t = net.sinks[0];
    const FlowSolution flow = remove_cycles(max_flow_wireline(net, 1, t));
    if (flow.value < 1e-6) continue;
    const PathDecomposition d = decompose_paths(flow, 1, t);
    REQUIRE(d.total_rate() == Catch::Approx(flow.value).margin(1e-7));
    std::map<std::pair<int, int>, double> used;
    for (std::size_t m = 0; m < d.paths.size(); ++m) {
      REQUIRE(d.paths[m].front() == 1);
      REQUIRE(d.paths[m].back() == t);
      REQUIRE(d.rates[m] > 0.0);
      for (std::size_t h = 0; h + 1 < d.paths[m].size(); ++h)
        used[{d.paths[m][h], d.paths[m][h + 1]}] += d.rates[m];
    }
    for (const auto& [arc, f] : used)
      REQUIRE(f <= flow.f.at(arc) + 1e-7);
  }
}

TEST_CASE("wireless cut value: reception sets escaping Q") {
  const WirelessNetwork net = relay_rates();
  // Q = {1}: both of hyperarc 1's reception sets escape
  REQUIRE(cut_value(net, {1}, 1, 3) == Catch::Approx(0.5).margin(1e-12));
  // Q = {1,2}: only sets containing node 3 escape, plus arc (2,{3})
  REQUIRE(cut_value(net, {1, 2}, 1, 3) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("relay capacity and feasibility") {
  const WirelessNetwork net = relay_rates();
  const Cut cut = min_cut(net, 1, 3);
  REQUIRE(cut.value == Catch::Approx(0.5).margin(1e-12));
  REQUIRE(feasible_flow_wireless(net, 1, 3, 0.499).has_value());
  REQUIRE_FALSE(feasible_flow_wireless(net, 1, 3, 0.501).has_value());
}

TEST_CASE("alpha weights are a valid split of the feasible flow") {
  const WirelessNetwork net = relay_rates();
  const auto sol = feasible_flow_wireless(net, 1, 3, 0.45);
  REQUIRE(sol.has_value());
  for (std::size_t h = 0; h < net.hyperarcs.size(); ++h) {
    for (const auto& [l, by_node] : sol->alpha[h]) {
      double total = 0.0;
      for (const auto& [j, w] : by_node) {
        REQUIRE(w >= -1e-9);
        REQUIRE(std::binary_search(l.begin(), l.end(), j)); // support inside L
        total += w;
      }
      REQUIRE(total == Catch::Approx(1.0).margin(1e-7));
    }
    // credited flow is covered by the alpha-weighted reception rates
    for (const auto& [j, fj] : sol->f[h]) {
      double capacity = 0.0;
      for (const auto& [l, z] : net.hyperarcs[h].z) {
        const auto it = sol->alpha[h].find(l);
        if (it == sol->alpha[h].end()) continue;
        const auto jt = it->second.find(j);
        if (jt != it->second.end()) capacity += jt->second * z;
      }
      REQUIRE(fj <= capacity + 1e-6);
    }
  }
}

TEST_CASE("LP bisection agrees with enumerated min-cut on random hypergraphs") {
  Rng rng(104);
  int done = 0;
  while (done < 6) {
    const WirelessNetwork net = random_hypergraph(rng);
    const Cut cut = min_cut(net, 1, net.sinks[0]);
    const double cap = bisect_capacity(net, 1, net.sinks[0], cut.value);
    REQUIRE(std::abs(cap - cut.value) <=
            1e-6 * std::max(1.0, cut.value) + 1e-9);
    ++done;
  }
}

TEST_CASE("delay-link transform preserves the min cut") {
  Rng rng(105);
  for (int it = 0; it < 5; ++it) {
    const WirelineNetwork net = random_wireline(rng, 7);
    const double before = min_cut(net, 1, net.sinks[0]).value;
    const WirelineNetwork out =
        transform_delay_link(net, rng.uniform_int(net.arcs.size()));
    REQUIRE(min_cut(out, 1, out.sinks[0]).value ==
            Catch::Approx(before).margin(1e-9));
  }
}

TEST_CASE("multicast region: per-sink cuts behind a shared bottleneck") {
  WirelineNetwork net;
  net.nodes = {1, 2, 3, 4};
  net.source = 1;
  net.sinks = {3, 4};
  for (const auto& [u, v, z] :
       {std::tuple{1, 2, 1.0}, std::tuple{2, 3, 2.0}, std::tuple{2, 4, 2.0}}) {
    Arc a;
    a.from = u;
    a.to = v;
    a.z = z;
    net.arcs.push_back(a);
  }
  const auto region = multicast_region(net, 1, net.sinks);
  REQUIRE(region.at(3).value == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(region.at(4).value == Catch::Approx(1.0).margin(1e-12));
  REQUIRE_THROWS_AS(multicast_region(net, 1, std::vector<int>{}),
                    std::domain_error);
}

TEST_CASE("guards refuse oversized exact computations") {
  WirelessNetwork big;
  for (int i = 1; i <= 22; ++i) big.nodes.push_back(i);
  big.source = 1;
  big.sinks = {22};
  REQUIRE_THROWS_AS(min_cut(big, 1, 22), std::length_error);

  WirelessNetwork wide;
  wide.nodes = {1, 2};
  for (int i = 3; i <= 20; ++i) wide.nodes.push_back(i);
  wide.source = 1;
  wide.sinks = {2};
  Hyperarc h;
  h.from = 1;
  for (int i = 2; i <= 19; ++i) h.to.push_back(i);
  h.z[h.to] = 1.0;
  wide.hyperarcs.push_back(h);
  REQUIRE_THROWS_AS(feasible_flow_wireless(wide, 1, 2, 0.1), std::length_error);
}
