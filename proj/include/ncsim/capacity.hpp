#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <vector>

#include "netmodel.hpp"
#include "simplex.hpp"

namespace ncsim {

constexpr double kFlowTol = 1e-9;

// ---------------------------------------------------------------------------
// Generic max-flow (BFS augmenting paths) on an adjacency-list graph.

class MaxFlowGraph {
public:
  explicit MaxFlowGraph(std::size_t num_nodes) : adj_(num_nodes) {}

  // Returns the edge index; cap on the reverse edge is 0.
  std::size_t add_edge(std::size_t u, std::size_t v, double cap) {
    const std::size_t id = edges_.size();
    edges_.push_back({v, cap, 0.0});
    adj_[u].push_back(id);
    edges_.push_back({u, 0.0, 0.0});
    adj_[v].push_back(id + 1);
    return id;
  }

  double flow_on(std::size_t edge_id) const { return edges_[edge_id].flow; }

  double solve(std::size_t s, std::size_t t) {
    double total = 0.0;
    for (;;) {
      // BFS for a shortest augmenting path
      std::vector<std::size_t> pred(adj_.size(), SIZE_MAX);
      std::vector<bool> seen(adj_.size(), false);
      std::queue<std::size_t> q;
      q.push(s);
      seen[s] = true;
      while (!q.empty() && !seen[t]) {
        const std::size_t u = q.front();
        q.pop();
        for (const std::size_t e : adj_[u]) {
          const Edge& ed = edges_[e];
          if (!seen[ed.to] && residual(e) > kFlowTol) {
            seen[ed.to] = true;
            pred[ed.to] = e;
            q.push(ed.to);
          }
        }
      }
      if (!seen[t]) return total;
      double aug = std::numeric_limits<double>::infinity();
      for (std::size_t v = t; v != s; v = edges_[pred[v] ^ 1].to)
        aug = std::min(aug, residual(pred[v]));
      for (std::size_t v = t; v != s; v = edges_[pred[v] ^ 1].to) {
        edges_[pred[v]].flow += aug;
        edges_[pred[v] ^ 1].flow -= aug;
      }
      total += aug;
    }
  }

  // Nodes reachable from s in the residual graph (the min-cut side).
  std::vector<bool> residual_reachable(std::size_t s) const {
    std::vector<bool> seen(adj_.size(), false);
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (const std::size_t e : adj_[u])
        if (!seen[edges_[e].to] && residual(e) > kFlowTol) {
          seen[edges_[e].to] = true;
          stack.push_back(edges_[e].to);
        }
    }
    return seen;
  }

private:
  struct Edge {
    std::size_t to;
    double cap;
    double flow;
  };
  double residual(std::size_t e) const { return edges_[e].cap - edges_[e].flow; }

  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Edge> edges_;
};

// ---------------------------------------------------------------------------
// Cuts

struct Cut {
  std::set<int> q; // node subset with s in q, t not in q
  double value = 0.0;
};

inline void check_cut_shape(const std::set<int>& q, int s, int t) {
  if (!q.count(s) || q.count(t))
    throw std::domain_error("cut: Q must contain s and exclude t");
}

// Sum of z over forward arcs of the cut.
inline double cut_value(const WirelineNetwork& net, const std::set<int>& q,
                        int s, int t) {
  check_cut_shape(q, s, t);
  for (const int n : q)
    if (!net.has_node(n)) throw std::domain_error("cut: unknown node in Q");
  double v = 0.0;
  for (std::size_t a = 0; a < net.arcs.size(); ++a)
    if (q.count(net.arcs[a].from) && !q.count(net.arcs[a].to))
      v += net.arc_rate(a);
  return v;
}

// Sum over forward hyperarcs of z_iJK for all K not contained in Q.
inline double cut_value(const WirelessNetwork& net, const std::set<int>& q,
                        int s, int t) {
  check_cut_shape(q, s, t);
  for (const int n : q)
    if (!net.has_node(n)) throw std::domain_error("cut: unknown node in Q");
  double v = 0.0;
  for (const Hyperarc& h : net.hyperarcs) {
    if (!q.count(h.from)) continue;
    bool forward = false;
    for (const int j : h.to)
      if (!q.count(j)) { forward = true; break; }
    if (!forward) continue;
    for (const auto& [k, z] : h.z) {
      bool escapes = false;
      for (const int j : k)
        if (!q.count(j)) { escapes = true; break; }
      if (escapes) v += z;
    }
  }
  return v;
}

namespace detail {

template <typename Net>
Cut min_cut_enumerate(const Net& net, int s, int t) {
  if (s == t) throw std::domain_error("min_cut: s == t");
  std::vector<int> others;
  for (const int n : net.nodes)
    if (n != s && n != t) others.push_back(n);
  if (others.size() > 18)
    throw std::length_error("min_cut: too many nodes for subset enumeration");
  Cut best;
  best.value = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << others.size()); ++mask) {
    std::set<int> q{s};
    for (std::size_t i = 0; i < others.size(); ++i)
      if (mask & (1u << i)) q.insert(others[i]);
    const double v = cut_value(net, q, s, t);
    if (v < best.value) {
      best.value = v;
      best.q = std::move(q);
    }
  }
  return best;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Wireline flows

struct FlowSolution {
  std::map<std::pair<int, int>, double> f;
  double value = 0.0;
};

inline Cut min_cut(const WirelineNetwork& net, int s, int t) {
  if (s == t) throw std::domain_error("min_cut: s == t");
  // index nodes
  std::map<int, std::size_t> idx;
  for (const int n : net.nodes) idx.emplace(n, idx.size());
  MaxFlowGraph g(idx.size());
  for (std::size_t a = 0; a < net.arcs.size(); ++a)
    g.add_edge(idx.at(net.arcs[a].from), idx.at(net.arcs[a].to),
               net.arc_rate(a));
  g.solve(idx.at(s), idx.at(t));
  const auto reach = g.residual_reachable(idx.at(s));
  Cut cut;
  for (const int n : net.nodes)
    if (reach[idx.at(n)]) cut.q.insert(n);
  cut.value = cut_value(net, cut.q, s, t);
  return cut;
}

// Flow of value min(target, C); conservation and capacity hold exactly up to
// the solver tolerance.
inline FlowSolution max_flow_wireline(
    const WirelineNetwork& net, int s, int t,
    std::optional<double> target = std::nullopt) {
  std::map<int, std::size_t> idx;
  for (const int n : net.nodes) idx.emplace(n, idx.size());
  const std::size_t super = idx.size();
  MaxFlowGraph g(super + 1);
  std::vector<std::size_t> arc_edges;
  for (std::size_t a = 0; a < net.arcs.size(); ++a)
    arc_edges.push_back(g.add_edge(idx.at(net.arcs[a].from),
                                   idx.at(net.arcs[a].to), net.arc_rate(a)));
  std::size_t src = idx.at(s);
  if (target) {
    g.add_edge(super, idx.at(s), *target);
    src = super;
  }
  FlowSolution sol;
  sol.value = g.solve(src, idx.at(t));
  for (std::size_t a = 0; a < net.arcs.size(); ++a) {
    const double f = g.flow_on(arc_edges[a]);
    if (f > kFlowTol)
      sol.f[{net.arcs[a].from, net.arcs[a].to}] += f;
  }
  return sol;
}

// Subtracts circulation until the support subgraph is acyclic; the flow value
// is unchanged.
inline FlowSolution remove_cycles(FlowSolution flow) {
  for (;;) {
    // adjacency over positive-flow arcs
    std::map<int, std::vector<int>> adj;
    for (const auto& [arc, f] : flow.f)
      if (f > kFlowTol) adj[arc.first].push_back(arc.second);
    // DFS cycle search
    std::map<int, int> state; // 0 unseen, 1 on stack, 2 done
    std::vector<int> stack, path;
    bool found = false;
    std::vector<int> cycle;
    std::function<void(int)> dfs = [&](int u) {
      if (found) return;
      state[u] = 1;
      path.push_back(u);
      for (const int v : adj[u]) {
        if (found) return;
        if (state[v] == 1) {
          const auto it = std::find(path.begin(), path.end(), v);
          cycle.assign(it, path.end());
          cycle.push_back(v);
          found = true;
          return;
        }
        if (state[v] == 0) dfs(v);
      }
      path.pop_back();
      state[u] = 2;
    };
    for (const auto& [u, _] : adj) {
      if (state[u] == 0) dfs(u);
      if (found) break;
    }
    if (!found) return flow;
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < cycle.size(); ++i)
      lo = std::min(lo, flow.f.at({cycle[i], cycle[i + 1]}));
    for (std::size_t i = 0; i + 1 < cycle.size(); ++i) {
      double& f = flow.f.at({cycle[i], cycle[i + 1]});
      f -= lo;
      if (f <= kFlowTol) f = 0.0;
    }
  }
}

struct PathDecomposition {
  std::vector<std::vector<int>> paths;
  std::vector<double> rates;

  double total_rate() const {
    double s = 0.0;
    for (const double r : rates) s += r;
    return s;
  }
};

// Greedy bottleneck extraction; next hop is always the lowest node id with
// residual flow. Requires an acyclic flow.
inline PathDecomposition decompose_paths(const FlowSolution& flow, int s, int t) {
  // acyclicity check
  {
    std::map<int, std::vector<int>> adj;
    std::map<int, int> indeg;
    std::set<int> ns;
    for (const auto& [arc, f] : flow.f)
      if (f > kFlowTol) {
        adj[arc.first].push_back(arc.second);
        indeg[arc.second]++;
        indeg.try_emplace(arc.first, 0);
        ns.insert(arc.first);
        ns.insert(arc.second);
      }
    std::vector<int> order;
    std::vector<int> q0;
    for (const auto& [n, d] : indeg)
      if (d == 0) q0.push_back(n);
    while (!q0.empty()) {
      const int u = q0.back();
      q0.pop_back();
      order.push_back(u);
      for (const int v : adj[u])
        if (--indeg[v] == 0) q0.push_back(v);
    }
    if (order.size() != ns.size())
      throw std::domain_error("decompose_paths: flow support has a cycle");
  }
  std::map<std::pair<int, int>, double> residual = flow.f;
  PathDecomposition out;
  for (;;) {
    std::vector<int> path{s};
    int u = s;
    double bottleneck = std::numeric_limits<double>::infinity();
    while (u != t) {
      int next = -1;
      double f_next = 0.0;
      for (const auto& [arc, f] : residual)
        if (arc.first == u && f > kFlowTol) {
          next = arc.second;
          f_next = f;
          break; // map order: lowest node id first
        }
      if (next < 0) break;
      bottleneck = std::min(bottleneck, f_next);
      path.push_back(next);
      u = next;
    }
    if (u != t) break;
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
      residual.at({path[i], path[i + 1]}) -= bottleneck;
    if (bottleneck >= kFlowTol) {
      out.paths.push_back(std::move(path));
      out.rates.push_back(bottleneck);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Wireless flows (LP over f_iJj with the per-subset broadcast constraints)

struct WirelessFlowSolution {
  // f[h][j]: flow credited to out-neighbor j on hyperarc index h
  std::vector<std::map<int, double>> f;
  // alpha[h][L][j]: splitting weights, sum_{j in L} alpha = 1
  std::vector<std::map<NodeSet, std::map<int, double>>> alpha;
  double value = 0.0;

  // Aggregated per (i,j) arc flow, for path decomposition.
  FlowSolution aggregate(const WirelessNetwork& net) const {
    FlowSolution agg;
    agg.value = value;
    for (std::size_t h = 0; h < f.size(); ++h)
      for (const auto& [j, v] : f[h])
        if (v > kFlowTol) agg.f[{net.hyperarcs[h].from, j}] += v;
    return agg;
  }
};

namespace detail {

// Splitting weights alpha from a feasible hyperarc flow, via a small
// bipartite max-flow: reception sets L supply z_iJL, neighbors j demand f_iJj.
inline std::map<NodeSet, std::map<int, double>> extract_alpha(
    const Hyperarc& h, const std::map<int, double>& f) {
  std::vector<NodeSet> sets;
  for (const auto& [l, z] : h.z) sets.push_back(l);
  std::map<int, std::size_t> jidx;
  for (const int j : h.to) jidx.emplace(j, jidx.size());
  const std::size_t src = sets.size() + jidx.size();
  const std::size_t dst = src + 1;
  MaxFlowGraph g(dst + 1);
  std::map<std::pair<std::size_t, int>, std::size_t> mid_edges;
  for (std::size_t li = 0; li < sets.size(); ++li) {
    g.add_edge(src, li, h.z.at(sets[li]));
    for (const int j : sets[li])
      mid_edges[{li, j}] = g.add_edge(
          li, sets.size() + jidx.at(j), std::numeric_limits<double>::infinity());
  }
  for (const auto& [j, fj] : f)
    g.add_edge(sets.size() + jidx.at(j), dst, fj);
  g.solve(src, dst);
  std::map<NodeSet, std::map<int, double>> alpha;
  for (std::size_t li = 0; li < sets.size(); ++li) {
    const double z = h.z.at(sets[li]);
    double assigned = 0.0;
    for (const int j : sets[li]) {
      const double fl = g.flow_on(mid_edges.at({li, j}));
      if (z > 0.0 && fl > 0.0) {
        alpha[sets[li]][j] = fl / z;
        assigned += fl / z;
      }
    }
    // leftover mass goes to the lowest node id in L so weights sum to one
    alpha[sets[li]][sets[li].front()] += 1.0 - assigned;
  }
  return alpha;
}

} // namespace detail

inline Cut min_cut(const WirelessNetwork& net, int s, int t) {
  if (net.nodes.size() > 20)
    throw std::length_error("min_cut: hypergraph enumeration limited to 20 nodes");
  return detail::min_cut_enumerate(net, s, t);
}

// Feasibility LP for target rate R; nullopt when infeasible (R > C).
inline std::optional<WirelessFlowSolution> feasible_flow_wireless(
    const WirelessNetwork& net, int s, int t, double target_rate) {
  if (target_rate < 0.0)
    throw std::domain_error("feasible_flow_wireless: negative rate");
  std::size_t constraint_count = 0;
  for (const Hyperarc& h : net.hyperarcs) {
    if (h.to.size() > 16)
      throw std::length_error("feasible_flow_wireless: hyperarc tail too large");
    constraint_count += 1ull << h.to.size();
  }
  if (constraint_count > 100000)
    throw std::length_error("feasible_flow_wireless: constraint family too large");

  // variable layout: one f_iJj per (hyperarc, j in J)
  std::vector<std::pair<std::size_t, int>> vars;
  std::map<std::pair<std::size_t, int>, std::size_t> vidx;
  for (std::size_t hI = 0; hI < net.hyperarcs.size(); ++hI)
    for (const int j : net.hyperarcs[hI].to) {
      vidx[{hI, j}] = vars.size();
      vars.emplace_back(hI, j);
    }

  SimplexSolver lp(vars.size());
  for (std::size_t v = 0; v < vars.size(); ++v)
    lp.set_objective(v, 1.0); // minimal total flow keeps the solution clean

  // conservation at every node
  for (const int n : net.nodes) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t v = 0; v < vars.size(); ++v) {
      const auto& [hI, j] = vars[v];
      double coeff = 0.0;
      if (net.hyperarcs[hI].from == n) coeff += 1.0;
      if (j == n) coeff -= 1.0;
      if (coeff != 0.0) terms.emplace_back(v, coeff);
    }
    const double rhs = n == s ? target_rate : (n == t ? -target_rate : 0.0);
    lp.add_constraint(terms, SimplexSolver::Relation::Equal, rhs);
  }

  // broadcast capacity: sum_{j in K} f_iJj <= sum_{L : L cap K != empty} z_iJL
  for (std::size_t hI = 0; hI < net.hyperarcs.size(); ++hI) {
    const Hyperarc& h = net.hyperarcs[hI];
    const std::size_t jn = h.to.size();
    for (std::uint32_t mask = 1; mask < (1u << jn); ++mask) {
      NodeSet k;
      for (std::size_t b = 0; b < jn; ++b)
        if (mask & (1u << b)) k.push_back(h.to[b]);
      double rhs = 0.0;
      for (const auto& [l, z] : h.z) {
        bool intersects = false;
        for (const int j : l)
          if (std::binary_search(k.begin(), k.end(), j)) {
            intersects = true;
            break;
          }
        if (intersects) rhs += z;
      }
      std::vector<std::pair<std::size_t, double>> terms;
      for (const int j : k) terms.emplace_back(vidx.at({hI, j}), 1.0);
      lp.add_constraint(terms, SimplexSolver::Relation::LessEq, rhs);
    }
  }

  const auto res = lp.solve();
  if (res.status != SimplexSolver::Status::Optimal) return std::nullopt;

  WirelessFlowSolution sol;
  sol.value = target_rate;
  sol.f.resize(net.hyperarcs.size());
  for (std::size_t v = 0; v < vars.size(); ++v)
    if (res.x[v] > kFlowTol) sol.f[vars[v].first][vars[v].second] = res.x[v];
  sol.alpha.resize(net.hyperarcs.size());
  for (std::size_t hI = 0; hI < net.hyperarcs.size(); ++hI)
    sol.alpha[hI] = detail::extract_alpha(net.hyperarcs[hI], sol.f[hI]);
  return sol;
}

// Per-sink capacities C_t, each computed independently.
template <typename Net>
std::map<int, Cut> multicast_region(const Net& net, int s,
                                    const std::vector<int>& sinks) {
  if (sinks.empty()) throw std::domain_error("multicast_region: no sinks");
  std::map<int, Cut> region;
  for (const int t : sinks) region.emplace(t, min_cut(net, s, t));
  return region;
}

} // namespace ncsim
