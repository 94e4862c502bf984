#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ncsim {

// ---------------------------------------------------------------------------
// Injection and loss processes (per arc / hyperarc)

struct PoissonInjection {
  double rate = 0.0;
};

// B(tau) = 1 + floor(tau): one injection at every integer instant, first at 0.
struct DeterministicInjection {};

struct TraceInjection {
  std::vector<double> times;
};

using InjectionProcess =
    std::variant<PoissonInjection, DeterministicInjection, TraceInjection>;

struct IidLoss {
  double eps = 0.0;
};

// Continuous-time Markov chain; rates[i][j] is the transition rate i -> j.
struct MarkovChainSpec {
  std::vector<std::vector<double>> rates;
  std::size_t states() const { return rates.size(); }
};

struct MarkovLoss {
  MarkovChainSpec chain;            // ignored when shared_chain >= 0
  std::vector<double> eps;          // per-state loss probability
  std::vector<double> inj_rate;     // per-state injection rate
  int shared_chain = -1;            // index into WirelineNetwork::shared_chains
};

using LossProcess = std::variant<std::monostate, IidLoss, MarkovLoss>;

// ---------------------------------------------------------------------------
// Markov chain utilities

inline bool markov_irreducible(const MarkovChainSpec& c) {
  const std::size_t n = c.states();
  if (n == 0) return false;
  if (n == 1) return true;
  // strong connectivity over positive-rate transitions, both directions
  for (int dir = 0; dir < 2; ++dir) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        const double r = dir == 0 ? c.rates[u][v] : c.rates[v][u];
        if (v != u && r > 0 && !seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
      return false;
  }
  return true;
}

// Steady-state probabilities: pi Q = 0, sum pi = 1.
inline std::vector<double> markov_steady_state(const MarkovChainSpec& c) {
  if (!markov_irreducible(c))
    throw std::domain_error("markov_steady_state: chain is reducible");
  const std::size_t n = c.states();
  // Build Q^T, replace last equation with the normalization constraint.
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    double diag = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) diag += c.rates[i][j];
    for (std::size_t j = 0; j < n; ++j)
      a[j][i] = (j == i) ? -diag : c.rates[i][j];
  }
  for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
  a[n - 1][n] = 1.0;
  // Gaussian elimination with partial pivoting.
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    if (std::abs(a[col][col]) < 1e-14)
      throw std::domain_error("markov_steady_state: singular system");
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t k = col; k <= n; ++k) a[r][k] -= f * a[col][k];
    }
  }
  std::vector<double> pi(n);
  for (std::size_t i = 0; i < n; ++i) pi[i] = a[i][n] / a[i][i];
  return pi;
}

// ---------------------------------------------------------------------------
// Wireline networks

struct Arc {
  int from = -1;
  int to = -1;
  std::optional<double> z; // explicit reception-rate override
  std::optional<InjectionProcess> injection;
  LossProcess loss;
};

// z = (1 - eps) * r for i.i.d. Bernoulli losses.
inline double effective_rate_iid(double r, double eps) {
  if (eps < 0.0 || eps > 1.0)
    throw std::domain_error("effective_rate_iid: eps must be in [0,1]");
  if (r < 0.0) throw std::domain_error("effective_rate_iid: negative rate");
  return (1.0 - eps) * r;
}

// z = sum_k pi_k (1 - eps_k) r_k for Markov-modulated losses.
inline double effective_rate_markov(const MarkovChainSpec& chain,
                                    const std::vector<double>& eps,
                                    const std::vector<double>& inj_rate) {
  if (eps.size() != chain.states() || inj_rate.size() != chain.states())
    throw std::domain_error("effective_rate_markov: per-state vectors must match chain");
  const auto pi = markov_steady_state(chain);
  double z = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    if (eps[k] < 0.0 || eps[k] > 1.0)
      throw std::domain_error("effective_rate_markov: eps out of range");
    z += pi[k] * (1.0 - eps[k]) * inj_rate[k];
  }
  return z;
}

struct WirelineNetwork {
  std::vector<int> nodes;
  std::vector<Arc> arcs;
  int source = -1;
  std::vector<int> sinks;
  std::vector<MarkovChainSpec> shared_chains;

  bool has_node(int n) const {
    return std::find(nodes.begin(), nodes.end(), n) != nodes.end();
  }

  const MarkovChainSpec& chain_of(const MarkovLoss& ml) const {
    if (ml.shared_chain < 0) return ml.chain;
    return shared_chains.at(static_cast<std::size_t>(ml.shared_chain));
  }

  double injection_rate(std::size_t arc_idx) const {
    const Arc& a = arcs[arc_idx];
    if (const auto* ml = std::get_if<MarkovLoss>(&a.loss)) {
      const auto pi = markov_steady_state(chain_of(*ml));
      double r = 0.0;
      for (std::size_t k = 0; k < pi.size(); ++k) r += pi[k] * ml->inj_rate[k];
      return r;
    }
    if (!a.injection) return 0.0;
    if (const auto* p = std::get_if<PoissonInjection>(&*a.injection)) return p->rate;
    if (std::get_if<DeterministicInjection>(&*a.injection)) return 1.0;
    return 0.0; // trace: no declared long-run rate
  }

  // Average reception rate z_ij, from the override or the arc's processes.
  double arc_rate(std::size_t arc_idx) const {
    const Arc& a = arcs[arc_idx];
    if (a.z) return *a.z;
    if (const auto* ml = std::get_if<MarkovLoss>(&a.loss))
      return effective_rate_markov(chain_of(*ml), ml->eps, ml->inj_rate);
    if (!a.injection)
      throw std::domain_error("arc_rate: neither z nor injection given");
    const double r = injection_rate(arc_idx);
    if (const auto* il = std::get_if<IidLoss>(&a.loss))
      return effective_rate_iid(r, il->eps);
    return r; // lossless
  }

  void validate() const {
    for (const Arc& a : arcs) {
      if (a.from == a.to)
        throw std::domain_error("network: self-loop arc");
      if (!has_node(a.from) || !has_node(a.to))
        throw std::domain_error("network: arc references unknown node");
      if (a.z && *a.z < 0.0)
        throw std::domain_error("network: negative z");
    }
  }
};

// Splits arc (i,j) into (i,i') lossy + (i',j) lossless, modelling link delay
// as a FIFO node. Min-cuts are unchanged.
inline WirelineNetwork transform_delay_link(const WirelineNetwork& net,
                                            std::size_t arc_idx) {
  if (arc_idx >= net.arcs.size())
    throw std::domain_error("transform_delay_link: no such arc");
  WirelineNetwork out = net;
  const int fresh = *std::max_element(net.nodes.begin(), net.nodes.end()) + 1;
  out.nodes.push_back(fresh);
  Arc& lossy = out.arcs[arc_idx]; // keeps injection/loss processes and z
  const int j = lossy.to;
  lossy.to = fresh;
  Arc lossless;
  lossless.from = fresh;
  lossless.to = j;
  lossless.z = net.arc_rate(arc_idx);
  out.arcs.push_back(lossless);
  return out;
}

// ---------------------------------------------------------------------------
// Wireless (hypergraph) networks

using NodeSet = std::vector<int>; // sorted, unique

inline NodeSet make_node_set(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

inline bool node_set_subset(const NodeSet& a, const NodeSet& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

struct Hyperarc {
  int from = -1;
  NodeSet to;                        // J
  std::map<NodeSet, double> z;       // reception rates per nonempty K subset of J
  std::optional<double> injection_rate; // r; defaults to sum of z
  double slot_q = -1.0;              // Aloha per-slot transmit probability

  double total_z() const {
    double s = 0.0;
    for (const auto& [k, v] : z) s += v;
    return s;
  }
  double rate() const { return injection_rate ? *injection_rate : total_z(); }
};

// Explicit conditional reception distribution for one (hyperarc, transmit set).
struct AlohaTableEntry {
  std::size_t arc = 0;
  std::vector<std::size_t> transmit_set;       // arc indices, sorted
  std::map<NodeSet, double> reception_prob;    // p'(K | C); remainder = total loss
};

struct WirelessNetwork {
  std::vector<int> nodes;
  std::vector<Hyperarc> hyperarcs;
  int source = -1;
  std::vector<int> sinks;
  bool aloha = false;
  // Collision rule: j receives i's packet iff no node of interferers[j],
  // other than i itself, transmits in the slot. Default: all nodes.
  std::map<int, NodeSet> interferers;
  std::vector<AlohaTableEntry> table;

  bool has_node(int n) const {
    return std::find(nodes.begin(), nodes.end(), n) != nodes.end();
  }

  NodeSet interferers_of(int node) const {
    const auto it = interferers.find(node);
    if (it != interferers.end()) return it->second;
    return make_node_set(nodes);
  }

  void validate() const {
    for (const Hyperarc& h : hyperarcs) {
      if (!has_node(h.from))
        throw std::domain_error("network: hyperarc head unknown");
      if (h.to.empty())
        throw std::domain_error("network: hyperarc tail empty");
      for (int j : h.to) {
        if (!has_node(j))
          throw std::domain_error("network: hyperarc tail node unknown");
        if (j == h.from)
          throw std::domain_error("network: hyperarc contains its own head");
      }
      for (const auto& [k, v] : h.z) {
        if (k.empty() || !node_set_subset(k, h.to))
          throw std::domain_error("network: reception set K must be a nonempty subset of J");
        if (v < 0.0) throw std::domain_error("network: negative z_iJK");
      }
      if (h.injection_rate && h.total_z() > *h.injection_rate + 1e-12)
        throw std::domain_error("network: sum of z_iJK exceeds injection rate");
      if (aloha && (h.slot_q < 0.0 || h.slot_q > 1.0))
        throw std::domain_error("network: aloha transmit probability out of range");
    }
  }
};

// Reception set for the packet transmitted on hyperarc `arc`, given the set
// of transmitting hyperarcs, under the default collision rule.
inline NodeSet aloha_collision_reception(const WirelessNetwork& net,
                                         std::size_t arc,
                                         const std::vector<bool>& transmits) {
  std::set<int> tx_nodes;
  for (std::size_t a = 0; a < net.hyperarcs.size(); ++a)
    if (transmits[a]) tx_nodes.insert(net.hyperarcs[a].from);
  const Hyperarc& h = net.hyperarcs[arc];
  NodeSet k;
  for (int j : h.to) {
    bool collided = false;
    for (int n : net.interferers_of(j))
      if (n != h.from && tx_nodes.count(n)) {
        collided = true;
        break;
      }
    if (!collided) k.push_back(j);
  }
  return k;
}

inline const AlohaTableEntry* aloha_table_lookup(
    const WirelessNetwork& net, std::size_t arc,
    const std::vector<std::size_t>& transmit_set) {
  for (const auto& e : net.table)
    if (e.arc == arc && e.transmit_set == transmit_set) return &e;
  return nullptr;
}

// Exact unconditioned reception rates z_iJK by enumeration over all 2^|A|
// transmit patterns. Fills each hyperarc's z map (and leaves injection_rate
// at the slot transmit probability).
inline WirelessNetwork aloha_reception_rates(WirelessNetwork net) {
  const std::size_t n = net.hyperarcs.size();
  if (n > 20)
    throw std::length_error("aloha_reception_rates: more than 20 hyperarcs");
  for (auto& h : net.hyperarcs) {
    h.z.clear();
    h.injection_rate = h.slot_q;
  }
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double prob = 1.0;
    std::vector<bool> tx(n, false);
    std::vector<std::size_t> tx_set;
    for (std::size_t a = 0; a < n; ++a) {
      const double q = net.hyperarcs[a].slot_q;
      if (mask & (1u << a)) {
        prob *= q;
        tx[a] = true;
        tx_set.push_back(a);
      } else {
        prob *= 1.0 - q;
      }
    }
    if (prob == 0.0) continue;
    for (const std::size_t a : tx_set) {
      if (const AlohaTableEntry* e = aloha_table_lookup(net, a, tx_set)) {
        for (const auto& [k, p] : e->reception_prob)
          if (!k.empty()) net.hyperarcs[a].z[k] += prob * p;
      } else {
        const NodeSet k = aloha_collision_reception(net, a, tx);
        if (!k.empty()) net.hyperarcs[a].z[k] += prob;
      }
    }
  }
  return net;
}

using NetworkSpec = std::variant<WirelineNetwork, WirelessNetwork>;

} // namespace ncsim
