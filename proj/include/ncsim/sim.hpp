#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <thread>
#include <variant>
#include <vector>

#include "capacity.hpp"
#include "codec.hpp"
#include "netmodel.hpp"
#include "rng.hpp"

namespace ncsim {

// ---------------------------------------------------------------------------
// Configuration

enum class SimMode { Block, Rateless };

// Innovation-tracking instrumentation (auxiliary encoding vectors, the
// per-path V_l sets, and the innovation-order gate).
struct TrackerParams {
  int rho = 1;
  // With thinning on, each delivery is attributed to a path with the
  // flow-proportional probabilities; residual mass means "no path". With
  // thinning off (tandem analysis), the unique path through the arc gets
  // probability one.
  bool thinning = true;
  // Candidate thinning: a reception past the first hop can be serviced only
  // with probability 1 - q^-rho ("candidate packets"). This is the queueing
  // discipline whose fluid limit the tandem growth predictions describe; the
  // per-path marking rule itself does not thin.
  bool candidate_thinning = false;
  PathDecomposition paths;
  std::vector<double> sample_times; // V_l counts are snapshotted here
  // wireless attribution: alpha weights and denominators per hyperarc
  std::vector<std::map<NodeSet, std::map<int, double>>> alpha;
};

struct SimConfig {
  NetworkSpec net;
  std::size_t K = 0;
  std::size_t lambda = 1;
  int field = 256; // q
  SimMode mode = SimMode::Block;
  double delta = 0.0;                // default decode deadline
  std::map<int, double> sink_delta;  // per-sink overrides
  double rateless_time_cap = 0.0;    // hard stop for rateless runs
  std::uint64_t seed = 0;
  std::size_t replications = 1;
  std::size_t threads = 0;           // 0 = hardware concurrency
  bool intermediate_prune = true;
  bool sink_prune = true;
  bool attempt_decode = true;        // off for pure instrumentation runs
  bool early_stop_at_full_rank = false; // error-probability runs
  std::optional<TrackerParams> tracking;

  double sink_deadline(int t) const {
    const auto it = sink_delta.find(t);
    return it != sink_delta.end() ? it->second : delta;
  }
};

// ---------------------------------------------------------------------------
// Results

struct ArcTrace {
  std::uint64_t injections = 0;
  std::uint64_t receptions = 0; // deliveries (wireless: one per reception event)
  std::uint64_t skipped = 0;    // injections skipped due to empty memory
  std::map<NodeSet, std::uint64_t> receptions_by_set; // wireless only
};

struct SinkOutcome {
  bool decoded = false;
  double decode_time = -1.0; // rateless: first time rank reached K
  std::size_t final_rank = 0;
};

struct SimTrace {
  std::vector<ArcTrace> arcs;
  std::map<int, SinkOutcome> sinks;
  double end_time = 0.0;
  std::uint64_t total_deliveries = 0;
};

struct InnovationReport {
  std::vector<double> sample_times;
  // v_counts[m][l][k]: |V_{l+2}^{(p_m)}| at sample_times[k] (l = 0 is the
  // first hop set U, last entry is W).
  std::vector<std::vector<std::vector<std::size_t>>> v_counts;
  std::vector<std::size_t> w_final;      // |W^{(p_m)}(Delta)| per path
  std::uint64_t no_path_deliveries = 0;  // residual P_x mass
  std::uint64_t candidates_dropped = 0;  // lost to candidate thinning
  std::uint64_t gated_receptions = 0;    // gate passed, span test applied
  std::uint64_t gate_blocked = 0;        // gate condition failed
  std::uint64_t span_blocked = 0;        // gate passed but beta in span
  // soundness counters; all must stay zero
  std::uint64_t violations_span_growth = 0;
  std::uint64_t violations_gate = 0;
  bool w_union_independent = true;
};

struct ReplicationResult {
  SimTrace trace;
  std::optional<InnovationReport> report;
};

// ---------------------------------------------------------------------------
// Single-replication simulator

namespace detail {

struct Delivery {
  double time;
  std::size_t packet; // index into betas / packet log
  std::size_t arc;    // arc or hyperarc index
  int from;
  int to;            // wireline receiver; for wireless one Delivery per event
  NodeSet reception_set; // wireless K (empty for wireline)
};

struct EventKey {
  double t;
  int kind; // 0 markov, 1 slot, 2 injection, 3 deadline
  std::size_t a;
  std::uint64_t seq;
  bool operator>(const EventKey& o) const {
    if (t != o.t) return t > o.t;
    if (kind != o.kind) return kind > o.kind;
    if (a != o.a) return a > o.a;
    return seq > o.seq;
  }
};

class Replication {
public:
  Replication(const SimConfig& cfg, std::uint64_t rep_index)
      : cfg_(cfg), rng_(cfg.seed ^ rep_index),
        ctx_(FieldContext::of(cfg.field)) {}

  ReplicationResult run() {
    session_ = source_init(cfg_.K, cfg_.lambda, ctx_, rng_);
    const bool wireline = std::holds_alternative<WirelineNetwork>(cfg_.net);
    const auto& nodes = wireline
                            ? std::get<WirelineNetwork>(cfg_.net).nodes
                            : std::get<WirelessNetwork>(cfg_.net).nodes;
    source_ = wireline ? std::get<WirelineNetwork>(cfg_.net).source
                       : std::get<WirelessNetwork>(cfg_.net).source;
    sinks_ = wireline ? std::get<WirelineNetwork>(cfg_.net).sinks
                      : std::get<WirelessNetwork>(cfg_.net).sinks;

    end_time_ = cfg_.mode == SimMode::Block ? 0.0 : cfg_.rateless_time_cap;
    if (cfg_.mode == SimMode::Block)
      for (const int t : sinks_) end_time_ = std::max(end_time_, cfg_.sink_deadline(t));
    if (end_time_ <= 0.0)
      throw std::domain_error("sim: nonpositive horizon");

    for (const int n : nodes) {
      if (n == source_) {
        memories_.emplace(n, NodeMemory::source(session_));
      } else {
        const bool is_sink =
            std::find(sinks_.begin(), sinks_.end(), n) != sinks_.end();
        const bool prune = is_sink ? cfg_.sink_prune : cfg_.intermediate_prune;
        const bool track = prune || (is_sink && (cfg_.attempt_decode ||
                                                 cfg_.mode == SimMode::Rateless ||
                                                 cfg_.early_stop_at_full_rank));
        memories_.emplace(n, NodeMemory(session_, prune, track));
      }
    }

    if (wireline)
      setup_wireline(std::get<WirelineNetwork>(cfg_.net));
    else
      setup_wireless(std::get<WirelessNetwork>(cfg_.net));

    if (cfg_.mode == SimMode::Block)
      for (const int t : sinks_)
        push({cfg_.sink_deadline(t), 3, static_cast<std::size_t>(t), seq_++});

    loop();

    for (const int t : sinks_) {
      SinkOutcome& out = trace_.sinks[t];
      const NodeMemory& mem = memories_.at(t);
      if (cfg_.mode == SimMode::Rateless) {
        const auto it = rateless_done_.find(t);
        if (it != rateless_done_.end()) {
          out.decode_time = it->second;
          out.decoded = true;
        }
        out.final_rank = mem.rank();
      } else if (cfg_.early_stop_at_full_rank && !cfg_.attempt_decode) {
        // outcome recorded by the deadline handler or early stop
      }
    }
    trace_.end_time = end_time_;

    ReplicationResult res;
    res.trace = std::move(trace_);
    if (cfg_.tracking) res.report = run_tracker();
    return res;
  }

private:
  // -- setup ----------------------------------------------------------------

  void setup_wireline(const WirelineNetwork& net) {
    net.validate();
    trace_.arcs.resize(net.arcs.size());
    // Markov chain instances: one per shared id, one per private markov arc.
    chain_state_.assign(net.shared_chains.size(), 0);
    chains_ = net.shared_chains;
    arc_chain_.assign(net.arcs.size(), SIZE_MAX);
    for (std::size_t a = 0; a < net.arcs.size(); ++a) {
      const Arc& arc = net.arcs[a];
      if (const auto* ml = std::get_if<MarkovLoss>(&arc.loss)) {
        if (ml->shared_chain >= 0) {
          arc_chain_[a] = static_cast<std::size_t>(ml->shared_chain);
        } else {
          arc_chain_[a] = chains_.size();
          chains_.push_back(ml->chain);
          chain_state_.push_back(0);
        }
      }
    }
    arc_gen_.assign(net.arcs.size(), 0);
    for (std::size_t c = 0; c < chains_.size(); ++c) schedule_chain(c);
    for (std::size_t a = 0; a < net.arcs.size(); ++a) schedule_injection(net, a, 0.0, true);
  }

  void setup_wireless(const WirelessNetwork& net) {
    net.validate();
    trace_.arcs.resize(net.hyperarcs.size());
    if (net.aloha) {
      push({0.0, 1, 0, seq_++});
    } else {
      for (std::size_t a = 0; a < net.hyperarcs.size(); ++a) {
        const double r = net.hyperarcs[a].rate();
        if (r > 0.0) push({rng_.exponential(r), 2, a, seq_++});
      }
    }
  }

  void schedule_chain(std::size_t c) {
    const auto& rates = chains_[c].rates;
    const std::size_t s = chain_state_[c];
    double total = 0.0;
    for (std::size_t j = 0; j < rates.size(); ++j)
      if (j != s) total += rates[s][j];
    if (total <= 0.0) return;
    push({now_ + rng_.exponential(total), 0, c, seq_++});
  }

  // Markov-modulated Poisson arcs need rescheduling on chain transitions.
  static bool is_modulated(const Arc& arc) {
    const bool det = arc.injection &&
        std::holds_alternative<DeterministicInjection>(*arc.injection);
    return std::holds_alternative<MarkovLoss>(arc.loss) && !det;
  }

  // first=true schedules the initial injection of the run
  void schedule_injection(const WirelineNetwork& net, std::size_t a,
                          double from_time, bool first) {
    const Arc& arc = net.arcs[a];
    if (is_modulated(arc)) {
      // Markov-modulated Poisson: rate of the current state; rescheduled on
      // every chain transition (valid by memorylessness). arc_gen_ tokens
      // invalidate events superseded by a transition.
      const auto& ml = std::get<MarkovLoss>(arc.loss);
      const double r = ml.inj_rate.at(chain_state_[arc_chain_[a]]);
      ++arc_gen_[a];
      if (r > 0.0) push({from_time + rng_.exponential(r), 2, a, arc_gen_[a]});
      return;
    }
    if (!arc.injection) {
      // explicit-z arc: receptions are Poisson at rate z, lossless
      const double z = arc.z.value_or(0.0);
      if (z > 0.0) push({from_time + rng_.exponential(z), 2, a, seq_++});
      return;
    }
    if (const auto* p = std::get_if<PoissonInjection>(&*arc.injection)) {
      if (p->rate > 0.0)
        push({from_time + rng_.exponential(p->rate), 2, a, seq_++});
    } else if (std::holds_alternative<DeterministicInjection>(*arc.injection)) {
      const double next = first ? 0.0 : std::floor(from_time + 1e-9) + 1.0;
      if (next <= end_time_) push({next, 2, a, seq_++});
    } else if (const auto* tr = std::get_if<TraceInjection>(&*arc.injection)) {
      if (first)
        for (const double t : tr->times)
          if (t <= end_time_) push({t, 2, a, seq_++});
    }
  }

  // -- event loop -----------------------------------------------------------

  void push(EventKey e) { queue_.push(e); }

  void loop() {
    while (!queue_.empty()) {
      const EventKey e = queue_.top();
      queue_.pop();
      if (e.t > end_time_ + 1e-12) break;
      now_ = e.t;
      switch (e.kind) {
      case 0: handle_chain_transition(e.a); break;
      case 1: handle_aloha_slot(); break;
      case 2: handle_injection(e); break;
      case 3: handle_deadline(static_cast<int>(e.a)); break;
      }
      if (stop_) break;
    }
  }

  void handle_chain_transition(std::size_t c) {
    const auto& rates = chains_[c].rates;
    const std::size_t s = chain_state_[c];
    double total = 0.0;
    for (std::size_t j = 0; j < rates.size(); ++j)
      if (j != s) total += rates[s][j];
    double u = rng_.uniform() * total;
    std::size_t next = s;
    for (std::size_t j = 0; j < rates.size(); ++j) {
      if (j == s) continue;
      u -= rates[s][j];
      if (u <= 0.0) { next = j; break; }
    }
    chain_state_[c] = next;
    schedule_chain(c);
    // reschedule modulated Poisson injections on arcs driven by this chain
    const auto& net = std::get<WirelineNetwork>(cfg_.net);
    for (std::size_t a = 0; a < net.arcs.size(); ++a)
      if (arc_chain_[a] == c && is_modulated(net.arcs[a]))
        schedule_injection(net, a, now_, false);
  }

  void handle_injection(const EventKey& e) {
    if (std::holds_alternative<WirelineNetwork>(cfg_.net))
      handle_wireline_injection(e);
    else
      handle_wireless_injection(e.a);
  }

  void handle_wireline_injection(const EventKey& e) {
    const auto& net = std::get<WirelineNetwork>(cfg_.net);
    const std::size_t a = e.a;
    const Arc& arc = net.arcs[a];
    if (is_modulated(arc) && e.seq != arc_gen_[a])
      return; // superseded by a chain transition
    ++trace_.arcs[a].injections;

    bool received = true;
    if (const auto* ml = std::get_if<MarkovLoss>(&arc.loss)) {
      received = !rng_.bernoulli(ml->eps.at(chain_state_[arc_chain_[a]]));
    } else if (const auto* il = std::get_if<IidLoss>(&arc.loss)) {
      received = !rng_.bernoulli(il->eps);
    } // explicit-z arcs (monostate loss) model receptions directly

    NodeMemory& src_mem = memories_.at(arc.from);
    if (src_mem.empty()) {
      ++trace_.arcs[a].skipped;
    } else {
      Packet p = src_mem.encode(rng_, arc.from, now_);
      stamp_source_beta(p, arc.from);
      if (received) deliver(std::move(p), a, arc.from, arc.to, {});
    }
    schedule_injection(net, a, now_, false);
  }

  void handle_wireless_injection(std::size_t a) {
    const auto& net = std::get<WirelessNetwork>(cfg_.net);
    const Hyperarc& h = net.hyperarcs[a];
    ++trace_.arcs[a].injections;
    // sample the reception set from the normalized z masses
    const double r = h.rate();
    double u = rng_.uniform() * r;
    const NodeSet* k = nullptr;
    for (const auto& [set, z] : h.z) {
      u -= z;
      if (u <= 0.0) { k = &set; break; }
    }
    NodeMemory& src_mem = memories_.at(h.from);
    if (src_mem.empty()) {
      ++trace_.arcs[a].skipped;
    } else if (k) {
      Packet p = src_mem.encode(rng_, h.from, now_);
      stamp_source_beta(p, h.from);
      deliver(std::move(p), a, h.from, -1, *k);
    }
    push({now_ + rng_.exponential(r), 2, a, seq_++});
  }

  void handle_aloha_slot() {
    const auto& net = std::get<WirelessNetwork>(cfg_.net);
    const std::size_t n = net.hyperarcs.size();
    std::vector<bool> tx(n, false);
    std::vector<std::size_t> tx_set;
    for (std::size_t a = 0; a < n; ++a)
      if (rng_.bernoulli(net.hyperarcs[a].slot_q)) {
        tx[a] = true;
        tx_set.push_back(a);
      }
    for (const std::size_t a : tx_set) {
      const Hyperarc& h = net.hyperarcs[a];
      ++trace_.arcs[a].injections;
      NodeMemory& src_mem = memories_.at(h.from);
      if (src_mem.empty()) {
        ++trace_.arcs[a].skipped;
        continue;
      }
      NodeSet k;
      if (const AlohaTableEntry* e = aloha_table_lookup(net, a, tx_set)) {
        double u = rng_.uniform();
        for (const auto& [set, p] : e->reception_prob) {
          u -= p;
          if (u <= 0.0) { k = set; break; }
        }
      } else {
        k = aloha_collision_reception(net, a, tx);
      }
      if (k.empty()) continue;
      Packet p = src_mem.encode(rng_, h.from, now_);
      stamp_source_beta(p, h.from);
      deliver(std::move(p), a, h.from, -1, k);
      if (stop_) return;
    }
    if (now_ + 1.0 <= end_time_) push({now_ + 1.0, 1, 0, seq_++});
  }

  void stamp_source_beta(Packet& p, int from) {
    if (!cfg_.tracking || from != source_) return;
    p.beta.assign(source_emissions_ + 1, 0);
    p.beta[source_emissions_] = 1;
    ++source_emissions_;
  }

  void deliver(Packet p, std::size_t arc, int from, int to, const NodeSet& k) {
    ++trace_.arcs[arc].receptions;
    if (!k.empty()) ++trace_.arcs[arc].receptions_by_set[k];
    std::size_t packet_id = SIZE_MAX;
    if (cfg_.tracking) {
      packet_id = betas_.size();
      betas_.push_back(p.beta);
      deliveries_.push_back({now_, packet_id, arc, from, to, k});
    }
    const NodeSet targets = k.empty() ? NodeSet{to} : k;
    for (const int j : targets) {
      ++trace_.total_deliveries;
      memories_.at(j).receive(p); // identical packet object to every receiver
      after_reception(j);
      if (stop_) return;
    }
  }

  void after_reception(int node) {
    const bool is_sink =
        std::find(sinks_.begin(), sinks_.end(), node) != sinks_.end();
    if (!is_sink) return;
    if (cfg_.mode == SimMode::Rateless) {
      if (!rateless_done_.count(node) &&
          memories_.at(node).rank() >= session_.K) {
        rateless_done_[node] = now_;
        if (rateless_done_.size() == sinks_.size()) stop_ = true;
      }
    } else if (cfg_.early_stop_at_full_rank) {
      if (memories_.at(node).rank() >= session_.K) {
        SinkOutcome& out = trace_.sinks[node];
        out.decoded = true;
        out.decode_time = now_;
        out.final_rank = session_.K;
        if (trace_.sinks.size() == sinks_.size()) {
          bool all = true;
          for (const int t : sinks_)
            if (!trace_.sinks.count(t) || !trace_.sinks.at(t).decoded) all = false;
          if (all) stop_ = true;
        }
      }
    }
  }

  void handle_deadline(int t) {
    SinkOutcome& out = trace_.sinks[t];
    const NodeMemory& mem = memories_.at(t);
    if (cfg_.early_stop_at_full_rank && out.decoded) return;
    if (cfg_.attempt_decode) {
      const auto decoded = mem.try_decode();
      out.decoded = decoded.has_value();
      if (out.decoded) {
        out.decode_time = now_;
        if (*decoded != session_.messages)
          throw std::logic_error("decode returned wrong messages");
      }
      out.final_rank = mem.rank();
    } else if (cfg_.early_stop_at_full_rank) {
      out.final_rank = mem.rank();
      out.decoded = out.final_rank >= session_.K;
      if (out.decoded) out.decode_time = now_;
    } else {
      out.decoded = false;
    }
  }

  // -- innovation tracking (replay pass) ------------------------------------

  InnovationReport run_tracker();

  const SimConfig& cfg_;
  Rng rng_;
  const FieldContext& ctx_;
  Session session_;
  int source_ = -1;
  std::vector<int> sinks_;
  std::map<int, NodeMemory> memories_;
  std::priority_queue<EventKey, std::vector<EventKey>, std::greater<>> queue_;
  double now_ = 0.0;
  double end_time_ = 0.0;
  std::uint64_t seq_ = 1;
  bool stop_ = false;
  SimTrace trace_;
  std::map<int, double> rateless_done_;

  std::vector<MarkovChainSpec> chains_;
  std::vector<std::size_t> chain_state_;
  std::vector<std::size_t> arc_chain_;
  std::vector<std::uint64_t> arc_gen_;

  std::size_t source_emissions_ = 0;
  std::vector<std::vector<std::uint8_t>> betas_;
  std::vector<Delivery> deliveries_;
};

// Replay pass over the recorded deliveries. Pass 1 draws P_x for every
// packet and buckets the attributed receptions per path; this fixes every
// U set up front, so the non-causal tilde-V unions (later paths' U at the
// horizon) are available when paths are then replayed in order.
inline InnovationReport Replication::run_tracker() {
  const TrackerParams& tp = *cfg_.tracking;
  InnovationReport rep;
  rep.sample_times = tp.sample_times;
  const std::size_t M = tp.paths.paths.size();
  if (M == 0) return rep;
  const bool wireline = std::holds_alternative<WirelineNetwork>(cfg_.net);

  // outward neighbor of each node on each path, with the 1-based hop index
  struct Hop { int to; std::size_t index; };
  std::vector<std::map<int, Hop>> hop_from(M);
  for (std::size_t m = 0; m < M; ++m) {
    const auto& p = tp.paths.paths[m];
    for (std::size_t h = 0; h + 1 < p.size(); ++h)
      hop_from[m][p[h]] = {p[h + 1], h + 1};
  }

  std::vector<double> arc_z;
  if (wireline) {
    const auto& net = std::get<WirelineNetwork>(cfg_.net);
    for (std::size_t a = 0; a < net.arcs.size(); ++a)
      arc_z.push_back(net.arc_rate(a));
  }
  // wireless denominators: sum over L containing j of alpha_{iJL}^{(j)} z_{iJL}
  std::vector<std::map<int, double>> denom;
  if (!wireline) {
    const auto& net = std::get<WirelessNetwork>(cfg_.net);
    denom.resize(net.hyperarcs.size());
    for (std::size_t a = 0; a < net.hyperarcs.size() && a < tp.alpha.size(); ++a)
      for (const auto& [set, by_node] : tp.alpha[a]) {
        const auto zit = net.hyperarcs[a].z.find(set);
        if (zit == net.hyperarcs[a].z.end()) continue;
        for (const auto& [j, w] : by_node) denom[a][j] += w * zit->second;
      }
  }
  const auto alpha_of = [&](std::size_t a, const NodeSet& k, int j) {
    if (a >= tp.alpha.size()) return 0.0;
    const auto sit = tp.alpha[a].find(k);
    if (sit == tp.alpha[a].end()) return 0.0;
    const auto jit = sit->second.find(j);
    return jit == sit->second.end() ? 0.0 : jit->second;
  };

  // Pass 1: one P_x draw per recorded delivery.
  struct Attributed { double t; std::size_t hop; std::size_t beta; };
  std::vector<std::vector<Attributed>> per_path(M);
  for (const Delivery& d : deliveries_) {
    double u = rng_.uniform();
    bool any = false, assigned = false;
    for (std::size_t m = 0; m < M && !assigned; ++m) {
      const auto it = hop_from[m].find(d.from);
      if (it == hop_from[m].end()) continue;
      const int j = it->second.to;
      if (d.reception_set.empty()) {
        if (d.to != j) continue;
      } else if (!std::binary_search(d.reception_set.begin(),
                                     d.reception_set.end(), j)) {
        continue;
      }
      double prob;
      if (!tp.thinning) prob = 1.0;
      else if (wireline) prob = tp.paths.rates[m] / arc_z[d.arc];
      else {
        const double den = denom[d.arc].count(j) ? denom[d.arc].at(j) : 0.0;
        prob = den > 0.0
                   ? tp.paths.rates[m] * alpha_of(d.arc, d.reception_set, j) / den
                   : 0.0;
      }
      any = true;
      u -= prob;
      if (u < 0.0) {
        per_path[m].push_back({d.time, it->second.index, d.packet});
        assigned = true;
      }
    }
    if (any && !assigned) ++rep.no_path_deliveries;
  }

  // U^{(p_m)}(Delta): everything attributed to the first hop.
  std::vector<std::vector<std::size_t>> u_final(M);
  for (std::size_t m = 0; m < M; ++m)
    for (const Attributed& a : per_path[m])
      if (a.hop == 1) u_final[m].push_back(a.beta);

  // Pass 2: replay paths in order; earlier paths contribute W(Delta), later
  // ones U(Delta) to the exclusion set.
  const std::size_t S = tp.sample_times.size();
  rep.v_counts.assign(M, {});
  rep.w_final.assign(M, 0);
  std::vector<std::vector<std::size_t>> w_sets(M);
  for (std::size_t m = 0; m < M; ++m) {
    const std::size_t H = tp.paths.paths[m].size() - 1;
    std::vector<std::size_t> tilde;
    for (std::size_t n = 0; n < m; ++n)
      tilde.insert(tilde.end(), w_sets[n].begin(), w_sets[n].end());
    for (std::size_t n = m + 1; n < M; ++n)
      tilde.insert(tilde.end(), u_final[n].begin(), u_final[n].end());

    // per-hop state: member lists plus, for hops >= 2, a basis of
    // span(V_l union tilde-V)
    std::vector<std::vector<std::size_t>> members(H + 1);
    std::vector<EchelonBasis> basis(H + 1, EchelonBasis(ctx_));
    for (std::size_t l = 2; l <= H; ++l)
      for (const std::size_t b : tilde) basis[l].insert(betas_[b]);

    rep.v_counts[m].assign(H, std::vector<std::size_t>(S, 0));
    std::size_t si = 0;
    const auto snapshot_before = [&](double t) {
      while (si < S && tp.sample_times[si] < t) {
        for (std::size_t l = 1; l <= H; ++l)
          rep.v_counts[m][l - 1][si] = members[l].size();
        ++si;
      }
    };
    const double candidate_prob =
        1.0 - std::pow(static_cast<double>(ctx_.q()), -tp.rho);
    for (const Attributed& a : per_path[m]) {
      snapshot_before(a.t);
      const std::size_t l = a.hop;
      if (l == 1) {
        members[1].push_back(a.beta); // first-hop receptions: fresh source
        continue;                     // emissions, always innovative
      }
      if (tp.candidate_thinning && !rng_.bernoulli(candidate_prob)) {
        ++rep.candidates_dropped;
        continue;
      }
      if (members[l - 1].size() >
          members[l].size() + static_cast<std::size_t>(tp.rho) - 1) {
        ++rep.gated_receptions;
        if (basis[l].insert(betas_[a.beta])) {
          members[l].push_back(a.beta);
        } else {
          ++rep.span_blocked;
        }
      } else {
        ++rep.gate_blocked;
      }
    }
    snapshot_before(std::numeric_limits<double>::infinity());
    w_sets[m] = members[H];
    rep.w_final[m] = members[H].size();

    // soundness re-checks (must never fire)
    for (std::size_t l = 2; l <= H; ++l)
      if (members[l].size() > members[l - 1].size())
        ++rep.violations_gate;
    for (std::size_t l = 2; l <= H; ++l) {
      EchelonBasis check(ctx_);
      for (const std::size_t b : members[l])
        if (!check.insert(betas_[b])) ++rep.violations_span_growth;
    }
  }

  // the union of all W sets must be linearly independent
  EchelonBasis w_union(ctx_);
  std::size_t w_total = 0;
  for (const auto& w : w_sets)
    for (const std::size_t b : w) {
      ++w_total;
      if (!w_union.insert(betas_[b])) rep.w_union_independent = false;
    }
  (void)w_total;
  return rep;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Public entry points

inline ReplicationResult run_single(const SimConfig& cfg, std::uint64_t rep) {
  return detail::Replication(cfg, rep).run();
}

inline std::vector<ReplicationResult> run(const SimConfig& cfg) {
  std::vector<ReplicationResult> out(cfg.replications);
  std::size_t nthreads = cfg.threads ? cfg.threads
                                     : std::thread::hardware_concurrency();
  if (nthreads == 0) nthreads = 1;
  nthreads = std::min<std::size_t>(nthreads, cfg.replications);
  if (nthreads <= 1) {
    for (std::size_t r = 0; r < cfg.replications; ++r)
      out[r] = run_single(cfg, r);
    return out;
  }
  std::vector<std::thread> workers;
  std::atomic<std::size_t> next{0};
  for (std::size_t w = 0; w < nthreads; ++w)
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t r = next.fetch_add(1);
        if (r >= cfg.replications) return;
        out[r] = run_single(cfg, r);
      }
    });
  for (auto& th : workers) th.join();
  return out;
}

inline std::vector<ReplicationResult> multicast_run(const SimConfig& cfg) {
  return run(cfg); // sinks decode independently within one shared simulation
}

// ---------------------------------------------------------------------------
// Error-probability estimation

struct ErrorPoint {
  double delta = 0.0;
  std::size_t message_count = 0; // ceil(R * delta)
  std::uint64_t replications = 0;
  std::uint64_t failures = 0;
  double p_hat = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
};

inline void wilson_interval(std::uint64_t k, std::uint64_t n, double& lo,
                            double& hi) {
  constexpr double z = 1.959963985;
  const double p = static_cast<double>(k) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  lo = std::max(0.0, center - half);
  hi = std::min(1.0, center + half);
}

// Monte Carlo failure frequency over a grid of coding delays; K = ceil(R*d).
inline std::vector<ErrorPoint> estimate_error_probability(
    SimConfig base, double rate, const std::vector<double>& delta_grid,
    std::size_t replications) {
  if (replications == 0)
    throw std::domain_error("estimate_error_probability: zero replications");
  std::vector<ErrorPoint> points;
  for (const double d : delta_grid) {
    SimConfig cfg = base;
    cfg.mode = SimMode::Block;
    cfg.delta = d;
    cfg.sink_delta.clear();
    cfg.K = static_cast<std::size_t>(std::ceil(rate * d));
    cfg.replications = replications;
    cfg.attempt_decode = false;
    cfg.early_stop_at_full_rank = true;
    cfg.seed = Rng::mix(base.seed ^ std::hash<double>{}(d));
    const auto results = run(cfg);
    ErrorPoint pt;
    pt.delta = d;
    pt.message_count = cfg.K;
    pt.replications = replications;
    for (const auto& r : results) {
      bool ok = true;
      for (const auto& [t, o] : r.trace.sinks)
        if (!o.decoded) ok = false;
      if (r.trace.sinks.empty() || !ok) ++pt.failures;
    }
    pt.p_hat = static_cast<double>(pt.failures) / replications;
    wilson_interval(pt.failures, replications, pt.wilson_lo, pt.wilson_hi);
    points.push_back(pt);
  }
  return points;
}

} // namespace ncsim
