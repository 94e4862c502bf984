#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "netmodel.hpp"

namespace ncsim {

// Schema or validation problem in a config/network file. Messages carry the
// JSON path of the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace ionet {

using nlohmann::json;

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

inline const json& need(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

inline double need_number(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

inline int need_int(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  return v.get<int>();
}

inline std::vector<int> int_list(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) fail(where, "expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

inline std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(where, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline MarkovChainSpec parse_chain(const json& j, const std::string& where) {
  MarkovChainSpec c;
  const json& rates = need(j, "rates", where);
  if (!rates.is_array() || rates.empty()) fail(where + ".rates", "expected a nonempty matrix");
  for (std::size_t i = 0; i < rates.size(); ++i)
    c.rates.push_back(number_list(rates[i], where + ".rates[" + std::to_string(i) + "]"));
  for (std::size_t i = 0; i < c.rates.size(); ++i) {
    if (c.rates[i].size() != c.rates.size())
      fail(where + ".rates", "rate matrix must be square");
    for (std::size_t k = 0; k < c.rates[i].size(); ++k)
      if (i != k && c.rates[i][k] < 0.0)
        fail(where + ".rates", "negative transition rate");
  }
  return c;
}

inline InjectionProcess parse_injection(const json& j, const std::string& where) {
  const json& kindv = need(j, "kind", where);
  if (!kindv.is_string()) fail(where + ".kind", "expected a string");
  const std::string kind = kindv.get<std::string>();
  if (kind == "poisson") {
    PoissonInjection p;
    p.rate = need_number(j, "rate", where);
    if (p.rate < 0.0) fail(where + ".rate", "negative rate");
    return p;
  }
  if (kind == "deterministic") return DeterministicInjection{};
  if (kind == "trace") {
    TraceInjection t;
    t.times = number_list(need(j, "times", where), where + ".times");
    return t;
  }
  fail(where + ".kind", "unknown injection kind '" + kind + "'");
}

inline void parse_loss_into(Arc& arc, const json& j, const std::string& where) {
  const json& kindv = need(j, "kind", where);
  if (!kindv.is_string()) fail(where + ".kind", "expected a string");
  const std::string kind = kindv.get<std::string>();
  if (kind == "iid") {
    IidLoss l;
    l.eps = need_number(j, "eps", where);
    if (l.eps < 0.0 || l.eps > 1.0) fail(where + ".eps", "eps must be in [0,1]");
    arc.loss = l;
    return;
  }
  if (kind == "markov") {
    MarkovLoss l;
    if (j.contains("shared_chain")) {
      l.shared_chain = need_int(j, "shared_chain", where);
      if (l.shared_chain < 0) fail(where + ".shared_chain", "negative index");
    } else {
      l.chain = parse_chain(j, where);
    }
    l.eps = number_list(need(j, "eps", where), where + ".eps");
    for (const double e : l.eps)
      if (e < 0.0 || e > 1.0) fail(where + ".eps", "eps must be in [0,1]");
    if (j.contains("inj_rate")) {
      l.inj_rate = number_list(j.at("inj_rate"), where + ".inj_rate");
      for (const double r : l.inj_rate)
        if (r < 0.0) fail(where + ".inj_rate", "negative rate");
    }
    arc.loss = std::move(l);
    return;
  }
  fail(where + ".kind", "unknown loss kind '" + kind + "'");
}

inline WirelineNetwork parse_wireline(const json& j) {
  WirelineNetwork net;
  net.nodes = int_list(need(j, "nodes", "network"), "network.nodes");
  net.source = need_int(j, "source", "network");
  net.sinks = int_list(need(j, "sinks", "network"), "network.sinks");
  if (j.contains("shared_chains")) {
    const json& sc = j.at("shared_chains");
    if (!sc.is_array()) fail("network.shared_chains", "expected an array");
    for (std::size_t i = 0; i < sc.size(); ++i)
      net.shared_chains.push_back(
          parse_chain(sc[i], "network.shared_chains[" + std::to_string(i) + "]"));
  }
  const json& arcs = need(j, "arcs", "network");
  if (!arcs.is_array()) fail("network.arcs", "expected an array");
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    const std::string where = "network.arcs[" + std::to_string(i) + "]";
    const json& aj = arcs[i];
    Arc arc;
    arc.from = need_int(aj, "from", where);
    arc.to = need_int(aj, "to", where);
    if (aj.contains("z")) {
      const json& z = aj.at("z");
      if (!z.is_number()) fail(where + ".z", "expected a number");
      arc.z = z.get<double>();
      if (*arc.z < 0.0) fail(where + ".z", "negative rate");
    }
    if (aj.contains("loss")) parse_loss_into(arc, aj.at("loss"), where + ".loss");
    if (aj.contains("injection"))
      arc.injection = parse_injection(aj.at("injection"), where + ".injection");
    if (const auto* ml = std::get_if<MarkovLoss>(&arc.loss)) {
      if (ml->shared_chain >= 0 &&
          static_cast<std::size_t>(ml->shared_chain) >= net.shared_chains.size())
        fail(where + ".loss.shared_chain", "no such shared chain");
      const std::size_t states = net.chain_of(*ml).states();
      if (ml->eps.size() != states)
        fail(where + ".loss.eps", "per-state vector does not match chain size");
      if (!ml->inj_rate.empty() && ml->inj_rate.size() != states)
        fail(where + ".loss.inj_rate", "per-state vector does not match chain size");
      const bool det = arc.injection &&
          std::holds_alternative<DeterministicInjection>(*arc.injection);
      if (ml->inj_rate.empty()) {
        if (!det)
          fail(where, "markov loss needs inj_rate or a deterministic injection");
        // deterministic injections: one per unit time in every state
        std::get<MarkovLoss>(arc.loss).inj_rate.assign(states, 1.0);
      }
    }
    if (!arc.z && !arc.injection && !std::holds_alternative<MarkovLoss>(arc.loss))
      fail(where, "arc needs either z or an injection process");
    net.arcs.push_back(std::move(arc));
  }
  try {
    net.validate();
  } catch (const std::domain_error& e) {
    fail("network", e.what());
  }
  return net;
}

inline WirelessNetwork parse_wireless(const json& j) {
  WirelessNetwork net;
  net.nodes = int_list(need(j, "nodes", "network"), "network.nodes");
  net.source = need_int(j, "source", "network");
  net.sinks = int_list(need(j, "sinks", "network"), "network.sinks");
  if (j.contains("aloha")) {
    if (!j.at("aloha").is_boolean()) fail("network.aloha", "expected a boolean");
    net.aloha = j.at("aloha").get<bool>();
  }
  if (j.contains("interferers")) {
    const json& itf = j.at("interferers");
    if (!itf.is_object()) fail("network.interferers", "expected an object");
    for (const auto& [key, val] : itf.items()) {
      int node = 0;
      try {
        node = std::stoi(key);
      } catch (...) {
        fail("network.interferers", "keys must be node ids");
      }
      net.interferers[node] =
          make_node_set(int_list(val, "network.interferers." + key));
    }
  }
  const json& arcs = need(j, "hyperarcs", "network");
  if (!arcs.is_array()) fail("network.hyperarcs", "expected an array");
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    const std::string where = "network.hyperarcs[" + std::to_string(i) + "]";
    const json& aj = arcs[i];
    Hyperarc h;
    h.from = need_int(aj, "from", where);
    h.to = make_node_set(int_list(need(aj, "to", where), where + ".to"));
    if (net.aloha) {
      h.slot_q = need_number(aj, "q", where);
    } else {
      const json& zl = need(aj, "z", where);
      if (!zl.is_array()) fail(where + ".z", "expected an array of {K, z} entries");
      for (std::size_t k = 0; k < zl.size(); ++k) {
        const std::string zw = where + ".z[" + std::to_string(k) + "]";
        const NodeSet set = make_node_set(int_list(need(zl[k], "K", zw), zw + ".K"));
        const double z = need_number(zl[k], "z", zw);
        if (z < 0.0) fail(zw + ".z", "negative rate");
        h.z[set] += z;
      }
      if (aj.contains("rate")) {
        const json& r = aj.at("rate");
        if (!r.is_number()) fail(where + ".rate", "expected a number");
        h.injection_rate = r.get<double>();
      }
    }
    net.hyperarcs.push_back(std::move(h));
  }
  if (j.contains("table")) {
    const json& tbl = j.at("table");
    if (!tbl.is_array()) fail("network.table", "expected an array");
    for (std::size_t i = 0; i < tbl.size(); ++i) {
      const std::string where = "network.table[" + std::to_string(i) + "]";
      AlohaTableEntry e;
      e.arc = static_cast<std::size_t>(need_int(tbl[i], "arc", where));
      if (e.arc >= net.hyperarcs.size()) fail(where + ".arc", "no such hyperarc");
      const auto ts = int_list(need(tbl[i], "transmit_set", where), where + ".transmit_set");
      for (const int a : ts) {
        if (a < 0 || static_cast<std::size_t>(a) >= net.hyperarcs.size())
          fail(where + ".transmit_set", "no such hyperarc");
        e.transmit_set.push_back(static_cast<std::size_t>(a));
      }
      std::sort(e.transmit_set.begin(), e.transmit_set.end());
      const json& rec = need(tbl[i], "reception", where);
      if (!rec.is_array()) fail(where + ".reception", "expected an array");
      double total = 0.0;
      for (std::size_t k = 0; k < rec.size(); ++k) {
        const std::string rw = where + ".reception[" + std::to_string(k) + "]";
        const NodeSet set = make_node_set(int_list(need(rec[k], "K", rw), rw + ".K"));
        const double p = need_number(rec[k], "p", rw);
        if (p < 0.0 || p > 1.0) fail(rw + ".p", "probability out of range");
        e.reception_prob[set] += p;
        total += p;
      }
      if (total > 1.0 + 1e-12) fail(where + ".reception", "probabilities exceed 1");
      net.table.push_back(std::move(e));
    }
  }
  try {
    net.validate();
  } catch (const std::domain_error& e) {
    fail("network", e.what());
  }
  return net;
}

} // namespace ionet

inline NetworkSpec parse_network(const nlohmann::json& j) {
  if (!j.is_object()) ionet::fail("network", "top level must be an object");
  const auto& kindv = ionet::need(j, "kind", "network");
  if (!kindv.is_string()) ionet::fail("network.kind", "expected a string");
  const std::string kind = kindv.get<std::string>();
  if (kind == "wireline") return ionet::parse_wireline(j);
  if (kind == "wireless") return ionet::parse_wireless(j);
  ionet::fail("network.kind", "must be 'wireline' or 'wireless'");
}

inline NetworkSpec load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open network file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_network(j);
}

} // namespace ncsim
