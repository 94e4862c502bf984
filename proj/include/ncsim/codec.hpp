#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gf.hpp"
#include "rng.hpp"

namespace ncsim {

// A coded packet: payload plus the global encoding vector gamma carried in
// its header. payload = sum_k gamma_k * w_k over the session's messages.
struct Packet {
  std::vector<std::uint8_t> payload;
  std::vector<std::uint8_t> gamma;
  // Auxiliary encoding vector: coefficients over source emissions. Only
  // maintained when the simulator's innovation tracking is on; empty
  // otherwise. Length grows with the number of source emissions.
  std::vector<std::uint8_t> beta;
  int origin_node = -1;
  double creation_time = 0.0;
};

// One coding session: K message packets of lambda field elements each.
struct Session {
  std::size_t K = 0;
  std::size_t lambda = 0;
  const FieldContext* field = nullptr;
  FieldMatrix messages; // K x lambda, source only

  const FieldContext& ctx() const { return *field; }
};

inline Session source_init(std::size_t K, std::size_t lambda,
                           const FieldContext& field, Rng& rng) {
  if (K < 1 || lambda < 1)
    throw std::domain_error("source_init: K and lambda must be positive");
  Session s;
  s.K = K;
  s.lambda = lambda;
  s.field = &field;
  s.messages = FieldMatrix(K, lambda);
  for (auto& e : s.messages.a)
    e = static_cast<std::uint8_t>(rng.uniform_int(field.q()));
  return s;
}

// Node packet store. With prune on, only packets whose global encoding
// vectors extend the span are kept, so |stored| <= K.
class NodeMemory {
public:
  // track_rank keeps an incremental gamma basis; required when prune is on
  // and for rank()/try_decode(). It can be switched off for instrumentation
  // runs that only care about packet propagation.
  NodeMemory(const Session& session, bool prune, bool track_rank = true)
      : session_(&session), prune_(prune), track_rank_(prune || track_rank),
        basis_(session.ctx()) {}

  // The source's initial memory: w_k with gamma = k-th unit vector.
  static NodeMemory source(const Session& session) {
    NodeMemory m(session, true);
    for (std::size_t k = 0; k < session.K; ++k) {
      Packet p;
      p.payload.assign(session.messages.row(k).begin(),
                       session.messages.row(k).end());
      p.gamma.assign(session.K, 0);
      p.gamma[k] = 1;
      p.creation_time = 0.0;
      m.receive(std::move(p));
    }
    return m;
  }

  bool empty() const { return stored_.empty(); }
  std::size_t size() const { return stored_.size(); }
  std::size_t rank() const {
    if (!track_rank_)
      throw std::logic_error("rank: rank tracking disabled for this memory");
    return basis_.rank();
  }
  const std::vector<Packet>& stored() const { return stored_; }

  // Returns true when the packet was stored, false when pruned away.
  bool receive(Packet p) {
    if (p.gamma.size() != session_->K || p.payload.size() != session_->lambda)
      throw std::domain_error("receive: packet shape does not match session");
    if (track_rank_) {
      const bool innovative = basis_.insert(p.gamma);
      if (prune_ && !innovative) return false;
    }
    stored_.push_back(std::move(p));
    return true;
  }

  // Random linear combination of everything in memory; coefficients are
  // i.i.d. uniform over all q values, zero included.
  Packet encode(Rng& rng, int origin_node, double now) const {
    if (stored_.empty())
      throw std::logic_error("encode: node memory is empty");
    const FieldContext& f = session_->ctx();
    Packet out;
    out.payload.assign(session_->lambda, 0);
    out.gamma.assign(session_->K, 0);
    out.origin_node = origin_node;
    out.creation_time = now;
    for (const Packet& y : stored_) {
      const auto c = static_cast<std::uint8_t>(rng.uniform_int(f.q()));
      if (c == 0) continue;
      f.axpy(out.payload, c, y.payload);
      f.axpy(out.gamma, c, y.gamma);
      if (!y.beta.empty()) {
        if (out.beta.size() < y.beta.size()) out.beta.resize(y.beta.size(), 0);
        f.axpy(out.beta, c, y.beta);
      }
    }
    return out;
  }

  // Recovers the K messages once the stored gammas reach rank K.
  std::optional<FieldMatrix> try_decode() const {
    if (rank() < session_->K) return std::nullopt;
    const FieldContext& f = session_->ctx();
    // pick K stored packets with independent gammas
    EchelonBasis pick(f);
    FieldMatrix A(session_->K, session_->K), P(session_->K, session_->lambda);
    std::size_t n = 0;
    for (const Packet& p : stored_) {
      if (!pick.insert(p.gamma)) continue;
      for (std::size_t j = 0; j < session_->K; ++j) A.at(n, j) = p.gamma[j];
      for (std::size_t j = 0; j < session_->lambda; ++j) P.at(n, j) = p.payload[j];
      if (++n == session_->K) break;
    }
    return gf_solve(f, A, P);
  }

private:
  const Session* session_;
  bool prune_;
  bool track_rank_;
  EchelonBasis basis_;
  std::vector<Packet> stored_;
};

} // namespace ncsim
