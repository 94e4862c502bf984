#include <catch2/catch_amalgamated.hpp>

#include "ncsim/codec.hpp"

using namespace ncsim;

namespace {

// payload must stay consistent with gamma: payload == gamma * messages
bool payload_consistent(const Session& s, const Packet& p) {
  const FieldContext& f = s.ctx();
  for (std::size_t j = 0; j < s.lambda; ++j) {
    std::uint8_t want = 0;
    for (std::size_t k = 0; k < s.K; ++k)
      want = f.add(want, f.mul(p.gamma[k], s.messages.at(k, j)));
    if (p.payload[j] != want) return false;
  }
  return true;
}

} // namespace

TEST_CASE("source memory holds unit-vector packets") {
  Rng rng(1);
  const Session s = source_init(5, 3, FieldContext::of(256), rng);
  const NodeMemory src = NodeMemory::source(s);
  REQUIRE(src.size() == 5);
  REQUIRE(src.rank() == 5);
  for (std::size_t k = 0; k < 5; ++k) {
    const Packet& p = src.stored()[k];
    for (std::size_t j = 0; j < 5; ++j)
      REQUIRE(p.gamma[j] == (j == k ? 1 : 0));
    REQUIRE(payload_consistent(s, p));
  }
}

TEST_CASE("source_init validates parameters") {
  Rng rng(2);
  REQUIRE_THROWS_AS(source_init(0, 1, FieldContext::of(2), rng),
                    std::domain_error);
  REQUIRE_THROWS_AS(source_init(3, 0, FieldContext::of(2), rng),
                    std::domain_error);
}

TEST_CASE("encode emits consistent random combinations") {
  Rng rng(3);
  for (const int q : {2, 16, 256}) {
    const Session s = source_init(6, 4, FieldContext::of(q), rng);
    const NodeMemory src = NodeMemory::source(s);
    for (int it = 0; it < 40; ++it) {
      const Packet p = src.encode(rng, 1, 2.5);
      REQUIRE(p.gamma.size() == 6);
      REQUIRE(p.payload.size() == 4);
      REQUIRE(p.origin_node == 1);
      REQUIRE(p.creation_time == 2.5);
      REQUIRE(payload_consistent(s, p));
    }
  }
}

TEST_CASE("encode on empty memory throws") {
  Rng rng(4);
  const Session s = source_init(3, 1, FieldContext::of(256), rng);
  const NodeMemory empty(s, true);
  REQUIRE_THROWS_AS(empty.encode(rng, 0, 0.0), std::logic_error);
}

TEST_CASE("receive validates packet shape") {
  Rng rng(5);
  const Session s = source_init(3, 2, FieldContext::of(256), rng);
  NodeMemory m(s, true);
  Packet bad;
  bad.gamma.assign(2, 0);
  bad.payload.assign(2, 0);
  REQUIRE_THROWS_AS(m.receive(bad), std::domain_error);
  bad.gamma.assign(3, 0);
  bad.payload.assign(1, 0);
  REQUIRE_THROWS_AS(m.receive(bad), std::domain_error);
}

TEST_CASE("pruning keeps only innovative packets") {
  Rng rng(6);
  const Session s = source_init(4, 2, FieldContext::of(256), rng);
  const NodeMemory src = NodeMemory::source(s);
  NodeMemory pruned(s, true), kept(s, false);
  std::size_t stored = 0;
  for (int it = 0; it < 50; ++it) {
    Packet p = src.encode(rng, 0, 0.0);
    if (pruned.receive(p)) ++stored;
    kept.receive(p);
  }
  REQUIRE(pruned.size() == stored);
  REQUIRE(pruned.size() <= 4);
  REQUIRE(pruned.rank() == pruned.size());
  REQUIRE(kept.size() == 50);
  REQUIRE(kept.rank() == pruned.rank());
}

TEST_CASE("rank tracking can be disabled") {
  Rng rng(7);
  const Session s = source_init(3, 1, FieldContext::of(2), rng);
  NodeMemory m(s, false, false);
  Packet p;
  p.gamma = {1, 0, 0};
  p.payload = {s.messages.at(0, 0)};
  m.receive(p);
  REQUIRE(m.size() == 1);
  REQUIRE_THROWS_AS(m.rank(), std::logic_error);
}

TEST_CASE("decode recovers the messages once rank reaches K") {
  Rng rng(8);
  for (const int q : {2, 16, 256}) {
    const Session s = source_init(8, 5, FieldContext::of(q), rng);
    const NodeMemory src = NodeMemory::source(s);
    NodeMemory sink(s, true);
    REQUIRE_FALSE(sink.try_decode().has_value());
    int sent = 0;
    while (sink.rank() < 8 && sent < 500) {
      sink.receive(src.encode(rng, 0, 0.0));
      ++sent;
    }
    REQUIRE(sink.rank() == 8);
    const auto decoded = sink.try_decode();
    REQUIRE(decoded.has_value());
    REQUIRE(*decoded == s.messages);
  }
}

TEST_CASE("decode through a relay chain") {
  Rng rng(9);
  const Session s = source_init(6, 3, FieldContext::of(256), rng);
  const NodeMemory src = NodeMemory::source(s);
  NodeMemory relay(s, true), sink(s, true);
  for (int it = 0; it < 30; ++it) {
    relay.receive(src.encode(rng, 0, 0.0));
    if (!relay.empty()) sink.receive(relay.encode(rng, 1, 0.0));
  }
  REQUIRE(sink.rank() == 6);
  const auto decoded = sink.try_decode();
  REQUIRE(decoded.has_value());
  REQUIRE(*decoded == s.messages);
}

TEST_CASE("beta vectors combine like the other coordinates") {
  Rng rng(10);
  const Session s = source_init(4, 1, FieldContext::of(256), rng);
  NodeMemory m(s, false);
  // packets whose gamma and beta are the same unit vector: the encoded
  // packet's beta must then equal its gamma (padded)
  for (std::size_t k = 0; k < 4; ++k) {
    Packet p;
    p.payload.assign(s.messages.row(k).begin(), s.messages.row(k).end());
    p.gamma.assign(4, 0);
    p.gamma[k] = 1;
    p.beta.assign(k + 1, 0); // variable lengths on purpose
    p.beta[k] = 1;
    m.receive(std::move(p));
  }
  for (int it = 0; it < 20; ++it) {
    const Packet out = m.encode(rng, 2, 1.0);
    REQUIRE(out.beta.size() <= 4);
    std::vector<std::uint8_t> beta = out.beta;
    beta.resize(4, 0);
    for (std::size_t k = 0; k < 4; ++k) REQUIRE(beta[k] == out.gamma[k]);
  }
}

TEST_CASE("packets without beta leave the combination empty") {
  Rng rng(11);
  const Session s = source_init(3, 2, FieldContext::of(16), rng);
  const NodeMemory src = NodeMemory::source(s);
  const Packet p = src.encode(rng, 0, 0.0);
  REQUIRE(p.beta.empty());
}
