#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ncsim {

// Arithmetic over GF(2^m), m in {1, 4, 8}. Multiplication goes through
// log/antilog tables built once at construction; contexts are immutable and
// shareable across threads.
class FieldContext {
public:
  static constexpr std::uint16_t kPoly2 = 0x3;     // x + 1
  static constexpr std::uint16_t kPoly16 = 0x13;   // x^4 + x + 1
  static constexpr std::uint16_t kPoly256 = 0x11d; // x^8 + x^4 + x^3 + x^2 + 1

  explicit FieldContext(int m) : m_(m) {
    switch (m) {
    case 1: q_ = 2; poly_ = kPoly2; break;
    case 4: q_ = 16; poly_ = kPoly16; break;
    case 8: q_ = 256; poly_ = kPoly256; break;
    default: throw std::domain_error("FieldContext: m must be 1, 4 or 8");
    }
    build_tables();
  }

  // Shared instances for the three supported fields; accepts m or q.
  static const FieldContext& of(int q_or_m) {
    static const FieldContext gf2(1), gf16(4), gf256(8);
    switch (q_or_m) {
    case 1: case 2: return gf2;
    case 4: case 16: return gf16;
    case 8: case 256: return gf256;
    default: throw std::domain_error("FieldContext: unsupported field");
    }
  }

  int m() const { return m_; }
  int q() const { return q_; }
  std::uint16_t reduction_polynomial() const { return poly_; }

  std::uint8_t add(std::uint8_t a, std::uint8_t b) const {
    check(a); check(b);
    return a ^ b;
  }

  std::uint8_t sub(std::uint8_t a, std::uint8_t b) const { return add(a, b); }

  std::uint8_t mul(std::uint8_t a, std::uint8_t b) const {
    check(a); check(b);
    return mul_raw(a, b);
  }

  std::uint8_t inv(std::uint8_t a) const {
    check(a);
    if (a == 0) throw std::domain_error("gf: inverse of zero");
    return exp_[(q_ - 1) - log_[a]];
  }

  std::uint8_t div(std::uint8_t a, std::uint8_t b) const { return mul(a, inv(b)); }

  // Unchecked fast path for inner loops; callers guarantee a, b < q.
  std::uint8_t mul_raw(std::uint8_t a, std::uint8_t b) const {
    if (a == 0 || b == 0) return 0;
    return exp_[log_[a] + log_[b]];
  }

  // dst += coeff * src, elementwise.
  void axpy(std::span<std::uint8_t> dst, std::uint8_t coeff,
            std::span<const std::uint8_t> src) const {
    if (coeff == 0) return;
    const std::size_t n = src.size() < dst.size() ? src.size() : dst.size();
    if (coeff == 1) {
      for (std::size_t i = 0; i < n; ++i) dst[i] ^= src[i];
      return;
    }
    const int lc = log_[coeff];
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t s = src[i];
      if (s) dst[i] ^= exp_[lc + log_[s]];
    }
  }

private:
  void check(std::uint8_t a) const {
    if (a >= q_) throw std::domain_error("gf: element out of range");
  }

  void build_tables() {
    int x = 1;
    for (int i = 0; i < q_ - 1; ++i) {
      exp_[i] = static_cast<std::uint8_t>(x);
      exp_[i + q_ - 1] = static_cast<std::uint8_t>(x);
      log_[x] = static_cast<std::uint16_t>(i);
      x <<= 1;
      if (x & q_) x ^= poly_;
    }
  }

  int m_;
  int q_;
  std::uint16_t poly_;
  std::array<std::uint8_t, 512> exp_{};
  std::array<std::uint16_t, 256> log_{};
};

// Dense row-major matrix over a finite field.
struct FieldMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> a;

  FieldMatrix() = default;
  FieldMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0) {}

  std::uint8_t& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  std::uint8_t at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  std::span<std::uint8_t> row(std::size_t r) {
    return {a.data() + r * cols, cols};
  }
  std::span<const std::uint8_t> row(std::size_t r) const {
    return {a.data() + r * cols, cols};
  }

  static FieldMatrix identity(std::size_t n) {
    FieldMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }

  bool operator==(const FieldMatrix& o) const = default;
};

namespace detail {

// Forward elimination in place. Pivot selection: first nonzero entry in the
// column, lowest row index. Returns pivot columns.
inline std::vector<std::size_t> eliminate(const FieldContext& ctx, FieldMatrix& m) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols && r < m.rows; ++c) {
    std::size_t p = r;
    while (p < m.rows && m.at(p, c) == 0) ++p;
    if (p == m.rows) continue;
    if (p != r)
      for (std::size_t k = 0; k < m.cols; ++k)
        std::swap(m.at(r, k), m.at(p, k));
    const std::uint8_t piv_inv = ctx.inv(m.at(r, c));
    for (std::size_t k = c; k < m.cols; ++k)
      m.at(r, k) = ctx.mul_raw(m.at(r, k), piv_inv);
    for (std::size_t i = 0; i < m.rows; ++i) {
      if (i == r) continue;
      const std::uint8_t f = m.at(i, c);
      if (f == 0) continue;
      const auto src = m.row(r);
      auto dst = m.row(i);
      ctx.axpy(dst.subspan(c), f, src.subspan(c));
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

} // namespace detail

// Number of linearly independent rows, by Gaussian elimination.
inline std::size_t gf_rank(const FieldContext& ctx, FieldMatrix m) {
  return detail::eliminate(ctx, m).size();
}

// Solve A X = B for square A; nullopt when A is singular.
inline std::optional<FieldMatrix> gf_solve(const FieldContext& ctx,
                                           const FieldMatrix& A,
                                           const FieldMatrix& B) {
  if (A.rows != A.cols) throw std::domain_error("gf_solve: A must be square");
  if (B.rows != A.rows) throw std::domain_error("gf_solve: dimension mismatch");
  const std::size_t n = A.rows;
  FieldMatrix aug(n, n + B.cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) aug.at(i, j) = A.at(i, j);
    for (std::size_t j = 0; j < B.cols; ++j) aug.at(i, n + j) = B.at(i, j);
  }
  const auto pivots = detail::eliminate(ctx, aug);
  if (pivots.size() != n || pivots.back() >= n) return std::nullopt;
  FieldMatrix x(n, B.cols);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < B.cols; ++j) x.at(i, j) = aug.at(i, n + j);
  return x;
}

// Probability that a uniform N x K matrix over GF(q) has rank K:
// prod_{k=N-K+1}^{N} (1 - 1/q^k).
inline double random_invertibility_probability(int q, int received_n, int message_k) {
  if (message_k < 0 || received_n < message_k)
    throw std::domain_error("random_invertibility_probability: requires N >= K >= 0");
  double p = 1.0;
  for (int k = received_n - message_k + 1; k <= received_n; ++k)
    p *= 1.0 - std::pow(static_cast<double>(q), -k);
  return p;
}

// Incremental row-echelon basis; tracks the span of inserted vectors.
// Vectors of differing lengths are allowed (short ones are implicitly
// zero-padded), which the simulator's instrumentation relies on.
class EchelonBasis {
public:
  explicit EchelonBasis(const FieldContext& ctx) : ctx_(&ctx) {}

  std::size_t rank() const { return rows_.size(); }

  bool contains(std::span<const std::uint8_t> v) const {
    return reduce(v).empty();
  }

  // Inserts v if it extends the span; returns true iff rank increased.
  bool insert(std::span<const std::uint8_t> v) {
    std::vector<std::uint8_t> r = reduce(v);
    if (r.empty()) return false;
    std::size_t lead = 0;
    while (r[lead] == 0) ++lead;
    const std::uint8_t s = ctx_->inv(r[lead]);
    for (auto& e : r) e = ctx_->mul_raw(e, s);
    // keep rows ordered by leading column
    std::size_t pos = 0;
    while (pos < rows_.size() && lead_[pos] < lead) ++pos;
    rows_.insert(rows_.begin() + pos, std::move(r));
    lead_.insert(lead_.begin() + pos, lead);
    return true;
  }

private:
  // Returns the residual of v after elimination; empty when v is in the span.
  std::vector<std::uint8_t> reduce(std::span<const std::uint8_t> v) const {
    std::vector<std::uint8_t> r(v.begin(), v.end());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      const std::size_t lead = lead_[i];
      if (lead >= r.size()) break;
      const std::uint8_t f = r[lead];
      if (f == 0) continue;
      const auto& row = rows_[i];
      if (row.size() > r.size()) r.resize(row.size(), 0);
      ctx_->axpy(r, f, row);
    }
    for (const auto e : r)
      if (e != 0) return r;
    return {};
  }

  const FieldContext* ctx_;
  std::vector<std::vector<std::uint8_t>> rows_;
  std::vector<std::size_t> lead_;
};

} // namespace ncsim
