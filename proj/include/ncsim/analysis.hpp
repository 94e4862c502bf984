#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gf.hpp"

namespace ncsim {

// ---------------------------------------------------------------------------
// Fluid queue growth along a tandem

struct FluidPrediction {
  std::vector<double> z; // link rates z_{i(i+1)}, length L
  double q = 0.0;
  int rho = 1;
  // growth[i] is the innovative-queue growth rate at interior node i+2
  // (nodes 2..L of the 1..L+1 tandem)
  std::vector<double> growth;
};

// Q_i / tau = (min(z_12, min_{2<=j<i} (1-q^-rho) z_{j(j+1)})
//             - (1-q^-rho) z_{i(i+1)})^+   for i = 2..L
inline FluidPrediction fluid_queue_rates(const std::vector<double>& z, double q,
                                         int rho) {
  if (z.size() < 2)
    throw std::domain_error("fluid_queue_rates: need at least two links");
  if (q < 2.0 || rho < 1)
    throw std::domain_error("fluid_queue_rates: need q >= 2 and rho >= 1");
  const double thin = 1.0 - std::pow(q, -static_cast<double>(rho));
  FluidPrediction out;
  out.z = z;
  out.q = q;
  out.rho = rho;
  double upstream = z[0]; // min(z_12, thinned rates of links 2..i-1)
  for (std::size_t i = 1; i < z.size(); ++i) {
    out.growth.push_back(std::max(0.0, upstream - thin * z[i]));
    upstream = std::min(upstream, thin * z[i]);
  }
  return out;
}

// Capacity of the L-link tandem: min of the link rates.
inline double achievable_rate_tandem(const std::vector<double>& z) {
  if (z.empty())
    throw std::domain_error("achievable_rate_tandem: empty tandem");
  for (const double v : z)
    if (v < 0.0)
      throw std::domain_error("achievable_rate_tandem: negative rate");
  return *std::min_element(z.begin(), z.end());
}

// Long-run rate of innovative packets into the sink under the fluid model.
inline double fluid_sink_rate(const std::vector<double>& z, double q, int rho) {
  const double thin = 1.0 - std::pow(q, -static_cast<double>(rho));
  double r = z[0];
  for (std::size_t i = 1; i < z.size(); ++i) r = std::min(r, thin * z[i]);
  return r;
}

// ---------------------------------------------------------------------------
// Decode probability

inline double decode_success_probability(double q, std::size_t K,
                                         std::size_t received) {
  if (received < K) return 0.0;
  return random_invertibility_probability(q, received, K);
}

// ---------------------------------------------------------------------------
// Error exponents (nats per unit time)

enum class ExponentVariant { Asymptotic, Upper, Lower };

namespace detail {
inline double exponent_formula(double cap, double rate) {
  if (cap <= 0.0 || rate <= 0.0 || rate > cap + 1e-12)
    throw std::domain_error("error_exponent: need 0 < R <= C");
  const double r = std::min(rate, cap);
  return cap - r - r * std::log(cap / r);
}
} // namespace detail

// Asymptotic/lower: C - R - R ln(C/R). Upper: same with C' = (1-q^-rho) C.
inline double error_exponent(double C, double R, ExponentVariant variant,
                             double q = 0.0, int rho = 0) {
  switch (variant) {
  case ExponentVariant::Asymptotic:
  case ExponentVariant::Lower:
    return detail::exponent_formula(C, R);
  case ExponentVariant::Upper: {
    if (q < 2.0 || rho < 1)
      throw std::domain_error("error_exponent: upper variant needs q and rho");
    const double cp = (1.0 - std::pow(q, -static_cast<double>(rho))) * C;
    return detail::exponent_formula(cp, R);
  }
  }
  throw std::logic_error("error_exponent: bad variant");
}

struct ExponentCurve {
  double C = 0.0;
  double C_prime = 0.0;
  double R = 0.0;
  double upper = 0.0;
  double lower = 0.0;
  double asymptotic = 0.0;
};

inline ExponentCurve exponent_curve(double C, double R, double q, int rho) {
  ExponentCurve e;
  e.C = C;
  e.C_prime = (1.0 - std::pow(q, -static_cast<double>(rho))) * C;
  e.R = R;
  e.asymptotic = error_exponent(C, R, ExponentVariant::Asymptotic);
  e.lower = error_exponent(C, R, ExponentVariant::Lower);
  e.upper = R <= e.C_prime
                ? error_exponent(C, R, ExponentVariant::Upper, q, rho)
                : 0.0; // rate above the rho-limited throughput: no decay bound
  return e;
}

// Per-packet limit of the log-MGF of the m-th innovative arrival time at the
// sink: log(C' / (C' - theta)), theta < C'. Documentation plots only.
inline double arrival_time_log_mgf_rate(double c_prime, double theta) {
  if (theta >= c_prime)
    throw std::domain_error("arrival_time_log_mgf_rate: need theta < C'");
  return std::log(c_prime / (c_prime - theta));
}

// p_e >= Pr(Poisson(C Delta) <= ceil(R Delta) - 1), evaluated in log space.
inline double poisson_tail_lower_bound(double C, double R, double delta) {
  if (C <= 0.0 || delta <= 0.0)
    throw std::domain_error("poisson_tail_lower_bound: need C > 0, delta > 0");
  const double mean = C * delta;
  const long long upto = static_cast<long long>(std::ceil(R * delta)) - 1;
  if (upto < 0) return 0.0;
  // sum_{l=0..upto} exp(-mean + l ln mean - ln l!) via a running log-term
  double log_term = -mean; // l = 0
  double log_sum = log_term;
  for (long long l = 1; l <= upto; ++l) {
    log_term += std::log(mean) - std::log(static_cast<double>(l));
    const double hi = std::max(log_sum, log_term);
    log_sum = hi + std::log(std::exp(log_sum - hi) + std::exp(log_term - hi));
  }
  return std::exp(log_sum);
}

// ---------------------------------------------------------------------------
// Empirical exponent fit

struct ExponentFit {
  bool ok = false;
  std::string diagnostic;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double slope_ci_lo = 0.0; // 95%
  double slope_ci_hi = 0.0;
  std::size_t points_used = 0;
};

// Weighted least squares of -ln p_hat against Delta. Weights come from the
// Wilson 95% interval of each p_hat, propagated through the log: points with
// tighter relative intervals count more, and degenerate points (0 or n
// failures, where -ln p_hat is undefined or has unbounded error) are dropped.
inline ExponentFit fit_empirical_exponent(
    const std::vector<double>& delta, const std::vector<std::uint64_t>& failures,
    const std::vector<std::uint64_t>& trials) {
  if (delta.size() != failures.size() || delta.size() != trials.size())
    throw std::domain_error("fit_empirical_exponent: mismatched inputs");
  ExponentFit fit;
  std::vector<double> x, y, w;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const std::uint64_t k = failures[i], n = trials[i];
    if (n == 0 || k == 0 || k == n) continue;
    const double p = static_cast<double>(k) / n;
    // Wilson 95% interval for p
    constexpr double zc = 1.959963985;
    const double z2 = zc * zc;
    const double den = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / den;
    const double half =
        zc * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / den;
    const double lo = std::max(center - half, 1e-300);
    const double hi = std::min(center + half, 1.0);
    // half-width of the interval for -ln p, treated as ~2 sigma
    const double sigma = (std::log(hi) - std::log(lo)) / (2.0 * zc);
    x.push_back(delta[i]);
    y.push_back(-std::log(p));
    w.push_back(1.0 / (sigma * sigma));
  }
  if (x.size() < 3) {
    fit.diagnostic = "need at least 3 grid points with failures strictly "
                     "between 0 and the replication count";
    return fit;
  }
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (det <= 0.0) {
    fit.diagnostic = "degenerate design (identical delta values)";
    return fit;
  }
  fit.ok = true;
  fit.slope = (sw * sxy - sx * sy) / det;
  fit.intercept = (sxx * sy - sx * sxy) / det;
  fit.slope_stderr = std::sqrt(sw / det);
  fit.slope_ci_lo = fit.slope - 1.959963985 * fit.slope_stderr;
  fit.slope_ci_hi = fit.slope + 1.959963985 * fit.slope_stderr;
  fit.points_used = x.size();
  return fit;
}

} // namespace ncsim
