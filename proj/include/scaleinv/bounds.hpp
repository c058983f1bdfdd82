#pragma once

// Penalty f(x) = x sqrt(alpha log(1 + alpha beta^2 x^2)), the upper bound on
// its convex conjugate, regret certificates of both learners, the bound on
// Gamma_T, and the scalar inequality x + e^{-x} <= e^{9 x^2 / 16} that drives
// both per-trial potential lemmas.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "scaleinv/coordwise.hpp"
#include "scaleinv/core.hpp"
#include "scaleinv/error.hpp"

namespace scaleinv {

struct PenaltyParams {
  double alpha = 1.5;
  double beta = 1.0;
};

inline void check_penalty(const PenaltyParams& p) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0) || !std::isfinite(p.alpha) || !std::isfinite(p.beta)) {
    throw ParameterError("penalty parameters must be positive and finite");
  }
}

/// log(1 + alpha beta^2 x^2), finite for huge x and accurate for tiny x.
inline double log1p_scaled_square(double x, const PenaltyParams& p) {
  const double q = p.alpha * p.beta * p.beta * x * x;
  if (std::isfinite(q)) return std::log1p(q);
  return std::log(p.alpha) + 2.0 * std::log(p.beta) + 2.0 * std::log(x);
}

inline double f_penalty(double x, const PenaltyParams& p) {
  check_penalty(p);
  if (!(x >= 0.0)) throw ParameterError("f_penalty: x must be >= 0");
  if (x == 0.0) return 0.0;
  return x * std::sqrt(p.alpha * log1p_scaled_square(x, p));
}

/// Upper bound (1/beta) exp(theta^2 / (2 alpha)) on f*(theta).
inline double f_conj_bound(double theta, const PenaltyParams& p) {
  check_penalty(p);
  if (!(theta >= 0.0)) throw ParameterError("f_conj_bound: theta must be >= 0");
  return std::exp(theta * theta / (2.0 * p.alpha)) / p.beta;
}

/// exp(1 / (2 (alpha - 9/8))), the per-trial overhead of the coordinate-wise lemma.
inline double kappa(double alpha) {
  check_alpha(alpha);
  return std::exp(1.0 / (2.0 * (alpha - kAlphaMin)));
}

/// sum_i |u_i| s_i sqrt(alpha log(1 + alpha d^2 T^2 u_i^2 s_i^2)) + kappa(alpha) (1 + log T).
/// `s` holds the root sums of squares s_{T,i}.
inline double regret_bound_coordwise(const Vector& u, const Vector& s, double alpha, std::size_t T, std::size_t d) {
  if (u.size() != s.size() || static_cast<std::size_t>(u.size()) != d) {
    throw DimensionError("regret_bound_coordwise: dimension mismatch");
  }
  const double k = kappa(alpha);
  if (T == 0) return 0.0;
  const double Td = static_cast<double>(T) * static_cast<double>(d);
  const PenaltyParams p{alpha, Td};
  double bound = k * (1.0 + std::log(static_cast<double>(T)));
  for (Eigen::Index i = 0; i < u.size(); ++i) bound += f_penalty(std::abs(u(i)) * s(i), p);
  return bound;
}

/// |u|_S sqrt(alpha log(1 + alpha |u|_S^2) + log(alpha) Gamma) + 1.
inline double regret_bound_full(double norm_u_S, double gamma, double alpha) {
  check_alpha(alpha);
  if (!(norm_u_S >= 0.0) || !(gamma >= 0.0)) throw ParameterError("regret_bound_full: negative argument");
  if (norm_u_S == 0.0) return 1.0;
  const double inner = alpha * std::log1p(alpha * norm_u_S * norm_u_S) + std::log(alpha) * gamma;
  return norm_u_S * std::sqrt(inner) + 1.0;
}

/// r + ((1+r) r / 2) log(1 + 2 sum|x_t|^2 / ((1+r) r lambda*)).
inline double gamma_bound(std::size_t r, double lambda_star, double sum_sq_norms) {
  if (r == 0) throw ParameterError("gamma_bound: rank must be >= 1");
  if (!(lambda_star > 0.0)) throw ParameterError("gamma_bound: lambda* must be > 0");
  if (!(sum_sq_norms >= 0.0)) throw ParameterError("gamma_bound: negative sum of squared norms");
  const double rr = static_cast<double>(r);
  const double c = (1.0 + rr) * rr;
  return rr + 0.5 * c * std::log1p(2.0 * sum_sq_norms / (c * lambda_star));
}

struct InequalityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// x + e^{-x} <= e^{9 x^2 / 16}.
inline InequalityCheck check_core_inequality(double x) {
  InequalityCheck c;
  c.lhs = x + std::exp(-x);
  c.rhs = std::exp(9.0 * x * x / 16.0);
  if (std::isfinite(c.lhs) && std::isfinite(c.rhs)) {
    c.holds = c.lhs <= c.rhs + 1e-15;
    return c;
  }
  // Compare logarithms once either side leaves the double range.
  const double log_lhs = x < 0.0 ? -x + std::log1p(x * std::exp(x)) : std::log(c.lhs);
  c.holds = log_lhs <= 9.0 * x * x / 16.0;
  return c;
}

/// Lower bound of e^{9x^2/16} + x - e^x over [u, v], from the chord of e^x
/// and the tangent of e^{9x^2/16} at u.
inline double interval_lower_bound(double u, double v) {
  if (!(u > 0.0) || !(v > u)) throw ParameterError("interval bound: need 0 < u < v");
  const auto f = [](double x) { return std::exp(9.0 * x * x / 16.0); };
  const auto fprime = [&](double x) { return (9.0 * x / 8.0) * f(x); };
  const double b = (v * std::exp(u) - u * std::exp(v)) / (v - u);
  const double c = (std::exp(v) - std::exp(u)) / (v - u);
  const double slope = fprime(u) - c + 1.0;
  return f(u) - fprime(u) * u - b + std::min(v * slope, u * slope);
}

struct IntervalBoundRow {
  double u;
  double v;
  double bound;  // tabulated lower bound, rounded
};

/// Interval split of [0.34, 16/9] with the tabulated (rounded) lower bounds.
inline constexpr std::array<IntervalBoundRow, 13> kIntervalTable{{
    {1.24, 16.0 / 9.0, 0.017},  // last interval ends exactly at 16/9
    {0.99, 1.24, 0.003},
    {0.85, 0.99, 0.001},
    {0.76, 0.85, 0.0007},
    {0.70, 0.76, 0.001},
    {0.65, 0.70, 0.0008},
    {0.60, 0.65, 0.0002},
    {0.56, 0.60, 0.0008},
    {0.52, 0.56, 0.0005},
    {0.47, 0.52, 0.0002},
    {0.42, 0.47, 0.0004},
    {0.37, 0.42, 0.0005},
    {0.34, 0.37, 0.001},
}};

/// Agreement rule with the rounded table: within 5e-4 absolute, or the same
/// sign and within a factor of 2.
inline bool matches_table_value(double computed, double tabulated) {
  if (std::abs(computed - tabulated) <= 5e-4) return true;
  return computed > 0.0 && tabulated > 0.0 && computed <= 2.0 * tabulated && tabulated <= 2.0 * computed;
}

}  // namespace scaleinv
