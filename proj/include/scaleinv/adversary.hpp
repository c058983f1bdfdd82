#pragma once

// Constructive adversaries.
//
// lower_bound_sequence drives any learner through a stream on which its
// linearized loss is nonnegative every trial while h_t^T S_t^dagger h_t = t/2,
// so the comparator u = beta sqrt(2/T) S_T^dagger h_T has |u|_{S_T} = beta
// and regret(u) >= beta sqrt(T/2).
//
// random_stream produces reproducible synthetic data with per-coordinate
// scales drawn log-uniformly.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scaleinv/core.hpp"
#include "scaleinv/error.hpp"
#include "scaleinv/high_precision.hpp"
#include "scaleinv/linalg.hpp"

namespace scaleinv {

/// Returns x with h^T S^{-1} x = 0 and x^T S^{-1} x = 1, built by removing
/// the S^{-1}-projection of `candidate` on h. Without a candidate, the unit
/// basis vector keeping the largest share of its S^{-1}-norm is used.
inline Vector orthogonal_probe(const Matrix& S_inv, const Vector& h, const std::optional<Vector>& candidate = {}) {
  const Eigen::Index d = h.size();
  if (S_inv.rows() != d || S_inv.cols() != d) throw DimensionError("orthogonal_probe: dimension mismatch");
  if (d < 2) throw ParameterError("orthogonal_probe: needs d >= 2");
  if (!S_inv.allFinite()) throw ParameterError("orthogonal_probe: degenerate S (non-finite inverse)");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(S_inv(i, i) > 0.0)) throw ParameterError("orthogonal_probe: degenerate S (inverse not positive definite)");
  }

  const Vector sih = S_inv * h;
  const double hsh = h.dot(sih);
  const auto project = [&](const Vector& c) -> Vector {
    if (hsh <= 0.0) return c;
    return c - (sih.dot(c) / hsh) * h;
  };

  Vector x;
  if (candidate) {
    if (candidate->size() != d) throw DimensionError("orthogonal_probe: candidate dimension mismatch");
    x = project(*candidate);
  } else {
    double best = -1.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const Vector e = Vector::Unit(d, k);
      const Vector r = project(e);
      const double share = r.dot(S_inv * r) / S_inv(k, k);
      if (share > best * (1.0 + 1e-12)) {
        best = share;
        x = r;
      }
    }
  }
  const double q = x.dot(S_inv * x);
  if (!(q > 0.0) || !std::isfinite(q)) throw ParameterError("orthogonal_probe: degenerate direction");
  x /= std::sqrt(q);
  return x;
}

struct AdversaryTrace {
  std::vector<Vector> x;
  std::vector<double> g;
  std::vector<double> yhat;
  /// h_t^T S_t^dagger h_t after each trial.
  std::vector<double> certified;
  Vector comparator;
  double beta_target = 0.0;
  /// Comparator seminorm |u|_{S_T}, evaluated directly.
  double comparator_norm = 0.0;
  /// Protocol log with a linear loss carrying the chosen g_t.
  TrialLog log;

  std::size_t size() const noexcept { return g.size(); }
};

namespace detail {

inline HpVector to_hp(const Vector& v) { return v.cast<HighPrecision>(); }

inline Vector to_double(const HpVector& v) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = static_cast<double>(v(i));
  return out;
}

}  // namespace detail

/// Lower-bound construction against `learner`. The first d trials play
/// x_t = e_t with g_t = +-1/sqrt(2); later trials play an S^{-1}-orthogonal
/// probe (seeded random candidate) with |g_t| close to 1. Signs follow
/// sign(yhat_t) with sign(0) = +1.
///
/// For d = 2 the condition number of S_t roughly doubles every trial, so S, h
/// and all solves are kept in 50-digit arithmetic, accumulated exactly from
/// the double instances the learner sees. Rounding the probe to double still
/// breaks h^T S^{-1} x = 0 and x^T S^{-1} x = 1 slightly once S is badly
/// conditioned; |g_t| <= 1 is then solved so that the increment of
/// h^T S^dagger h is exactly 1/2 for the instance actually played.
template <OnlineLearner L>
AdversaryTrace lower_bound_sequence(L& learner, std::size_t T, double beta, std::size_t d, std::uint64_t seed = 0) {
  if (d < 2) throw ParameterError("lower_bound_sequence: needs d >= 2");
  if (T < d) throw ParameterError("lower_bound_sequence: needs T >= d");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ParameterError("lower_bound_sequence: beta must be >= 0");
  if (learner.dim() != d) throw DimensionError("lower_bound_sequence: learner dimension mismatch");

  using Hp = HighPrecision;
  using boost::multiprecision::sqrt;
  const auto n = static_cast<Eigen::Index>(d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  AdversaryTrace trace;
  trace.beta_target = beta;
  trace.log.dim = d;
  HpMatrix S = HpMatrix::Zero(n, n);
  HpVector h = HpVector::Zero(n);
  Hp certified = 0;
  std::vector<Vector> weights;

  for (std::size_t t = 1; t <= T; ++t) {
    Vector x;
    // g for yhat >= 0 and yhat < 0
    double g_pos = 1.0 / std::sqrt(2.0), g_neg = -1.0 / std::sqrt(2.0);
    if (t <= d) {
      x = Vector::Unit(n, static_cast<Eigen::Index>(t - 1));
    } else {
      const Eigen::LDLT<HpMatrix> ldlt(S);
      const HpVector z = ldlt.solve(h);
      HpVector c(n);
      for (Eigen::Index i = 0; i < n; ++i) c(i) = normal(rng);
      const Hp zh = z.dot(h);
      const HpVector v = zh > 0 ? HpVector(c - (z.dot(c) / zh) * h) : c;
      const Hp qv = v.dot(ldlt.solve(v));
      if (!(qv > 0)) throw ParameterError("lower_bound_sequence: degenerate probe");
      x = detail::to_double(v / sqrt(qv));

      // q g^2 - 2 eps g - eps^2 = delta (1 + q) gives increment delta exactly.
      const Hp delta = Hp(static_cast<double>(t)) / 2 - certified;
      bool ok = false;
      double step = std::ldexp(1.0, -52);
      for (int attempt = 0; attempt < 60 && !ok; ++attempt, step *= 2.0) {
        const HpVector xh = detail::to_hp(x);
        const Hp eps = z.dot(xh);
        const Hp q = xh.dot(ldlt.solve(xh));
        const Hp root = sqrt(eps * eps * (1 + q) + q * delta * (1 + q));
        g_pos = static_cast<double>((eps + root) / q);
        g_neg = static_cast<double>((eps - root) / q);
        ok = g_pos > 0.0 && g_pos <= 1.0 && g_neg < 0.0 && g_neg >= -1.0;
        if (!ok) x *= 1.0 + step;
      }
      if (!ok) throw ParameterError("lower_bound_sequence: could not keep |g| <= 1");
    }

    const Prediction& p = learner.predict(x);
    const double g = p.yhat >= 0.0 ? g_pos : g_neg;
    weights.push_back(p.w);
    trace.yhat.push_back(p.yhat);
    learner.update(g, x);

    const HpVector xh = detail::to_hp(x);
    h -= Hp(g) * xh;
    S.noalias() += xh * xh.transpose();
    if (t < d) {
      // S is diag(1, ..., 1, 0, ..., 0) here
      certified = 0;
      for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(t); ++i) certified += h(i) * h(i);
    } else {
      certified = h.dot(S.ldlt().solve(h));
    }
    trace.certified.push_back(static_cast<double>(certified));
    trace.x.push_back(std::move(x));
    trace.g.push_back(g);
  }

  // Rounding u to double can move |u|_S noticeably when S is badly
  // conditioned; among slight rescalings keep the one closest to beta.
  const HpVector u0 = Hp(beta * std::sqrt(2.0 / static_cast<double>(T))) * S.ldlt().solve(h);
  const Hp target = Hp(beta);
  Hp best_gap = -1;
  for (int k = 0; k <= 4096; ++k) {
    const double shift = std::ldexp(static_cast<double>(k % 2 ? (k + 1) / 2 : -(k / 2)), -50);
    const Vector u = detail::to_double(u0 * Hp(1.0 + shift));
    const HpVector uh = detail::to_hp(u);
    const Hp norm = sqrt(uh.dot(S * uh));
    const Hp gap = abs(norm - target);
    if (best_gap < 0 || gap < best_gap) {
      best_gap = gap;
      trace.comparator = u;
      trace.comparator_norm = static_cast<double>(norm);
    }
    if (gap <= target * Hp(1e-13)) break;
  }

  trace.log.loss = Loss::linear(trace.g);
  trace.log.trials.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    Trial tr;
    tr.x = trace.x[t];
    tr.w = weights[t];
    tr.yhat = trace.yhat[t];
    tr.g = trace.g[t];
    tr.loss = tr.g * tr.yhat;
    trace.log.trials.push_back(std::move(tr));
  }
  return trace;
}

enum class GMode { Signs, Uniform, FromLoss };

inline GMode parse_g_mode(const std::string& s) {
  if (s == "signs") return GMode::Signs;
  if (s == "uniform") return GMode::Uniform;
  if (s == "from-loss" || s == "from_loss") return GMode::FromLoss;
  throw ParameterError("unknown g mode '" + s + "' (signs|uniform|from-loss)");
}

inline const char* to_string(GMode m) {
  switch (m) {
    case GMode::Signs: return "signs";
    case GMode::Uniform: return "uniform";
    case GMode::FromLoss: return "from-loss";
  }
  return "unknown";
}

/// Scale applied per feature (x_{t,i} = s_i z_{t,i}) or per instance
/// (x_t = s_t z_t).
enum class ScaleMode { PerFeature, PerInstance };

inline ScaleMode parse_scale_mode(const std::string& s) {
  if (s == "feature") return ScaleMode::PerFeature;
  if (s == "instance") return ScaleMode::PerInstance;
  throw ParameterError("unknown scale mode '" + s + "' (feature|instance)");
}

inline const char* to_string(ScaleMode m) { return m == ScaleMode::PerFeature ? "feature" : "instance"; }

struct StreamSpec {
  std::size_t d = 5;
  std::size_t T = 100;
  double scale_min = 1.0;
  double scale_max = 1.0;
  GMode g_mode = GMode::FromLoss;
  std::uint64_t seed = 0;
  /// Instances confined to a random subspace of this dimension (0 = full).
  std::size_t rank = 0;
  /// Label noise: probability of flipping the planted label (from-loss only).
  double flip_probability = 0.1;
  ScaleMode scale_mode = ScaleMode::PerFeature;
};

struct SyntheticStream {
  std::vector<Example> examples;
  /// Linear loss with the drawn g_t for signs/uniform; logistic for from-loss.
  Loss loss = Loss::logistic();
  /// Per-feature scales (all ones in per-instance mode).
  Vector scales;
};

/// x_{t,i} = scale_i (B z_t)_i with z_t standard normal, or x_t = s_t B z_t in
/// per-instance mode; B is the identity for full-rank streams. from-loss
/// labels are sign(x^T u*) of a planted comparator u*_i ~ N(0,1)/scale_i,
/// flipped with `flip_probability`.
inline SyntheticStream random_stream(const StreamSpec& spec) {
  if (spec.d == 0) throw ParameterError("random_stream: d must be >= 1");
  if (!(spec.scale_min > 0.0) || !(spec.scale_max >= spec.scale_min) || !std::isfinite(spec.scale_max)) {
    throw ParameterError("random_stream: scale range must satisfy 0 < min <= max");
  }
  if (spec.rank > spec.d) throw ParameterError("random_stream: rank exceeds dimension");

  const auto n = static_cast<Eigen::Index>(spec.d);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;

  SyntheticStream out;
  out.scales.resize(n);
  const double lo = std::log(spec.scale_min);
  const double hi = std::log(spec.scale_max);
  const bool per_feature = spec.scale_mode == ScaleMode::PerFeature;
  for (Eigen::Index i = 0; i < n; ++i) out.scales(i) = per_feature ? std::exp(lo + (hi - lo) * unit(rng)) : 1.0;

  Matrix basis;
  const Eigen::Index k = spec.rank == 0 ? n : static_cast<Eigen::Index>(spec.rank);
  if (spec.rank != 0) {
    basis.resize(n, k);
    for (Eigen::Index j = 0; j < k; ++j)
      for (Eigen::Index i = 0; i < n; ++i) basis(i, j) = normal(rng);
  }
  Vector planted(n);
  for (Eigen::Index i = 0; i < n; ++i) planted(i) = normal(rng) / out.scales(i);

  std::vector<double> g;
  out.examples.reserve(spec.T);
  Vector z(k);
  for (std::size_t t = 0; t < spec.T; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) z(j) = normal(rng);
    Example ex;
    ex.x = spec.rank == 0 ? Vector(z) : Vector(basis * z);
    if (per_feature) ex.x.array() *= out.scales.array();
    else ex.x *= std::exp(lo + (hi - lo) * unit(rng));
    switch (spec.g_mode) {
      case GMode::Signs: g.push_back(unit(rng) < 0.5 ? -1.0 : 1.0); break;
      case GMode::Uniform: g.push_back(2.0 * unit(rng) - 1.0); break;
      case GMode::FromLoss: {
        double y = ex.x.dot(planted) >= 0.0 ? 1.0 : -1.0;
        if (unit(rng) < spec.flip_probability) y = -y;
        ex.y = y;
        break;
      }
    }
    out.examples.push_back(std::move(ex));
  }
  if (spec.g_mode != GMode::FromLoss) out.loss = Loss::linear(std::move(g));
  return out;
}

}  // namespace scaleinv
