#pragma once

// Coordinate-wise scale-invariant learner.
//
// Per coordinate i the learner keeps h_i = -sum_q g_q x_{q,i} and
// s2_i = sum_q x_{q,i}^2. After folding x_t into s2 it plays
//
//   w_i = eta_i h_i / s2_i,   eta_i = exp((h_i^2 + x_i^2) / (2 alpha s2_i)) / (alpha t d)
//
// (w_i = 0 while s2_i = 0). Rescaling coordinate i by a > 0 multiplies h_i by
// a and s2_i by a^2, so w_i x_i and every prediction are unchanged.
//
// Weights are formed in log space; an exponent above kExponentClamp sets the
// overflow flag for the trial.

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "scaleinv/core.hpp"
#include "scaleinv/error.hpp"

namespace scaleinv {

/// Smallest admissible alpha (exclusive).
inline constexpr double kAlphaMin = 9.0 / 8.0;

/// Exponent (in nats) above which a trial is flagged as overflowing.
inline constexpr double kExponentClamp = 700.0;

inline void check_alpha(double alpha) {
  if (!(alpha > kAlphaMin) || !std::isfinite(alpha)) {
    throw ParameterError("alpha must be finite and > 9/8, got " + std::to_string(alpha));
  }
}

/// Plain state of the coordinate-wise learner; serializable.
struct CoordwiseState {
  double alpha = 1.5;
  std::size_t t = 0;
  Vector h;
  Vector s2;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(h.size()); }
};

/// Text form: "coordwise <d> <t> <alpha>" then one "h_i s2_i" line per
/// coordinate, doubles with 17 significant digits.
inline void write_state(std::ostream& os, const CoordwiseState& s) {
  const auto old_flags = os.flags();
  const auto old_prec = os.precision();
  os << std::setprecision(17);
  os << "coordwise " << s.dim() << ' ' << s.t << ' ' << s.alpha << '\n';
  for (Eigen::Index i = 0; i < s.h.size(); ++i) os << s.h(i) << ' ' << s.s2(i) << '\n';
  os.flags(old_flags);
  os.precision(old_prec);
}

inline CoordwiseState read_state(std::istream& is) {
  std::string tag;
  std::size_t d = 0;
  CoordwiseState s;
  if (!(is >> tag >> d >> s.t >> s.alpha) || tag != "coordwise" || d == 0) {
    throw ParseError("coordwise state", 1, "bad header");
  }
  check_alpha(s.alpha);
  s.h.resize(static_cast<Eigen::Index>(d));
  s.s2.resize(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    if (!(is >> s.h(i) >> s.s2(i)) || !(s.s2(i) >= 0.0)) {
      throw ParseError("coordwise state", i + 2, "bad coordinate record");
    }
  }
  return s;
}

class CoordwiseLearner {
 public:
  CoordwiseLearner(double alpha, std::size_t d) {
    check_alpha(alpha);
    if (d == 0) throw ParameterError("dimension must be >= 1");
    state_.alpha = alpha;
    state_.h = Vector::Zero(static_cast<Eigen::Index>(d));
    state_.s2 = Vector::Zero(static_cast<Eigen::Index>(d));
    pred_.w = Vector::Zero(static_cast<Eigen::Index>(d));
  }

  explicit CoordwiseLearner(CoordwiseState state) : state_(std::move(state)) {
    check_alpha(state_.alpha);
    if (state_.dim() == 0 || state_.s2.size() != state_.h.size()) {
      throw DimensionError("coordwise state: inconsistent dimensions");
    }
    pred_.w = Vector::Zero(state_.h.size());
  }

  std::size_t dim() const noexcept { return state_.dim(); }
  double alpha() const noexcept { return state_.alpha; }
  std::size_t trial() const noexcept { return state_.t; }
  const Vector& h() const noexcept { return state_.h; }
  const Vector& s2() const noexcept { return state_.s2; }
  const CoordwiseState& state() const noexcept { return state_; }

  /// Overflow flag of the most recent predict.
  bool overflowed() const noexcept { return overflow_; }

  const Prediction& predict(const Vector& x) {
    check_dim(x, dim(), "coordwise predict");
    ++state_.t;
    overflow_ = false;
    const double log_scale = -std::log(state_.alpha * static_cast<double>(state_.t) * static_cast<double>(dim()));
    double yhat = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double xi = x(i);
      double& s2 = state_.s2(i);
      s2 += xi * xi;
      const double hi = state_.h(i);
      double wi = 0.0;
      if (s2 > 0.0 && hi != 0.0) {
        const double expo = (hi * hi + xi * xi) / (2.0 * state_.alpha * s2);
        if (expo > kExponentClamp) overflow_ = true;
        const double log_w = log_scale + expo + std::log(std::abs(hi)) - std::log(s2);
        wi = std::copysign(std::exp(log_w), hi);
      }
      pred_.w(i) = wi;
      yhat += wi * xi;
    }
    pred_.yhat = yhat;
    return pred_;
  }

  void update(double g, const Vector& x) {
    check_dim(x, dim(), "coordwise update");
    check_subgradient(g);
    if (state_.t == 0) throw ParameterError("coordwise update called before predict");
    state_.h.noalias() -= g * x;
  }

  /// Per-coordinate potential (t d)^-1 exp(h^2 / (2 alpha s2)), 0 where s2 = 0.
  /// Meaningful between trials (after update, before the next predict).
  Vector potential() const {
    Vector psi = Vector::Zero(state_.h.size());
    if (state_.t == 0) return psi;
    const double log_td = std::log(static_cast<double>(state_.t) * static_cast<double>(dim()));
    for (Eigen::Index i = 0; i < psi.size(); ++i) {
      const double s2 = state_.s2(i);
      if (s2 > 0.0) psi(i) = std::exp(state_.h(i) * state_.h(i) / (2.0 * state_.alpha * s2) - log_td);
    }
    return psi;
  }

 private:
  CoordwiseState state_;
  Prediction pred_;
  bool overflow_ = false;
};

}  // namespace scaleinv
