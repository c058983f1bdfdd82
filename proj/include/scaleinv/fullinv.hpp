#pragma once

// Fully scale-invariant second-order learner.
//
// State: h = -sum g_q x_q, S = sum x_q x_q^T, P = S^dagger (maintained by
// rank-one pseudoinverse updates) and Gamma = sum g_q^2 x_q^T S_q^dagger x_q.
// After folding x_t into S, P it plays
//
//   w = eta P h,   eta = exp((h^T P h - Gamma) / (2 alpha)) / alpha.
//
// Predictions depend on the data only through x_i^T S^dagger x_j, which is
// invariant under x -> A x for invertible A. Cost per trial is O(d^2).

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "scaleinv/coordwise.hpp"
#include "scaleinv/core.hpp"
#include "scaleinv/error.hpp"
#include "scaleinv/linalg.hpp"

namespace scaleinv {

/// log of exp((h^T S^dagger h - Gamma) / (2 alpha)).
inline double fullinv_log_potential(double h_pinv_h, double gamma, double alpha) {
  return (std::max(0.0, h_pinv_h) - gamma) / (2.0 * alpha);
}

class FullInvLearner {
 public:
  FullInvLearner(double alpha, std::size_t d, double range_tolerance = kRangeTolerance) : alpha_(alpha) {
    check_alpha(alpha);
    if (d == 0) throw ParameterError("dimension must be >= 1");
    const auto n = static_cast<Eigen::Index>(d);
    pair_ = PsdPair::zero(n);
    updater_ = PinvUpdater(n, range_tolerance);
    h_ = Vector::Zero(n);
    ph_ = Vector::Zero(n);
    px_ = Vector::Zero(n);
    res_ = Vector::Zero(n);
    pred_.w = Vector::Zero(n);
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(h_.size()); }
  double alpha() const noexcept { return alpha_; }
  std::size_t trial() const noexcept { return t_; }
  const Vector& h() const noexcept { return h_; }
  const Matrix& S() const noexcept { return pair_.S; }
  const Matrix& P() const noexcept { return pair_.P; }
  const PsdPair& pair() const noexcept { return pair_; }
  double gamma() const noexcept { return gamma_; }
  bool overflowed() const noexcept { return overflow_; }
  /// Branch taken by the pseudoinverse update of the most recent predict.
  const RankOneUpdateInfo& last_update() const noexcept { return last_update_; }
  /// Gamma increment g^2 x^T P x of the most recent update.
  double last_gamma_increment() const noexcept { return last_gamma_increment_; }

  const Prediction& predict(const Vector& x) {
    check_dim(x, dim(), "fullinv predict");
    ++t_;
    last_update_ = updater_.update(pair_, x);
    solve_in_range(h_, ph_);
    const double hph = std::max(0.0, h_.dot(ph_));
    const double expo = (hph - gamma_) / (2.0 * alpha_);
    overflow_ = expo > kExponentClamp;
    const double eta = std::exp(expo - std::log(alpha_));
    pred_.w = eta * ph_;
    pred_.yhat = pred_.w.dot(x);
    return pred_;
  }

  void update(double g, const Vector& x) {
    check_dim(x, dim(), "fullinv update");
    check_subgradient(g);
    if (t_ == 0) throw ParameterError("fullinv update called before predict");
    h_.noalias() -= g * x;
    solve_in_range(x, px_);
    last_gamma_increment_ = g * g * std::max(0.0, x.dot(px_));
    gamma_ += last_gamma_increment_;
  }

  /// log of exp((h^T P h - Gamma) / (2 alpha)).
  double log_potential() const {
    if (t_ == 0) return 0.0;
    const Vector ph = pair_.P * h_;
    const Vector refined = ph + pair_.P * (h_ - pair_.S * ph);
    return fullinv_log_potential(h_.dot(refined), gamma_, alpha_);
  }

  /// exp((h^T P h - Gamma) / (2 alpha)); 1 in the initial state.
  double potential() const { return std::exp(log_potential()); }

 private:
  /// out = P v for v in range(S), followed by one refinement step
  /// out += P (v - S out) that removes most of the rounding carried by P.
  void solve_in_range(const Vector& v, Vector& out) {
    out.noalias() = pair_.P * v;
    res_ = v;
    res_.noalias() -= pair_.S * out;
    out.noalias() += pair_.P * res_;
  }

  double alpha_;
  std::size_t t_ = 0;
  PsdPair pair_;
  PinvUpdater updater_;
  Vector h_;
  Vector ph_;
  Vector px_;
  Vector res_;
  double gamma_ = 0.0;
  double last_gamma_increment_ = 0.0;
  bool overflow_ = false;
  RankOneUpdateInfo last_update_;
  Prediction pred_;
};

}  // namespace scaleinv
