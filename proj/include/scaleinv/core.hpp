#pragma once

// Domain types, Lipschitz convex losses, and the online protocol runner.
//
// A trial runs in the fixed order: the instance is revealed, the learner
// predicts, the label is revealed, the loss is suffered, and the learner
// updates with the subderivative g of the loss at its prediction.

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scaleinv/error.hpp"

namespace scaleinv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Largest |g| accepted by learner updates.
inline constexpr double kSubgradientSlack = 1e-12;

struct Example {
  Vector x;
  double y = 0.0;
};

enum class LossKind { Logistic, Hinge, Linear };

inline const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Logistic: return "logistic";
    case LossKind::Hinge: return "hinge";
    case LossKind::Linear: return "linear";
  }
  return "unknown";
}

/// 1-Lipschitz convex loss in the prediction (for labels in [-1, 1]).
///
/// The linear kind carries an explicit subgradient sequence indexed by trial;
/// labels are ignored in that mode and the loss at trial t is g_t * yhat.
class Loss {
 public:
  static Loss logistic() { return Loss(LossKind::Logistic, {}); }
  static Loss hinge() { return Loss(LossKind::Hinge, {}); }
  static Loss linear(std::vector<double> g) { return Loss(LossKind::Linear, std::move(g)); }

  LossKind kind() const noexcept { return kind_; }
  const std::vector<double>& g_sequence() const noexcept { return g_; }

  /// True when g depends only on (y, yhat).
  bool deterministic_subgradient() const noexcept { return kind_ != LossKind::Linear; }

  double value(double y, double yhat, std::size_t trial = 0) const {
    switch (kind_) {
      case LossKind::Logistic: {
        // log(1 + exp(-m)) without overflow for large |m|.
        const double m = y * yhat;
        return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
      }
      case LossKind::Hinge: return std::max(0.0, 1.0 - y * yhat);
      case LossKind::Linear: return linear_g(trial) * yhat;
    }
    return 0.0;
  }

  /// Subderivative in yhat. Hinge returns 0 at the kink y*yhat = 1.
  double subgradient(double y, double yhat, std::size_t trial = 0) const {
    switch (kind_) {
      case LossKind::Logistic: {
        // -y * sigmoid(-y*yhat)
        const double m = y * yhat;
        const double s = m >= 0.0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
        return -y * s;
      }
      case LossKind::Hinge: return y * yhat < 1.0 ? -y : 0.0;
      case LossKind::Linear: return linear_g(trial);
    }
    return 0.0;
  }

 private:
  Loss(LossKind kind, std::vector<double> g) : kind_(kind), g_(std::move(g)) {}

  double linear_g(std::size_t trial) const {
    if (trial >= g_.size()) {
      throw DimensionError("linear loss: no subgradient supplied for trial " + std::to_string(trial + 1));
    }
    return g_[trial];
  }

  LossKind kind_;
  std::vector<double> g_;
};

inline double loss_value(const Loss& loss, double y, double yhat, std::size_t trial = 0) {
  return loss.value(y, yhat, trial);
}

inline double loss_subgradient(const Loss& loss, double y, double yhat, std::size_t trial = 0) {
  return loss.subgradient(y, yhat, trial);
}

/// What a learner commits to at a trial: the weight vector and x^T w.
struct Prediction {
  Vector w;
  double yhat = 0.0;
};

/// Two-phase learner: predict on x (may fold x into internal statistics),
/// then update with the subderivative g for that same x.
template <class L>
concept OnlineLearner = requires(L learner, const L& clearner, const Vector& x, double g) {
  { clearner.dim() } -> std::convertible_to<std::size_t>;
  { learner.predict(x) } -> std::convertible_to<const Prediction&>;
  learner.update(g, x);
};

struct Trial {
  Vector x;
  double yhat = 0.0;
  double y = 0.0;
  double g = 0.0;
  double loss = 0.0;
  Vector w;
};

struct TrialLog {
  std::size_t dim = 0;
  Loss loss = Loss::logistic();
  std::vector<Trial> trials;

  std::size_t size() const noexcept { return trials.size(); }
};

inline void check_dim(const Vector& v, std::size_t d, const char* what) {
  if (static_cast<std::size_t>(v.size()) != d) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(d) + ", got " +
                         std::to_string(v.size()));
  }
}

inline void check_subgradient(double g) {
  if (!(std::abs(g) <= 1.0 + kSubgradientSlack)) {
    throw ParameterError("subgradient |g| = " + std::to_string(std::abs(g)) +
                         " exceeds 1; labels must lie in [-1, 1]");
  }
}

/// Observer hooks called around each trial. `before` sees the learner in
/// its state t-1, `after` sees state t together with the finished trial.
struct NullObserver {
  template <class L>
  void before(const L&, std::size_t) {}
  template <class L>
  void after(const L&, const Trial&, std::size_t) {}
};

template <OnlineLearner L, class Observer = NullObserver>
TrialLog run_protocol(L& learner, std::span<const Example> data, const Loss& loss, Observer&& observer = {}) {
  TrialLog log;
  log.dim = learner.dim();
  log.loss = loss;
  log.trials.reserve(data.size());
  for (std::size_t t = 0; t < data.size(); ++t) {
    const Example& ex = data[t];
    check_dim(ex.x, log.dim, "run_protocol");
    observer.before(std::as_const(learner), t);
    const Prediction& p = learner.predict(ex.x);
    Trial trial;
    trial.x = ex.x;
    trial.w = p.w;
    trial.yhat = p.yhat;
    trial.y = ex.y;
    trial.loss = loss.value(ex.y, p.yhat, t);
    trial.g = loss.subgradient(ex.y, p.yhat, t);
    check_subgradient(trial.g);
    learner.update(trial.g, ex.x);
    observer.after(std::as_const(learner), trial, t);
    log.trials.push_back(std::move(trial));
  }
  return log;
}

struct RegretPair {
  double true_regret = 0.0;
  double linearized_regret = 0.0;
};

/// Regret of the logged run against comparator u, in both the true-loss and
/// the linearized (gradient trick) form. linearized >= true by convexity.
inline RegretPair regret(const TrialLog& log, const Vector& u) {
  check_dim(u, log.dim, "regret");
  RegretPair r;
  for (std::size_t t = 0; t < log.trials.size(); ++t) {
    const Trial& trial = log.trials[t];
    const double comparator_yhat = trial.x.dot(u);
    r.true_regret += trial.loss - log.loss.value(trial.y, comparator_yhat, t);
    r.linearized_regret += trial.g * (trial.yhat - comparator_yhat);
  }
  return r;
}

inline double total_loss(const TrialLog& log) {
  double sum = 0.0;
  for (const Trial& t : log.trials) sum += t.loss;
  return sum;
}

/// S_T = sum_t x_t x_t^T of the logged instances.
inline Matrix gram_matrix(const TrialLog& log) {
  Matrix s = Matrix::Zero(log.dim, log.dim);
  for (const Trial& t : log.trials) s.selfadjointView<Eigen::Lower>().rankUpdate(t.x);
  return s.selfadjointView<Eigen::Lower>();
}

}  // namespace scaleinv
