#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "scaleinv/core.hpp"
#include "scaleinv/error.hpp"

namespace scaleinv {

/// Always predicts 0. Its regret is at most |u|_{S_T} sqrt(T).
class ZeroPredictor {
 public:
  explicit ZeroPredictor(std::size_t d) {
    if (d == 0) throw ParameterError("dimension must be >= 1");
    pred_.w = Vector::Zero(static_cast<Eigen::Index>(d));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(pred_.w.size()); }

  const Prediction& predict(const Vector& x) {
    check_dim(x, dim(), "zero predict");
    return pred_;
  }

  void update(double g, const Vector& x) {
    check_dim(x, dim(), "zero update");
    check_subgradient(g);
  }

 private:
  Prediction pred_;
};

/// Unprojected online gradient descent, w_{t+1} = w_t - (c / sqrt(t)) g_t x_t.
class OnlineGradientDescent {
 public:
  OnlineGradientDescent(double rate, std::size_t d) : rate_(rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ParameterError("OGD rate constant must be > 0");
    if (d == 0) throw ParameterError("dimension must be >= 1");
    pred_.w = Vector::Zero(static_cast<Eigen::Index>(d));
  }

  std::size_t dim() const noexcept { return static_cast<std::size_t>(pred_.w.size()); }
  double rate() const noexcept { return rate_; }
  std::size_t trial() const noexcept { return t_; }
  const Vector& weights() const noexcept { return pred_.w; }

  const Prediction& predict(const Vector& x) {
    check_dim(x, dim(), "ogd predict");
    ++t_;
    pred_.yhat = pred_.w.dot(x);
    return pred_;
  }

  void update(double g, const Vector& x) {
    check_dim(x, dim(), "ogd update");
    check_subgradient(g);
    if (t_ == 0) throw ParameterError("ogd update called before predict");
    ogd_step(g, x);
  }

  void ogd_step(double g, const Vector& x) {
    const double eta = rate_ / std::sqrt(static_cast<double>(std::max<std::size_t>(t_, 1)));
    pred_.w.noalias() -= (eta * g) * x;
  }

 private:
  double rate_;
  std::size_t t_ = 0;
  Prediction pred_;
};

}  // namespace scaleinv
