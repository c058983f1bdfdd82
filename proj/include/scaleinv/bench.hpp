#pragma once

// Per-trial timing across dimensions and log-log slope fits.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "scaleinv/adversary.hpp"
#include "scaleinv/core.hpp"
#include "scaleinv/error.hpp"
#include "scaleinv/experiment.hpp"

namespace scaleinv {

struct BenchSpec {
  std::vector<std::size_t> dims{16, 32, 64, 128, 256};
  std::size_t T = 500;
  std::size_t repeats = 3;
  double alpha = 1.5;
  std::uint64_t seed = 0;
};

struct BenchPoint {
  std::size_t d = 0;
  /// Minimum over repeats of the mean wall time per trial, in nanoseconds.
  double ns_per_trial = 0.0;
};

struct BenchResult {
  LearnerKind kind = LearnerKind::Coordwise;
  std::vector<BenchPoint> points;
  double slope = 0.0;
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("loglog_slope: need >= 2 paired points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ParameterError("loglog_slope: values must be positive");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

namespace detail {

template <class L>
double time_protocol(L& learner, const std::vector<Example>& data, const std::vector<double>& g) {
  const auto start = std::chrono::steady_clock::now();
  double sink = 0.0;
  for (std::size_t t = 0; t < data.size(); ++t) {
    sink += learner.predict(data[t].x).yhat;
    learner.update(g[t], data[t].x);
  }
  const auto stop = std::chrono::steady_clock::now();
  volatile double keep = sink;
  (void)keep;
  return std::chrono::duration<double, std::nano>(stop - start).count() / static_cast<double>(data.size());
}

}  // namespace detail

inline BenchResult bench_learner(LearnerKind kind, const BenchSpec& spec) {
  if (spec.T == 0 || spec.repeats == 0) throw ParameterError("bench: T and repeats must be >= 1");
  BenchResult out;
  out.kind = kind;
  std::vector<double> xs, ys;
  for (std::size_t d : spec.dims) {
    StreamSpec stream;
    stream.d = d;
    stream.T = spec.T;
    stream.g_mode = GMode::Uniform;
    stream.seed = spec.seed + d;
    const SyntheticStream s = random_stream(stream);
    const std::vector<double>& g = s.loss.g_sequence();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < spec.repeats; ++r) {
      AnyLearner learner = make_learner(LearnerSpec{kind, spec.alpha, 1.0}, d);
      const double ns = std::visit([&](auto& l) { return detail::time_protocol(l, s.examples, g); }, learner);
      best = std::min(best, ns);
    }
    out.points.push_back({d, best});
    xs.push_back(static_cast<double>(d));
    ys.push_back(best);
  }
  out.slope = xs.size() >= 2 ? loglog_slope(xs, ys) : 0.0;
  return out;
}

}  // namespace scaleinv
