#pragma once

// Experiment driver: runtime learner selection, per-trial lemma margins,
// comparator sets and regret certificates, invariance checks, and report
// emission (per-trial CSV + summary JSON).

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "scaleinv/adversary.hpp"
#include "scaleinv/baselines.hpp"
#include "scaleinv/bounds.hpp"
#include "scaleinv/coordwise.hpp"
#include "scaleinv/core.hpp"
#include "scaleinv/error.hpp"
#include "scaleinv/fullinv.hpp"
#include "scaleinv/io.hpp"
#include "scaleinv/linalg.hpp"

namespace scaleinv {

// ---------------------------------------------------------------------------
// Learner selection

enum class LearnerKind { Zero, Ogd, Coordwise, FullInv };

inline LearnerKind parse_learner_kind(const std::string& s) {
  if (s == "zero") return LearnerKind::Zero;
  if (s == "ogd") return LearnerKind::Ogd;
  if (s == "coordwise") return LearnerKind::Coordwise;
  if (s == "fullinv") return LearnerKind::FullInv;
  throw ParameterError("unknown learner '" + s + "' (zero|ogd|coordwise|fullinv)");
}

inline const char* to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::Zero: return "zero";
    case LearnerKind::Ogd: return "ogd";
    case LearnerKind::Coordwise: return "coordwise";
    case LearnerKind::FullInv: return "fullinv";
  }
  return "unknown";
}

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "logistic") return LossKind::Logistic;
  if (s == "hinge") return LossKind::Hinge;
  if (s == "linear") return LossKind::Linear;
  throw ParameterError("unknown loss '" + s + "' (logistic|hinge|linear)");
}

struct LearnerSpec {
  LearnerKind kind = LearnerKind::Coordwise;
  double alpha = 1.5;
  double ogd_rate = 1.0;
};

using AnyLearner = std::variant<ZeroPredictor, OnlineGradientDescent, CoordwiseLearner, FullInvLearner>;

inline AnyLearner make_learner(const LearnerSpec& spec, std::size_t d) {
  switch (spec.kind) {
    case LearnerKind::Zero: return ZeroPredictor(d);
    case LearnerKind::Ogd: return OnlineGradientDescent(spec.ogd_rate, d);
    case LearnerKind::Coordwise: return CoordwiseLearner(spec.alpha, d);
    case LearnerKind::FullInv: return FullInvLearner(spec.alpha, d);
  }
  throw ParameterError("unknown learner kind");
}

// ---------------------------------------------------------------------------
// Per-trial diagnostics

/// Per-trial record of potential and lemma bookkeeping.
struct TrialDiagnostics {
  double potential = 0.0;        // sum_i psi_i (coordwise) or psi (fullinv)
  double gamma_or_psi_max = 0.0;  // Gamma (fullinv) or max_i psi_i (coordwise)
  /// (rhs - lhs) / max(1, rhs) of the per-trial lemma; NaN if not applicable.
  double lemma_margin = std::numeric_limits<double>::quiet_NaN();
  /// rhs - lhs without normalization.
  double lemma_margin_raw = std::numeric_limits<double>::quiet_NaN();
  bool overflow = false;
};

/// Lemma margins for the two scale-invariant learners:
///   coordwise: g w_i x_i + psi_t,i <= psi_{t-1},i + kappa(alpha) / (t d), each i
///   fullinv:   g x^T w + psi_t <= psi_{t-1}
class DiagnosticsObserver {
 public:
  std::vector<TrialDiagnostics> trials;

  template <class L>
  void before(const L& learner, std::size_t) {
    if constexpr (std::is_same_v<L, CoordwiseLearner>) {
      psi_prev_ = learner.potential();
    } else if constexpr (std::is_same_v<L, FullInvLearner>) {
      psi_prev_scalar_ = learner.potential();
    }
  }

  template <class L>
  void after(const L& learner, const Trial& trial, std::size_t t0) {
    TrialDiagnostics diag;
    if constexpr (std::is_same_v<L, CoordwiseLearner>) {
      const Vector psi = learner.potential();
      const double t = static_cast<double>(t0 + 1);
      const double d = static_cast<double>(learner.dim());
      const double overhead = kappa(learner.alpha()) / (t * d);
      double worst = std::numeric_limits<double>::infinity();
      double worst_raw = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < psi.size(); ++i) {
        const double lhs = trial.g * trial.w(i) * trial.x(i) + psi(i);
        const double rhs = psi_prev_(i) + overhead;
        const double raw = rhs - lhs;
        worst_raw = std::min(worst_raw, raw);
        worst = std::min(worst, raw / std::max(1.0, std::abs(rhs)));
      }
      diag.potential = psi.sum();
      diag.gamma_or_psi_max = psi.maxCoeff();
      diag.lemma_margin = worst;
      diag.lemma_margin_raw = worst_raw;
      diag.overflow = learner.overflowed();
    } else if constexpr (std::is_same_v<L, FullInvLearner>) {
      const double psi = learner.potential();
      const double lhs = trial.g * trial.yhat + psi;
      const double rhs = psi_prev_scalar_;
      diag.potential = psi;
      diag.gamma_or_psi_max = learner.gamma();
      diag.lemma_margin_raw = rhs - lhs;
      diag.lemma_margin = (rhs - lhs) / std::max(1.0, std::abs(rhs));
      diag.overflow = learner.overflowed();
    }
    trials.push_back(diag);
  }

  double min_lemma_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& d : trials) {
      if (!std::isnan(d.lemma_margin)) m = std::min(m, d.lemma_margin);
    }
    return m;
  }

 private:
  Vector psi_prev_;
  double psi_prev_scalar_ = 1.0;
};

struct RunResult {
  TrialLog log;
  std::vector<TrialDiagnostics> diagnostics;
  LearnerKind kind = LearnerKind::Zero;
  double alpha = 0.0;
  /// Gamma_T for fullinv runs.
  double gamma = 0.0;

  double min_lemma_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& d : diagnostics) {
      if (!std::isnan(d.lemma_margin)) m = std::min(m, d.lemma_margin);
    }
    return m;
  }

  std::size_t overflow_trials() const {
    return static_cast<std::size_t>(std::count_if(diagnostics.begin(), diagnostics.end(),
                                                  [](const TrialDiagnostics& d) { return d.overflow; }));
  }
};

inline RunResult run_learner(const LearnerSpec& spec, std::span<const Example> data, const Loss& loss, std::size_t d) {
  AnyLearner learner = make_learner(spec, d);
  RunResult out;
  out.kind = spec.kind;
  out.alpha = spec.alpha;
  std::visit(
      [&](auto& l) {
        DiagnosticsObserver obs;
        out.log = run_protocol(l, data, loss, obs);
        out.diagnostics = std::move(obs.trials);
        if constexpr (std::is_same_v<std::decay_t<decltype(l)>, FullInvLearner>) out.gamma = l.gamma();
      },
      learner);
  return out;
}

// ---------------------------------------------------------------------------
// Comparators and certificates

struct Comparator {
  std::string name;
  Vector u;
};

/// s_{T,i} = sqrt(sum_t x_{t,i}^2).
inline Vector coordinate_scales(const TrialLog& log) {
  Vector s2 = Vector::Zero(static_cast<Eigen::Index>(log.dim));
  for (const Trial& t : log.trials) s2.array() += t.x.array().square();
  return s2.cwiseSqrt();
}

/// Approximate empirical loss minimizer by diagonally preconditioned gradient
/// descent with backtracking. Returns 0 for linear losses (unbounded below).
inline Vector empirical_minimizer(const TrialLog& log, int iterations = 200) {
  const auto d = static_cast<Eigen::Index>(log.dim);
  Vector u = Vector::Zero(d);
  if (log.loss.kind() == LossKind::Linear || log.trials.empty()) return u;
  const Vector s = coordinate_scales(log);
  Vector precond(d);
  for (Eigen::Index i = 0; i < d; ++i) precond(i) = s(i) > 0.0 ? 1.0 / (s(i) * s(i)) : 0.0;
  const auto objective = [&](const Vector& v) {
    double sum = 0.0;
    for (std::size_t t = 0; t < log.trials.size(); ++t) sum += log.loss.value(log.trials[t].y, log.trials[t].x.dot(v), t);
    return sum;
  };
  double f = objective(u);
  double step = static_cast<double>(log.trials.size());
  for (int it = 0; it < iterations; ++it) {
    Vector grad = Vector::Zero(d);
    for (std::size_t t = 0; t < log.trials.size(); ++t) {
      const Trial& tr = log.trials[t];
      grad += log.loss.subgradient(tr.y, tr.x.dot(u), t) * tr.x;
    }
    const Vector dir = -(precond.array() * grad.array()).matrix();
    if (dir.norm() == 0.0) break;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Vector cand = u + step * dir;
      const double fc = objective(cand);
      if (fc < f) {
        u = cand;
        f = fc;
        step *= 2.0;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return u;
}

struct ComparatorSpec {
  std::size_t random_per_scale = 4;
  std::vector<double> scales{1e-2, 1e-1, 1.0, 10.0, 100.0};
  bool minimizer = true;
};

/// Zero vector, the empirical minimizer, and seeded random vectors
/// u_i = c z_i / s_{T,i} at each relative scale c.
inline std::vector<Comparator> make_comparators(const TrialLog& log, const ComparatorSpec& spec, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(log.dim);
  std::vector<Comparator> out;
  out.push_back({"zero", Vector::Zero(d)});
  if (spec.minimizer && log.loss.kind() != LossKind::Linear) out.push_back({"minimizer", empirical_minimizer(log)});
  const Vector s = coordinate_scales(log);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  for (double c : spec.scales) {
    for (std::size_t k = 0; k < spec.random_per_scale; ++k) {
      Vector u(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        const double z = normal(rng);
        u(i) = s(i) > 0.0 ? c * z / s(i) : c * z;
      }
      char name[64];
      std::snprintf(name, sizeof name, "random(c=%g,k=%zu)", c, k);
      out.push_back({name, std::move(u)});
    }
  }
  return out;
}

struct Certificate {
  std::string comparator;
  double norm_S = 0.0;
  double true_regret = 0.0;
  double linearized_regret = 0.0;
  /// Regret bound for this learner; NaN when the learner has none.
  double bound = std::numeric_limits<double>::quiet_NaN();
  double margin = std::numeric_limits<double>::quiet_NaN();
};

/// Regret-bound value for the run's learner at comparator u.
inline double certificate_bound(const RunResult& run, const Vector& u, const Matrix& S, const Vector& s) {
  const std::size_t T = run.log.size();
  const std::size_t d = run.log.dim;
  switch (run.kind) {
    case LearnerKind::Coordwise: return regret_bound_coordwise(u, s, run.alpha, T, d);
    case LearnerKind::FullInv: return regret_bound_full(std::sqrt(quad_form(S, u)), run.gamma, run.alpha);
    case LearnerKind::Zero: return std::sqrt(quad_form(S, u)) * std::sqrt(static_cast<double>(T));
    case LearnerKind::Ogd: return std::numeric_limits<double>::quiet_NaN();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

inline std::vector<Certificate> certify(const RunResult& run, const std::vector<Comparator>& comparators) {
  const Matrix S = gram_matrix(run.log);
  const Vector s = coordinate_scales(run.log);
  std::vector<Certificate> out;
  out.reserve(comparators.size());
  for (const Comparator& c : comparators) {
    Certificate cert;
    cert.comparator = c.name;
    cert.norm_S = std::sqrt(quad_form(S, c.u));
    const RegretPair r = regret(run.log, c.u);
    cert.true_regret = r.true_regret;
    cert.linearized_regret = r.linearized_regret;
    cert.bound = certificate_bound(run, c.u, S, s);
    cert.margin = cert.bound - cert.true_regret;
    out.push_back(std::move(cert));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Invariance

enum class TransformKind { Identity, Diagonal, General };

inline TransformKind parse_transform_kind(const std::string& s) {
  if (s == "identity") return TransformKind::Identity;
  if (s == "diagonal") return TransformKind::Diagonal;
  if (s == "general") return TransformKind::General;
  throw ParameterError("unknown transform '" + s + "' (identity|diagonal|general)");
}

inline const char* to_string(TransformKind k) {
  switch (k) {
    case TransformKind::Identity: return "identity";
    case TransformKind::Diagonal: return "diagonal";
    case TransformKind::General: return "general";
  }
  return "unknown";
}

struct TransformSpec {
  TransformKind kind = TransformKind::Diagonal;
  /// Diagonal entries are log-uniform in [1/range, range].
  double diagonal_range = 1e3;
  /// Condition-number cap for general transforms.
  double cond_cap = 1e3;
};

inline Matrix random_orthogonal(Eigen::Index d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

/// Diagonal: positive entries log-uniform in [1/range, range].
/// General: Q1 diag(sigma) Q2^T with sigma_max / sigma_min = cond_cap exactly
/// (d >= 2) and the remaining sigma log-uniform in between.
inline Matrix random_transform(Eigen::Index d, const TransformSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit;
  switch (spec.kind) {
    case TransformKind::Identity: return Matrix::Identity(d, d);
    case TransformKind::Diagonal: {
      if (!(spec.diagonal_range >= 1.0)) throw ParameterError("diagonal range must be >= 1");
      const double l = std::log(spec.diagonal_range);
      Vector a(d);
      for (Eigen::Index i = 0; i < d; ++i) a(i) = std::exp(-l + 2.0 * l * unit(rng));
      return a.asDiagonal();
    }
    case TransformKind::General: {
      if (!(spec.cond_cap >= 1.0) || !std::isfinite(spec.cond_cap)) {
        throw ParameterError("condition-number cap must be finite and >= 1");
      }
      const double l = std::log(spec.cond_cap);
      Vector sigma(d);
      for (Eigen::Index i = 0; i < d; ++i) sigma(i) = std::exp(l * unit(rng));
      sigma(0) = 1.0;
      if (d >= 2) sigma(1) = spec.cond_cap;
      const Matrix q1 = random_orthogonal(d, rng);
      const Matrix q2 = random_orthogonal(d, rng);
      return q1 * sigma.asDiagonal() * q2.transpose();
    }
  }
  throw ParameterError("unknown transform kind");
}

inline double condition_number(const Matrix& A) {
  Eigen::JacobiSVD<Matrix> svd(A);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / sv(sv.size() - 1);
}

inline std::vector<Example> transform_examples(std::span<const Example> data, const Matrix& A) {
  std::vector<Example> out;
  out.reserve(data.size());
  for (const Example& ex : data) out.push_back({A * ex.x, ex.y});
  return out;
}

/// max_t |yhat_t - yhat'_t| / max(1, |yhat_t|) over two prediction sequences.
inline double max_relative_deviation(const TrialLog& a, const TrialLog& b) {
  if (a.size() != b.size()) throw DimensionError("prediction sequences differ in length");
  double worst = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double ya = a.trials[t].yhat;
    const double yb = b.trials[t].yhat;
    const double dev = std::abs(ya - yb) / std::max(1.0, std::abs(ya));
    worst = std::max(worst, std::isnan(dev) ? std::numeric_limits<double>::infinity() : dev);
  }
  return worst;
}

struct InvarianceResult {
  double max_rel_deviation = 0.0;
  double condition_number = 1.0;
  TrialLog original;
  TrialLog transformed;
};

/// Runs a fresh learner on the data and on its image under a random
/// transform (same labels) and compares the predictions.
inline InvarianceResult invariance_check(const std::function<AnyLearner()>& learner_factory,
                                         std::span<const Example> data, const Loss& loss,
                                         const TransformSpec& transform, std::uint64_t seed) {
  InvarianceResult out;
  AnyLearner first = learner_factory();
  const std::size_t d = std::visit([](const auto& l) { return l.dim(); }, first);
  const Matrix A = random_transform(static_cast<Eigen::Index>(d), transform, seed);
  out.condition_number = condition_number(A);
  if (transform.kind == TransformKind::General && out.condition_number > transform.cond_cap * (1.0 + 1e-6)) {
    throw ParameterError("transform condition number exceeds the cap");
  }
  const std::vector<Example> mapped = transform_examples(data, A);
  AnyLearner second = learner_factory();
  std::visit([&](auto& l) { out.original = run_protocol(l, data, loss); }, first);
  std::visit([&](auto& l) { out.transformed = run_protocol(l, std::span<const Example>(mapped), loss); }, second);
  out.max_rel_deviation = max_relative_deviation(out.original, out.transformed);
  return out;
}

// ---------------------------------------------------------------------------
// Experiment configuration and reports

enum class SourceKind { Csv, Sparse, Synthetic, Adversary };

inline SourceKind parse_source_kind(const std::string& s) {
  if (s == "csv") return SourceKind::Csv;
  if (s == "sparse") return SourceKind::Sparse;
  if (s == "synthetic") return SourceKind::Synthetic;
  if (s == "adversary") return SourceKind::Adversary;
  throw ParameterError("unknown source '" + s + "' (csv|sparse|synthetic|adversary)");
}

inline const char* to_string(SourceKind k) {
  switch (k) {
    case SourceKind::Csv: return "csv";
    case SourceKind::Sparse: return "sparse";
    case SourceKind::Synthetic: return "synthetic";
    case SourceKind::Adversary: return "adversary";
  }
  return "unknown";
}

struct AdversarySpec {
  std::size_t d = 2;
  std::size_t T = 8;
  double beta = 3.0;
};

struct SourceSpec {
  SourceKind kind = SourceKind::Synthetic;
  std::string path;
  StreamSpec stream;
  AdversarySpec adversary;
};

struct InvarianceSpec {
  TransformSpec transform;
  std::size_t repetitions = 1;
};

struct ExperimentConfig {
  LearnerSpec learner;
  LossKind loss = LossKind::Logistic;
  SourceSpec source;
  std::uint64_t seed = 0;
  /// Output files are <prefix>.trials.csv and <prefix>.summary.json.
  std::string output_prefix;
  ComparatorSpec comparators;
  std::optional<InvarianceSpec> invariance;
  /// Adds wall-clock timing to the summary (makes outputs run-dependent).
  bool timing = false;
};

struct RunReport {
  std::string trials_csv;
  nlohmann::ordered_json summary;
  RunResult run;
  std::vector<Certificate> certificates;
  std::optional<AdversaryTrace> adversary;
};

inline std::string trials_csv(const RunResult& run) {
  std::string out = "t,yhat,y,g,loss,cumulative_loss,potential,gamma_or_psi_max,lemma_margin,overflow\n";
  double cumulative = 0.0;
  for (std::size_t t = 0; t < run.log.size(); ++t) {
    const Trial& tr = run.log.trials[t];
    const TrialDiagnostics diag = t < run.diagnostics.size() ? run.diagnostics[t] : TrialDiagnostics{};
    cumulative += tr.loss;
    out += std::to_string(t + 1);
    for (double v : {tr.yhat, tr.y, tr.g, tr.loss, cumulative, diag.potential, diag.gamma_or_psi_max, diag.lemma_margin}) {
      out += ',';
      out += format_double(v);
    }
    out += diag.overflow ? ",1\n" : ",0\n";
  }
  return out;
}

namespace detail {

inline nlohmann::ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace detail

/// Loads or generates the data of a non-adversary source. Returns the
/// examples and the loss to use (synthetic g-streams force a linear loss).
inline std::pair<std::vector<Example>, Loss> load_source(const ExperimentConfig& config) {
  const auto config_loss = [&]() -> Loss {
    switch (config.loss) {
      case LossKind::Logistic: return Loss::logistic();
      case LossKind::Hinge: return Loss::hinge();
      case LossKind::Linear: throw ParameterError("linear loss needs a synthetic signs/uniform source");
    }
    return Loss::logistic();
  };
  switch (config.source.kind) {
    case SourceKind::Csv: return {load_csv(config.source.path), config_loss()};
    case SourceKind::Sparse: return {load_sparse(config.source.path), config_loss()};
    case SourceKind::Synthetic: {
      StreamSpec spec = config.source.stream;
      spec.seed = config.seed;
      SyntheticStream s = random_stream(spec);
      if (spec.g_mode == GMode::FromLoss) return {std::move(s.examples), config_loss()};
      return {std::move(s.examples), std::move(s.loss)};
    }
    case SourceKind::Adversary: break;
  }
  throw ParameterError("adversary sources are generated against the learner");
}

inline void validate(const ExperimentConfig& config) {
  if (config.learner.kind == LearnerKind::Coordwise || config.learner.kind == LearnerKind::FullInv) {
    check_alpha(config.learner.alpha);
  }
  if (config.learner.kind == LearnerKind::Ogd && !(config.learner.ogd_rate > 0.0)) {
    throw ParameterError("OGD rate constant must be > 0");
  }
  if ((config.source.kind == SourceKind::Csv || config.source.kind == SourceKind::Sparse) && config.source.path.empty()) {
    throw ParameterError("file source needs a path");
  }
}

/// Executes the configured run and builds the report. Files are written
/// only when output_prefix is non-empty.
inline RunReport run_experiment(const ExperimentConfig& config) {
  validate(config);
  RunReport report;
  nlohmann::ordered_json& js = report.summary;
  js["learner"] = {{"kind", to_string(config.learner.kind)},
                   {"alpha", config.learner.alpha},
                   {"ogd_rate", config.learner.ogd_rate}};
  js["seed"] = config.seed;
  js["source"] = to_string(config.source.kind);

  const auto start = std::chrono::steady_clock::now();
  std::vector<Comparator> comparators;
  if (config.source.kind == SourceKind::Adversary) {
    const AdversarySpec& adv = config.source.adversary;
    AnyLearner learner = make_learner(config.learner, adv.d);
    AdversaryTrace trace = std::visit(
        [&](auto& l) { return lower_bound_sequence(l, adv.T, adv.beta, adv.d, config.seed); }, learner);
    report.run.log = trace.log;
    report.run.kind = config.learner.kind;
    report.run.alpha = config.learner.alpha;
    if (auto* fi = std::get_if<FullInvLearner>(&learner)) report.run.gamma = fi->gamma();
    report.run.diagnostics.resize(trace.size());
    comparators = make_comparators(report.run.log, config.comparators, config.seed);
    comparators.push_back({"adversary", trace.comparator});
    double worst_cert = 0.0;
    for (std::size_t t = 0; t < trace.size(); ++t) {
      worst_cert = std::max(worst_cert, std::abs(trace.certified[t] - 0.5 * static_cast<double>(t + 1)));
    }
    const double adversary_regret = regret(trace.log, trace.comparator).true_regret;
    const double target = adv.beta * std::sqrt(0.5 * static_cast<double>(adv.T));
    js["adversary"] = {{"d", adv.d},
                       {"T", adv.T},
                       {"beta", adv.beta},
                       {"comparator_norm", trace.comparator_norm},
                       {"max_certified_deviation", worst_cert},
                       {"regret", adversary_regret},
                       {"lower_bound", target},
                       {"lower_bound_margin", adversary_regret - target}};
    report.adversary = std::move(trace);
  } else {
    auto [data, loss] = load_source(config);
    const std::size_t d = data.empty() ? std::max<std::size_t>(config.source.stream.d, 1) : static_cast<std::size_t>(data.front().x.size());
    report.run = run_learner(config.learner, data, loss, d);
    comparators = make_comparators(report.run.log, config.comparators, config.seed);

    if (config.invariance) {
      const LearnerSpec spec = config.learner;
      nlohmann::ordered_json inv = nlohmann::ordered_json::array();
      for (std::size_t rep = 0; rep < config.invariance->repetitions; ++rep) {
        const InvarianceResult r = invariance_check([&] { return make_learner(spec, d); }, data, loss,
                                                    config.invariance->transform, config.seed + 1000003ULL * (rep + 1));
        inv.push_back({{"transform", to_string(config.invariance->transform.kind)},
                       {"condition_number", detail::json_number(r.condition_number)},
                       {"max_rel_deviation", detail::json_number(r.max_rel_deviation)}});
      }
      js["invariance"] = std::move(inv);
    }
  }
  const auto elapsed = std::chrono::steady_clock::now() - start;

  const RunResult& run = report.run;
  report.certificates = certify(run, comparators);
  report.trials_csv = trials_csv(run);

  js["loss"] = to_string(run.log.loss.kind());
  js["T"] = run.log.size();
  js["d"] = run.log.dim;
  js["total_loss"] = total_loss(run.log);
  js["overflow_trials"] = run.overflow_trials();
  if (run.kind == LearnerKind::FullInv) js["gamma"] = run.gamma;
  if (run.kind == LearnerKind::Coordwise) js["kappa"] = kappa(run.alpha);
  const double min_margin = run.min_lemma_margin();
  js["min_lemma_margin"] = detail::json_number(min_margin);

  nlohmann::ordered_json certs = nlohmann::ordered_json::array();
  double min_cert_margin = std::numeric_limits<double>::infinity();
  for (const Certificate& c : report.certificates) {
    certs.push_back({{"comparator", c.comparator},
                     {"norm_S", detail::json_number(c.norm_S)},
                     {"regret", detail::json_number(c.true_regret)},
                     {"linearized_regret", detail::json_number(c.linearized_regret)},
                     {"bound", detail::json_number(c.bound)},
                     {"margin", detail::json_number(c.margin)}});
    if (!std::isnan(c.margin)) min_cert_margin = std::min(min_cert_margin, c.margin);
  }
  js["certificates"] = std::move(certs);
  js["min_certificate_margin"] = detail::json_number(min_cert_margin);
  if (config.timing) {
    const double ns = std::chrono::duration<double, std::nano>(elapsed).count();
    js["wall_time_per_trial_ns"] = run.log.size() ? ns / static_cast<double>(run.log.size()) : 0.0;
  }

  if (!config.output_prefix.empty()) {
    write_text_file(config.output_prefix + ".trials.csv", report.trials_csv);
    write_text_file(config.output_prefix + ".summary.json", js.dump(2) + "\n");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Lemma sweeps

struct LemmaSweepSpec {
  std::size_t runs = 100;
  std::size_t d = 5;
  std::size_t T = 200;
  double scale_min = 1e-3;
  double scale_max = 1e3;
  ScaleMode scale_mode = ScaleMode::PerFeature;
  double alpha = 1.5;
  std::uint64_t seed = 0;
};

struct LemmaSweepRun {
  std::uint64_t seed = 0;
  std::size_t rank = 0;
  GMode g_mode = GMode::FromLoss;
  double min_margin = 0.0;
  double min_certificate_margin = 0.0;
  std::size_t overflow_trials = 0;
};

/// Stream of run r of a sweep.
inline StreamSpec lemma_sweep_stream(LearnerKind kind, const LemmaSweepSpec& spec, std::size_t r) {
  StreamSpec stream;
  stream.d = spec.d;
  stream.T = spec.T;
  stream.scale_min = spec.scale_min;
  stream.scale_max = spec.scale_max;
  stream.scale_mode = spec.scale_mode;
  stream.seed = spec.seed + r;
  stream.g_mode = r % 3 == 0 ? GMode::FromLoss : (r % 3 == 1 ? GMode::Signs : GMode::Uniform);
  if (kind == LearnerKind::FullInv && r % 2 == 1) stream.rank = std::max<std::size_t>(1, spec.d / 2);
  return stream;
}

/// Seeded runs cycling through logistic, sign and uniform g streams. For
/// fullinv every other run is confined to a subspace of rank d / 2.
inline std::vector<LemmaSweepRun> lemma_sweep(LearnerKind kind, const LemmaSweepSpec& spec) {
  std::vector<LemmaSweepRun> out;
  out.reserve(spec.runs);
  for (std::size_t r = 0; r < spec.runs; ++r) {
    const StreamSpec stream = lemma_sweep_stream(kind, spec, r);
    SyntheticStream s = random_stream(stream);
    const RunResult run = run_learner(LearnerSpec{kind, spec.alpha, 1.0}, s.examples, s.loss, spec.d);
    const auto certs = certify(run, make_comparators(run.log, ComparatorSpec{}, stream.seed));
    double cert_margin = std::numeric_limits<double>::infinity();
    for (const auto& c : certs) cert_margin = std::min(cert_margin, c.margin);
    out.push_back({stream.seed, stream.rank, stream.g_mode, run.min_lemma_margin(), cert_margin, run.overflow_trials()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON configuration

/// Reads an ExperimentConfig from JSON. Unspecified fields keep defaults.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("learner")) {
      const auto& l = j.at("learner");
      if (l.is_string()) {
        c.learner.kind = parse_learner_kind(l.get<std::string>());
      } else {
        c.learner.kind = parse_learner_kind(l.value("kind", std::string("coordwise")));
        c.learner.alpha = l.value("alpha", c.learner.alpha);
        c.learner.ogd_rate = l.value("ogd_rate", c.learner.ogd_rate);
      }
    }
    if (j.contains("loss")) c.loss = parse_loss_kind(j.at("loss").get<std::string>());
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output")) c.output_prefix = j.at("output").get<std::string>();
    c.timing = j.value("timing", false);
    if (j.contains("source")) {
      const auto& s = j.at("source");
      c.source.kind = parse_source_kind(s.value("kind", std::string("synthetic")));
      c.source.path = s.value("path", std::string());
      StreamSpec& st = c.source.stream;
      st.d = s.value("d", st.d);
      st.T = s.value("T", st.T);
      st.scale_min = s.value("scale_min", st.scale_min);
      st.scale_max = s.value("scale_max", st.scale_max);
      st.rank = s.value("rank", st.rank);
      st.flip_probability = s.value("flip_probability", st.flip_probability);
      if (s.contains("scale_mode")) st.scale_mode = parse_scale_mode(s.at("scale_mode").get<std::string>());
      if (s.contains("g_mode")) st.g_mode = parse_g_mode(s.at("g_mode").get<std::string>());
      AdversarySpec& adv = c.source.adversary;
      adv.d = s.value("d", adv.d);
      adv.T = s.value("T", adv.T);
      adv.beta = s.value("beta", adv.beta);
    }
    if (j.contains("comparators")) {
      const auto& cs = j.at("comparators");
      c.comparators.random_per_scale = cs.value("random_per_scale", c.comparators.random_per_scale);
      c.comparators.minimizer = cs.value("minimizer", c.comparators.minimizer);
      if (cs.contains("scales")) c.comparators.scales = cs.at("scales").get<std::vector<double>>();
    }
    if (j.contains("invariance")) {
      const auto& iv = j.at("invariance");
      InvarianceSpec spec;
      spec.transform.kind = parse_transform_kind(iv.value("transform", std::string("diagonal")));
      spec.transform.cond_cap = iv.value("cond_cap", spec.transform.cond_cap);
      spec.transform.diagonal_range = iv.value("diagonal_range", spec.transform.diagonal_range);
      spec.repetitions = iv.value("repetitions", spec.repetitions);
      c.invariance = spec;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  return c;
}

}  // namespace scaleinv
