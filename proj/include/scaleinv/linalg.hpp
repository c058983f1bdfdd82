#pragma once

// Incremental Moore-Penrose pseudoinverse of a growing Gram matrix
// S = sum x x^T, plus the dense spectral oracle used to check it.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "scaleinv/core.hpp"
#include "scaleinv/error.hpp"

namespace scaleinv {

/// Threshold on the diagonally equilibrated ratio |D^{-1} x_perp|^2 / |D^{-1} x|^2
/// below which x is treated as lying in range(S).
inline constexpr double kRangeTolerance = 1e-10;

/// Relative eigenvalue cutoff of the oracle, scaled by lambda_max * d.
inline constexpr double kOracleEigenCutoff = 1e-12;

/// S and P = S^dagger kept side by side, with an orthonormal basis of range(S).
struct PsdPair {
  Matrix S;
  Matrix P;
  /// First `rank` columns span range(S) orthonormally.
  Matrix Q;
  /// rank(S). Once it reaches d every x is in range.
  Eigen::Index rank = 0;

  static PsdPair zero(Eigen::Index d) { return {Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d), 0}; }
  Eigen::Index dim() const { return S.rows(); }
};

enum class RangeCase { InRange, OutOfRange };

struct RankOneUpdateInfo {
  RangeCase branch = RangeCase::InRange;
  /// |D^{-1} x_perp|^2 / |D^{-1} x|^2 with D^2 = diag(S + x x^T); 0 for x = 0
  /// or full-rank S.
  double perp_ratio = 0.0;
  /// perp_ratio within a factor 10 above the threshold, where the branch
  /// choice is numerically ambiguous.
  bool ambiguous = false;
};

/// In-place rank-one pseudoinverse update with preallocated scratch, O(d^2).
///
/// x_perp = (I - S P) x is formed as x - Q Q^T x against the stored range
/// basis (two passes), so its accuracy does not depend on the conditioning
/// of S.
class PinvUpdater {
 public:
  PinvUpdater() = default;
  explicit PinvUpdater(Eigen::Index d, double tau = kRangeTolerance)
      : tau_(tau), px_(d), perp_(d), coef_(d) {}

  double tolerance() const noexcept { return tau_; }

  /// (S, P) <- (S + x x^T, (S + x x^T)^dagger).
  RankOneUpdateInfo update(PsdPair& pair, const Vector& x) {
    const Eigen::Index d = pair.dim();
    if (x.size() != d) throw DimensionError("pinv_rank_one_update: dimension mismatch");
    if (px_.size() != d) {
      px_.resize(d);
      perp_.resize(d);
      coef_.resize(d);
    }
    RankOneUpdateInfo info;
    if (x.squaredNorm() == 0.0) return info;

    px_.noalias() = pair.P * x;
    const double beta = 1.0 + x.dot(px_);
    const bool full_rank = pair.rank >= d;
    if (!full_rank) {
      perp_ = x;
      const auto basis = pair.Q.leftCols(pair.rank);
      for (int pass = 0; pass < 2; ++pass) {
        coef_.head(pair.rank).noalias() = basis.transpose() * perp_;
        perp_.noalias() -= basis * coef_.head(pair.rank);
      }
      info.perp_ratio = equilibrated_ratio(pair.S, x);
      info.ambiguous = info.perp_ratio > tau_ && info.perp_ratio <= 10.0 * tau_;
    }

    if (full_rank || info.perp_ratio <= tau_) {
      info.branch = RangeCase::InRange;
      pair.P.noalias() -= (px_ / beta) * px_.transpose();
    } else {
      info.branch = RangeCase::OutOfRange;
      const Vector& xp = perp_;
      const double perp2 = xp.squaredNorm();
      pair.P.noalias() -= (px_ / perp2) * xp.transpose();
      pair.P.noalias() -= (xp / perp2) * px_.transpose();
      pair.P.noalias() += (xp * (beta / (perp2 * perp2))) * xp.transpose();
      pair.Q.col(pair.rank) = xp / std::sqrt(perp2);
      ++pair.rank;
    }
    pair.S.noalias() += x * x.transpose();
    symmetrize(pair.P);
    return info;
  }

  /// |D^{-1} x_perp|^2 / |D^{-1} x|^2 with D = diag(S + x x^T)^{1/2}. Weighting
  /// by D keeps small-scale coordinates from being swamped by large ones.
  double equilibrated_ratio(const Matrix& S, const Vector& x) const {
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double d2 = S(i, i) + x(i) * x(i);
      if (!(d2 > 0.0)) continue;
      num += perp_(i) * perp_(i) / d2;
      den += x(i) * x(i) / d2;
    }
    return den > 0.0 ? num / den : 0.0;
  }

  static void symmetrize(Matrix& m) {
    const Eigen::Index d = m.rows();
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index i = j + 1; i < d; ++i) {
        const double avg = 0.5 * (m(i, j) + m(j, i));
        m(i, j) = avg;
        m(j, i) = avg;
      }
    }
  }

 private:
  double tau_ = kRangeTolerance;
  Vector px_;
  Vector perp_;
  Vector coef_;
};

inline PsdPair pinv_rank_one_update(PsdPair pair, const Vector& x, RankOneUpdateInfo* info = nullptr) {
  PinvUpdater updater(pair.dim());
  const RankOneUpdateInfo i = updater.update(pair, x);
  if (info) *info = i;
  return pair;
}

inline void check_symmetric(const Matrix& m, const char* who) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(who) + ": matrix is not square");
  const double scale = std::max(m.norm(), std::numeric_limits<double>::min());
  if ((m - m.transpose()).norm() > 1e-10 * scale) {
    throw ParameterError(std::string(who) + ": matrix is not symmetric");
  }
}

/// Spectral facts about a symmetric PSD matrix under the oracle cutoff.
struct SpectralInfo {
  Eigen::Index rank = 0;
  double smallest_nonzero = 0.0;  // 0 when rank == 0
  double largest = 0.0;
};

template <class Scalar = double>
struct OracleResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pinv;
  SpectralInfo spectrum;
};

/// Pseudoinverse through a symmetric eigendecomposition. Eigenvalues at or
/// below lambda_max * d * 1e-12 are treated as zero unless `known_rank` is
/// given, in which case exactly the largest known_rank eigenvalues are kept.
/// Scalar selects the working precision (double, long double).
template <class Scalar = double>
OracleResult<Scalar> pinv_oracle_full(const Matrix& S, std::optional<Eigen::Index> known_rank = std::nullopt) {
  check_symmetric(S, "pinv_oracle");
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index d = S.rows();
  OracleResult<Scalar> out;
  out.pinv = M::Zero(d, d);
  if (d == 0) return out;
  const M sym = (S.template cast<Scalar>() + S.transpose().template cast<Scalar>()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<M> eig(sym);
  const auto& lambda = eig.eigenvalues();
  const Scalar lmax = lambda.cwiseAbs().maxCoeff();
  const Scalar cutoff = lmax * Scalar(d) * Scalar(kOracleEigenCutoff);
  out.spectrum.largest = static_cast<double>(lmax);
  if (known_rank && (*known_rank < 0 || *known_rank > d)) throw ParameterError("pinv_oracle: rank out of range");
  for (Eigen::Index k = 0; k < d; ++k) {
    const bool keep = known_rank ? k >= d - *known_rank : lambda(k) > cutoff;
    if (keep && lambda(k) > Scalar(0)) {
      const auto v = eig.eigenvectors().col(k);
      out.pinv.noalias() += (v / lambda(k)) * v.transpose();
      if (out.spectrum.rank == 0 || static_cast<double>(lambda(k)) < out.spectrum.smallest_nonzero) {
        out.spectrum.smallest_nonzero = static_cast<double>(lambda(k));
      }
      ++out.spectrum.rank;
    }
  }
  return out;
}

inline Matrix pinv_oracle(const Matrix& S) { return pinv_oracle_full<double>(S).pinv; }

inline SpectralInfo spectrum(const Matrix& S) { return pinv_oracle_full<double>(S).spectrum; }

/// True iff |S P v - v| <= tol * max(|v|, floor).
inline bool in_range(const PsdPair& pair, const Vector& v, double tol,
                     double floor = std::numeric_limits<double>::min()) {
  if (v.size() != pair.dim()) throw DimensionError("in_range: dimension mismatch");
  const Vector proj = pair.S * (pair.P * v);
  return (proj - v).norm() <= tol * std::max(v.norm(), floor);
}

/// Clamp tiny negative roundoff of a PSD quadratic form to 0.
inline double clamp_psd_quad(double q, double matrix_norm, double v_norm2) {
  return (q < 0.0 && q > -1e-12 * matrix_norm * v_norm2) ? 0.0 : q;
}

/// v^T M v. Only the symmetric part of M contributes; small negative
/// roundoff on PSD matrices is clamped to 0.
inline double quad_form(const Matrix& M, const Vector& v) {
  if (M.rows() != v.size() || M.cols() != v.size()) throw DimensionError("quad_form: dimension mismatch");
  const double q = v.dot(M * v);
  return clamp_psd_quad(q, M.norm(), v.squaredNorm());
}

/// Frobenius residuals of the four Moore-Penrose conditions for (S, P).
struct MoorePenroseResiduals {
  double psp = 0.0;   // |P S P - P|
  double sps = 0.0;   // |S P S - S|
  double sp_sym = 0.0;  // |(S P)^T - S P|
  double ps_sym = 0.0;  // |(P S)^T - P S|

  double max() const { return std::max({psp, sps, sp_sym, ps_sym}); }
};

inline MoorePenroseResiduals moore_penrose_residuals(const Matrix& S, const Matrix& P) {
  const Matrix sp = S * P;
  const Matrix ps = P * S;
  MoorePenroseResiduals r;
  r.psp = (P * sp - P).norm();
  r.sps = (sp * S - S).norm();
  r.sp_sym = (sp.transpose() - sp).norm();
  r.ps_sym = (ps.transpose() - ps).norm();
  return r;
}

/// Residuals divided by the Frobenius norms of the products they are formed
/// from (|P|^2 |S|, |S|^2 |P|, |S| |P|), i.e. in units of the rounding those
/// products carry. Zero matrices give zero residuals.
inline MoorePenroseResiduals relative_moore_penrose_residuals(const Matrix& S, const Matrix& P) {
  MoorePenroseResiduals r = moore_penrose_residuals(S, P);
  const double ns = S.norm();
  const double np = P.norm();
  const auto scaled = [](double v, double denom) { return denom > 0.0 ? v / denom : v; };
  r.psp = scaled(r.psp, np * np * ns);
  r.sps = scaled(r.sps, ns * ns * np);
  r.sp_sym = scaled(r.sp_sym, ns * np);
  r.ps_sym = scaled(r.ps_sym, ns * np);
  return r;
}

}  // namespace scaleinv
