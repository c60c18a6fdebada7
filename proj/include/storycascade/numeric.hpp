#pragma once

// Dense vector helpers shared by the similarity signals. All take Eigen
// expressions, so callers can pass blocks, maps or temporaries directly.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace storycascade {

/// dot(u,v) / (|u| |v|), clamped to [-1, 1]. Zero vectors give 0.
/// Throws std::invalid_argument on non-finite entries or a size mismatch.
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar cosine(const Eigen::MatrixBase<DerivedU>& u,
                                 const Eigen::MatrixBase<DerivedV>& v) {
  using Scalar = typename DerivedU::Scalar;
  if (u.size() != v.size()) throw std::invalid_argument("cosine: size mismatch");
  if (!u.allFinite() || !v.allFinite()) throw std::invalid_argument("cosine: non-finite input");
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) return Scalar(0);
  const Scalar c = u.dot(v) / (nu * nv);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

/// Pearson correlation. Returns 0 when either input has zero variance.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar pearson(const Eigen::MatrixBase<DerivedX>& x,
                                  const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != y.size()) throw std::invalid_argument("pearson: size mismatch");
  if (x.size() < 2) return Scalar(0);
  // Test constancy directly: the mean of equal values need not equal them.
  if (x.maxCoeff() == x.minCoeff() || y.maxCoeff() == y.minCoeff()) return Scalar(0);
  const auto xc = (x.array() - x.mean()).matrix().eval();
  const auto yc = (y.array() - y.mean()).matrix().eval();
  const Scalar sxx = xc.squaredNorm();
  const Scalar syy = yc.squaredNorm();
  if (sxx == Scalar(0) || syy == Scalar(0)) return Scalar(0);
  const Scalar r = xc.dot(yc) / std::sqrt(sxx * syy);
  return std::clamp(r, Scalar(-1), Scalar(1));
}

/// Resamples a sequence onto N equally spaced points over [0, 1] by linear
/// interpolation, with sample i sitting at i / (m - 1). One sample gives a
/// constant curve; no samples give zeros.
template <int N, typename Derived>
Eigen::Matrix<typename Derived::Scalar, N, 1> resample_linear(
    const Eigen::MatrixBase<Derived>& samples) {
  static_assert(N >= 2);
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, N, 1> out;
  const Eigen::Index m = samples.size();
  if (m == 0) return out.setZero();
  if (m == 1) return out.setConstant(samples(0));
  for (int j = 0; j < N; ++j) {
    // Position of output point j in sample-index units.
    const Scalar t = Scalar(j) * Scalar(m - 1) / Scalar(N - 1);
    const auto lo = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(t)), m - 2);
    const Scalar frac = t - Scalar(lo);
    // Convex form, so knots (frac 0 or 1) reproduce their samples exactly.
    out(j) = (Scalar(1) - frac) * samples(lo) + frac * samples(lo + 1);
  }
  return out;
}

}  // namespace storycascade
