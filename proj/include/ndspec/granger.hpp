#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ndspec/driver.hpp"
#include "ndspec/halfplane.hpp"
#include "ndspec/harmonic.hpp"
#include "ndspec/matrix_function.hpp"
#include "ndspec/scalar.hpp"

namespace ndspec {

// Directional influence of the second channel on the first, computed from
// one-step (or L-step) prediction error scales: sigma uses only the first
// channel's own past, Sigma uses the joint past; value = ln(sigma / Sigma).
struct CausalityResult {
  double value = 0.0;
  double sigma = 0.0;   // own-past prediction error scale
  double Sigma = 0.0;   // joint-past prediction error scale
  int horizon_l = 0;
  int horizon_m = 0;            // second-axis horizon (two-variable case)
  std::vector<int> box;         // [k1, k2] summation box (two-variable case)
  double boundary_ratio = 0.0;  // largest boundary term / sum
  bool truncation_warning = false;
};

namespace detail {

inline double CoefNorm2(const Coefficients& c, const MultiIndex& k) {
  for (std::size_t i = 0; i < k.size(); ++i)
    if (!c.grid->Representable(static_cast<int>(i), k[i])) return 0.0;
  return std::norm(c.At(k));
}

}  // namespace detail

// Single-variable causality at horizon L >= 1. Both prediction scales come
// from analytic factor coefficients: the own-past scale from the scalar outer
// factor of S_11, the joint-past scale from the first row of the matrix
// factor. order == 0 picks a saturating default.
inline CausalityResult Granger1d(const MatrixFunction& s, int L,
                                 int order = 0) {
  if (s.rows != 2 || s.cols != 2)
    throw std::invalid_argument("Granger1d: spectrum must be 2x2");
  if (s.grid->dims() != 1)
    throw std::invalid_argument("Granger1d: spectrum must be single-variable");
  if (L < 1) throw std::invalid_argument("Granger1d: horizon must be >= 1");

  const int work = std::max(s.grid->size(0), 256);
  if (L - 1 > work / 2)
    throw std::invalid_argument("Granger1d: horizon exceeds the grid range");
  MatrixFunction sw = ResampleMatrix(s, {work});
  Hermitize(sw);
  if (order <= 0) order = std::clamp(work / 8, 8, 64);

  ScalarFactorization own = OuterFactor1d(sw.EntryCopy(0, 0));
  Coefficients cf = CoefficientsOf(own.fplus);

  FactorOptions opt;
  opt.orders = {order};
  opt.work_sizes = {work};
  FactorResult fac = FullFactor(sw, opt);
  Coefficients c11 = CoefficientsOf(fac.splus.EntryCopy(0, 0));
  Coefficients c12 = CoefficientsOf(fac.splus.EntryCopy(0, 1));

  double s2 = 0.0, S2 = 0.0;
  for (int k = 0; k < L; ++k) {
    s2 += detail::CoefNorm2(cf, {k});
    S2 += detail::CoefNorm2(c11, {k}) + detail::CoefNorm2(c12, {k});
  }
  CausalityResult out;
  out.horizon_l = L;
  out.sigma = std::sqrt(s2);
  out.Sigma = std::sqrt(S2);
  out.value = S2 > 0.0 ? 0.5 * std::log(s2 / S2)
                       : std::numeric_limits<double>::infinity();
  return out;
}

// Two-variable causality at horizon (L, M) with respect to the half-space
// past. The prediction-error sums run over the index set
//   { k in H : (L,M) - k in H \ {0} }
// which is infinite along the half-space boundary; it is truncated to the
// box [0,K1] x [-K2,K2]. K1, K2 == 0 derive the box from the numerically
// significant coefficient support, and the largest included boundary term is
// reported so silent truncation loss is visible.
inline CausalityResult Granger2d(const MatrixFunction& s, int L, int M,
                                 int K1 = 0, int K2 = 0, int order = 0) {
  if (s.rows != 2 || s.cols != 2)
    throw std::invalid_argument("Granger2d: spectrum must be 2x2");
  if (s.grid->dims() != 2)
    throw std::invalid_argument("Granger2d: spectrum must be two-variable");

  std::vector<int> work = {std::max(s.grid->size(0), 128),
                           std::max(s.grid->size(1), 128)};
  MatrixFunction sw = ResampleMatrix(s, work);
  Hermitize(sw);
  if (order <= 0) order = 24;

  ScalarFactorization own = OuterFactorFull(sw.EntryCopy(0, 0));
  Coefficients cf = CoefficientsOf(own.fplus);

  FactorOptions opt;
  opt.orders = {order, order};
  opt.work_sizes = work;
  FactorResult fac = FullFactor(sw, opt);
  Coefficients c11 = CoefficientsOf(fac.splus.EntryCopy(0, 0));
  Coefficients c12 = CoefficientsOf(fac.splus.EntryCopy(0, 1));

  if (K1 <= 0 || K2 <= 0) {
    auto scan = [&](const Coefficients& c, int& k1, int& k2) {
      double cmax = 0.0;
      for (const auto& z : c.c) cmax = std::max(cmax, std::abs(z));
      const double tol = 1e-14 * (cmax > 0.0 ? cmax : 1.0);
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (std::abs(c.c[i]) < tol) continue;
        MultiIndex k = c.grid->FreqOfFlat(i);
        k1 = std::max(k1, k[0]);
        k2 = std::max(k2, std::abs(k[1]));
      }
    };
    int k1 = 0, k2 = 0;
    scan(cf, k1, k2);
    scan(c11, k1, k2);
    scan(c12, k1, k2);
    if (K1 <= 0) K1 = k1;
    if (K2 <= 0) K2 = k2;
  }
  K1 = std::clamp(K1, 1, work[0] / 2 - 1);
  K2 = std::clamp(K2, 1, work[1] / 2 - 1);

  double s2 = 0.0, S2 = 0.0, s2_edge = 0.0, S2_edge = 0.0;
  for (int k = 0; k <= K1; ++k)
    for (int l = -K2; l <= K2; ++l) {
      const MultiIndex idx = {k, l};
      if (!HalfplaneContains(idx)) continue;
      const MultiIndex rem = {L - k, M - l};
      if (!HalfplaneContains(rem)) continue;
      if (rem[0] == 0 && rem[1] == 0) continue;
      const double ts = detail::CoefNorm2(cf, idx);
      const double tS =
          detail::CoefNorm2(c11, idx) + detail::CoefNorm2(c12, idx);
      s2 += ts;
      S2 += tS;
      if (k == K1 || std::abs(l) == K2) {
        s2_edge = std::max(s2_edge, ts);
        S2_edge = std::max(S2_edge, tS);
      }
    }

  CausalityResult out;
  out.horizon_l = L;
  out.horizon_m = M;
  out.box = {K1, K2};
  out.sigma = std::sqrt(s2);
  out.Sigma = std::sqrt(S2);
  out.value = S2 > 0.0 ? 0.5 * std::log(s2 / S2)
                       : std::numeric_limits<double>::infinity();
  double ratio = 0.0;
  if (s2 > 0.0) ratio = std::max(ratio, s2_edge / s2);
  if (S2 > 0.0) ratio = std::max(ratio, S2_edge / S2);
  out.boundary_ratio = ratio;
  out.truncation_warning = ratio > 1e-10;
  return out;
}

}  // namespace ndspec
