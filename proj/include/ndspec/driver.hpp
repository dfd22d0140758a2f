#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ndspec/errors.hpp"
#include "ndspec/harmonic.hpp"
#include "ndspec/jl_step.hpp"
#include "ndspec/matrix_function.hpp"
#include "ndspec/parallel.hpp"

namespace ndspec {

struct FactorOptions {
  std::vector<int> orders;      // per-axis completion order, required
  std::vector<int> work_sizes;  // per-axis internal grid; 0 or empty = auto
  std::vector<int> axis_order;  // axis permutation; empty = natural order
};

struct FactorizationReport {
  double residual = 0.0;       // max pointwise Frobenius of S - S+ S+^*
  double residual_rel = 0.0;   // residual / max pointwise Frobenius of S
  double mask_energy = 0.0;    // coefficient energy outside the half-space
  double outer_gap = 0.0;      // | mean log|det S+| - log|det S+(origin)| |
  double logdet_gap = 0.0;     // | mean log det S - 2 mean log|det S+| |
  double det_drift = 0.0;      // max stage determinant preservation error
  double unitarity_dev = 0.0;  // max completion unitarity deviation
  double det_dev = 0.0;        // max |det U - 1| over completions
  double gram_dev = 0.0;       // max column-Gram constancy deviation
  double hat_unitarity = 0.0;  // max deviation of the stage corrections
  double min_f0_ratio = 1.0;
  int flagged_slices = 0;
  int kernel_fallbacks = 0;
  std::vector<int> stage_orders;
  std::vector<int> work_sizes;
  std::vector<int> io_sizes;
  std::vector<int> axis_order;
  std::vector<double> stage_ms;
  double total_ms = 0.0;
};

struct FactorResult {
  MatrixFunction splus;
  FactorizationReport report;
};

struct VerifyReport {
  double residual = 0.0;
  double residual_rel = 0.0;
  double mask_energy = 0.0;
  double outer_gap = 0.0;
  double logdet_gap = 0.0;
};

inline std::vector<int> InversePermutation(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
  return inv;
}

inline GridFunction PermuteAxes(const GridFunction& f,
                                const std::vector<int>& perm) {
  const int nd = f.grid->dims();
  std::vector<int> sizes(nd);
  for (int i = 0; i < nd; ++i) sizes[i] = f.grid->size(perm[i]);
  GridFunction out(MakeGrid(sizes));
  ParallelForRange(out.grid->total(), [&](std::size_t lo, std::size_t hi) {
    std::vector<int> nc(nd), oc(nd);
    for (std::size_t g = lo; g < hi; ++g) {
      out.grid->Coords(g, nc);
      for (int i = 0; i < nd; ++i) oc[perm[i]] = nc[i];
      out.v[g] = f.v[f.grid->FlatIndex(oc)];
    }
  });
  return out;
}

inline MatrixFunction PermuteMatrixAxes(const MatrixFunction& s,
                                        const std::vector<int>& perm) {
  MatrixFunction out;
  bool first = true;
  for (int i = 0; i < s.rows; ++i)
    for (int j = 0; j < s.cols; ++j) {
      GridFunction e = PermuteAxes(s.EntryCopy(i, j), perm);
      if (first) {
        out = MatrixFunction(s.rows, s.cols, e.grid);
        first = false;
      }
      out.SetEntry(i, j, e);
    }
  return out;
}

// Mean over the first lead_axes axes; the result lives on the trailing grid.
inline MatrixFunction HatAtOrigin(const MatrixFunction& s, int lead_axes) {
  const int nd = s.grid->dims();
  if (lead_axes < 1 || lead_axes >= nd)
    throw std::invalid_argument("HatAtOrigin: lead_axes out of range");
  std::vector<int> tail_sizes;
  std::size_t lead = 1;
  for (int i = 0; i < lead_axes; ++i) lead *= s.grid->size(i);
  for (int i = lead_axes; i < nd; ++i) tail_sizes.push_back(s.grid->size(i));
  GridPtr tail = MakeGrid(tail_sizes);
  const std::size_t rest = tail->total();
  MatrixFunction out(s.rows, s.cols, tail);
  ParallelFor(static_cast<std::size_t>(s.rows) * s.cols, [&](std::size_t e) {
    const int i = static_cast<int>(e) / s.cols;
    const int j = static_cast<int>(e) % s.cols;
    const Complex* src = s.Entry(i, j);
    Complex* dst = out.Entry(i, j);
    for (std::size_t r = 0; r < rest; ++r) {
      Complex acc(0, 0);
      for (std::size_t l = 0; l < lead; ++l) acc += src[l * rest + r];
      dst[r] = acc / static_cast<double>(lead);
    }
  });
  return out;
}

struct CorrectionResult {
  MatrixFunction u;
  StageReport stage;
  double unitary_dev = 0.0;
};

// Unitary pointwise correction: factor hat * hat^* in the leading variable
// of hat's grid and left-divide by hat.
inline CorrectionResult UnitaryCorrection(const MatrixFunction& hat, int n) {
  MatrixFunction s_hat = MultiplyAdjointRight(hat);
  Hermitize(s_hat);
  CorrectionResult out;
  auto [t, rep] = FactorPlusOne(s_hat, n);
  out.stage = rep;
  MatrixFunction hat_inv = InversePointwise(hat);
  out.u = Multiply(hat_inv, t);
  // pointwise unitarity check
  MatrixFunction gram = MultiplyAdjointRight(out.u);
  const std::size_t total = gram.total();
  double dev = 0.0;
  for (int i = 0; i < gram.rows; ++i)
    for (int j = 0; j < gram.cols; ++j) {
      const Complex* e = gram.Entry(i, j);
      const double target = i == j ? 1.0 : 0.0;
      for (std::size_t g = 0; g < total; ++g)
        dev = std::max(dev, std::abs(e[g] - target));
    }
  out.unitary_dev = dev;
  return out;
}

// Right-multiplies the factor by the constant unitary that makes its origin
// value (the mean matrix) positive semidefinite. Returns the applied matrix.
inline Eigen::MatrixXcd NormalizeAtOrigin(MatrixFunction& splus) {
  Eigen::MatrixXcd b = MeanMatrix(splus);
  Eigen::MatrixXcd v =
      b.adjoint() * InverseSqrtPsd(b * b.adjoint(), "NormalizeAtOrigin");
  splus = MultiplyConstantRight(splus, v);
  return v;
}

inline MatrixFunction SfOperator(const MatrixFunction& splus) {
  return MultiplyAdjointRight(splus);
}

namespace detail {

inline int Pow2Ceil(int v) {
  int p = 1;
  while (p < v) p <<= 1;
  return p;
}

inline int AutoWorkSize(int io_size, int order, int d, int nd) {
  const int need = std::max(2 * (d - 1) * order + 2, 4 * order + 16);
  int w = Pow2Ceil(need);
  const int cap = nd >= 3 ? 64 : 512;
  w = std::min(w, cap);
  return std::max(w, io_size);
}

// S+ <- S+ * broadcast(U) where U lives on the trailing axes.
inline void BroadcastMultiplyTrailing(MatrixFunction& sp,
                                      const MatrixFunction& u) {
  const std::size_t rest = u.total();
  const std::size_t total = sp.total();
  const int d = sp.rows;
  const int m = u.cols;
  ParallelForRange(total, [&](std::size_t lo, std::size_t hi) {
    std::vector<Complex> rowbuf(m);
    for (std::size_t g = lo; g < hi; ++g) {
      const std::size_t r = g % rest;
      for (int i = 0; i < d; ++i) {
        for (int c = 0; c < m; ++c) rowbuf[c] = sp.At(i, c, g);
        for (int j = 0; j < m; ++j) {
          Complex acc(0, 0);
          for (int c = 0; c < m; ++c) acc += rowbuf[c] * u.At(c, j, r);
          sp.At(i, j, g) = acc;
        }
      }
    }
  });
}

inline double MaskEnergyOf(const MatrixFunction& f) {
  double off = 0.0, total = 0.0;
  for (int i = 0; i < f.rows; ++i)
    for (int j = 0; j < f.cols; ++j) {
      Coefficients c = CoefficientsOf(GridFunction{f.grid, std::vector<Complex>(
          f.Entry(i, j), f.Entry(i, j) + f.total())});
      const std::size_t n = c.c.size();
      for (std::size_t g = 0; g < n; ++g) {
        const double e = std::norm(c.c[g]);
        total += e;
        if (!HalfplaneContains(c.grid->FreqOfFlat(g))) off += e;
      }
    }
  return total > 0.0 ? off / total : 0.0;
}

struct DetDiagnostics {
  double outer_gap = 0.0;
  double logdet_gap = 0.0;
};

inline DetDiagnostics DetGaps(const MatrixFunction& s,
                              const MatrixFunction& splus) {
  DetDiagnostics out;
  GridFunction det_p = DeterminantPointwise(splus);
  GridFunction det_s = DeterminantPointwise(s);
  const std::size_t total = det_p.v.size();
  double mean_log_p = 0.0, mean_log_s = 0.0;
  bool finite = true;
  for (std::size_t g = 0; g < total; ++g) {
    const double ap = std::abs(det_p.v[g]);
    const double as = std::abs(det_s.v[g]);
    if (!(ap > 0.0) || !(as > 0.0)) {
      finite = false;
      break;
    }
    mean_log_p += std::log(ap);
    mean_log_s += std::log(as);
  }
  if (!finite) {
    out.outer_gap = std::numeric_limits<double>::infinity();
    out.logdet_gap = std::numeric_limits<double>::infinity();
    return out;
  }
  mean_log_p /= static_cast<double>(total);
  mean_log_s /= static_cast<double>(total);
  Eigen::MatrixXcd b = MeanMatrix(splus);
  const double origin = std::abs(b.determinant());
  out.outer_gap = origin > 0.0
                      ? std::abs(mean_log_p - std::log(origin))
                      : std::numeric_limits<double>::infinity();
  out.logdet_gap = std::abs(mean_log_s - 2.0 * mean_log_p);
  return out;
}

}  // namespace detail

// Verification diagnostics for a proposed factor on the same grid as S.
inline VerifyReport Verify(const MatrixFunction& s,
                           const MatrixFunction& splus) {
  if (s.grid->sizes() != splus.grid->sizes())
    throw std::invalid_argument("Verify: spectrum and factor grids differ");
  VerifyReport rep;
  MatrixFunction prod = SfOperator(splus);
  rep.residual = MaxPointFrobenius(s, prod);
  const double norm_s = MaxPointFrobenius(s);
  rep.residual_rel = norm_s > 0.0 ? rep.residual / norm_s : rep.residual;
  rep.mask_energy = detail::MaskEnergyOf(splus);
  auto gaps = detail::DetGaps(s, splus);
  rep.outer_gap = gaps.outer_gap;
  rep.logdet_gap = gaps.logdet_gap;
  return rep;
}

// The full multivariable factorization: refine to the work grid, run the
// first-variable pass, then for each further axis apply the unitary
// correction built from the mean over already-processed axes, normalize the
// origin value, and restrict to the input grid.
inline FactorResult FullFactor(const MatrixFunction& s,
                               const FactorOptions& opt) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  if (s.rows != s.cols)
    throw std::invalid_argument("FullFactor: matrix must be square");
  const int nd = s.grid->dims();
  if (static_cast<int>(opt.orders.size()) != nd)
    throw std::invalid_argument("FullFactor: need one order per axis");
  for (int n : opt.orders)
    if (n < 1) throw std::invalid_argument("FullFactor: orders must be >= 1");

  std::vector<int> perm(nd);
  std::iota(perm.begin(), perm.end(), 0);
  bool permuted = false;
  if (!opt.axis_order.empty()) {
    if (static_cast<int>(opt.axis_order.size()) != nd)
      throw std::invalid_argument("FullFactor: axis order length mismatch");
    std::vector<int> check = opt.axis_order;
    std::sort(check.begin(), check.end());
    for (int i = 0; i < nd; ++i)
      if (check[i] != i)
        throw std::invalid_argument("FullFactor: axis order is not a permutation");
    perm = opt.axis_order;
    permuted = true;
  }

  MatrixFunction s_in = permuted ? PermuteMatrixAxes(s, perm) : s;
  std::vector<int> orders(nd);
  for (int i = 0; i < nd; ++i) orders[i] = opt.orders[perm[i]];

  FactorizationReport rep;
  rep.stage_orders = orders;
  rep.axis_order = perm;
  rep.io_sizes = s_in.grid->sizes();

  std::vector<int> work(nd);
  for (int i = 0; i < nd; ++i) {
    int w = 0;
    if (static_cast<int>(opt.work_sizes.size()) > i) w = opt.work_sizes[perm[i]];
    if (w <= 0)
      w = detail::AutoWorkSize(s_in.grid->size(i), orders[i], s.rows, nd);
    else
      w = std::max(detail::Pow2Ceil(w), s_in.grid->size(i));
    work[i] = w;
  }
  rep.work_sizes = work;

  MatrixFunction swork = ResampleMatrix(s_in, work);
  Hermitize(swork);

  auto t_stage = clock::now();
  auto [sp, stage1] = FactorPlusOne(swork, orders[0]);
  rep.stage_ms.push_back(
      std::chrono::duration<double, std::milli>(clock::now() - t_stage).count());
  auto absorb = [&rep](const StageReport& sr) {
    rep.unitarity_dev = std::max(rep.unitarity_dev, sr.unitarity_dev);
    rep.det_dev = std::max(rep.det_dev, sr.det_dev);
    rep.gram_dev = std::max(rep.gram_dev, sr.gram_dev);
    rep.det_drift = std::max(rep.det_drift, sr.det_preservation);
    rep.min_f0_ratio = std::min(rep.min_f0_ratio, sr.min_f0_ratio);
    rep.flagged_slices += sr.flagged_slices;
    rep.kernel_fallbacks += sr.kernel_fallbacks;
  };
  absorb(stage1);

  for (int l = 2; l <= nd; ++l) {
    t_stage = clock::now();
    MatrixFunction hat = HatAtOrigin(sp, l - 1);
    CorrectionResult corr = UnitaryCorrection(hat, orders[l - 1]);
    absorb(corr.stage);
    rep.hat_unitarity = std::max(rep.hat_unitarity, corr.unitary_dev);
    detail::BroadcastMultiplyTrailing(sp, corr.u);
    rep.stage_ms.push_back(
        std::chrono::duration<double, std::milli>(clock::now() - t_stage)
            .count());
  }

  NormalizeAtOrigin(sp);

  // diagnostics on the work grid
  VerifyReport v = Verify(swork, sp);
  rep.residual = v.residual;
  rep.residual_rel = v.residual_rel;
  rep.mask_energy = v.mask_energy;
  rep.outer_gap = v.outer_gap;
  rep.logdet_gap = v.logdet_gap;

  MatrixFunction sp_io = RestrictMatrix(sp, rep.io_sizes);
  if (permuted) sp_io = PermuteMatrixAxes(sp_io, InversePermutation(perm));

  rep.total_ms =
      std::chrono::duration<double, std::milli>(clock::now() - t_start).count();
  return {std::move(sp_io), std::move(rep)};
}

}  // namespace ndspec
