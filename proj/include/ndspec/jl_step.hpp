#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ndspec/errors.hpp"
#include "ndspec/fft.hpp"
#include "ndspec/harmonic.hpp"
#include "ndspec/matrix_function.hpp"
#include "ndspec/parallel.hpp"
#include "ndspec/scalar.hpp"

namespace ndspec {

// Pointwise triangular seed factor with first-variable outer diagonal.
struct LowerTriangularFactor {
  MatrixFunction m;          // S = m * m^* at every grid point
  GridFunction det;          // product of the outer diagonal entries
  double min_diag = 0.0;     // smallest diagonal modulus squared encountered
};

// The m x m completion target: identity rows above a last row
// [zeta_1, ..., zeta_{m-1}, f].
struct RowMatrix {
  int m = 0;
  std::vector<GridFunction> zetas;
  GridFunction f;
};

// Unitary completion factor: rows 1..m-1 are first-variable polynomials of
// degree <= n, the last row holds their tilde-form counterparts; pointwise
// unitary with determinant one.
struct StructuredUnitary {
  int m = 0;
  int n = 0;
  MatrixFunction u;
  double unitarity_dev = 0.0;   // max |U U^* - I| entrywise over the grid
  double det_dev = 0.0;         // max |det U - 1| over the grid
  double gram_dev = 0.0;        // max deviation of the column Gram from const
  int kernel_fallbacks = 0;     // slices rebuilt by the 2x2 kernel method
  int flagged_slices = 0;       // slices with tiny truncated-diagonal origin value
  double min_f0_ratio = 0.0;    // min over slices of |f^{n}(0)| / ||f^{n}||
};

// Per-stage diagnostics of FactorPlusOne.
struct StageReport {
  double unitarity_dev = 0.0;
  double det_dev = 0.0;
  double gram_dev = 0.0;
  double det_preservation = 0.0;  // max relative |det M - det M_1| pointwise
  double min_f0_ratio = 1.0;
  int kernel_fallbacks = 0;
  int flagged_slices = 0;
};

namespace detail {

inline void SynthesizeBins(int g0, const std::vector<Complex>& bins,
                           std::vector<Complex>& samples) {
  samples.resize(g0);
  Fft1d(g0, bins.data(), samples.data(), +1);
}

inline void AnalyzeSamples(int g0, const std::vector<Complex>& samples,
                           std::vector<Complex>& bins) {
  bins.resize(g0);
  Fft1d(g0, samples.data(), bins.data(), -1);
  const double s = 1.0 / g0;
  for (auto& z : bins) z *= s;
}

inline int BinOf(int k, int g0) {
  int b = k % g0;
  return b < 0 ? b + g0 : b;
}

// One completion slice. zc holds the truncated zeta coefficients in bin
// layout (support [-n,-1]); fs holds samples of the diagonal entry. The
// diagonal handed in is the untruncated (outer) one: the linear constraints
// only read its coefficients 0..n-1, and using the outer function keeps the
// construction's column span exact, so the result also completes the
// truncated row matrix.
struct SliceOutcome {
  double gram_dev = 0.0;
  double unit_dev = 0.0;
  double det_dev = 0.0;
  double f0_ratio = 1.0;
  bool used_fallback = false;
};

class UnitarySliceBuilder {
 public:
  UnitarySliceBuilder(int m, int n, int g0) : m_(m), n_(n), g0_(g0) {}

  // Columns of U as samples: u[i][l] is a g0-vector.
  SliceOutcome Build(const std::vector<std::vector<Complex>>& zc,
                     const std::vector<Complex>& fs,
                     std::vector<std::vector<std::vector<Complex>>>& u) {
    SliceOutcome out;
    BuildHankel(zc, fs, u);
    Normalize(zc, fs, u, out);
    if (out.unit_dev > 1e-11 && m_ == 2) {
      std::vector<std::vector<std::vector<Complex>>> u2;
      BuildKernel2(zc, fs, u2);
      SliceOutcome alt;
      Normalize(zc, fs, u2, alt);
      if (alt.unit_dev < out.unit_dev) {
        u = std::move(u2);
        out = alt;
        out.used_fallback = true;
      }
    }
    ComputeF0Ratio(fs, out);
    return out;
  }

 private:
  void BuildHankel(const std::vector<std::vector<Complex>>& zc,
                   const std::vector<Complex>& fs,
                   std::vector<std::vector<std::vector<Complex>>>& u) {
    const int mm1 = m_ - 1;
    // zeta samples and h = zeta / f coefficients
    std::vector<std::vector<Complex>> zs(mm1), hc(mm1);
    std::vector<Complex> scratch;
    for (int j = 0; j < mm1; ++j) {
      SynthesizeBins(g0_, zc[j], zs[j]);
      scratch.resize(g0_);
      for (int g = 0; g < g0_; ++g) {
        if (std::abs(fs[g]) < 1e-300)
          throw SliceSingular("diagonal entry vanishes on a slice");
        scratch[g] = zs[j][g] / fs[g];
      }
      AnalyzeSamples(g0_, scratch, hc[j]);
    }
    // Hankel blocks H_j(s-1, r) = conj(h_j at -(s+r)), s = 1..n, r = 0..n
    std::vector<Eigen::MatrixXcd> H(mm1);
    for (int j = 0; j < mm1; ++j) {
      H[j].resize(n_, n_ + 1);
      for (int s = 1; s <= n_; ++s)
        for (int r = 0; r <= n_; ++r)
          H[j](s - 1, r) = std::conj(hc[j][BinOf(-(s + r), g0_)]);
    }
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(n_, n_);
    for (int j = 0; j < mm1; ++j) {
      const auto Hhat = H[j].rightCols(n_);
      A += Hhat.adjoint() * Hhat;
    }
    Eigen::MatrixXcd rhs(n_, m_);
    for (int l = 0; l < mm1; ++l)
      for (int s = 1; s <= n_; ++s)
        rhs(s - 1, l) = -hc[l][BinOf(-s, g0_)];
    rhs.col(mm1).setZero();
    for (int j = 0; j < mm1; ++j)
      rhs.col(mm1) -= H[j].rightCols(n_).conjugate() * H[j].col(0);
    Eigen::LLT<Eigen::MatrixXcd> llt(A);
    if (llt.info() != Eigen::Success)
      throw SliceSingular("completion normal equations are not positive definite");
    Eigen::MatrixXcd beta_tail = llt.solve(rhs);  // n x m

    u.assign(m_, std::vector<std::vector<Complex>>(
                     m_, std::vector<Complex>(g0_, Complex(0, 0))));
    std::vector<Complex> bins(g0_), samp;
    Eigen::VectorXcd beta(n_ + 1), hb;
    for (int l = 0; l < m_; ++l) {
      beta(0) = l == mm1 ? Complex(1, 0) : Complex(0, 0);
      beta.tail(n_) = beta_tail.col(l);
      // last row: tilde-form entry with coefficient beta_r at frequency -r
      std::fill(bins.begin(), bins.end(), Complex(0, 0));
      for (int r = 0; r <= n_; ++r) bins[BinOf(-r, g0_)] = beta(r);
      SynthesizeBins(g0_, bins, samp);
      u[mm1][l] = samp;
      // polynomial rows
      for (int j = 0; j < mm1; ++j) {
        hb = H[j] * beta;  // coefficients at frequencies 1..n
        std::fill(bins.begin(), bins.end(), Complex(0, 0));
        if (j == l) bins[0] = Complex(1, 0);
        for (int s = 1; s <= n_; ++s) bins[BinOf(s, g0_)] += hb(s - 1);
        SynthesizeBins(g0_, bins, samp);
        u[j][l] = samp;
      }
    }
  }

  void BuildKernel2(const std::vector<std::vector<Complex>>& zc,
                    const std::vector<Complex>& fs,
                    std::vector<std::vector<std::vector<Complex>>>& u) {
    std::vector<Complex> fc;
    AnalyzeSamples(g0_, fs, fc);
    const auto& al = zc[0];
    auto alpha = [&](int k) { return al[BinOf(k, g0_)]; };
    auto gamma = [&](int k) { return fc[BinOf(k, g0_)]; };
    const int rows = 2 * n_, cols = 2 * (n_ + 1);
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(rows, cols);
    for (int s = 1; s <= n_; ++s) {
      for (int k = 0; k <= n_; ++k)
        if (-s - k >= -n_) M(s - 1, k) = alpha(-s - k);
      for (int r = s; r <= n_; ++r) M(s - 1, n_ + 1 + r) = gamma(r - s);
      for (int r = s; r <= n_; ++r)
        M(n_ + s - 1, r) = -std::conj(gamma(r - s));
      for (int k = 0; k <= n_; ++k)
        if (-s - k >= -n_) M(n_ + s - 1, n_ + 1 + k) = std::conj(alpha(-s - k));
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
    Eigen::VectorXcd y = svd.matrixV().col(cols - 2);
    Eigen::VectorXcd a = y.head(n_ + 1), bbar = y.tail(n_ + 1);
    u.assign(2, std::vector<std::vector<Complex>>(
                    2, std::vector<Complex>(g0_, Complex(0, 0))));
    std::vector<Complex> bins(g0_), samp;
    auto poly = [&](const Eigen::VectorXcd& cvec, int sign_k,
                    std::vector<Complex>& dst) {
      std::fill(bins.begin(), bins.end(), Complex(0, 0));
      for (int k = 0; k <= n_; ++k) bins[BinOf(sign_k * k, g0_)] += cvec(k);
      SynthesizeBins(g0_, bins, samp);
      dst = samp;
    };
    poly(a, +1, u[0][0]);                   // u
    poly(bbar, -1, u[1][0]);                // tilde v
    poly(bbar.conjugate(), +1, u[0][1]);    // v
    poly(a.conjugate(), -1, u[1][1]);       // tilde u
    for (auto& z : u[1][1]) z = -z;         // second column is (v, -tilde u)
  }

  // Column-Gram orthonormalization followed by the deterministic pin: the
  // value of F_-^{n} U at t_1 = 0 is made lower-triangular with positive
  // diagonal, which also forces det U = +1 exactly.
  void Normalize(const std::vector<std::vector<Complex>>& zc,
                 const std::vector<Complex>& fs,
                 std::vector<std::vector<std::vector<Complex>>>& u,
                 SliceOutcome& out) {
    Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(m_, m_);
    for (int l = 0; l < m_; ++l)
      for (int k = 0; k < m_; ++k) {
        Complex acc(0, 0);
        for (int r = 0; r < m_; ++r)
          for (int g = 0; g < g0_; ++g)
            acc += std::conj(u[r][l][g]) * u[r][k][g];
        gram(l, k) = acc / static_cast<double>(g0_);
      }
    // deviation of the pointwise Gram from its mean
    double gdev = 0.0;
    for (int g = 0; g < g0_; ++g)
      for (int l = 0; l < m_; ++l)
        for (int k = 0; k < m_; ++k) {
          Complex acc(0, 0);
          for (int r = 0; r < m_; ++r) acc += std::conj(u[r][l][g]) * u[r][k][g];
          gdev = std::max(gdev, std::abs(acc - gram(l, k)));
        }
    out.gram_dev = gdev;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0)
      throw SliceSingular("column Gram matrix is not positive definite");
    Eigen::VectorXd w = es.eigenvalues();
    for (int i = 0; i < w.size(); ++i) w(i) = 1.0 / std::sqrt(w(i));
    Eigen::MatrixXcd fix =
        es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
    RightMultiply(u, fix);

    // truncated diagonal samples for the pin
    std::vector<Complex> fc, bins(g0_, Complex(0, 0)), ftr;
    AnalyzeSamples(g0_, fs, fc);
    for (int k = 0; k <= n_; ++k) bins[BinOf(k, g0_)] = fc[BinOf(k, g0_)];
    SynthesizeBins(g0_, bins, ftr);
    std::vector<std::vector<Complex>> zs(m_ - 1);
    for (int j = 0; j < m_ - 1; ++j) SynthesizeBins(g0_, zc[j], zs[j]);
    Eigen::MatrixXcd p0(m_, m_);
    for (int l = 0; l < m_; ++l) {
      for (int i = 0; i < m_ - 1; ++i) {
        Complex acc(0, 0);
        for (int g = 0; g < g0_; ++g) acc += u[i][l][g];
        p0(i, l) = acc / static_cast<double>(g0_);
      }
      Complex acc(0, 0);
      for (int g = 0; g < g0_; ++g) {
        Complex row(0, 0);
        for (int j = 0; j < m_ - 1; ++j) row += zs[j][g] * u[j][l][g];
        row += ftr[g] * u[m_ - 1][l][g];
        acc += row;
      }
      p0(m_ - 1, l) = acc / static_cast<double>(g0_);
    }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(p0.adjoint());
    Eigen::MatrixXcd q = qr.householderQ();
    Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    Eigen::VectorXcd d(m_);
    for (int i = 0; i < m_; ++i) {
      const double mag = std::abs(r(i, i));
      if (!(mag > 0.0))
        throw SliceSingular("origin value of the completed block is singular");
      d(i) = r(i, i) / mag;
    }
    RightMultiply(u, q * d.asDiagonal());

    // post-conditions: pointwise unitarity and det == 1
    double udev = 0.0, ddev = 0.0;
    Eigen::MatrixXcd point(m_, m_);
    for (int g = 0; g < g0_; ++g) {
      for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j) point(i, j) = u[i][j][g];
      Eigen::MatrixXcd gm = point * point.adjoint();
      for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j)
          udev = std::max(udev,
                          std::abs(gm(i, j) - (i == j ? 1.0 : 0.0)));
      ddev = std::max(ddev, std::abs(point.determinant() - Complex(1, 0)));
    }
    out.unit_dev = udev;
    out.det_dev = ddev;
  }

  void ComputeF0Ratio(const std::vector<Complex>& fs, SliceOutcome& out) {
    std::vector<Complex> fc;
    AnalyzeSamples(g0_, fs, fc);
    double energy = 0.0;
    for (int k = 0; k <= n_; ++k) energy += std::norm(fc[BinOf(k, g0_)]);
    out.f0_ratio =
        energy > 0.0 ? std::abs(fc[0]) / std::sqrt(energy) : 0.0;
  }

  void RightMultiply(std::vector<std::vector<std::vector<Complex>>>& u,
                     const Eigen::MatrixXcd& v) {
    std::vector<Complex> row(m_);
    for (int g = 0; g < g0_; ++g)
      for (int i = 0; i < m_; ++i) {
        for (int l = 0; l < m_; ++l) row[l] = u[i][l][g];
        for (int l = 0; l < m_; ++l) {
          Complex acc(0, 0);
          for (int c = 0; c < m_; ++c) acc += row[c] * v(c, l);
          u[i][l][g] = acc;
        }
      }
  }

  int m_, n_, g0_;
};

}  // namespace detail

// Pointwise lower Cholesky factorization with the diagonal replaced by its
// first-variable outer version and each column rescaled by the corresponding
// unimodular ratio, so S = M M^* is preserved exactly and det M is the
// product of the outer diagonal entries.
inline LowerTriangularFactor LowerUpperFactor(const MatrixFunction& s) {
  LowerTriangularFactor out;
  out.m = CholeskyLowerPointwise(s);
  const int d = s.rows;
  const std::size_t total = s.total();
  out.det = GridFunction(s.grid, Complex(1.0, 0.0));
  out.min_diag = std::numeric_limits<double>::infinity();
  for (int j = 0; j < d; ++j) {
    GridFunction diag_sq(s.grid);
    const Complex* jj = out.m.Entry(j, j);
    for (std::size_t g = 0; g < total; ++g)
      diag_sq.v[g] = Complex(std::norm(jj[g]), 0.0);
    ScalarFactorization fac = OuterFactorFirstVar(diag_sq);
    out.min_diag = std::min(out.min_diag, fac.min_f);
    // unimodular column correction phi = fplus / l_jj
    GridFunction phi(s.grid);
    for (std::size_t g = 0; g < total; ++g) phi.v[g] = fac.fplus.v[g] / jj[g];
    for (int i = j; i < d; ++i) {
      Complex* e = out.m.Entry(i, j);
      for (std::size_t g = 0; g < total; ++g) e[g] *= phi.v[g];
    }
    for (std::size_t g = 0; g < total; ++g) out.det.v[g] *= fac.fplus.v[g];
  }
  return out;
}

// Extracts the completion target for block size m from the current product:
// identity rows above row m of its leading m x m block.
inline RowMatrix BuildRowMatrix(const MatrixFunction& q, int m) {
  RowMatrix out;
  out.m = m;
  out.zetas.reserve(m - 1);
  for (int j = 0; j < m - 1; ++j) out.zetas.push_back(q.EntryCopy(m - 1, j));
  out.f = q.EntryCopy(m - 1, m - 1);
  return out;
}

// Splits the last row into analytic and anti-analytic parts:
// F = F_plus * F_minus with F_plus carrying [zeta_+, 1] and F_minus
// carrying [zeta_-, f].
inline std::pair<RowMatrix, RowMatrix> SplitRowMatrix(const RowMatrix& f) {
  RowMatrix plus, minus;
  plus.m = minus.m = f.m;
  for (const auto& z : f.zetas) {
    auto [zp, zm] = SplitFirstVar(z);
    plus.zetas.push_back(std::move(zp));
    minus.zetas.push_back(std::move(zm));
  }
  plus.f = GridFunction(f.f.grid, Complex(1.0, 0.0));
  minus.f = f.f;
  return {std::move(plus), std::move(minus)};
}

// Truncates the anti-analytic row entries to first-variable degrees [-n,-1]
// and the diagonal to [0, n].
inline RowMatrix TruncateRowMatrix(const RowMatrix& fminus, int n) {
  if (n < 1) throw std::invalid_argument("TruncateRowMatrix: n must be >= 1");
  RowMatrix out;
  out.m = fminus.m;
  for (const auto& z : fminus.zetas)
    out.zetas.push_back(TruncateFirstVar(z, -n, -1));
  out.f = TruncateFirstVar(fminus.f, 0, n);
  return out;
}

// Builds the structured unitary completion U for the truncated row matrix:
// rows 1..m-1 are first-variable polynomials of degree <= n, the last row is
// tilde-form, U is pointwise unitary with det U = 1, and the completed
// product has no negative first-variable frequencies. Slices over the
// residual grid run in parallel; outputs are deterministic for any worker
// count. The zeta entries are re-truncated defensively; the diagonal is used
// as handed in (the engine passes the untruncated outer diagonal).
inline StructuredUnitary BuildUnitary(const RowMatrix& fminus, int n) {
  const int m = fminus.m;
  const GridPtr grid = fminus.f.grid;
  const int g0 = grid->size(0);
  const std::size_t rest = grid->total() / static_cast<std::size_t>(g0);
  StructuredUnitary out;
  out.m = m;
  out.n = n;
  out.u = MatrixFunction(m, m, grid);
  std::vector<detail::SliceOutcome> results(rest);

  ParallelFor(rest, [&](std::size_t r) {
    std::vector<std::vector<Complex>> zc(m - 1);
    std::vector<Complex> samples(g0), fs(g0);
    for (int j = 0; j < m - 1; ++j) {
      const Complex* e = fminus.zetas[j].v.data();
      for (int b = 0; b < g0; ++b)
        samples[b] = e[static_cast<std::size_t>(b) * rest + r];
      detail::AnalyzeSamples(g0, samples, zc[j]);
      for (int b = 0; b < g0; ++b) {
        const int k = grid->FreqOfBin(0, b);
        if (k < -n || k > -1) zc[j][b] = Complex(0, 0);
      }
    }
    const Complex* fe = fminus.f.v.data();
    for (int b = 0; b < g0; ++b)
      fs[b] = fe[static_cast<std::size_t>(b) * rest + r];
    detail::UnitarySliceBuilder builder(m, n, g0);
    std::vector<std::vector<std::vector<Complex>>> u;
    results[r] = builder.Build(zc, fs, u);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        Complex* dst = out.u.Entry(i, j);
        for (int b = 0; b < g0; ++b)
          dst[static_cast<std::size_t>(b) * rest + r] = u[i][j][b];
      }
  });

  out.min_f0_ratio = std::numeric_limits<double>::infinity();
  for (const auto& res : results) {
    out.unitarity_dev = std::max(out.unitarity_dev, res.unit_dev);
    out.det_dev = std::max(out.det_dev, res.det_dev);
    out.gram_dev = std::max(out.gram_dev, res.gram_dev);
    out.min_f0_ratio = std::min(out.min_f0_ratio, res.f0_ratio);
    if (res.used_fallback) ++out.kernel_fallbacks;
    if (res.f0_ratio < 1e-12) ++out.flagged_slices;
  }
  return out;
}

// One full first-variable factorization pass: Cholesky seed with outer
// diagonal, then for m = 2..d the structured unitary completion at order
// (m-1)*n applied to the leading m columns. Returns the analytic factor and
// stage diagnostics; S = result * result^* holds at every grid point by
// construction (the completions are exactly unitary).
inline std::pair<MatrixFunction, StageReport> FactorPlusOne(
    const MatrixFunction& s, int n) {
  if (s.rows != s.cols)
    throw std::invalid_argument("FactorPlusOne: matrix must be square");
  if (n < 1) throw std::invalid_argument("FactorPlusOne: order must be >= 1");
  const int d = s.rows;
  StageReport rep;
  LowerTriangularFactor seed = LowerUpperFactor(s);
  MatrixFunction cur = std::move(seed.m);
  const std::size_t total = cur.total();

  for (int m = 2; m <= d; ++m) {
    RowMatrix row = BuildRowMatrix(cur, m);
    StructuredUnitary u = BuildUnitary(row, (m - 1) * n);
    rep.unitarity_dev = std::max(rep.unitarity_dev, u.unitarity_dev);
    rep.det_dev = std::max(rep.det_dev, u.det_dev);
    rep.gram_dev = std::max(rep.gram_dev, u.gram_dev);
    rep.min_f0_ratio = std::min(rep.min_f0_ratio, u.min_f0_ratio);
    rep.kernel_fallbacks += u.kernel_fallbacks;
    rep.flagged_slices += u.flagged_slices;
    // cur[:, 0..m-1] *= U
    ParallelForRange(total, [&](std::size_t lo, std::size_t hi) {
      std::vector<Complex> rowbuf(m);
      for (std::size_t g = lo; g < hi; ++g)
        for (int i = 0; i < d; ++i) {
          for (int c = 0; c < m; ++c) rowbuf[c] = cur.At(i, c, g);
          for (int j = 0; j < m; ++j) {
            Complex acc(0, 0);
            for (int c = 0; c < m; ++c) acc += rowbuf[c] * u.u.At(c, j, g);
            cur.At(i, j, g) = acc;
          }
        }
    });
  }

  // determinant preservation relative to the triangular seed
  GridFunction det_now = DeterminantPointwise(cur);
  double det_rel = 0.0;
  for (std::size_t g = 0; g < total; ++g) {
    const double ref = std::abs(seed.det.v[g]);
    if (ref > 0.0)
      det_rel =
          std::max(det_rel, std::abs(det_now.v[g] - seed.det.v[g]) / ref);
  }
  rep.det_preservation = det_rel;
  return {std::move(cur), rep};
}

}  // namespace ndspec
