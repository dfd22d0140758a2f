#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ndspec/errors.hpp"
#include "ndspec/harmonic.hpp"
#include "ndspec/parallel.hpp"

namespace ndspec {

// Matrix-valued function on a Grid. Entry-major storage: entry (i,j) is a
// contiguous block of grid->total() samples, row-major in (i,j).
struct MatrixFunction {
  int rows = 0;
  int cols = 0;
  GridPtr grid;
  std::vector<Complex> v;

  MatrixFunction() = default;
  MatrixFunction(int r, int c, GridPtr g)
      : rows(r), cols(c), grid(std::move(g)),
        v(static_cast<std::size_t>(r) * c * grid->total(), Complex(0, 0)) {}

  std::size_t total() const { return grid->total(); }
  Complex* Entry(int i, int j) {
    return v.data() + (static_cast<std::size_t>(i) * cols + j) * total();
  }
  const Complex* Entry(int i, int j) const {
    return v.data() + (static_cast<std::size_t>(i) * cols + j) * total();
  }
  Complex& At(int i, int j, std::size_t g) { return Entry(i, j)[g]; }
  Complex At(int i, int j, std::size_t g) const { return Entry(i, j)[g]; }

  GridFunction EntryCopy(int i, int j) const {
    GridFunction out(grid);
    const Complex* e = Entry(i, j);
    std::copy(e, e + total(), out.v.begin());
    return out;
  }
  void SetEntry(int i, int j, const GridFunction& f) {
    std::copy(f.v.begin(), f.v.end(), Entry(i, j));
  }

  void GatherPoint(std::size_t g, Eigen::MatrixXcd& m) const {
    m.resize(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = At(i, j, g);
  }
  void ScatterPoint(std::size_t g, const Eigen::MatrixXcd& m) {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) At(i, j, g) = m(i, j);
  }

  static MatrixFunction Identity(int d, GridPtr g) {
    MatrixFunction out(d, d, std::move(g));
    for (int i = 0; i < d; ++i) {
      Complex* e = out.Entry(i, i);
      std::fill(e, e + out.total(), Complex(1.0, 0.0));
    }
    return out;
  }
};

// C = A * B pointwise.
inline MatrixFunction Multiply(const MatrixFunction& a,
                               const MatrixFunction& b) {
  MatrixFunction out(a.rows, b.cols, a.grid);
  ParallelForRange(a.total(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t g = lo; g < hi; ++g)
      for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
          Complex acc(0.0, 0.0);
          for (int k = 0; k < a.cols; ++k) acc += a.At(i, k, g) * b.At(k, j, g);
          out.At(i, j, g) = acc;
        }
  });
  return out;
}

// C = A * A^* pointwise.
inline MatrixFunction MultiplyAdjointRight(const MatrixFunction& a) {
  MatrixFunction out(a.rows, a.rows, a.grid);
  ParallelForRange(a.total(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t g = lo; g < hi; ++g)
      for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.rows; ++j) {
          Complex acc(0.0, 0.0);
          for (int k = 0; k < a.cols; ++k)
            acc += a.At(i, k, g) * std::conj(a.At(j, k, g));
          out.At(i, j, g) = acc;
        }
  });
  return out;
}

inline MatrixFunction Adjoint(const MatrixFunction& a) {
  MatrixFunction out(a.cols, a.rows, a.grid);
  ParallelForRange(a.total(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t g = lo; g < hi; ++g)
      for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j)
          out.At(j, i, g) = std::conj(a.At(i, j, g));
  });
  return out;
}

// Pointwise lower Cholesky factor with positive real diagonal.
inline MatrixFunction CholeskyLowerPointwise(const MatrixFunction& s) {
  MatrixFunction out(s.rows, s.cols, s.grid);
  ParallelForRange(s.total(), [&](std::size_t lo, std::size_t hi) {
    Eigen::MatrixXcd m;
    for (std::size_t g = lo; g < hi; ++g) {
      s.GatherPoint(g, m);
      Eigen::LLT<Eigen::MatrixXcd> llt(m);
      if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite(
            "matrix value is not positive definite at flat grid index " +
            std::to_string(g));
      Eigen::MatrixXcd l = llt.matrixL();
      out.ScatterPoint(g, l);
    }
  });
  return out;
}

// Pointwise inverse (LU with partial pivoting).
inline MatrixFunction InversePointwise(const MatrixFunction& a,
                                       double singular_tol = 0.0) {
  MatrixFunction out(a.rows, a.cols, a.grid);
  ParallelForRange(a.total(), [&](std::size_t lo, std::size_t hi) {
    Eigen::MatrixXcd m;
    for (std::size_t g = lo; g < hi; ++g) {
      a.GatherPoint(g, m);
      Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
      const double dabs = std::abs(lu.determinant());
      if (!(dabs > singular_tol))
        throw HatSingular("matrix value is singular at flat grid index " +
                          std::to_string(g));
      out.ScatterPoint(g, lu.inverse());
    }
  });
  return out;
}

inline GridFunction DeterminantPointwise(const MatrixFunction& a) {
  GridFunction out(a.grid);
  ParallelForRange(a.total(), [&](std::size_t lo, std::size_t hi) {
    Eigen::MatrixXcd m;
    for (std::size_t g = lo; g < hi; ++g) {
      a.GatherPoint(g, m);
      out.v[g] = m.determinant();
    }
  });
  return out;
}

// Principal inverse square root of a Hermitian positive definite matrix.
inline Eigen::MatrixXcd InverseSqrtPsd(const Eigen::MatrixXcd& m,
                                       const std::string& who) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.info() != Eigen::Success)
    throw OriginSingular(who + ": eigensolver failed");
  Eigen::VectorXd w = es.eigenvalues();
  for (int i = 0; i < w.size(); ++i) {
    if (!(w(i) > 0.0))
      throw OriginSingular(who + ": matrix is not positive definite");
    w(i) = 1.0 / std::sqrt(w(i));
  }
  return es.eigenvectors() * w.asDiagonal() *
         es.eigenvectors().adjoint();
}

inline Eigen::MatrixXcd SqrtPsd(const Eigen::MatrixXcd& m,
                                const std::string& who) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.info() != Eigen::Success)
    throw OriginSingular(who + ": eigensolver failed");
  Eigen::VectorXd w = es.eigenvalues();
  for (int i = 0; i < w.size(); ++i) {
    if (w(i) < 0.0 && w(i) > -1e-14) w(i) = 0.0;
    if (!(w(i) >= 0.0))
      throw OriginSingular(who + ": matrix is not positive semidefinite");
    w(i) = std::sqrt(w(i));
  }
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

// Constant right-multiplication: out(t) = a(t) * c.
inline MatrixFunction MultiplyConstantRight(const MatrixFunction& a,
                                            const Eigen::MatrixXcd& c) {
  MatrixFunction out(a.rows, static_cast<int>(c.cols()), a.grid);
  ParallelForRange(a.total(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t g = lo; g < hi; ++g)
      for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < c.cols(); ++j) {
          Complex acc(0.0, 0.0);
          for (int k = 0; k < a.cols; ++k)
            acc += a.At(i, k, g) * c(k, j);
          out.At(i, j, g) = acc;
        }
  });
  return out;
}

// Grid mean of every entry (the DC Fourier coefficient matrix).
inline Eigen::MatrixXcd MeanMatrix(const MatrixFunction& a) {
  Eigen::MatrixXcd out(a.rows, a.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) {
      const Complex* e = a.Entry(i, j);
      Complex acc(0.0, 0.0);
      for (std::size_t g = 0; g < a.total(); ++g) acc += e[g];
      out(i, j) = acc / static_cast<double>(a.total());
    }
  return out;
}

// Max over grid points of the Frobenius norm of A - B.
inline double MaxPointFrobenius(const MatrixFunction& a,
                                const MatrixFunction& b) {
  double worst = 0.0;
  for (std::size_t g = 0; g < a.total(); ++g) {
    double acc = 0.0;
    for (int i = 0; i < a.rows; ++i)
      for (int j = 0; j < a.cols; ++j) acc += std::norm(a.At(i, j, g) - b.At(i, j, g));
    worst = std::max(worst, acc);
  }
  return std::sqrt(worst);
}

inline double MaxPointFrobenius(const MatrixFunction& a) {
  double worst = 0.0;
  for (std::size_t g = 0; g < a.total(); ++g) {
    double acc = 0.0;
    for (int i = 0; i < a.rows; ++i)
      for (int j = 0; j < a.cols; ++j) acc += std::norm(a.At(i, j, g));
    worst = std::max(worst, acc);
  }
  return std::sqrt(worst);
}

inline MatrixFunction ResampleMatrix(const MatrixFunction& a,
                                     const std::vector<int>& sizes) {
  if (a.grid->sizes() == sizes) return a;
  MatrixFunction out(a.rows, a.cols, MakeGrid(sizes));
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j)
      out.SetEntry(i, j, Resample(a.EntryCopy(i, j), sizes));
  return out;
}

inline MatrixFunction RestrictMatrix(const MatrixFunction& a,
                                     const std::vector<int>& sizes) {
  if (a.grid->sizes() == sizes) return a;
  MatrixFunction out(a.rows, a.cols, MakeGrid(sizes));
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j)
      out.SetEntry(i, j, Restrict(a.EntryCopy(i, j), sizes));
  return out;
}

// Hermitian-symmetrizes a matrix function in place: a <- (a + a^*)/2.
inline void Hermitize(MatrixFunction& a) {
  ParallelForRange(a.total(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t g = lo; g < hi; ++g)
      for (int i = 0; i < a.rows; ++i)
        for (int j = i; j < a.cols; ++j) {
          const Complex m =
              0.5 * (a.At(i, j, g) + std::conj(a.At(j, i, g)));
          a.At(i, j, g) = m;
          a.At(j, i, g) = std::conj(m);
        }
  });
}

}  // namespace ndspec
