#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "ndspec/errors.hpp"
#include "ndspec/fft.hpp"
#include "ndspec/grid.hpp"
#include "ndspec/halfplane.hpp"
#include "ndspec/laurent.hpp"

namespace ndspec {

// ---- Core transform pair ----------------------------------------------------
// Coefficients: forward DFT divided by the number of points, indexed on the
// symmetric per-axis range (-G/2, G/2]. Evaluate: unnormalized synthesis sum.
// Round trip Evaluate(CoefficientsOf(f)) == f to machine precision.

inline Coefficients CoefficientsOf(const GridFunction& f) {
  Coefficients out(f.grid);
  FftNd(f.grid->sizes(), f.v.data(), out.c.data(), -1);
  const double scale = 1.0 / static_cast<double>(f.grid->total());
  for (auto& z : out.c) z *= scale;
  return out;
}

inline GridFunction Evaluate(const Coefficients& c) {
  GridFunction out(c.grid);
  FftNd(c.grid->sizes(), c.c.data(), out.v.data(), +1);
  return out;
}

// Places a sparse table on a grid; every index must be representable.
inline Coefficients CoefficientsOf(const LaurentTable& table,
                                   const GridPtr& grid) {
  if (table.dims != grid->dims())
    throw AliasError("laurent table dimension does not match grid");
  Coefficients out(grid);
  for (const auto& [k, c] : table.terms) {
    for (int i = 0; i < grid->dims(); ++i)
      if (!grid->Representable(i, k[i]))
        throw AliasError("coefficient index " + std::to_string(k[i]) +
                         " on axis " + std::to_string(i) +
                         " exceeds the range of a size-" +
                         std::to_string(grid->size(i)) + " grid");
    out.c[grid->FlatOfFreq(k)] += c;
  }
  return out;
}

inline GridFunction Evaluate(const LaurentTable& table, const GridPtr& grid) {
  return Evaluate(CoefficientsOf(table, grid));
}

// ---- First-variable (axis 0) coefficient calculus ---------------------------
// For f on T^N, the axis-0 partial transform gives coefficients C_k as
// functions on the residual grid (axes 1..N-1).

inline GridPtr ResidualGrid(const GridPtr& grid) {
  if (grid->dims() == 1) return MakeGrid({1});
  return MakeGrid(std::vector<int>(grid->sizes().begin() + 1,
                                   grid->sizes().end()));
}

// In-place axis-0 analysis: samples -> first-variable coefficients (bin
// layout along axis 0, scaled by 1/G_0). The buffer keeps its full layout.
inline void Axis0Analysis(const GridPtr& grid, std::vector<Complex>& data) {
  const int g0 = grid->size(0);
  const std::size_t rest = grid->total() / static_cast<std::size_t>(g0);
  std::vector<Complex> out(data.size());
  FftAxis0(g0, rest, data.data(), out.data(), -1);
  const double scale = 1.0 / g0;
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = out[i] * scale;
}

inline void Axis0Synthesis(const GridPtr& grid, std::vector<Complex>& data) {
  const int g0 = grid->size(0);
  const std::size_t rest = grid->total() / static_cast<std::size_t>(g0);
  std::vector<Complex> out(data.size());
  FftAxis0(g0, rest, data.data(), out.data(), +1);
  data.swap(out);
}

// C_{1,k}{f} for every representable k, as GridFunctions on the residual grid,
// returned in bin order (index b holds the coefficient of frequency
// FreqOfBin(0, b)).
inline std::vector<GridFunction> FirstVarCoefficients(const GridFunction& f) {
  const int g0 = f.grid->size(0);
  const std::size_t rest = f.grid->total() / static_cast<std::size_t>(g0);
  std::vector<Complex> work = f.v;
  Axis0Analysis(f.grid, work);
  GridPtr rg = ResidualGrid(f.grid);
  std::vector<GridFunction> out;
  out.reserve(g0);
  for (int b = 0; b < g0; ++b) {
    GridFunction slice(rg);
    std::copy(work.begin() + static_cast<std::ptrdiff_t>(b * rest),
              work.begin() + static_cast<std::ptrdiff_t>((b + 1) * rest),
              slice.v.begin());
    out.push_back(std::move(slice));
  }
  return out;
}

// Tilde operation: first-variable coefficient k becomes the conjugate of
// coefficient -k; on the grid this is exactly pointwise conjugation.
inline GridFunction Tilde(const GridFunction& f) {
  GridFunction out(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) out.v[i] = std::conj(f.v[i]);
  return out;
}

// True iff every coefficient outside the half-plane H_N is at most
// tol * (largest coefficient magnitude).
inline bool IsAnalyticType(const Coefficients& c, double tol) {
  double cmax = 0.0;
  for (const auto& z : c.c) cmax = std::max(cmax, std::abs(z));
  const double bound = tol * cmax;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (std::abs(c.c[i]) <= bound) continue;
    if (!HalfplaneContains(c.grid->FreqOfFlat(i))) return false;
  }
  return true;
}

// Energy of coefficients outside H_N relative to total energy (0 for the zero
// function). The quantitative companion of IsAnalyticType.
inline double MaskEnergyRatio(const Coefficients& c) {
  double out_energy = 0.0, energy = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double e = std::norm(c.c[i]);
    energy += e;
    if (!HalfplaneContains(c.grid->FreqOfFlat(i))) out_energy += e;
  }
  return energy == 0.0 ? 0.0 : out_energy / energy;
}

// Splits f into the part with first-variable frequencies >= 0 and the part
// with first-variable frequencies < 0; f = plus + minus pointwise.
inline std::pair<GridFunction, GridFunction> SplitFirstVar(
    const GridFunction& f) {
  const int g0 = f.grid->size(0);
  const std::size_t rest = f.grid->total() / static_cast<std::size_t>(g0);
  std::vector<Complex> work = f.v;
  Axis0Analysis(f.grid, work);
  std::vector<Complex> plus(work.size(), Complex(0.0, 0.0));
  std::vector<Complex> minus(work.size(), Complex(0.0, 0.0));
  for (int b = 0; b < g0; ++b) {
    const bool nonneg = f.grid->FreqOfBin(0, b) >= 0;
    auto* dst = nonneg ? plus.data() : minus.data();
    std::copy(work.begin() + static_cast<std::ptrdiff_t>(b * rest),
              work.begin() + static_cast<std::ptrdiff_t>((b + 1) * rest),
              dst + static_cast<std::ptrdiff_t>(b * rest));
  }
  GridFunction fp(f.grid, std::move(plus));
  GridFunction fm(f.grid, std::move(minus));
  Axis0Synthesis(f.grid, fp.v);
  Axis0Synthesis(f.grid, fm.v);
  return {std::move(fp), std::move(fm)};
}

// Zeroes every first-variable coefficient with frequency outside [lo, hi].
inline GridFunction TruncateFirstVar(const GridFunction& f, int lo, int hi) {
  const int g0 = f.grid->size(0);
  const std::size_t rest = f.grid->total() / static_cast<std::size_t>(g0);
  std::vector<Complex> work = f.v;
  Axis0Analysis(f.grid, work);
  for (int b = 0; b < g0; ++b) {
    const int k = f.grid->FreqOfBin(0, b);
    if (k < lo || k > hi)
      std::fill(work.begin() + static_cast<std::ptrdiff_t>(b * rest),
                work.begin() + static_cast<std::ptrdiff_t>((b + 1) * rest),
                Complex(0.0, 0.0));
  }
  GridFunction out(f.grid, std::move(work));
  Axis0Synthesis(f.grid, out.v);
  return out;
}

// ---- Grid refinement --------------------------------------------------------
// Zero-padded coefficient embedding: the trigonometric interpolant of f on a
// finer power-of-two grid. Exact for data whose true coefficient support fits
// the source grid; the source grid's points are a subset of the target's, so
// pointwise identities survive restriction.

inline GridFunction Resample(const GridFunction& f,
                             const std::vector<int>& new_sizes) {
  if (f.grid->sizes() == new_sizes) return f;
  GridPtr ng = MakeGrid(new_sizes);
  for (int i = 0; i < f.grid->dims(); ++i)
    if (new_sizes[i] < f.grid->size(i))
      throw AliasError("Resample: target grid coarser than source on axis " +
                       std::to_string(i));
  Coefficients c = CoefficientsOf(f);
  Coefficients nc(ng);
  for (std::size_t i = 0; i < c.size(); ++i)
    nc.c[ng->FlatOfFreq(c.grid->FreqOfFlat(i))] = c.c[i];
  return Evaluate(nc);
}

// Restriction to a coarser power-of-two grid by subsampling shared points.
inline GridFunction Restrict(const GridFunction& f,
                             const std::vector<int>& new_sizes) {
  if (f.grid->sizes() == new_sizes) return f;
  GridPtr ng = MakeGrid(new_sizes);
  std::vector<int> ratio(f.grid->dims());
  for (int i = 0; i < f.grid->dims(); ++i) {
    if (f.grid->size(i) % new_sizes[i] != 0)
      throw AliasError("Restrict: incompatible sizes on axis " +
                       std::to_string(i));
    ratio[i] = f.grid->size(i) / new_sizes[i];
  }
  GridFunction out(ng);
  std::vector<int> coords;
  for (std::size_t j = 0; j < ng->total(); ++j) {
    ng->Coords(j, coords);
    std::size_t src = 0;
    for (int i = 0; i < ng->dims(); ++i)
      src += static_cast<std::size_t>(coords[i]) *
             static_cast<std::size_t>(ratio[i]) * f.grid->stride(i);
    out.v[j] = f.v[src];
  }
  return out;
}

// ---- Small utilities ---------------------------------------------------------

inline double MaxAbs(const std::vector<Complex>& v) {
  double m = 0.0;
  for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

inline double EnergyOf(const std::vector<Complex>& v) {
  double e = 0.0;
  for (const auto& z : v) e += std::norm(z);
  return e;
}

}  // namespace ndspec
