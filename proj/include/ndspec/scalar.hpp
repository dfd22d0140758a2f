#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ndspec/errors.hpp"
#include "ndspec/harmonic.hpp"

namespace ndspec {

enum class ScalarKind { kFirstVariable, kFullOuter };

// Result of a scalar factorization |fplus|^2 = f with fplus of analytic type.
struct ScalarFactorization {
  GridFunction fplus;
  ScalarKind kind = ScalarKind::kFirstVariable;
  double log_mean = 0.0;  // grid mean of log sqrt(f)
  double min_f = 0.0;     // smallest sample of f encountered
};

namespace detail {

// Validates strict positivity and returns real samples (plus optional floor).
inline std::vector<double> PositiveSamples(const GridFunction& f,
                                           double floor_eps) {
  std::vector<double> out(f.size());
  double max_abs = MaxAbs(f.v);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (std::abs(f.v[i].imag()) > 1e-9 * (max_abs > 0 ? max_abs : 1.0))
      throw NotPositive("sample has non-real value at flat index " +
                        std::to_string(i));
    double x = f.v[i].real() + floor_eps;
    if (!(x > 0.0))
      throw NotPositive("sample " + std::to_string(x) +
                        " is not strictly positive at flat index " +
                        std::to_string(i));
    out[i] = x;
  }
  return out;
}

}  // namespace detail

// Conjugate function in the first variable: the Fourier multiplier
// -i*sign(k) on axis-0 coefficients, with k = 0 mapped to 0 and the
// self-conjugate Nyquist bin given half weight (multiplier 0) so that
// exp(log sqrt(f) + i * conjugate) has modulus exactly sqrt(f) on the grid.
// Equals the principal-value cotangent-kernel integral for trig polynomials.
inline GridFunction ConjugateFirstVar(const GridFunction& h) {
  const int g0 = h.grid->size(0);
  const std::size_t rest = h.grid->total() / static_cast<std::size_t>(g0);
  std::vector<Complex> work = h.v;
  Axis0Analysis(h.grid, work);
  for (int b = 0; b < g0; ++b) {
    const int k = h.grid->FreqOfBin(0, b);
    Complex mult(0.0, 0.0);
    if (k > 0 && !(g0 % 2 == 0 && k == g0 / 2)) mult = Complex(0.0, -1.0);
    if (k < 0) mult = Complex(0.0, 1.0);
    for (std::size_t r = 0; r < rest; ++r)
      work[static_cast<std::size_t>(b) * rest + r] *= mult;
  }
  GridFunction out(h.grid, std::move(work));
  Axis0Synthesis(h.grid, out.v);
  return out;
}

// Outer factor in the first variable, every residual slice at once:
// f_+ = sqrt(f) * exp(i * Conjugate(log sqrt f)). Each slice is analytic in
// t_1 with positive value at t_1 = 0; |f_+|^2 = f at every grid point.
inline ScalarFactorization OuterFactorFirstVar(const GridFunction& f,
                                               double floor_eps = 0.0) {
  std::vector<double> samples = detail::PositiveSamples(f, floor_eps);
  ScalarFactorization out;
  out.kind = ScalarKind::kFirstVariable;
  out.min_f = samples[0];
  GridFunction logs(f.grid);
  double mean = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.min_f = std::min(out.min_f, samples[i]);
    const double l = 0.5 * std::log(samples[i]);
    logs.v[i] = Complex(l, 0.0);
    mean += l;
  }
  out.log_mean = mean / static_cast<double>(f.grid->total());
  GridFunction conj_fn = ConjugateFirstVar(logs);
  out.fplus = GridFunction(f.grid);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Complex phase(std::cos(conj_fn.v[i].real()),
                        std::sin(conj_fn.v[i].real()));
    out.fplus.v[i] = std::sqrt(samples[i]) * phase;
  }
  return out;
}

// 1-D outer factor (the N = 1 case of the above, normalization c = 1, so the
// value at 0 is exp(grid mean of log sqrt f) > 0).
inline ScalarFactorization OuterFactor1d(const GridFunction& f,
                                         double floor_eps = 0.0) {
  if (f.grid->dims() != 1)
    throw std::invalid_argument("OuterFactor1d expects a 1-D grid");
  return OuterFactorFirstVar(f, floor_eps);
}

// Mean over the first `lead_axes` grid axes of log sqrt(f), a function on the
// remaining torus variables.
inline GridFunction CheckFunction(const GridFunction& f, int lead_axes,
                                  double floor_eps = 0.0) {
  const int n = f.grid->dims();
  if (lead_axes < 1 || lead_axes >= n)
    throw std::invalid_argument("CheckFunction: lead_axes out of range");
  std::vector<double> samples = detail::PositiveSamples(f, floor_eps);
  std::vector<int> reduced(f.grid->sizes().begin() + lead_axes,
                           f.grid->sizes().end());
  GridPtr rg = MakeGrid(reduced);
  const std::size_t rest = rg->total();
  const std::size_t lead = f.grid->total() / rest;
  GridFunction out(rg);
  for (std::size_t r = 0; r < rest; ++r) {
    double acc = 0.0;
    for (std::size_t l = 0; l < lead; ++l)
      acc += 0.5 * std::log(samples[l * rest + r]);
    out.v[r] = Complex(acc / static_cast<double>(lead), 0.0);
  }
  return out;
}

// Full outer factor on T^N: the first-variable factor times the unimodular
// corrections exp(i * Conjugate(check_k)) with the conjugate operator acting
// on the leading remaining variable of each check function. |f_+|^2 = f on
// the grid and the coefficient support lies in the half-plane H_N.
inline ScalarFactorization OuterFactorFull(const GridFunction& f,
                                           double floor_eps = 0.0) {
  ScalarFactorization out = OuterFactorFirstVar(f, floor_eps);
  out.kind = ScalarKind::kFullOuter;
  const int n = f.grid->dims();
  for (int k = 1; k < n; ++k) {
    GridFunction check = CheckFunction(f, k, floor_eps);
    GridFunction conj_fn = ConjugateFirstVar(check);
    const std::size_t rest = conj_fn.grid->total();
    for (std::size_t i = 0; i < out.fplus.size(); ++i) {
      const double angle = conj_fn.v[i % rest].real();
      out.fplus.v[i] *= Complex(std::cos(angle), std::sin(angle));
    }
  }
  return out;
}

}  // namespace ndspec
