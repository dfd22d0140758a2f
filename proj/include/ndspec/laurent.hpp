#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "ndspec/grid.hpp"

namespace ndspec {

// Sparse Laurent-coefficient table: frequency multi-index -> coefficient.
// The exact, grid-free representation used for document I/O and fixtures.
struct LaurentTable {
  int dims = 0;
  std::map<MultiIndex, Complex> terms;

  explicit LaurentTable(int n_dims = 0) : dims(n_dims) {}

  void Add(const MultiIndex& k, Complex c) {
    auto [it, fresh] = terms.emplace(k, c);
    if (!fresh) it->second += c;
  }

  // Per-axis maximum absolute frequency present (0 for an empty table).
  std::vector<int> Degrees() const {
    std::vector<int> deg(dims, 0);
    for (const auto& [k, c] : terms)
      for (int i = 0; i < dims; ++i)
        deg[i] = std::max(deg[i], std::abs(k[i]));
    return deg;
  }

  // Conjugate-flip: coefficient at k becomes conj(coefficient at -k).
  LaurentTable ConjFlip() const {
    LaurentTable out(dims);
    for (const auto& [k, c] : terms) {
      MultiIndex mk(k);
      for (int& v : mk) v = -v;
      out.terms[mk] = std::conj(c);
    }
    return out;
  }
};

inline LaurentTable Convolve(const LaurentTable& a, const LaurentTable& b) {
  LaurentTable out(a.dims);
  MultiIndex k(a.dims);
  for (const auto& [ka, ca] : a.terms)
    for (const auto& [kb, cb] : b.terms) {
      for (int i = 0; i < a.dims; ++i) k[i] = ka[i] + kb[i];
      out.Add(k, ca * cb);
    }
  return out;
}

}  // namespace ndspec
