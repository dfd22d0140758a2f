#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ndspec {

using Complex = std::complex<double>;

// Frequency multi-index, one integer per torus variable.
using MultiIndex = std::vector<int>;

inline bool IsPowerOfTwo(int g) { return g >= 1 && (g & (g - 1)) == 0; }

// Uniform power-of-two sampling grid on the N-torus, row-major storage.
// Axis i has points 2*pi*j/G_i, j = 0..G_i-1. Representable frequencies on
// axis i form the symmetric range (-G_i/2, G_i/2] with the Nyquist index
// mapped to the positive side.
class Grid {
 public:
  explicit Grid(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw std::invalid_argument("Grid: empty size list");
    total_ = 1;
    for (int g : sizes_) {
      if (!IsPowerOfTwo(g))
        throw std::invalid_argument("Grid: sizes must be powers of two, got " +
                                    std::to_string(g));
      total_ *= static_cast<std::size_t>(g);
    }
    strides_.assign(sizes_.size(), 1);
    for (int i = static_cast<int>(sizes_.size()) - 2; i >= 0; --i)
      strides_[i] = strides_[i + 1] * static_cast<std::size_t>(sizes_[i + 1]);
  }

  int dims() const { return static_cast<int>(sizes_.size()); }
  const std::vector<int>& sizes() const { return sizes_; }
  int size(int axis) const { return sizes_[axis]; }
  std::size_t stride(int axis) const { return strides_[axis]; }
  std::size_t total() const { return total_; }

  // Frequency index of a storage bin on one axis: (-G/2, G/2], Nyquist positive.
  int FreqOfBin(int axis, int bin) const {
    const int g = sizes_[axis];
    return bin <= g / 2 ? bin : bin - g;
  }
  // Storage bin of a frequency index (any integer; reduced modulo G).
  int BinOfFreq(int axis, int k) const {
    const int g = sizes_[axis];
    int b = k % g;
    return b < 0 ? b + g : b;
  }
  // Whether frequency k is inside the representable range of an axis.
  bool Representable(int axis, int k) const {
    const int g = sizes_[axis];
    return k > -(g / 2) - (g == 1 ? 1 : 0) && k <= g / 2;
  }

  std::size_t FlatIndex(const std::vector<int>& coords) const {
    std::size_t f = 0;
    for (int i = 0; i < dims(); ++i)
      f += static_cast<std::size_t>(coords[i]) * strides_[i];
    return f;
  }
  void Coords(std::size_t flat, std::vector<int>& out) const {
    out.resize(sizes_.size());
    for (int i = 0; i < dims(); ++i) {
      out[i] = static_cast<int>(flat / strides_[i]);
      flat %= strides_[i];
    }
  }

  // Frequency multi-index of a flat storage position.
  MultiIndex FreqOfFlat(std::size_t flat) const {
    MultiIndex k(sizes_.size());
    for (int i = 0; i < dims(); ++i) {
      int bin = static_cast<int>(flat / strides_[i]);
      flat %= strides_[i];
      k[i] = FreqOfBin(i, bin);
    }
    return k;
  }
  std::size_t FlatOfFreq(const MultiIndex& k) const {
    std::size_t f = 0;
    for (int i = 0; i < dims(); ++i)
      f += static_cast<std::size_t>(BinOfFreq(i, k[i])) * strides_[i];
    return f;
  }

  bool operator==(const Grid& o) const { return sizes_ == o.sizes_; }

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr MakeGrid(std::vector<int> sizes) {
  return std::make_shared<const Grid>(std::move(sizes));
}

// Complex-valued function sampled on a Grid (row-major samples).
struct GridFunction {
  GridPtr grid;
  std::vector<Complex> v;

  GridFunction() = default;
  explicit GridFunction(GridPtr g, Complex fill = Complex(0.0, 0.0))
      : grid(std::move(g)), v(grid->total(), fill) {}
  GridFunction(GridPtr g, std::vector<Complex> values)
      : grid(std::move(g)), v(std::move(values)) {
    if (v.size() != grid->total())
      throw std::invalid_argument("GridFunction: sample count mismatch");
  }

  std::size_t size() const { return v.size(); }
  Complex& operator[](std::size_t i) { return v[i]; }
  const Complex& operator[](std::size_t i) const { return v[i]; }
};

// Fourier coefficients of a GridFunction, same storage layout; entry at a
// storage bin corresponds to the frequency Grid::FreqOfBin gives for it.
struct Coefficients {
  GridPtr grid;
  std::vector<Complex> c;

  Coefficients() = default;
  explicit Coefficients(GridPtr g, Complex fill = Complex(0.0, 0.0))
      : grid(std::move(g)), c(grid->total(), fill) {}

  std::size_t size() const { return c.size(); }
  Complex At(const MultiIndex& k) const { return c[grid->FlatOfFreq(k)]; }
  Complex& At(const MultiIndex& k) { return c[grid->FlatOfFreq(k)]; }
};

}  // namespace ndspec
