#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "ndspec/grid.hpp"

namespace ndspec {
namespace detail {

// Process-wide FFTW plan cache. Plans are created with FFTW_ESTIMATE (fully
// deterministic) and FFTW_UNALIGNED (reusable on any buffer via the new-array
// execute interface). FFTW planning is not thread-safe, so creation is
// mutex-guarded; execution on distinct buffers is concurrent-safe.
class PlanCache {
 public:
  static PlanCache& Instance() {
    static PlanCache cache;
    return cache;
  }

  // Batched 1-D transform: `howmany` interleaved signals of length n,
  // element stride `stride`, signal-to-signal distance `dist`.
  fftw_plan Many1d(int n, int howmany, int stride, int dist, int sign) {
    std::string key = "m" + std::to_string(n) + "," + std::to_string(howmany) +
                      "," + std::to_string(stride) + "," +
                      std::to_string(dist) + "," + std::to_string(sign);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    const std::size_t need = static_cast<std::size_t>(n - 1) * stride +
                             static_cast<std::size_t>(howmany - 1) * dist + 1;
    std::vector<Complex> a(need), b(need);
    fftw_plan p = fftw_plan_many_dft(
        1, &n, howmany, reinterpret_cast<fftw_complex*>(a.data()), nullptr,
        stride, dist, reinterpret_cast<fftw_complex*>(b.data()), nullptr,
        stride, dist, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

  fftw_plan Nd(const std::vector<int>& sizes, int sign) {
    std::string key = "n";
    std::size_t total = 1;
    for (int g : sizes) {
      key += std::to_string(g) + ",";
      total *= static_cast<std::size_t>(g);
    }
    key += std::to_string(sign);
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<Complex> a(total), b(total);
    fftw_plan p = fftw_plan_dft(
        static_cast<int>(sizes.size()), sizes.data(),
        reinterpret_cast<fftw_complex*>(a.data()),
        reinterpret_cast<fftw_complex*>(b.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

 private:
  PlanCache() = default;
  std::mutex mu_;
  std::map<std::string, fftw_plan> plans_;
};

inline void Execute(fftw_plan p, const Complex* in, Complex* out) {
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace detail

// Unnormalized N-D DFT. sign=-1: X_k = sum_j x_j e^{-2*pi*i*j.k/G};
// sign=+1 is the adjoint synthesis sum. out may not alias in.
inline void FftNd(const std::vector<int>& sizes, const Complex* in,
                  Complex* out, int sign) {
  detail::Execute(detail::PlanCache::Instance().Nd(sizes, sign), in, out);
}

// Unnormalized contiguous 1-D DFT of length n.
inline void Fft1d(int n, const Complex* in, Complex* out, int sign) {
  detail::Execute(detail::PlanCache::Instance().Many1d(n, 1, 1, 0, sign), in,
                  out);
}

// Unnormalized 1-D DFT along axis 0 of a row-major N-D array: `rest` signals
// of length n0 with element stride `rest`, one signal per residual position.
inline void FftAxis0(int n0, std::size_t rest, const Complex* in, Complex* out,
                     int sign) {
  detail::Execute(detail::PlanCache::Instance().Many1d(
                      n0, static_cast<int>(rest), static_cast<int>(rest), 1,
                      sign),
                  in, out);
}

}  // namespace ndspec
