#pragma once

// Thin FFTW wrapper with a per-size plan cache. Transforms are unnormalized
// DFTs; callers apply the physical quadrature factors.

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include "wavepacket/common.hpp"

namespace wp {

class FftEngine {
 public:
  static FftEngine& instance() {
    static FftEngine e;
    return e;
  }

  // In-place unnormalized DFT, sign = FFTW_FORWARD (-1) or FFTW_BACKWARD (+1).
  void transform_1d(std::vector<cplx>& data, int sign) {
    fftw_plan p = plan_1d(static_cast<int>(data.size()), sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data.data()),
                     reinterpret_cast<fftw_complex*>(data.data()));
  }

  // In-place unnormalized 2D DFT on an n x n row-major array.
  void transform_2d(std::vector<cplx>& data, int n, int sign) {
    if (static_cast<int>(data.size()) != n * n)
      throw ParameterError("transform_2d: size mismatch");
    fftw_plan p = plan_2d(n, sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data.data()),
                     reinterpret_cast<fftw_complex*>(data.data()));
  }

 private:
  FftEngine() = default;
  ~FftEngine() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

  fftw_plan plan_1d(int n, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_tuple(1, n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<cplx> scratch(static_cast<size_t>(n));
    fftw_plan p = fftw_plan_dft_1d(
        n, reinterpret_cast<fftw_complex*>(scratch.data()),
        reinterpret_cast<fftw_complex*>(scratch.data()), sign, FFTW_ESTIMATE);
    plans_[key] = p;
    return p;
  }

  fftw_plan plan_2d(int n, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_tuple(2, n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<cplx> scratch(static_cast<size_t>(n) * n);
    fftw_plan p = fftw_plan_dft_2d(
        n, n, reinterpret_cast<fftw_complex*>(scratch.data()),
        reinterpret_cast<fftw_complex*>(scratch.data()), sign, FFTW_ESTIMATE);
    plans_[key] = p;
    return p;
  }

  std::mutex mu_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

}  // namespace wp
