#include "nlslab/fft3.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "nlslab/errors.hpp"

namespace nlslab {

namespace {

struct PlanKey {
  int N;
  int n;
  int sign;
  bool operator<(const PlanKey& o) const {
    if (N != o.N) return N < o.N;
    if (n != o.n) return n < o.n;
    return sign < o.sign;
  }
};

// FFTW planning is not thread-safe; execution of a cached plan on caller
// buffers is.  FFTW_UNALIGNED keeps plans valid for any buffer.
std::mutex plan_mutex;
std::map<PlanKey, fftw_plan>& plan_cache() {
  static std::map<PlanKey, fftw_plan> cache;
  return cache;
}

fftw_plan get_plan(const BoxGrid& grid, int sign) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  const PlanKey key{grid.N, grid.n, sign};
  auto& cache = plan_cache();
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  std::vector<std::complex<double>> scratch(grid.total());
  std::vector<int> dims(grid.N, grid.n);
  fftw_plan plan = fftw_plan_dft(
      grid.N, dims.data(), reinterpret_cast<fftw_complex*>(scratch.data()),
      reinterpret_cast<fftw_complex*>(scratch.data()), sign,
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan) throw numerical_error("FFT planning failed");
  cache.emplace(key, plan);
  return plan;
}

void run(const BoxGrid& grid, std::vector<std::complex<double>>& data, int sign) {
  validate(Grid{grid});
  if (data.size() != grid.total())
    throw validation_error("FFT: data size does not match the grid");
  fftw_plan plan = get_plan(grid, sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data.data()),
                   reinterpret_cast<fftw_complex*>(data.data()));
}

}  // namespace

void fft_forward(const BoxGrid& grid, std::vector<std::complex<double>>& data) {
  run(grid, data, FFTW_FORWARD);
}

void fft_backward(const BoxGrid& grid, std::vector<std::complex<double>>& data) {
  run(grid, data, FFTW_BACKWARD);
}

}  // namespace nlslab
