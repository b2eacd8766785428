#include "onebit/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace onebit::fft {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void transform_many(cplx* data, std::size_t n, std::size_t howmany, std::size_t stride, std::size_t dist,
                    Direction dir) {
  if (n == 0 || howmany == 0) return;
  auto* buf = reinterpret_cast<fftw_complex*>(data);
  const int len = static_cast<int>(n);
  const int sign = dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
  fftw_plan plan = nullptr;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_many_dft(1, &len, static_cast<int>(howmany), buf, nullptr, static_cast<int>(stride),
                              static_cast<int>(dist), buf, nullptr, static_cast<int>(stride),
                              static_cast<int>(dist), sign, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw std::runtime_error("FFTW planning failed");
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace onebit::fft
