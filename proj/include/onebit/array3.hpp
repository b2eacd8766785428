#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace onebit {

using cplx = std::complex<double>;

/// Extents of a row-major three-axis array (slow time, spatial, fast time).
struct Shape3 {
  std::size_t d0 = 0;
  std::size_t d1 = 0;
  std::size_t d2 = 0;

  [[nodiscard]] constexpr std::size_t size() const noexcept { return d0 * d1 * d2; }
  [[nodiscard]] constexpr std::size_t index(std::size_t i, std::size_t j,
                                            std::size_t k) const noexcept {
    return (i * d1 + j) * d2 + k;
  }
  friend constexpr bool operator==(const Shape3&, const Shape3&) = default;
};

template <class T>
class Array3 {
 public:
  Array3() = default;
  explicit Array3(Shape3 shape, T fill = T{}) : shape_(shape), data_(shape.size(), fill) {}

  [[nodiscard]] const Shape3& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[shape_.index(i, j, k)]; }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[shape_.index(i, j, k)];
  }
  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  [[nodiscard]] std::span<T> flat() noexcept { return data_; }
  [[nodiscard]] std::span<const T> flat() const noexcept { return data_; }
  [[nodiscard]] std::vector<T>& storage() noexcept { return data_; }
  [[nodiscard]] const std::vector<T>& storage() const noexcept { return data_; }

 private:
  Shape3 shape_{};
  std::vector<T> data_;
};

}  // namespace onebit
