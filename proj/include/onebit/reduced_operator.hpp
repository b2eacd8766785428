#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "onebit/pipeline.hpp"

namespace onebit {

class EmptySupport : public std::invalid_argument {
 public:
  EmptySupport() : std::invalid_argument("pre-detection set is empty: nothing to recover") {}
};

/// Matrix-free KLN x I_pd operator whose column i is the steering cube
/// a_d(f_d,i) (x) a_sp(f_sp,i) (x) a_r(f_r,i) of grid cell i, entries exp(+j 2 pi (...)).
/// Products are evaluated axis by axis: fast time per cell, then spatial per
/// (Doppler, spatial) pair, then slow time per Doppler bin.
class ReducedOperator {
 public:
  ReducedOperator(std::vector<GridIndex> cells, const GridSpec& grid);
  static ReducedOperator from(const PreDetectionSet& set);

  [[nodiscard]] std::size_t rows() const noexcept { return base_.size(); }
  [[nodiscard]] std::size_t cols() const noexcept { return cells_.size(); }
  [[nodiscard]] const std::vector<GridIndex>& cells() const noexcept { return cells_; }
  [[nodiscard]] const GridSpec& grid() const noexcept { return grid_; }
  [[nodiscard]] double column_norm() const;

  /// z = A x
  void forward(std::span<const cplx> x, std::span<cplx> z) const;
  /// x = A^H z
  void adjoint(std::span<const cplx> z, std::span<cplx> x) const;

  [[nodiscard]] std::vector<cplx> forward(std::span<const cplx> x) const;
  [[nodiscard]] std::vector<cplx> adjoint(std::span<const cplx> z) const;

 private:
  struct PairGroup {
    std::size_t sp_bin;
    std::vector<cplx> phase_sp;     // exp(+j 2 pi l m_sp / M_sp), l < L
    std::vector<std::size_t> cols;  // indices into cells_
  };
  struct DopplerGroup {
    std::size_t d_bin;
    std::vector<cplx> phase_d;  // exp(+j 2 pi k m_d / M_d), k < K
    std::vector<PairGroup> pairs;
  };

  [[nodiscard]] bool use_fft_stage() const noexcept;

  std::vector<GridIndex> cells_;
  GridSpec grid_;
  Shape3 base_;
  Shape3 dims_;
  std::vector<DopplerGroup> groups_;
  std::vector<std::vector<cplx>> phase_r_;  // per column, exp(+j 2 pi n m_r / M_r), n < N
};

}  // namespace onebit
