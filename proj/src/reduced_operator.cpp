#include "onebit/reduced_operator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "onebit/fft.hpp"
#include "onebit/parallel.hpp"

namespace onebit {

namespace {

constexpr std::size_t kBlock = 512;

std::vector<cplx> steering(std::size_t m, std::size_t M, std::size_t count) {
  std::vector<cplx> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t p = (i * m) % M;
    out[i] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(p) / static_cast<double>(M));
  }
  return out;
}

}  // namespace

ReducedOperator::ReducedOperator(std::vector<GridIndex> cells, const GridSpec& grid)
    : cells_(std::move(cells)), grid_(grid), base_(grid.base), dims_(grid.dims()) {
  grid_.validate();
  if (cells_.empty()) throw EmptySupport();
  std::set<GridIndex> unique;
  for (const auto& c : cells_) {
    if (c.d >= dims_.d0 || c.sp >= dims_.d1 || c.r >= dims_.d2)
      throw std::invalid_argument("reduced operator: cell outside the grid");
    if (!unique.insert(c).second) throw std::invalid_argument("reduced operator: duplicate cell");
  }

  std::map<std::size_t, std::map<std::size_t, std::vector<std::size_t>>> tree;
  for (std::size_t i = 0; i < cells_.size(); ++i) tree[cells_[i].d][cells_[i].sp].push_back(i);
  for (auto& [d, pairs] : tree) {
    DopplerGroup g{d, steering(d, dims_.d0, base_.d0), {}};
    for (auto& [sp, cols] : pairs) g.pairs.push_back({sp, steering(sp, dims_.d1, base_.d1), cols});
    groups_.push_back(std::move(g));
  }
  phase_r_.reserve(cells_.size());
  for (const auto& c : cells_) phase_r_.push_back(steering(c.r, dims_.d2, base_.d2));
}

ReducedOperator ReducedOperator::from(const PreDetectionSet& set) {
  std::vector<GridIndex> cells;
  cells.reserve(set.size());
  for (const auto& e : set.entries) cells.push_back(e.cell);
  return ReducedOperator(std::move(cells), set.grid);
}

double ReducedOperator::column_norm() const { return std::sqrt(static_cast<double>(rows())); }

bool ReducedOperator::use_fft_stage() const noexcept {
  const double direct = static_cast<double>(groups_.size()) * static_cast<double>(base_.d0);
  const double via_fft = 3.0 * static_cast<double>(dims_.d0) * std::log2(static_cast<double>(dims_.d0) + 1.0) +
                         static_cast<double>(base_.d0);
  return direct > via_fft;
}

void ReducedOperator::forward(std::span<const cplx> x, std::span<cplx> z) const {
  if (x.size() != cols() || z.size() != rows()) throw std::invalid_argument("forward: size mismatch");
  const std::size_t K = base_.d0, L = base_.d1, N = base_.d2, LN = L * N;

  // v[g](l, n) = sum over pairs of phase_sp(l) * sum over cols of x_i phase_r(n)
  std::vector<std::vector<cplx>> v(groups_.size());
  parallel_for(groups_.size(), [&](std::size_t gi) {
    const auto& g = groups_[gi];
    auto& vg = v[gi];
    vg.assign(LN, cplx{});
    std::vector<cplx> u(N);
    for (const auto& pr : g.pairs) {
      std::fill(u.begin(), u.end(), cplx{});
      for (std::size_t c : pr.cols) {
        const cplx xc = x[c];
        const auto& ph = phase_r_[c];
        for (std::size_t n = 0; n < N; ++n) u[n] += xc * ph[n];
      }
      for (std::size_t l = 0; l < L; ++l) {
        const cplx s = pr.phase_sp[l];
        cplx* row = vg.data() + l * N;
        for (std::size_t n = 0; n < N; ++n) row[n] += s * u[n];
      }
    }
  });

  if (use_fft_stage()) {
    // slow-time synthesis by inverse FFT over the Doppler grid, one column per (l, n)
    const std::size_t Md = dims_.d0;
    std::vector<cplx> buf(Md * LN, cplx{});
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      cplx* dst = buf.data() + groups_[gi].d_bin * LN;
      for (std::size_t i = 0; i < LN; ++i) dst[i] += v[gi][i];
    }
    fft::transform_many(buf.data(), Md, LN, LN, 1, fft::Direction::Inverse);
    std::copy_n(buf.begin(), K * LN, z.begin());
    return;
  }
  // blocked over (l, n) so the group rows of a block stay in cache across pulses
  const std::size_t blocks = (LN + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t lo = b * kBlock, hi = std::min(LN, lo + kBlock);
    for (std::size_t k = 0; k < K; ++k) {
      cplx* zk = z.data() + k * LN;
      std::fill(zk + lo, zk + hi, cplx{});
      for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
        const cplx s = groups_[gi].phase_d[k];
        const cplx* vg = v[gi].data();
        for (std::size_t i = lo; i < hi; ++i) zk[i] += s * vg[i];
      }
    }
  });
}

void ReducedOperator::adjoint(std::span<const cplx> z, std::span<cplx> x) const {
  if (z.size() != rows() || x.size() != cols()) throw std::invalid_argument("adjoint: size mismatch");
  const std::size_t K = base_.d0, L = base_.d1, N = base_.d2, LN = L * N;

  // v[g](l, n) = sum_k conj(phase_d(k)) z(k, l, n)
  std::vector<std::vector<cplx>> v(groups_.size());
  if (use_fft_stage()) {
    const std::size_t Md = dims_.d0;
    std::vector<cplx> buf(Md * LN, cplx{});
    std::copy_n(z.begin(), K * LN, buf.begin());
    fft::transform_many(buf.data(), Md, LN, LN, 1, fft::Direction::Forward);
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const cplx* src = buf.data() + groups_[gi].d_bin * LN;
      v[gi].assign(src, src + LN);
    }
  } else {
    for (auto& vg : v) vg.assign(LN, cplx{});
    const std::size_t blocks = (LN + kBlock - 1) / kBlock;
    parallel_for(blocks, [&](std::size_t b) {
      const std::size_t lo = b * kBlock, hi = std::min(LN, lo + kBlock);
      for (std::size_t k = 0; k < K; ++k) {
        const cplx* zk = z.data() + k * LN;
        for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
          const cplx s = std::conj(groups_[gi].phase_d[k]);
          cplx* vg = v[gi].data();
          for (std::size_t i = lo; i < hi; ++i) vg[i] += s * zk[i];
        }
      }
    });
  }

  parallel_for(groups_.size(), [&](std::size_t gi) {
    const auto& g = groups_[gi];
    std::vector<cplx> u(N);
    for (const auto& pr : g.pairs) {
      std::fill(u.begin(), u.end(), cplx{});
      for (std::size_t l = 0; l < L; ++l) {
        const cplx s = std::conj(pr.phase_sp[l]);
        const cplx* row = v[gi].data() + l * N;
        for (std::size_t n = 0; n < N; ++n) u[n] += s * row[n];
      }
      for (std::size_t c : pr.cols) {
        const auto& ph = phase_r_[c];
        cplx acc{};
        for (std::size_t n = 0; n < N; ++n) acc += std::conj(ph[n]) * u[n];
        x[c] = acc;
      }
    }
  });
}

std::vector<cplx> ReducedOperator::forward(std::span<const cplx> x) const {
  std::vector<cplx> z(rows());
  forward(x, z);
  return z;
}

std::vector<cplx> ReducedOperator::adjoint(std::span<const cplx> z) const {
  std::vector<cplx> x(cols());
  adjoint(z, x);
  return x;
}

}  // namespace onebit
