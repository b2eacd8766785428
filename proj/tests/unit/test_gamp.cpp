#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "onebit/gamp.hpp"
#include "oracles.hpp"

using namespace onebit;
using namespace onebit::oracles;

namespace {

double log_uniform(std::mt19937_64& eng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(eng));
}

}  // namespace

TEST_CASE("output denoiser matches quadrature") {
  std::mt19937_64 eng(1);
  std::uniform_real_distribution<double> eta(-6.0, 6.0);
  for (int t = 0; t < 200; ++t) {
    const double tau = log_uniform(eng, 1e-3, 1e3);
    const double nv = log_uniform(eng, 1e-3, 1e3);
    const double p = eta(eng) * std::sqrt(tau + nv);
    const int y = (eng() & 1) ? 1 : -1;
    const auto got = denoise_output(p, tau, y, nv);
    const auto want = output_oracle(p, tau, y, nv);
    CHECK(std::abs(got.mean - want.mean) <= 1e-8 * (std::abs(want.mean) + std::sqrt(tau)));
    CHECK(std::abs(got.var - want.var) <= 1e-8 * tau);
  }
}

TEST_CASE("output denoiser limits and symmetry") {
  const auto d = denoise_output(0.7, 1e-14, -1, 1.0);
  CHECK(d.mean == doctest::Approx(0.7).epsilon(1e-10));
  CHECK(d.var < 1e-13);
  CHECK(denoise_output(0.7, 0.0, 1, 1.0).var == 0.0);
  const auto up = denoise_output(0.0, 2.0, 1, 0.5);
  const auto dn = denoise_output(0.0, 2.0, -1, 0.5);
  CHECK(up.mean > 0.0);
  CHECK(up.mean == doctest::Approx(-dn.mean));
  // far on the wrong side of the threshold: finite, never NaN
  const auto far = denoise_output(-60.0, 1.0, 1, 1e-4);
  CHECK(std::isfinite(far.mean));
  CHECK(std::isfinite(far.var));
  CHECK(far.var >= 0.0);
  CHECK_THROWS_AS(denoise_output(0.0, 1.0, 1, 0.0), std::invalid_argument);
}

TEST_CASE("erfcx against the direct product and its asymptote") {
  for (double x : {-3.0, -0.5, 0.0, 1.0, 5.9}) CHECK(erfcx(x) == doctest::Approx(std::exp(x * x) * std::erfc(x)).epsilon(1e-13));
  CHECK(erfcx(6.0 + 1e-9) == doctest::Approx(erfcx(6.0)).epsilon(1e-9));
  CHECK(erfcx(1e4) == doctest::Approx(1.0 / (1e4 * std::sqrt(std::numbers::pi))).epsilon(1e-8));
}

TEST_CASE("input denoiser matches quadrature") {
  std::mt19937_64 eng(2);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (int t = 0; t < 40; ++t) {
    BGPrior pr{u(eng), {g(eng), g(eng)}, log_uniform(eng, 1e-3, 1e3)};
    const double tau = log_uniform(eng, 1e-3, 1e3);
    const double scale = std::sqrt(pr.var + tau);
    const cplx r = pr.mean * 0.5 + scale * cplx(g(eng), g(eng)) * 0.7;
    const auto got = denoise_input(r, tau, pr);
    const auto want = input_oracle(r, tau, pr);
    CHECK(std::abs(got.activity - want.activity) <= 1e-8);
    CHECK(std::abs(got.mean - want.mean) <= 1e-8 * (std::abs(want.mean) + std::sqrt(want.var) + 1e-12));
    CHECK(std::abs(got.var - want.var) <= 1e-8 * (want.var + std::norm(want.mean)) + 1e-300);
  }
}

TEST_CASE("input denoiser edge priors") {
  const auto z = denoise_input({1.0, -2.0}, 0.5, {0.0, {1.0, 0.0}, 2.0});
  CHECK(z.mean == cplx{});
  CHECK(z.var == 0.0);
  CHECK(z.activity == 0.0);
  const BGPrior full{1.0, {0.3, 0.1}, 2.0};
  const cplx r{1.0, -2.0};
  const auto f = denoise_input(r, 0.5, full);
  const cplx want = (2.0 * r + 0.5 * full.mean) / 2.5;
  CHECK(std::abs(f.mean - want) < 1e-14);
  CHECK(f.var == doctest::Approx(2.0 * 0.5 / 2.5));
  CHECK(f.activity == 1.0);
}

TEST_CASE("EM clamps an all-inactive state") {
  std::vector<InputPosterior> post(10);
  const BGPrior cur{0.3, {0.1, 0.0}, 2.0};
  const auto next = em_update(cur, post);
  CHECK(next.rho == kRhoMin);
  CHECK(next.var == 2.0);
  CHECK(next.mean == cur.mean);
}

namespace {

struct Problem {
  GridSpec grid;
  std::vector<GridIndex> cells;
  std::vector<cplx> x;
  std::vector<cplx> bits;
  double noise_var;
};

/// Orthogonal subset of DFT columns with BG coefficients, observed through csign(A x + w).
Problem make_problem(double rho, cplx mu, double s2, double noise_var, std::uint64_t seed) {
  Problem pb;
  pb.grid = {1, {16, 8, 32}};
  pb.noise_var = noise_var;
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> g;
  std::bernoulli_distribution on(rho);
  const Shape3 M = pb.grid.dims();
  for (std::size_t d = 0; d < M.d0; d += 1)
    for (std::size_t s = 0; s < M.d1; s += 2)
      for (std::size_t r = 0; r < M.d2; r += 4) pb.cells.push_back({d, s, r});
  for (std::size_t i = 0; i < pb.cells.size(); ++i)
    pb.x.push_back(on(eng) ? mu + std::sqrt(s2 / 2) * cplx(g(eng), g(eng)) : cplx{});
  const ReducedOperator op(pb.cells, pb.grid);
  const auto z = op.forward(pb.x);
  const double sw = std::sqrt(noise_var);
  for (const auto& v : z) pb.bits.push_back(csign(v + sw * cplx(g(eng), g(eng))));
  return pb;
}

}  // namespace

TEST_CASE("EM-GAMP recovers the generating prior") {
  const double rho = 0.2, s2 = 1.0;
  const cplx mu{0.5, -0.5};
  const auto pb = make_problem(rho, mu, s2, 4.0, 5);
  const ReducedOperator op(pb.cells, pb.grid);
  const auto res = gamp_run(pb.bits, op, std::nullopt, pb.noise_var);
  // realized statistics of the drawn coefficients
  double cnt = 0, var = 0;
  cplx mean{};
  for (const auto& v : pb.x)
    if (v != cplx{}) {
      cnt += 1;
      mean += v;
    }
  mean /= cnt;
  for (const auto& v : pb.x)
    if (v != cplx{}) var += std::norm(v - mean);
  var /= cnt;
  const double rho_hat = cnt / static_cast<double>(pb.x.size());
  MESSAGE("rho " << res.prior.rho << " vs " << rho_hat << ", mean " << res.prior.mean << " vs " << mean << ", var "
                 << res.prior.var << " vs " << var << ", iterations " << res.iterations);
  CHECK(std::abs(res.prior.rho - rho_hat) <= 0.2 * rho_hat);
  CHECK(std::abs(res.prior.mean - mean) <= 0.2 * std::abs(mean));
  CHECK(std::abs(res.prior.var - var) <= 0.2 * var);
  // EM coupling converges linearly; the trace must still be well on its way down
  CHECK(res.residuals.back() < 1e-4);
  for (double v : res.x_var) CHECK(v >= 0.0);
}

TEST_CASE("convergence flag agrees with the residual trace") {
  const auto pb = make_problem(0.1, {1.0, 0.0}, 0.5, 1.0, 8);
  const ReducedOperator op(pb.cells, pb.grid);
  const auto res = gamp_run(pb.bits, op, std::nullopt, pb.noise_var);
  CHECK(res.residuals.size() == res.iterations);
  CHECK(res.iterations <= 200);
  bool monotone = true;
  for (std::size_t i = 6; i < res.residuals.size(); ++i) monotone = monotone && res.residuals[i] <= res.residuals[i - 1];
  CHECK(res.converged == (res.residuals.back() < 1e-6 && monotone));
  GampControls short_run;
  short_run.max_iter = 3;
  const auto cut = gamp_run(pb.bits, op, std::nullopt, pb.noise_var, short_run);
  CHECK(cut.iterations == 3);
  CHECK_FALSE(cut.converged);
}

TEST_CASE("damping changes the path but not the fixed point") {
  const auto pb = make_problem(0.15, {0.8, 0.3}, 0.7, 1.5, 21);
  const ReducedOperator op(pb.cells, pb.grid);
  GampControls fixed;
  fixed.learn_prior = false;
  fixed.damping = 1.0;
  const auto p0 = initial_prior(pb.bits, op, pb.noise_var);
  const auto a = gamp_run(pb.bits, op, p0, pb.noise_var, fixed);
  for (double damping : {0.7, 0.4}) {
    fixed.damping = damping;
    const auto b = gamp_run(pb.bits, op, p0, pb.noise_var, fixed);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    double diff = 0, mag = 0;
    for (std::size_t i = 0; i < a.x_hat.size(); ++i) {
      diff += std::norm(a.x_hat[i] - b.x_hat[i]);
      mag += std::norm(a.x_hat[i]);
    }
    CHECK(std::sqrt(diff / mag) < 1e-4);
  }
}

TEST_CASE("fixed prior path equals the supplied-prior path") {
  const auto pb = make_problem(0.2, {0.0, 0.0}, 1.0, 2.0, 6);
  const ReducedOperator op(pb.cells, pb.grid);
  const auto p0 = initial_prior(pb.bits, op, pb.noise_var);
  GampControls fixed;
  fixed.learn_prior = false;
  const auto a = gamp_run(pb.bits, op, std::nullopt, pb.noise_var, fixed);
  const auto b = gamp_run(pb.bits, op, p0, pb.noise_var);
  CHECK(a.x_hat == b.x_hat);
  CHECK(a.iterations == b.iterations);
  CHECK(a.prior.rho == p0.rho);
  // deterministic
  const auto c = gamp_run(pb.bits, op, std::nullopt, pb.noise_var);
  const auto d = gamp_run(pb.bits, op, std::nullopt, pb.noise_var);
  CHECK(c.x_hat == d.x_hat);
}

TEST_CASE("joint scaling of noise and amplitudes scales the estimate") {
  const auto pb = make_problem(0.2, {0.5, 0.0}, 1.0, 2.0, 12);
  const ReducedOperator op(pb.cells, pb.grid);
  const auto a = gamp_run(pb.bits, op, std::nullopt, pb.noise_var);
  const auto b = gamp_run(pb.bits, op, std::nullopt, 4.0 * pb.noise_var);
  for (std::size_t i = 0; i < a.x_hat.size(); ++i)
    CHECK(std::abs(b.x_hat[i] - 2.0 * a.x_hat[i]) <= 1e-9 * (1 + std::abs(b.x_hat[i])));
}

TEST_CASE("threshold and NMSE helpers") {
  CHECK(gamma2_from_sensitivity(100000, 13.6) == doctest::Approx(std::pow(10.0, (13.6 - 50.0) / 20.0)));
  const GridSpec g{1, {2, 2, 4}};
  const ReducedOperator op({{0, 0, 1}, {1, 1, 2}, {0, 1, 3}}, g);
  GampResult r;
  r.x_hat = {{0.1, 0.0}, {0.0, -0.5}, {0.02, 0.0}};
  const auto all = detect_final(r, op, 0.0);
  CHECK(all.detected.size() == 3);
  const auto some = detect_final(r, op, 0.09, {{1, 1, 2}}, 0);
  CHECK(some.detected == std::vector<std::size_t>{0, 1});
  CHECK(some.detected_is_true == std::vector<bool>{false, true});
  CHECK(some.target_hit == std::vector<bool>{true});
  CHECK_THROWS_AS(detect_final(r, op, -1.0), std::invalid_argument);

  const auto truth = op.forward(r.x_hat);
  CHECK(reconstruct_and_nmse(r, op, truth).nmse_db == kNmseFloorDb);
  GampResult zero;
  zero.x_hat.assign(3, cplx{});
  CHECK(reconstruct_and_nmse(zero, op, truth).nmse_db == doctest::Approx(0.0));
  CHECK_THROWS_AS(reconstruct_and_nmse(zero, op, std::vector<cplx>(op.rows())), std::invalid_argument);
  CHECK(cell_distance({0, 0, 0}, {3, 1, 2}, {4, 2, 4}) == 2);
}
