#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "onebit/reduced_operator.hpp"

namespace onebit {

struct BGPrior {
  double rho = 0.25;  // probability of a nonzero entry
  cplx mean{};        // mean of the nonzero component
  double var = 1.0;   // variance of the nonzero component
};

inline constexpr double kRhoMin = 1e-6;

struct ScalarPosterior {
  double mean = 0.0;
  double var = 0.0;
};

/// MMSE estimate of z ~ N(p, tau) observed as y = sign(z + w), w ~ N(0, noise_var).
ScalarPosterior denoise_output(double p, double tau, int y, double noise_var);

struct InputPosterior {
  cplx mean{};
  double var = 0.0;       // E|x|^2 - |E x|^2
  double activity = 0.0;  // posterior probability of the nonzero component
  cplx slab_mean{};
  double slab_var = 0.0;
};

/// MMSE estimate of x under a Bernoulli complex-Gaussian prior from r = x + CN(0, tau).
InputPosterior denoise_input(cplx r, double tau, const BGPrior& prior);

/// Scaled complementary error function exp(x^2) erfc(x).
double erfcx(double x);

/// EM re-estimate of the prior from input posteriors; `current` is kept where the data give no information.
BGPrior em_update(const BGPrior& current, std::span<const InputPosterior> posteriors);

struct GampControls {
  std::size_t max_iter = 200;
  double tol = 1e-6;
  double damping = 0.7;
  double min_damping = 1.0 / 64.0;
  std::size_t warmup = 5;      // after this many iterations a residual increase halves the damping and marks the run non-converged
  bool learn_prior = true;
  std::size_t em_interval = 1;  // EM every n iterations; n > 1 gives an outer loop
};

struct GampResult {
  std::vector<cplx> x_hat;
  std::vector<double> x_var;
  std::vector<double> activity;
  BGPrior prior;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> residuals;
};

/// Initial prior from the matched-filter energy: rho0 = 0.25, mu0 = 0 and
/// var0 = ||x_tilde||^2 / (rho0 I_pd) with x_tilde = A^H r * sigma_w sqrt(pi/2) / M.
BGPrior initial_prior(std::span<const cplx> bits, const ReducedOperator& op, double noise_var_per_part);

/// Sum-product GAMP with scalar variances for r = csign(A x + w). `noise_var_per_part` is
/// sigma_w^2. When `prior` is empty the prior is initialized from the data and learned by EM.
GampResult gamp_run(std::span<const cplx> bits, const ReducedOperator& op, std::optional<BGPrior> prior,
                    double noise_var_per_part, const GampControls& controls = {});

struct DetectionReport {
  double gamma2 = 0.0;
  std::vector<std::size_t> detected;  // column indices with |x_hat| >= gamma2
  std::vector<bool> detected_is_true; // filled when truth is supplied
  std::vector<bool> target_hit;       // per truth cell
};

/// gamma2 as an amplitude: 10^{(T_h - G_a) / 20} with G_a = 10 log10(KLN).
double gamma2_from_sensitivity(std::size_t kln, double th_db);

/// `truth` holds the grid cells of the true targets; `tolerance` is the per-axis cell
/// distance (circular) that still counts as a hit.
DetectionReport detect_final(const GampResult& result, const ReducedOperator& op, double gamma2,
                             const std::vector<GridIndex>& truth = {}, std::size_t tolerance = 0);

struct Reconstruction {
  std::vector<cplx> signal;
  double nmse_db = 0.0;
};

inline constexpr double kNmseFloorDb = -300.0;

Reconstruction reconstruct_and_nmse(const GampResult& result, const ReducedOperator& op,
                                    std::span<const cplx> truth_signal);

/// Circular per-axis distance between two cells.
std::size_t cell_distance(const GridIndex& a, const GridIndex& b, const Shape3& dims);

}  // namespace onebit
