#include "onebit/gamp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace onebit {

namespace {

constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return s;
}

}  // namespace

double erfcx(double x) {
  if (x <= 6.0) return std::exp(x * x) * std::erfc(x);
  // asymptotic series 1/(x sqrt(pi)) sum_n (-1)^n (2n-1)!! / (2x^2)^n
  const double inv = 1.0 / (2.0 * x * x);
  double term = 1.0, sum = 1.0;
  for (int n = 1; n <= 20; ++n) {
    term *= -(2.0 * n - 1.0) * inv;
    sum += term;
  }
  return sum / (x * std::sqrt(std::numbers::pi));
}

ScalarPosterior denoise_output(double p, double tau, int y, double noise_var) {
  if (!(noise_var > 0.0)) throw std::invalid_argument("denoise_output: noise_var must be > 0");
  if (tau < 0.0) throw std::invalid_argument("denoise_output: tau must be >= 0");
  if (tau == 0.0) return {p, 0.0};
  const double yy = y >= 0 ? 1.0 : -1.0;
  const double s = std::sqrt(tau + noise_var);
  const double eta = yy * p / s;
  // phi(eta) / Phi(eta)
  const double ratio = kSqrt2OverPi / erfcx(-eta / std::numbers::sqrt2);
  const double mean = p + yy * tau * ratio / s;
  const double shrink = std::clamp(ratio * (eta + ratio), 0.0, 1.0);
  const double var = tau - tau * tau * shrink / (s * s);
  return {mean, std::max(var, 0.0)};
}

InputPosterior denoise_input(cplx r, double tau, const BGPrior& prior) {
  if (!(tau > 0.0)) throw std::invalid_argument("denoise_input: tau must be > 0");
  InputPosterior out;
  const double sv = prior.var;
  out.slab_mean = (sv * r + tau * prior.mean) / (sv + tau);
  out.slab_var = sv * tau / (sv + tau);
  if (prior.rho <= 0.0) return out;
  double activity = 1.0;
  if (prior.rho < 1.0) {
    const double llr = std::log(prior.rho) - std::log1p(-prior.rho) - std::norm(r - prior.mean) / (sv + tau) -
                       std::log(sv + tau) + std::norm(r) / tau + std::log(tau);
    activity = sigmoid(llr);
  }
  out.activity = activity;
  out.mean = activity * out.slab_mean;
  out.var = std::max(0.0, activity * (out.slab_var + std::norm(out.slab_mean)) - std::norm(out.mean));
  return out;
}

BGPrior em_update(const BGPrior& current, std::span<const InputPosterior> post) {
  BGPrior next = current;
  if (post.empty()) return next;
  double wsum = 0.0;
  cplx msum{};
  for (const auto& q : post) {
    wsum += q.activity;
    msum += q.activity * q.slab_mean;
  }
  next.rho = std::clamp(wsum / static_cast<double>(post.size()), kRhoMin, 1.0 - kRhoMin);
  if (wsum < 1e-12) return next;
  next.mean = msum / wsum;
  double vsum = 0.0;
  for (const auto& q : post) vsum += q.activity * (std::norm(next.mean - q.slab_mean) + q.slab_var);
  next.var = std::max(vsum / wsum, std::numeric_limits<double>::min());
  return next;
}

BGPrior initial_prior(std::span<const cplx> bits, const ReducedOperator& op, double noise_var_per_part) {
  const auto mf = op.adjoint(bits);
  const double scale = std::sqrt(noise_var_per_part) * std::sqrt(std::numbers::pi / 2.0) / static_cast<double>(op.rows());
  BGPrior p;
  p.rho = std::min(0.9, 0.25);
  p.mean = {};
  p.var = norm2(mf) * scale * scale / (p.rho * static_cast<double>(op.cols()));
  if (!(p.var > 0.0)) p.var = noise_var_per_part;
  return p;
}

GampResult gamp_run(std::span<const cplx> bits, const ReducedOperator& op, std::optional<BGPrior> prior_in,
                    double noise_var, const GampControls& ctl) {
  const std::size_t M = op.rows(), n = op.cols();
  if (bits.size() != M) throw std::invalid_argument("gamp_run: bit vector length does not match the operator");
  if (!(noise_var > 0.0)) throw std::invalid_argument("gamp_run: noise variance must be > 0");
  if (!(ctl.damping > 0.0 && ctl.damping <= 1.0)) throw std::invalid_argument("gamp_run: damping must be in (0, 1]");

  BGPrior prior = prior_in ? *prior_in : initial_prior(bits, op, noise_var);
  const bool learn = !prior_in.has_value() && ctl.learn_prior;

  // x, vx: undamped posterior moments, used for p. xbar: damped estimate, used for r.
  struct State {
    std::vector<cplx> x;
    std::vector<cplx> xbar;
    std::vector<double> vx;
    std::vector<double> act;
    std::vector<cplx> s;
    double vs = 0.0;
    BGPrior prior;
  };
  State st;
  const cplx x0 = prior.rho * prior.mean;
  const double vx0 = prior.rho * (prior.var + std::norm(prior.mean)) - std::norm(x0);
  st.x.assign(n, x0);
  st.xbar = st.x;
  st.vx.assign(n, vx0);
  st.act.assign(n, prior.rho);
  st.s.assign(M, cplx{});
  st.vs = 0.0;
  st.prior = prior;

  GampResult res;
  double beta = ctl.damping;
  double prev_residual = std::numeric_limits<double>::infinity();
  double best_residual = std::numeric_limits<double>::infinity();
  bool monotone = true;
  std::vector<cplx> best_x = st.x;
  std::vector<double> best_vx = st.vx, best_act = st.act;
  BGPrior best_prior = st.prior;

  std::vector<cplx> z(M), p(M), r(n);
  std::vector<InputPosterior> post(n);

  for (std::size_t it = 0; it < ctl.max_iter; ++it) {
    res.iterations = it + 1;
    double vp = 0.0;
    for (double v : st.vx) vp += v;
    vp = std::max(vp, 1e-300);

    op.forward(st.x, z);
    const double b = it == 0 ? 1.0 : beta;
    double vs_new = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      p[i] = z[i] - vp * st.s[i];
      const auto re = denoise_output(p[i].real(), vp / 2.0, bits[i].real() >= 0 ? 1 : -1, noise_var);
      const auto im = denoise_output(p[i].imag(), vp / 2.0, bits[i].imag() >= 0 ? 1 : -1, noise_var);
      const cplx zh(re.mean, im.mean);
      st.s[i] = b * ((zh - p[i]) / vp) + (1.0 - b) * st.s[i];
      vs_new += (1.0 - (re.var + im.var) / vp) / vp;
    }
    vs_new /= static_cast<double>(M);
    st.vs = b * vs_new + (1.0 - b) * st.vs;
    const double vr = 1.0 / (static_cast<double>(M) * std::max(st.vs, 1e-300));

    op.adjoint(st.s, r);
    for (std::size_t j = 0; j < n; ++j) {
      st.xbar[j] = b * st.x[j] + (1.0 - b) * st.xbar[j];
      r[j] = st.xbar[j] + vr * r[j];
    }
    for (std::size_t j = 0; j < n; ++j) post[j] = denoise_input(r[j], vr, st.prior);
    if (learn && (it + 1) % std::max<std::size_t>(1, ctl.em_interval) == 0) st.prior = em_update(st.prior, post);

    double diff = 0.0, mag = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      diff += std::norm(post[j].mean - st.x[j]);
      mag += std::norm(post[j].mean);
    }
    const double residual = mag > 0.0 ? std::sqrt(diff / mag) : (diff > 0.0 ? 1.0 : 0.0);

    for (std::size_t j = 0; j < n; ++j) {
      st.x[j] = post[j].mean;
      st.vx[j] = post[j].var;
      st.act[j] = post[j].activity;
    }
    res.residuals.push_back(residual);
    if (residual < best_residual) {
      best_residual = residual;
      best_x = st.x;
      best_vx = st.vx;
      best_act = st.act;
      best_prior = st.prior;
    }
    const bool increased = it > ctl.warmup && residual > prev_residual;
    monotone = monotone && !increased;
    if (residual < ctl.tol) {
      res.converged = monotone;
      break;
    }
    if (increased)
      beta = std::max(beta / 2.0, ctl.min_damping);
    else
      beta = std::min(ctl.damping, beta * 1.1);
    prev_residual = residual;
  }

  if (!res.converged) {
    st.x = std::move(best_x);
    st.vx = std::move(best_vx);
    st.act = std::move(best_act);
    st.prior = best_prior;
  }
  res.x_hat = std::move(st.x);
  res.x_var = std::move(st.vx);
  res.activity = std::move(st.act);
  res.prior = st.prior;
  return res;
}

double gamma2_from_sensitivity(std::size_t kln, double th_db) {
  const double ga = 10.0 * std::log10(static_cast<double>(kln));
  return std::pow(10.0, (th_db - ga) / 20.0);
}

std::size_t cell_distance(const GridIndex& a, const GridIndex& b, const Shape3& dims) {
  auto circ = [](std::size_t x, std::size_t y, std::size_t n) {
    const std::size_t d = x > y ? x - y : y - x;
    return std::min(d, n - d);
  };
  return std::max({circ(a.d, b.d, dims.d0), circ(a.sp, b.sp, dims.d1), circ(a.r, b.r, dims.d2)});
}

DetectionReport detect_final(const GampResult& result, const ReducedOperator& op, double gamma2,
                             const std::vector<GridIndex>& truth, std::size_t tolerance) {
  if (gamma2 < 0.0) throw std::invalid_argument("gamma2 must be >= 0");
  if (result.x_hat.size() != op.cols()) throw std::invalid_argument("detect_final: result does not match operator");
  DetectionReport rep;
  rep.gamma2 = gamma2;
  for (std::size_t i = 0; i < result.x_hat.size(); ++i)
    if (std::abs(result.x_hat[i]) >= gamma2) rep.detected.push_back(i);
  if (truth.empty()) return rep;
  const Shape3 dims = op.grid().dims();
  rep.target_hit.assign(truth.size(), false);
  for (std::size_t i : rep.detected) {
    bool any = false;
    for (std::size_t t = 0; t < truth.size(); ++t) {
      if (cell_distance(op.cells()[i], truth[t], dims) <= tolerance) {
        any = true;
        rep.target_hit[t] = true;
      }
    }
    rep.detected_is_true.push_back(any);
  }
  return rep;
}

Reconstruction reconstruct_and_nmse(const GampResult& result, const ReducedOperator& op,
                                    std::span<const cplx> truth) {
  if (truth.size() != op.rows()) throw std::invalid_argument("reconstruct_and_nmse: truth length mismatch");
  const double tn = norm2(truth);
  if (!(tn > 0.0)) throw std::invalid_argument("reconstruct_and_nmse: truth signal has zero norm");
  Reconstruction rec;
  rec.signal = op.forward(result.x_hat);
  double err = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) err += std::norm(rec.signal[i] - truth[i]);
  rec.nmse_db = err > 0.0 ? std::max(kNmseFloorDb, 10.0 * std::log10(err / tn)) : kNmseFloorDb;
  return rec;
}

}  // namespace onebit
