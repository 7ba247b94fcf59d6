#include "mide/loss.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace mide {

namespace {

// Fixed block size for the deterministic reduction. Partial sums are
// formed per block (parallel) and combined in block order (serial), so the
// result does not depend on the thread count.
constexpr std::size_t kBlock = 2048;

void check_dims(const Params& params, const QuadratureScheme& quad,
                const char* where) {
  if (static_cast<std::size_t>(params.beta.size()) != 1 + quad.p ||
      static_cast<std::size_t>(params.alpha.size()) != quad.q)
    throw numeric_error(std::string(where) + ": parameter dimension mismatch");
}

// log(expit(t)), stable for large |t|.
double log_expit(double t) {
  if (t >= 0.0) return -std::log1p(std::exp(-t));
  return t - std::log1p(std::exp(t));
}

struct NodeState {
  double lp_x;    // capped linear predictor of the intensity
  double b;       // detection probability
  double lambda;  // thinned intensity
};

inline NodeState node_state(const Params& params, const QuadratureScheme& quad,
                            std::size_t i, std::size_t* sat) {
  NodeState s;
  s.lp_x = cap_linpred(dot(params.beta.data(), quad.x_row(i), 1 + quad.p), sat);
  s.b = expit(dot(params.alpha.data(), quad.z_row(i), quad.q));
  s.lambda = std::exp(s.lp_x) * s.b;
  return s;
}

// Locate the first node whose contribution is non-finite, for error
// messages from the scalar losses.
[[noreturn]] void throw_nonfinite(const Params& params, const QuadratureScheme& quad,
                                  const char* where) {
  for (std::size_t i = 0; i < quad.r; ++i) {
    std::size_t sat = 0;
    const double lp_x = cap_linpred(dot(params.beta.data(), quad.x_row(i), 1 + quad.p), &sat);
    const double lp_z = dot(params.alpha.data(), quad.z_row(i), quad.q);
    const double lambda = std::exp(lp_x) * expit(lp_z);
    const double term = quad.d[i] * (lp_x + log_expit(lp_z)) - quad.w[i] * lambda;
    if (!std::isfinite(term) || !std::isfinite(lambda))
      throw numeric_error(std::string(where) + ": non-finite contribution at node " +
                          std::to_string(i));
  }
  throw numeric_error(std::string(where) + ": non-finite sum");
}

}  // namespace

double loglik(const Params& params, const QuadratureScheme& quad, EvalStats* stats) {
  check_dims(params, quad, "loglik");
  const std::size_t nb = (quad.r + kBlock - 1) / kBlock;
  std::vector<double> partial(nb, 0.0);
  std::vector<std::size_t> sat(nb, 0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(lo + kBlock, quad.r);
    double acc = 0.0;
    std::size_t ns = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double lp_x = cap_linpred(dot(params.beta.data(), quad.x_row(i), 1 + quad.p), &ns);
      const double lp_z = dot(params.alpha.data(), quad.z_row(i), quad.q);
      const double lambda = std::exp(lp_x) * expit(lp_z);
      acc += quad.d[i] * (lp_x + log_expit(lp_z)) - quad.w[i] * lambda;
    }
    partial[b] = acc;
    sat[b] = ns;
  }

  double total = 0.0;
  std::size_t nsat = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    total += partial[b];
    nsat += sat[b];
  }
  if (stats) stats->saturation_count += nsat;
  if (!std::isfinite(total)) throw_nonfinite(params, quad, "loglik");
  return total;
}

double loss_mide(const Params& params, const QuadratureScheme& quad, double tau,
                 EvalStats* stats) {
  check_dims(params, quad, "loss_mide");
  if (!(tau > 0.0) || std::isinf(tau))
    throw numeric_error("loss_mide: tau must be finite and positive (use -loglik at tau = inf)");
  const std::size_t nb = (quad.r + kBlock - 1) / kBlock;
  std::vector<double> partial(nb, 0.0);
  std::vector<std::size_t> sat(nb, 0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(lo + kBlock, quad.r);
    double acc = 0.0;
    std::size_t ns = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      const NodeState s = node_state(params, quad, i, &ns);
      const double lg = std::log1p(tau * s.lambda);
      acc += quad.d[i] * lg + (quad.w[i] / tau) * lg - quad.w[i] * s.lambda;
    }
    partial[b] = acc;
    sat[b] = ns;
  }

  double total = 0.0;
  std::size_t nsat = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    total += partial[b];
    nsat += sat[b];
  }
  if (stats) stats->saturation_count += nsat;
  if (!std::isfinite(total)) throw_nonfinite(params, quad, "loss_mide");
  return -total;
}

ScoreVector score_mide(const Params& params, const QuadratureScheme& quad, double tau,
                       EvalStats* stats) {
  check_dims(params, quad, "score_mide");
  if (!(tau > 0.0)) throw numeric_error("score_mide: tau must be positive");
  const std::size_t nbeta = 1 + quad.p;
  const std::size_t k = nbeta + quad.q;
  const std::size_t nb = (quad.r + kBlock - 1) / kBlock;
  std::vector<double> partial(nb * k, 0.0);
  std::vector<std::size_t> sat(nb, 0);
  const bool weighted = !std::isinf(tau);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(lo + kBlock, quad.r);
    double* acc = partial.data() + static_cast<std::size_t>(b) * k;
    std::size_t ns = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      const NodeState s = node_state(params, quad, i, &ns);
      const double f = weighted ? node_weight(tau, s.lambda) : 1.0;
      const double resid = quad.d[i] - quad.w[i] * s.lambda;
      const double cb = f * resid;
      const double ca = cb * (1.0 - s.b);
      const double* xr = quad.x_row(i);
      const double* zr = quad.z_row(i);
      for (std::size_t j = 0; j < nbeta; ++j) acc[j] += cb * xr[j];
      for (std::size_t j = 0; j < quad.q; ++j) acc[nbeta + j] += ca * zr[j];
    }
    sat[b] = ns;
  }

  ScoreVector u;
  u.beta = Eigen::VectorXd::Zero(nbeta);
  u.alpha = Eigen::VectorXd::Zero(quad.q);
  std::size_t nsat = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    const double* acc = partial.data() + b * k;
    for (std::size_t j = 0; j < nbeta; ++j) u.beta[j] += acc[j];
    for (std::size_t j = 0; j < quad.q; ++j) u.alpha[j] += acc[nbeta + j];
    nsat += sat[b];
  }
  if (stats) stats->saturation_count += nsat;
  if (!u.beta.allFinite() || !u.alpha.allFinite())
    throw numeric_error("score_mide: non-finite score");
  return u;
}

ScoreVector score_mle(const Params& params, const QuadratureScheme& quad,
                      EvalStats* stats) {
  return score_mide(params, quad, kTauInf, stats);
}

double penalized_objective(const Params& params, const QuadratureScheme& quad,
                           double tau, double phi, EvalStats* stats) {
  if (phi < 0.0) throw numeric_error("penalized_objective: phi must be nonnegative");
  const double smooth = std::isinf(tau) ? loglik(params, quad, stats)
                                        : -loss_mide(params, quad, tau, stats);
  double penalty = 0.0;
  for (Eigen::Index k = 1; k < params.beta.size(); ++k)
    penalty += std::abs(params.beta[k]);
  return smooth - phi * penalty;
}

double bregman_divergence(std::span<const double> lam1, std::span<const double> lam2,
                          double tau, double cell_area) {
  return bregman_divergence_with([tau](double t) { return gen_Xi(t, tau); },
                                 [tau](double t) { return gen_xi(t, tau); }, lam1,
                                 lam2, cell_area);
}

namespace ref {

double loglik(const Params& params, const QuadratureScheme& quad, EvalStats* stats) {
  check_dims(params, quad, "ref::loglik");
  double total = 0.0;
  std::size_t ns = 0;
  for (std::size_t i = 0; i < quad.r; ++i) {
    const double lp_x = cap_linpred(dot(params.beta.data(), quad.x_row(i), 1 + quad.p), &ns);
    const double lp_z = dot(params.alpha.data(), quad.z_row(i), quad.q);
    total += quad.d[i] * (lp_x + log_expit(lp_z)) - quad.w[i] * std::exp(lp_x) * expit(lp_z);
  }
  if (stats) stats->saturation_count += ns;
  if (!std::isfinite(total)) throw_nonfinite(params, quad, "ref::loglik");
  return total;
}

double loss_mide(const Params& params, const QuadratureScheme& quad, double tau,
                 EvalStats* stats) {
  check_dims(params, quad, "ref::loss_mide");
  if (!(tau > 0.0) || std::isinf(tau))
    throw numeric_error("ref::loss_mide: tau must be finite and positive");
  double total = 0.0;
  std::size_t ns = 0;
  for (std::size_t i = 0; i < quad.r; ++i) {
    const NodeState s = node_state(params, quad, i, &ns);
    const double lg = std::log1p(tau * s.lambda);
    total += quad.d[i] * lg + (quad.w[i] / tau) * lg - quad.w[i] * s.lambda;
  }
  if (stats) stats->saturation_count += ns;
  if (!std::isfinite(total)) throw_nonfinite(params, quad, "ref::loss_mide");
  return -total;
}

ScoreVector score_mide(const Params& params, const QuadratureScheme& quad, double tau,
                       EvalStats* stats) {
  check_dims(params, quad, "ref::score_mide");
  if (!(tau > 0.0)) throw numeric_error("ref::score_mide: tau must be positive");
  const std::size_t nbeta = 1 + quad.p;
  ScoreVector u;
  u.beta = Eigen::VectorXd::Zero(nbeta);
  u.alpha = Eigen::VectorXd::Zero(quad.q);
  std::size_t ns = 0;
  const bool weighted = !std::isinf(tau);
  for (std::size_t i = 0; i < quad.r; ++i) {
    const NodeState s = node_state(params, quad, i, &ns);
    const double f = weighted ? node_weight(tau, s.lambda) : 1.0;
    const double resid = quad.d[i] - quad.w[i] * s.lambda;
    const double cb = f * resid;
    const double ca = cb * (1.0 - s.b);
    const double* xr = quad.x_row(i);
    const double* zr = quad.z_row(i);
    for (std::size_t j = 0; j < nbeta; ++j) u.beta[j] += cb * xr[j];
    for (std::size_t j = 0; j < quad.q; ++j) u.alpha[j] += ca * zr[j];
  }
  if (stats) stats->saturation_count += ns;
  return u;
}

ScoreVector score_mle(const Params& params, const QuadratureScheme& quad,
                      EvalStats* stats) {
  return ref::score_mide(params, quad, kTauInf, stats);
}

}  // namespace ref

}  // namespace mide
