#pragma once

#include <span>

#include <Eigen/Core>

#include "mide/grid.hpp"
#include "mide/kernels.hpp"

namespace mide {

/// Estimating-function value: u_beta stacks the intercept and slope
/// components, u_alpha the detection components.
struct ScoreVector {
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;
};

/// Per-evaluation diagnostics accumulated by the node-sum kernels.
struct EvalStats {
  std::size_t saturation_count = 0;
};

// Production node sums run blocked: fixed-size blocks are accumulated
// independently (in parallel when OpenMP is enabled) and combined in block
// order, so results are bit-identical for any thread count.

/// Quadrature-approximated log-likelihood
/// sum_i [ d_i log lambda_theta(s_i) - w_i lambda_theta(s_i) ].
double loglik(const Params& params, const QuadratureScheme& quad,
              EvalStats* stats = nullptr);

/// Likelihood-equation scores (unweighted).
ScoreVector score_mle(const Params& params, const QuadratureScheme& quad,
                      EvalStats* stats = nullptr);

/// Divergence-based loss, nu = 1 closed form:
/// -sum_i [ d_i log(1+tau l_i) + (w_i/tau) log(1+tau l_i) - w_i l_i ].
/// tau must be finite; the tau = inf limit is served by -loglik.
double loss_mide(const Params& params, const QuadratureScheme& quad, double tau,
                 EvalStats* stats = nullptr);

/// Weighted estimating functions; weight F(tau lambda_i) per node.
/// The gradient of loss_mide equals minus this score: the optimizer
/// maximizes -loss_mide, whose gradient is +score.
ScoreVector score_mide(const Params& params, const QuadratureScheme& quad, double tau,
                       EvalStats* stats = nullptr);

/// Maximization objective M = -loss - phi * sum_{k>=1} |beta_k|.
/// No penalty on the intercept or on alpha. tau = inf uses loglik.
double penalized_objective(const Params& params, const QuadratureScheme& quad,
                           double tau, double phi, EvalStats* stats = nullptr);

/// Bregman divergence between two per-cell intensity vectors under the
/// production generator, cell_area * sum_j [Xi(l1)-Xi(l2)-xi(l2)(l1-l2)].
double bregman_divergence(std::span<const double> lam1, std::span<const double> lam2,
                          double tau, double cell_area);

/// Same divergence under caller-provided generator functions. Exists so a
/// different generator (e.g. t log t - t, giving extended KL) can be
/// checked against a direct formula in tests.
template <class GenF, class GenDerivF>
double bregman_divergence_with(GenF Xi, GenDerivF xi, std::span<const double> lam1,
                               std::span<const double> lam2, double cell_area) {
  if (lam1.size() != lam2.size())
    throw numeric_error("bregman_divergence: length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < lam1.size(); ++j) {
    if (!(lam1[j] > 0.0) || !(lam2[j] > 0.0))
      throw numeric_error("bregman_divergence: intensities must be positive");
    s += Xi(lam1[j]) - Xi(lam2[j]) - xi(lam2[j]) * (lam1[j] - lam2[j]);
  }
  return cell_area * s;
}

/// Serial reference implementations: plain left-to-right loops with no
/// blocking. Kept for testing and benchmarking the parallel kernels.
namespace ref {
double loglik(const Params& params, const QuadratureScheme& quad,
              EvalStats* stats = nullptr);
ScoreVector score_mle(const Params& params, const QuadratureScheme& quad,
                      EvalStats* stats = nullptr);
double loss_mide(const Params& params, const QuadratureScheme& quad, double tau,
                 EvalStats* stats = nullptr);
ScoreVector score_mide(const Params& params, const QuadratureScheme& quad, double tau,
                       EvalStats* stats = nullptr);
}  // namespace ref

}  // namespace mide
