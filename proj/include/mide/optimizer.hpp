#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "mide/loss.hpp"

namespace mide {

struct FitOptions {
  double tau = kTauInf;
  double phi = 0.0;
  int max_iterations = 500;
  double objective_tol = 1e-8;   // relative |dM| < tol * (1 + |M|)
  double kkt_tol_scale = 1e-6;   // ||subgradient||_inf <= scale * max(1, m)
  double line_search_tol = 1e-8; // absolute tolerance in rho
};

struct FitResult {
  Params params;
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective_trace;  // nondecreasing up to 1e-10
  std::vector<double> node_weights;     // F(tau * lambda_hat) per node
  std::vector<int> active_set;          // indices k >= 1 with beta_k != 0
  std::size_t saturation_count = 0;     // capped linear predictors seen
  double tau = kTauInf;
  double phi = 0.0;
};

struct PathResult {
  std::vector<double> phis;     // strictly decreasing, last entry 0
  std::vector<FitResult> fits;  // fits[u] warm-started from fits[u-1]
};

/// L1 ascent direction: the penalty-adjusted gradient with the three-case
/// rule at beta_k = 0 (move only if |u_k| exceeds phi). Intercept is
/// unpenalized.
Eigen::VectorXd subgradient(const Eigen::VectorXd& beta, const Eigen::VectorXd& u_beta,
                            double phi);

/// Largest step along g before any slope coefficient crosses zero:
/// min over slopes with sign(beta_k) = -sign(g_k) != 0 of -beta_k/g_k,
/// +infinity when no slope is moving toward zero.
double rho_edge(const Eigen::VectorXd& beta, const Eigen::VectorXd& g);

struct LineSearchResult {
  double rho = 0.0;
  double value = 0.0;
  bool saw_nonfinite = false;
};

/// Golden-section maximization of f on [0, rho_max] to absolute tolerance
/// tol in rho. Returns the best evaluated point; f(rho) >= f(0) always
/// (f0 is the caller-supplied value at 0). Non-finite values are treated
/// as -infinity and flagged.
LineSearchResult line_search(const std::function<double(double)>& f, double f0,
                             double rho_max, double tol = 1e-8);

/// One damped Newton-Raphson update of alpha at fixed beta. The Hessian is
/// the symmetrized finite-difference Jacobian of the analytic alpha-score
/// (step 1e-6). Damping escalates (x10 from 1e-8) while the objective
/// decreases; after 8 escalations falls back to a guarded gradient step.
Eigen::VectorXd newton_alpha(const Params& params, const QuadratureScheme& quad,
                             double tau, double phi, double damping = 0.0,
                             EvalStats* stats = nullptr);

Params default_init(const QuadratureScheme& quad);

/// Alternating fit: beta ascent step (subgradient -> rho_edge -> line
/// search) then an alpha Newton step, until the penalized objective and
/// the first-order residual both settle. tau = inf runs the identical
/// loop with unit weights and is the MLE solver.
FitResult fit(const QuadratureScheme& quad, double tau, double phi,
              const Params* init = nullptr, const FitOptions* opts = nullptr);

/// Descending-phi path with warm starts. phi_max is the largest slope
/// score magnitude at the null fit (slopes frozen at zero), the grid is
/// log-spaced down to 1e-3 * phi_max, and the final entry is exactly 0.
PathResult phi_path(const QuadratureScheme& quad, double tau, int n_phi);

/// Default path length min(20, 2p), with at least 2.
int default_n_phi(std::size_t p);

}  // namespace mide
