#pragma once

#include <vector>

#include <Eigen/Core>

#include "mide/optimizer.hpp"

namespace mide {

/// Sandwich covariance pieces for beta. J and I are plug-in expectations
/// under the fitted intensity measure (node weights w_i * lambda_hat_i,
/// normalized by Lambda_hat); Sigma = J^-1 I J^-1 and the standard error
/// of beta_k is sqrt(Sigma_kk / Lambda_hat).
struct SandwichCov {
  Eigen::MatrixXd J;
  Eigen::MatrixXd I;
  Eigen::MatrixXd Sigma;
  double Lambda_hat = 0.0;
  Eigen::VectorXd se;
};

/// Throws numeric_error when J is numerically singular (condition number
/// above 1e12); the message suggests a stronger penalty or fewer
/// covariates.
SandwichCov sandwich_cov(const FitResult& fit, const QuadratureScheme& quad, double tau);

/// Estimating-function weights of presence nodes split into a reliable
/// group (flag true) and the rest. Medians are NaN for empty groups.
struct WeightGroups {
  std::vector<double> group_a;
  std::vector<double> group_b;
  double median_a;
  double median_b;
};

/// flags.size() must equal the number of d = 1 nodes, in node order.
/// Which presences count as reliable is decided by the caller (e.g. from
/// independent presence-absence data); this stays geometry-free.
WeightGroups weight_groups(const FitResult& fit, const QuadratureScheme& quad,
                           const std::vector<bool>& reliable_flags);

}  // namespace mide
