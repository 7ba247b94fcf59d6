#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

#include <Eigen/Core>

#include "mide/error.hpp"

namespace mide {

/// theta = (beta, alpha). beta[0] is the intercept.
struct Params {
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;
};

/// Tuning parameters. tau = +infinity is the exact MLE limit (all
/// estimating-equation weights equal 1), represented as the distinguished
/// IEEE infinity rather than a large float.
struct HyperParams {
  double tau = std::numeric_limits<double>::infinity();
  double nu = 1.0;
  double phi = 0.0;
  double delta = 0.9;
};

inline constexpr double kTauInf = std::numeric_limits<double>::infinity();

/// Linear predictors are capped at +-700 before exponentiation; the
/// saturation counter makes silent clipping observable in fit results.
inline constexpr double kLinPredCap = 700.0;

inline double dot(const double* a, const double* b, std::size_t k) {
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += a[j] * b[j];
  return s;
}

inline double cap_linpred(double lp, std::size_t* saturations) {
  if (lp > kLinPredCap) {
    if (saturations) ++*saturations;
    return kLinPredCap;
  }
  if (lp < -kLinPredCap) {
    if (saturations) ++*saturations;
    return -kLinPredCap;
  }
  return lp;
}

/// Numerically stable logistic function.
inline double expit(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Log-linear intensity exp(beta . x_row); x_row starts with the
/// intercept constant 1.
inline double intensity(std::span<const double> beta, std::span<const double> x_row,
                        std::size_t* saturations = nullptr) {
  if (beta.size() != x_row.size())
    throw numeric_error("intensity: dimension mismatch");
  return std::exp(cap_linpred(dot(beta.data(), x_row.data(), beta.size()), saturations));
}

/// Logistic detection probability expit(alpha . z_row), in (0,1).
inline double detection(std::span<const double> alpha, std::span<const double> z_row) {
  if (alpha.size() != z_row.size())
    throw numeric_error("detection: dimension mismatch");
  return expit(dot(alpha.data(), z_row.data(), alpha.size()));
}

/// Thinned intensity lambda_beta(s) * b_alpha(s).
inline double thinned_intensity(const Params& params, std::span<const double> x_row,
                                std::span<const double> z_row,
                                std::size_t* saturations = nullptr) {
  return intensity({params.beta.data(), static_cast<std::size_t>(params.beta.size())}, x_row,
                   saturations) *
         detection({params.alpha.data(), static_cast<std::size_t>(params.alpha.size())}, z_row);
}

/// Pareto type II CDF, F(x) = 1 - (1 + nu x)^(-1/nu). Long-tailed, so
/// weights grow slowly and never explode.
inline double pareto_cdf(double x, double nu) {
  if (x < 0.0) throw numeric_error("pareto_cdf: negative argument");
  if (nu <= 0.0) throw numeric_error("pareto_cdf: nu must be positive");
  return -std::expm1(-std::log1p(nu * x) / nu);
}

/// Estimating-equation weight F(tau * lambda); identically 1 at tau = inf.
inline double node_weight(double tau, double lambda) {
  if (std::isinf(tau)) return 1.0;
  // nu fixed at 1: F(x) = x / (1 + x)
  const double x = tau * lambda;
  return x / (1.0 + x);
}

/// Derivative of the convex generator, nu = 1 closed form: log(1 + tau t).
inline double gen_xi(double t, double tau) {
  if (t < 0.0) throw numeric_error("gen_xi: negative argument");
  if (!std::isfinite(tau) || tau <= 0.0)
    throw numeric_error("gen_xi: tau must be finite and positive");
  return std::log1p(tau * t);
}

/// Convex generator itself, nu = 1 closed form:
/// ((1 + tau t) log(1 + tau t) - tau t) / tau.
inline double gen_Xi(double t, double tau) {
  if (t < 0.0) throw numeric_error("gen_Xi: negative argument");
  if (!std::isfinite(tau) || tau <= 0.0)
    throw numeric_error("gen_Xi: tau must be finite and positive");
  const double u = tau * t;
  return ((1.0 + u) * std::log1p(u) - u) / tau;
}

}  // namespace mide
