#include "mide/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace mide {

namespace {

constexpr std::size_t kBlock = 2048;

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

SandwichCov sandwich_cov(const FitResult& fit, const QuadratureScheme& quad,
                         double tau) {
  const std::size_t nbeta = 1 + quad.p;
  const std::size_t mat = nbeta * nbeta;
  const std::size_t nb = (quad.r + kBlock - 1) / kBlock;
  // per block: [Lambda, J entries, I entries]
  std::vector<double> partial(nb * (1 + 2 * mat), 0.0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(lo + kBlock, quad.r);
    double* acc = partial.data() + static_cast<std::size_t>(b) * (1 + 2 * mat);
    for (std::size_t i = lo; i < hi; ++i) {
      const double lambda = thinned_intensity(
          fit.params, {quad.x_row(i), nbeta}, {quad.z_row(i), quad.q});
      const double f = node_weight(tau, lambda);
      const double base = quad.w[i] * lambda;
      acc[0] += base;
      const double cj = base * f;
      const double ci = cj * f;
      const double* xr = quad.x_row(i);
      for (std::size_t a = 0; a < nbeta; ++a)
        for (std::size_t c = 0; c < nbeta; ++c) {
          acc[1 + a * nbeta + c] += cj * xr[a] * xr[c];
          acc[1 + mat + a * nbeta + c] += ci * xr[a] * xr[c];
        }
    }
  }

  SandwichCov out;
  out.Lambda_hat = 0.0;
  out.J = Eigen::MatrixXd::Zero(nbeta, nbeta);
  out.I = Eigen::MatrixXd::Zero(nbeta, nbeta);
  for (std::size_t b = 0; b < nb; ++b) {
    const double* acc = partial.data() + b * (1 + 2 * mat);
    out.Lambda_hat += acc[0];
    for (std::size_t a = 0; a < nbeta; ++a)
      for (std::size_t c = 0; c < nbeta; ++c) {
        out.J(a, c) += acc[1 + a * nbeta + c];
        out.I(a, c) += acc[1 + mat + a * nbeta + c];
      }
  }
  if (!(out.Lambda_hat > 0.0))
    throw numeric_error("sandwich_cov: fitted intensity mass is zero");
  out.J /= out.Lambda_hat;
  out.I /= out.Lambda_hat;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.J);
  const double emin = es.eigenvalues().minCoeff();
  const double emax = es.eigenvalues().maxCoeff();
  if (!(emin > 0.0) || emax / emin > 1e12)
    throw numeric_error(
        "sandwich_cov: J is numerically singular; consider a stronger penalty "
        "or fewer covariates");

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(out.J);
  const Eigen::MatrixXd JinvI = ldlt.solve(out.I);
  Eigen::MatrixXd sigma = ldlt.solve(JinvI.transpose()).transpose();
  out.Sigma = 0.5 * (sigma + sigma.transpose());

  out.se = Eigen::VectorXd(nbeta);
  for (std::size_t k = 0; k < nbeta; ++k)
    out.se[k] = std::sqrt(std::max(0.0, out.Sigma(k, k)) / out.Lambda_hat);
  return out;
}

WeightGroups weight_groups(const FitResult& fit, const QuadratureScheme& quad,
                           const std::vector<bool>& reliable_flags) {
  WeightGroups out;
  std::size_t pi = 0;
  for (std::size_t i = 0; i < quad.r; ++i) {
    if (quad.d[i] != 1.0) continue;
    if (pi >= reliable_flags.size())
      throw input_error("weight_groups: flag vector shorter than presence count");
    (reliable_flags[pi] ? out.group_a : out.group_b).push_back(fit.node_weights[i]);
    ++pi;
  }
  if (pi != reliable_flags.size())
    throw input_error("weight_groups: flag vector longer than presence count");
  out.median_a = median_of(out.group_a);
  out.median_b = median_of(out.group_b);
  return out;
}

}  // namespace mide
