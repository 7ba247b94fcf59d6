#include "mide/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace mide {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kBlock = 2048;

inline int sgn(double v) { return (v > 0.0) - (v < 0.0); }

double log_expit(double t) {
  if (t >= 0.0) return -std::log1p(std::exp(-t));
  return t - std::log1p(std::exp(t));
}

// Objective restricted to the ray beta + rho * dir at fixed alpha. The
// per-node linear predictors along the ray are affine in rho, so the x and
// z dot products are hoisted out of the line search; each evaluation is
// one exp/log1p sweep. Within rho <= rho_edge no slope changes sign, so
// the L1 penalty is exactly linear in rho.
class RayObjective {
 public:
  RayObjective(const Params& params, const Eigen::VectorXd& dir,
               const QuadratureScheme& quad, double tau, double phi,
               EvalStats* stats)
      : quad_(quad), tau_(tau), phi_(phi), stats_(stats) {
    const std::size_t r = quad.r;
    base_.resize(r);
    dir_.resize(r);
    b_.resize(r);
    logb_.resize(r);
    const std::size_t nbeta = 1 + quad.p;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(r); ++i) {
      base_[i] = dot(params.beta.data(), quad.x_row(i), nbeta);
      dir_[i] = dot(dir.data(), quad.x_row(i), nbeta);
      const double lp_z = dot(params.alpha.data(), quad.z_row(i), quad.q);
      b_[i] = expit(lp_z);
      logb_[i] = log_expit(lp_z);
    }

    pen0_ = 0.0;
    pen_slope_ = 0.0;
    for (Eigen::Index k = 1; k < params.beta.size(); ++k) {
      pen0_ += std::abs(params.beta[k]);
      pen_slope_ += params.beta[k] != 0.0 ? dir[k] * sgn(params.beta[k])
                                          : std::abs(dir[k]);
    }
  }

  double operator()(double rho) const {
    const std::size_t nb = (quad_.r + kBlock - 1) / kBlock;
    std::vector<double> partial(nb, 0.0);
    std::vector<std::size_t> sat(nb, 0);
    const bool mle = std::isinf(tau_);

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
      const std::size_t hi = std::min(lo + kBlock, quad_.r);
      double acc = 0.0;
      std::size_t ns = 0;
      for (std::size_t i = lo; i < hi; ++i) {
        const double lp = cap_linpred(base_[i] + rho * dir_[i], &ns);
        const double lambda = std::exp(lp) * b_[i];
        if (mle) {
          acc += quad_.d[i] * (lp + logb_[i]) - quad_.w[i] * lambda;
        } else {
          const double lg = std::log1p(tau_ * lambda);
          acc += quad_.d[i] * lg + (quad_.w[i] / tau_) * lg - quad_.w[i] * lambda;
        }
      }
      partial[b] = acc;
      sat[b] = ns;
    }

    double smooth = 0.0;
    std::size_t nsat = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      smooth += partial[b];
      nsat += sat[b];
    }
    if (stats_) stats_->saturation_count += nsat;
    return smooth - phi_ * (pen0_ + rho * pen_slope_);
  }

 private:
  const QuadratureScheme& quad_;
  double tau_, phi_;
  double pen0_ = 0.0, pen_slope_ = 0.0;
  std::vector<double> base_, dir_, b_, logb_;
  EvalStats* stats_;
};

std::vector<double> compute_node_weights(const Params& params,
                                         const QuadratureScheme& quad, double tau) {
  std::vector<double> wts(quad.r, 1.0);
  if (std::isinf(tau)) return wts;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(quad.r); ++i) {
    const double lambda = thinned_intensity(
        params, {quad.x_row(i), 1 + quad.p}, {quad.z_row(i), quad.q});
    wts[i] = node_weight(tau, lambda);
  }
  return wts;
}

// Generic damped Newton update for maximization; the PPP-specific
// newton_alpha binds the alpha score and the penalized objective to it.
Eigen::VectorXd newton_step(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    const std::function<double(const Eigen::VectorXd&)>& value,
    const Eigen::VectorXd& x, double damping, double fd_step, bool* fallback_flag) {
  const Eigen::Index q = x.size();
  if (q == 0) return x;
  const Eigen::VectorXd u = grad(x);
  if (u.lpNorm<Eigen::Infinity>() == 0.0) return x;

  Eigen::MatrixXd J(q, q);
  for (Eigen::Index j = 0; j < q; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += fd_step;
    xm[j] -= fd_step;
    J.col(j) = (grad(xp) - grad(xm)) / (2.0 * fd_step);
  }
  const Eigen::MatrixXd H = 0.5 * (J + J.transpose());

  const double m_old = value(x);
  const double slack = 1e-12 * (1.0 + std::abs(m_old));

  double lm = damping;
  for (int attempt = 0; attempt <= 8; ++attempt) {
    const Eigen::MatrixXd A =
        H - lm * Eigen::MatrixXd::Identity(q, q);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.isInvertible()) {
      const Eigen::VectorXd x_new = x - lu.solve(u);
      const double m_new = value(x_new);
      if (std::isfinite(m_new) && m_new >= m_old - slack) return x_new;
    }
    lm = attempt == 0 ? 1e-8 : lm * 10.0;
  }

  if (fallback_flag) *fallback_flag = true;
  double step = 1.0 / (1.0 + u.norm());
  for (int h = 0; h < 40; ++h) {
    const Eigen::VectorXd x_new = x + step * u;
    const double m_new = value(x_new);
    if (std::isfinite(m_new) && m_new >= m_old) return x_new;
    step *= 0.5;
  }
  return x;
}

}  // namespace

Eigen::VectorXd subgradient(const Eigen::VectorXd& beta, const Eigen::VectorXd& u_beta,
                            double phi) {
  if (beta.size() != u_beta.size())
    throw numeric_error("subgradient: dimension mismatch");
  Eigen::VectorXd g(beta.size());
  for (Eigen::Index k = 0; k < beta.size(); ++k) {
    const double phi_k = k == 0 ? 0.0 : phi;
    if (beta[k] != 0.0) {
      g[k] = u_beta[k] - phi_k * sgn(beta[k]);
    } else if (std::abs(u_beta[k]) > phi_k) {
      g[k] = u_beta[k] - phi_k * sgn(u_beta[k]);
    } else {
      g[k] = 0.0;
    }
  }
  return g;
}

double rho_edge(const Eigen::VectorXd& beta, const Eigen::VectorXd& g) {
  if (beta.size() != g.size()) throw numeric_error("rho_edge: dimension mismatch");
  double edge = kInf;
  for (Eigen::Index k = 1; k < beta.size(); ++k) {
    const int sb = sgn(beta[k]);
    if (sb != 0 && sb == -sgn(g[k])) edge = std::min(edge, -beta[k] / g[k]);
  }
  return edge;
}

LineSearchResult line_search(const std::function<double(double)>& f, double f0,
                             double rho_max, double tol) {
  LineSearchResult best{0.0, f0, false};
  if (!(rho_max > 0.0) || !std::isfinite(rho_max)) return best;

  auto eval = [&](double rho) {
    double v = f(rho);
    if (!std::isfinite(v)) {
      best.saw_nonfinite = true;
      v = -kInf;
    }
    if (v > best.value) best = {rho, v, best.saw_nonfinite};
    return v;
  };

  // The upper endpoint is a candidate so a binding rho_edge can be taken
  // exactly (a slope then lands exactly on zero).
  eval(rho_max);

  constexpr double kGolden = 0.6180339887498949;
  double a = 0.0, b = rho_max;
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = eval(x1);
  double f2 = eval(x2);
  int guard = 0;
  while (b - a > tol && ++guard < 200) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = eval(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = eval(x1);
    }
  }
  return best;
}

Eigen::VectorXd newton_alpha(const Params& params, const QuadratureScheme& quad,
                             double tau, double phi, double damping, EvalStats* stats) {
  auto grad = [&](const Eigen::VectorXd& a) {
    Params p{params.beta, a};
    return score_mide(p, quad, tau, stats).alpha;
  };
  auto value = [&](const Eigen::VectorXd& a) {
    Params p{params.beta, a};
    return penalized_objective(p, quad, tau, phi, stats);
  };
  return newton_step(grad, value, params.alpha, damping, 1e-6, nullptr);
}

Params default_init(const QuadratureScheme& quad) {
  Params params;
  params.beta = Eigen::VectorXd::Zero(1 + quad.p);
  params.beta[0] =
      std::log(static_cast<double>(std::max<long long>(quad.m, 1)) / quad.area_total);
  params.alpha = Eigen::VectorXd::Zero(quad.q);
  return params;
}

FitResult fit(const QuadratureScheme& quad, double tau, double phi,
              const Params* init, const FitOptions* opts) {
  if (!(tau > 0.0)) throw input_error("fit: tau must be positive");
  if (phi < 0.0) throw input_error("fit: phi must be nonnegative");

  FitOptions o;
  if (opts) o = *opts;
  o.tau = tau;
  o.phi = phi;

  FitResult result;
  result.tau = tau;
  result.phi = phi;
  result.params = init ? *init : default_init(quad);
  EvalStats stats;

  double m_cur = penalized_objective(result.params, quad, tau, phi, &stats);
  if (!std::isfinite(m_cur))
    throw fit_error("fit: initial objective non-finite", {m_cur});
  result.objective_trace.push_back(m_cur);

  const double gtol =
      o.kkt_tol_scale * std::max(1.0, static_cast<double>(quad.m));
  double last_delta = kInf;

  for (int it = 1; it <= o.max_iterations; ++it) {
    const ScoreVector u = score_mide(result.params, quad, tau, &stats);
    const Eigen::VectorXd g = subgradient(result.params.beta, u.beta, phi);
    double kkt = g.lpNorm<Eigen::Infinity>();
    if (quad.q > 0) kkt = std::max(kkt, u.alpha.lpNorm<Eigen::Infinity>());

    if (last_delta < o.objective_tol * (1.0 + std::abs(m_cur)) && kkt <= gtol) {
      result.converged = true;
      break;
    }
    result.iterations = it;

    // beta ascent step
    if (g.lpNorm<Eigen::Infinity>() > 0.0) {
      const double edge = rho_edge(result.params.beta, g);
      const double cap = 10.0 / (1.0 + g.norm());
      const double upper = std::min(edge, cap);
      RayObjective ray(result.params, g, quad, tau, phi, &stats);
      const LineSearchResult ls =
          line_search([&ray](double rho) { return ray(rho); }, ray(0.0), upper,
                      o.line_search_tol);
      if (ls.rho > 0.0) {
        Params trial = result.params;
        trial.beta += ls.rho * g;
        // rho <= rho_edge means no slope may cross zero; clamp any
        // floating-point overshoot onto the boundary.
        for (Eigen::Index k = 1; k < trial.beta.size(); ++k) {
          const int s_old = sgn(result.params.beta[k]);
          if (s_old != 0 && sgn(trial.beta[k]) == -s_old) trial.beta[k] = 0.0;
        }
        const double m_try = penalized_objective(trial, quad, tau, phi, &stats);
        if (std::isfinite(m_try) && m_try >= m_cur) {
          result.params = std::move(trial);
          m_cur = m_try;
        }
      }
    }

    // alpha Newton step
    if (quad.q > 0) {
      result.params.alpha = newton_alpha(result.params, quad, tau, phi, 0.0, &stats);
      m_cur = penalized_objective(result.params, quad, tau, phi, &stats);
    }

    if (!std::isfinite(m_cur))
      throw fit_error("fit: objective became non-finite", result.objective_trace);
    last_delta = std::abs(m_cur - result.objective_trace.back());
    result.objective_trace.push_back(m_cur);
  }

  result.node_weights = compute_node_weights(result.params, quad, tau);
  for (Eigen::Index k = 1; k < result.params.beta.size(); ++k)
    if (result.params.beta[k] != 0.0) result.active_set.push_back(static_cast<int>(k));
  result.saturation_count = stats.saturation_count;
  return result;
}

int default_n_phi(std::size_t p) {
  return std::max<int>(2, std::min<int>(20, static_cast<int>(2 * p)));
}

PathResult phi_path(const QuadratureScheme& quad, double tau, int n_phi) {
  if (n_phi < 2) throw input_error("phi_path: n_phi must be at least 2");

  // Null fit: a penalty beyond any attainable score freezes every slope at
  // zero while the intercept and alpha converge. The largest slope score
  // there is the smallest phi that keeps the whole path inactive.
  constexpr double kFreeze = 1e300;
  const FitResult null_fit = fit(quad, tau, kFreeze);
  const ScoreVector u0 = score_mide(null_fit.params, quad, tau);
  double phi_max = 0.0;
  for (Eigen::Index k = 1; k < u0.beta.size(); ++k)
    phi_max = std::max(phi_max, std::abs(u0.beta[k]));
  if (!(phi_max > 0.0)) phi_max = 1e-12;

  PathResult path;
  const int n_pos = n_phi - 1;  // log-spaced positive entries, then exact 0
  for (int j = 0; j < n_pos; ++j) {
    const double t = n_pos == 1 ? 0.0 : static_cast<double>(j) / (n_pos - 1);
    path.phis.push_back(phi_max * std::pow(1e-3, t));
  }
  path.phis.push_back(0.0);

  Params warm = null_fit.params;
  for (std::size_t u = 0; u < path.phis.size(); ++u) {
    FitResult f = fit(quad, tau, path.phis[u], &warm);
    warm = f.params;
    path.fits.push_back(std::move(f));
  }
  return path;
}

}  // namespace mide
