#include "mide/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mide {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Eigen::VectorXd nan_vector(Eigen::Index n) {
  return Eigen::VectorXd::Constant(n, kNaN);
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t scenario_seed, int index) {
  const std::uint64_t state =
      scenario_seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(index) + 1);
  return mix64(state);
}

Scenario scenario_preset(const std::string& name, std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  s.beta_true = Eigen::VectorXd(5);
  s.beta_true << -2.0, 1.0, 1.0, -1.0, -1.0;
  s.alpha_true = Eigen::VectorXd(2);
  s.alpha_true << 1.0, -1.0;
  if (name == "none") {
    return s;
  }
  Eigen::VectorXd gamma(5);
  if (name == "light") {
    gamma << -4.2, -1.0, -1.0, 1.0, 1.0;
  } else if (name == "heavy") {
    gamma << -3.4, -1.0, -1.0, 1.0, 1.0;
  } else {
    throw input_error("unknown scenario preset '" + name + "'");
  }
  s.gamma_true = gamma;
  return s;
}

CovariateDraw gen_covariates(std::size_t n, std::size_t p, std::size_t q,
                             std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CovariateDraw out;
  out.x.resize(n * p);
  out.z.resize(n * q);
  for (auto& v : out.x) v = normal(rng);
  for (auto& v : out.z) v = normal(rng);
  return out;
}

double expected_contamination_rate(const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& gamma,
                                   const std::vector<double>& X, std::size_t n,
                                   std::size_t p) {
  if (beta.size() != gamma.size() ||
      static_cast<std::size_t>(beta.size()) != 1 + p || X.size() != n * p)
    throw input_error("expected_contamination_rate: dimension mismatch");
  double sum_target = 0.0, sum_contam = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double* row = X.data() + j * p;
    double lt = beta[0], lc = gamma[0];
    for (std::size_t k = 0; k < p; ++k) {
      lt += beta[k + 1] * row[k];
      lc += gamma[k + 1] * row[k];
    }
    sum_target += std::exp(cap_linpred(lt, nullptr));
    sum_contam += std::exp(cap_linpred(lc, nullptr));
  }
  return sum_contam / (sum_target + sum_contam);
}

std::vector<long long> sample_counts(const std::vector<double>& cell_intensities,
                                     std::mt19937_64& rng) {
  const std::size_t n = cell_intensities.size();
  std::vector<long long> counts(n, 0);
  double total = 0.0;
  for (double v : cell_intensities) {
    if (v < 0.0) throw input_error("sample_counts: negative intensity");
    total += v;
  }
  if (!(total > 0.0)) return counts;

  std::poisson_distribution<long long> poisson(total);
  long long remaining = poisson(rng);

  // multinomial allocation by sequential conditional binomials
  double rest = total;
  for (std::size_t j = 0; j + 1 < n && remaining > 0; ++j) {
    const double pj = std::clamp(cell_intensities[j] / rest, 0.0, 1.0);
    std::binomial_distribution<long long> binom(remaining, pj);
    const long long c = binom(rng);
    counts[j] = c;
    remaining -= c;
    rest -= cell_intensities[j];
  }
  if (n > 0) counts[n - 1] += remaining;
  return counts;
}

ReplicateData gen_replicate(const Scenario& scenario, bool contaminated, int index) {
  if (contaminated && !scenario.gamma_true)
    throw input_error("gen_replicate: contaminated run needs gamma_true");
  const std::size_t n = scenario.n_cells;
  const std::size_t p = static_cast<std::size_t>(scenario.beta_true.size()) - 1;
  const std::size_t q = static_cast<std::size_t>(scenario.alpha_true.size());

  std::mt19937_64 rng(replicate_seed(scenario.seed, index));
  CovariateDraw cov = gen_covariates(n, p, q, rng);

  std::vector<double> lam_target(n), lam_contam(n, 0.0), lam_sample(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double* xr = cov.x.data() + j * p;
    const double* zr = cov.z.data() + j * q;
    double lt = scenario.beta_true[0];
    for (std::size_t k = 0; k < p; ++k) lt += scenario.beta_true[k + 1] * xr[k];
    lam_target[j] = std::exp(cap_linpred(lt, nullptr));
    if (contaminated) {
      double lc = (*scenario.gamma_true)[0];
      for (std::size_t k = 0; k < p; ++k)
        lc += (*scenario.gamma_true)[k + 1] * xr[k];
      lam_contam[j] = std::exp(cap_linpred(lc, nullptr));
    }
    double lz = 0.0;
    for (std::size_t k = 0; k < q; ++k) lz += scenario.alpha_true[k] * zr[k];
    lam_sample[j] = (lam_target[j] + lam_contam[j]) * expit(lz);
  }

  ReplicateData rd;
  std::vector<long long> counts = sample_counts(lam_sample, rng);

  // Exact conditional split of each cell's count into target and
  // contamination points (superposition of independent processes).
  rd.contam_counts.assign(n, 0);
  long long m_total = 0, m_contam = 0;
  for (std::size_t j = 0; j < n; ++j) {
    m_total += counts[j];
    if (contaminated && counts[j] > 0 && lam_contam[j] > 0.0) {
      const double share = lam_contam[j] / (lam_target[j] + lam_contam[j]);
      std::binomial_distribution<long long> binom(counts[j], share);
      rd.contam_counts[j] = binom(rng);
      m_contam += rd.contam_counts[j];
    }
  }
  rd.realized_rate =
      m_total > 0 ? static_cast<double>(m_contam) / static_cast<double>(m_total) : 0.0;
  rd.design_rate = contaminated ? expected_contamination_rate(
                                      scenario.beta_true, *scenario.gamma_true,
                                      cov.x, n, p)
                                : 0.0;
  rd.target_intensity = std::move(lam_target);

  rd.dataset.area_total = static_cast<double>(n);
  rd.dataset.cells.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    Cell& c = rd.dataset.cells[j];
    c.id = std::to_string(j + 1);
    c.count = counts[j];
    c.x.assign(cov.x.begin() + j * p, cov.x.begin() + (j + 1) * p);
    c.z.assign(cov.z.begin() + j * q, cov.z.begin() + (j + 1) * q);
  }
  return rd;
}

ReplicateTable run_scenario(const Scenario& scenario, bool contaminated,
                            int n_replicates, const std::vector<double>& tau_grid,
                            double delta, int n_phi) {
  if (n_replicates <= 0) throw input_error("run_scenario: n_replicates must be positive");
  const Eigen::Index nbeta = scenario.beta_true.size();

  ReplicateTable table;
  table.rows.resize(2 * static_cast<std::size_t>(n_replicates));

#pragma omp parallel for schedule(dynamic)
  for (int rep = 0; rep < n_replicates; ++rep) {
    ReplicateRow mle_row, mide_row;
    mle_row.replicate_id = rep;
    mle_row.estimator = "MLE";
    mide_row.replicate_id = rep;
    mide_row.estimator = "MIDE";
    try {
      const ReplicateData rd = gen_replicate(scenario, contaminated, rep);
      const QuadratureScheme quad = build_quadrature(rd.dataset);
      mle_row.m_observed = quad.m;
      mide_row.m_observed = quad.m;
      mle_row.contamination_rate_realized = rd.realized_rate;
      mide_row.contamination_rate_realized = rd.realized_rate;

      try {
        const FitResult mle = fit(quad, kTauInf, 0.0);
        mle_row.tau_selected = kTauInf;
        mle_row.beta_hat = mle.params.beta;
      } catch (const std::exception&) {
        mle_row.ok = false;
        mle_row.beta_hat = nan_vector(nbeta);
      }

      try {
        std::vector<FitResult> fits;
        const SelectionReport report =
            grid_search(quad, rd.dataset, tau_grid, delta, n_phi, &fits);
        mide_row.tau_selected = report.best_tau;
        mide_row.beta_hat = fits[report.best_index].params.beta;
      } catch (const std::exception&) {
        mide_row.ok = false;
        mide_row.beta_hat = nan_vector(nbeta);
      }
    } catch (const std::exception&) {
      mle_row.ok = false;
      mide_row.ok = false;
      mle_row.beta_hat = nan_vector(nbeta);
      mide_row.beta_hat = nan_vector(nbeta);
    }
    table.rows[2 * static_cast<std::size_t>(rep)] = std::move(mle_row);
    table.rows[2 * static_cast<std::size_t>(rep) + 1] = std::move(mide_row);
  }
  return table;
}

}  // namespace mide
