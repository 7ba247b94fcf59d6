#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mide/grid.hpp"
#include "mide/selection.hpp"

namespace mide {

/// Simulation truth. Presets follow the study design: target
/// beta = (-2, 1, 1, -1, -1), detection alpha = (1, -1), and a
/// contaminating log-linear component whose slopes are the negated target
/// slopes, so contamination concentrates where the target is thin.
struct Scenario {
  std::size_t n_cells = 2000;
  Eigen::VectorXd beta_true;                 // length 1+p
  std::optional<Eigen::VectorXd> gamma_true; // length 1+p when contaminated
  Eigen::VectorXd alpha_true;                // length q
  std::uint64_t seed = 1;
};

/// name is one of "none", "light", "heavy".
/// light: gamma = (-4.2, -1, -1, 1, 1)  (expected rate ~ 10%)
/// heavy: gamma = (-3.4, -1, -1, 1, 1)  (expected rate ~ 20%)
Scenario scenario_preset(const std::string& name, std::uint64_t seed);

struct ReplicateRow {
  int replicate_id = 0;
  std::string estimator;  // "MLE" or "MIDE"
  double tau_selected = kTauInf;
  Eigen::VectorXd beta_hat;
  long long m_observed = 0;
  double contamination_rate_realized = 0.0;
  bool ok = true;  // false when the fit failed; beta_hat is NaN then
};

struct ReplicateTable {
  std::vector<ReplicateRow> rows;
};

/// Row-major n x p and n x q standard-normal draws.
struct CovariateDraw {
  std::vector<double> x;
  std::vector<double> z;
};

CovariateDraw gen_covariates(std::size_t n, std::size_t p, std::size_t q,
                             std::mt19937_64& rng);

/// Share of total intensity contributed by the contaminating component,
/// sum_s lambda_gamma / (sum_s lambda_beta + sum_s lambda_gamma), on the
/// realized design X (n x p, row-major, no intercept column).
double expected_contamination_rate(const Eigen::VectorXd& beta,
                                   const Eigen::VectorXd& gamma,
                                   const std::vector<double>& X, std::size_t n,
                                   std::size_t p);

/// Two-stage count sampling: total M ~ Poisson(sum lambda), then a
/// multinomial allocation across cells proportional to lambda. Equivalent
/// in distribution to independent per-cell Poisson draws.
std::vector<long long> sample_counts(const std::vector<double>& cell_intensities,
                                     std::mt19937_64& rng);

/// Independent stream seed for replicate `index`; derived by mixing, so a
/// replicate's draws do not depend on how many replicates ran before it.
std::uint64_t replicate_seed(std::uint64_t scenario_seed, int index);

/// One simulated dataset plus the bookkeeping the estimators never see:
/// per-cell contamination counts (exact conditional split of the sampled
/// counts) and the true target intensity per cell.
struct ReplicateData {
  GridDataset dataset;                     // area_total = n (unit cells)
  std::vector<long long> contam_counts;    // per cell, <= dataset count
  std::vector<double> target_intensity;    // lambda_beta per cell (unthinned)
  double realized_rate = 0.0;              // contaminated points / all points
  double design_rate = 0.0;                // intensity-share rate on this X
};

ReplicateData gen_replicate(const Scenario& scenario, bool contaminated, int index);

/// Full replicate harness: simulate, fit the MLE (tau = inf, phi = 0) and
/// the MIDE (RTMSPE grid search over tau_grid), two rows per replicate.
/// Replicates may run in parallel; rows are ordered by replicate index and
/// the table is bit-reproducible from the scenario seed.
ReplicateTable run_scenario(const Scenario& scenario, bool contaminated,
                            int n_replicates, const std::vector<double>& tau_grid,
                            double delta, int n_phi = 0);

}  // namespace mide
