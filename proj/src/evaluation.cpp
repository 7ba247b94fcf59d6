#include "mide/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mide {

PredictionMap predict_intensity(const FitResult& fit, const GridDataset& ds) {
  const std::size_t n = ds.n_cells();
  PredictionMap map;
  map.cell_id.resize(n);
  map.raw.resize(n);
  map.standardized.resize(n);

  // Habitat prediction removes the sampling-bias factor entirely; the map
  // is rank-based downstream, so a constant detection scale is irrelevant.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j) {
    const Cell& c = ds.cells[j];
    double lp = fit.params.beta[0];
    for (std::size_t k = 0; k < c.x.size(); ++k) lp += fit.params.beta[k + 1] * c.x[k];
    map.raw[j] = std::exp(cap_linpred(lp, nullptr));
  }
  for (std::size_t j = 0; j < n; ++j) map.cell_id[j] = ds.cells[j].id;

  const auto [mn_it, mx_it] = std::minmax_element(map.raw.begin(), map.raw.end());
  const double mn = *mn_it, mx = *mx_it;
  if (mx > mn) {
    for (std::size_t j = 0; j < n; ++j)
      map.standardized[j] = (map.raw[j] - mn) / (mx - mn);
  } else {
    std::fill(map.standardized.begin(), map.standardized.end(), 0.5);
    map.degenerate = true;
  }
  return map;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw input_error("auc: length mismatch");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(scores[i])) throw numeric_error("auc: non-finite score");
    if (labels[i] != 0 && labels[i] != 1) throw input_error("auc: labels must be 0/1");
    n_pos += static_cast<std::size_t>(labels[i]);
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw input_error("auc: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // midranks over tie groups; AUC is the Mann-Whitney statistic
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += midrank;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

CompareReport compare_report(const FitResult& fit_mle, const FitResult& fit_mide,
                             const GridDataset& ds, const QuadratureScheme& quad,
                             const std::vector<int>& pa_labels) {
  if (pa_labels.size() != ds.n_cells())
    throw input_error("compare_report: pa_labels must align with cells");
  const PredictionMap pm_mle = predict_intensity(fit_mle, ds);
  const PredictionMap pm_mide = predict_intensity(fit_mide, ds);

  std::vector<double> s_mle, s_mide;
  std::vector<int> labels;
  for (std::size_t j = 0; j < ds.n_cells(); ++j) {
    if (pa_labels[j] < 0) continue;
    s_mle.push_back(pm_mle.standardized[j]);
    s_mide.push_back(pm_mide.standardized[j]);
    labels.push_back(pa_labels[j]);
  }

  CompareReport report;
  report.auc_mle = auc(s_mle, labels);
  report.auc_mide = auc(s_mide, labels);

  for (Eigen::Index k = 0; k < fit_mle.params.beta.size(); ++k)
    report.coefficients.push_back({"MLE", static_cast<int>(k), fit_mle.params.beta[k]});
  for (Eigen::Index k = 0; k < fit_mide.params.beta.size(); ++k)
    report.coefficients.push_back({"MIDE", static_cast<int>(k), fit_mide.params.beta[k]});

  // A presence counts as corroborated when independent PA data confirm the
  // species in the same cell.
  std::vector<bool> flags;
  for (std::size_t i = 0; i < quad.r; ++i)
    if (quad.d[i] == 1.0) flags.push_back(pa_labels[quad.origin[i]] == 1);
  report.mide_groups = weight_groups(fit_mide, quad, flags);
  return report;
}

}  // namespace mide
