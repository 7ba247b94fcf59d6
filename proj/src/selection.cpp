#include "mide/selection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mide {

double rtmspe(const FitResult& fit, const GridDataset& ds, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw input_error("rtmspe: delta must be in (0,1)");
  const std::size_t n = ds.n_cells();
  const std::size_t h =
      static_cast<std::size_t>(std::floor((static_cast<double>(n) + 1.0) * delta));
  if (h == 0) throw input_error("rtmspe: delta too small");

  const double cell_area = ds.cell_area();
  std::vector<double> sq(n);
  // Observed counts include the sampling bias, so the prediction uses the
  // thinned intensity; with unit cell area it reads as an expected count.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(n); ++j) {
    const Cell& c = ds.cells[j];
    std::vector<double> xrow(1 + c.x.size());
    xrow[0] = 1.0;
    std::copy(c.x.begin(), c.x.end(), xrow.begin() + 1);
    const double lambda = thinned_intensity(fit.params, xrow, c.z);
    const double resid = static_cast<double>(c.count) - cell_area * lambda;
    sq[j] = resid * resid;
  }

  std::sort(sq.begin(), sq.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < std::min(h, n); ++i) acc += sq[i];
  return std::sqrt(acc / static_cast<double>(std::min(h, n)));
}

std::vector<double> default_tau_grid() {
  return {0.1, 1.0, 5.0, 10.0, 20.0, kTauInf};
}

SelectionReport grid_search(const QuadratureScheme& quad, const GridDataset& ds,
                            const std::vector<double>& tau_grid, double delta,
                            int n_phi, std::vector<FitResult>* fits_out) {
  if (tau_grid.empty()) throw input_error("grid_search: empty tau grid");
  if (n_phi <= 0) n_phi = default_n_phi(quad.p);

  struct PerTau {
    std::vector<SelectionRow> rows;
    std::vector<FitResult> fits;
    std::string failure;
  };
  std::vector<PerTau> results(tau_grid.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(tau_grid.size()); ++t) {
    const double tau = tau_grid[t];
    try {
      PathResult path = phi_path(quad, tau, n_phi);
      for (std::size_t u = 0; u < path.fits.size(); ++u) {
        const double err = rtmspe(path.fits[u], ds, delta);
        results[t].rows.push_back({tau, path.phis[u], err});
        results[t].fits.push_back(std::move(path.fits[u]));
      }
    } catch (const std::exception& e) {
      results[t].failure = e.what();
    }
  }

  SelectionReport report;
  report.delta = delta;
  std::string failures;
  std::vector<FitResult> fits;
  for (auto& per : results) {
    if (!per.failure.empty()) {
      failures += (failures.empty() ? "" : "; ") + per.failure;
      continue;
    }
    for (std::size_t u = 0; u < per.rows.size(); ++u) {
      report.grid.push_back(per.rows[u]);
      fits.push_back(std::move(per.fits[u]));
    }
  }
  if (report.grid.empty())
    throw numeric_error("grid_search: every candidate failed: " + failures);

  std::size_t best = 0;
  for (std::size_t i = 1; i < report.grid.size(); ++i) {
    const SelectionRow& a = report.grid[i];
    const SelectionRow& b = report.grid[best];
    // ties prefer the least intervention: larger tau, then larger phi
    const bool better = a.rtmspe < b.rtmspe ||
                        (a.rtmspe == b.rtmspe &&
                         (a.tau > b.tau || (a.tau == b.tau && a.phi > b.phi)));
    if (better) best = i;
  }
  report.best_index = best;
  report.best_tau = report.grid[best].tau;
  report.best_phi = report.grid[best].phi;
  if (fits_out) *fits_out = std::move(fits);
  return report;
}

}  // namespace mide
