#pragma once

#include <cstddef>
#include <vector>

#include "mide/grid.hpp"
#include "mide/optimizer.hpp"

namespace mide {

struct SelectionRow {
  double tau;
  double phi;
  double rtmspe;
};

struct SelectionReport {
  std::vector<SelectionRow> grid;
  std::size_t best_index = 0;
  double best_tau = 0.0;
  double best_phi = 0.0;
  double delta = 0.9;
};

/// Root trimmed mean squared prediction error over cells: residuals are
/// observed count minus fitted expected count per cell (thinned intensity
/// times cell area, since observed counts include the sampling bias),
/// squared, sorted, and averaged over the h = floor((n+1) delta) smallest.
double rtmspe(const FitResult& fit, const GridDataset& ds, double delta);

/// Full (tau, phi) grid search: one phi path per tau, every fit scored by
/// RTMSPE_delta. Ties prefer larger tau, then larger phi. A tau whose
/// whole path fails is skipped; if every tau fails this throws with the
/// collected failure messages.
SelectionReport grid_search(const QuadratureScheme& quad, const GridDataset& ds,
                            const std::vector<double>& tau_grid, double delta,
                            int n_phi, std::vector<FitResult>* fits_out = nullptr);

/// The default candidate grid {0.1, 1, 5, 10, 20, inf}.
std::vector<double> default_tau_grid();

}  // namespace mide
