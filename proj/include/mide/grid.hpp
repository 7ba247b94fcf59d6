#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mide {

/// One grid cell: observed presence count plus environmental (x) and
/// sampling-bias (z) variables at the cell.
struct Cell {
  std::string id;
  long long count = 0;
  std::vector<double> x;
  std::vector<double> z;
};

/// Gridded presence-only dataset over a study area of total size
/// area_total. Uniform cells; by convention area_total defaults to the
/// number of cells (unit cell area), so fitted intensities read directly
/// as expected counts per cell.
struct GridDataset {
  double area_total = 0.0;
  std::vector<Cell> cells;

  std::size_t n_cells() const { return cells.size(); }
  std::size_t n_cov() const { return cells.empty() ? 0 : cells.front().x.size(); }
  std::size_t n_bias() const { return cells.empty() ? 0 : cells.front().z.size(); }
  long long total_count() const;
  double cell_area() const { return area_total / static_cast<double>(cells.size()); }

  /// Enforce the type invariants (unique ids, nonnegative counts,
  /// consistent dimensions, positive area). Throws input_error.
  void validate() const;
};

struct ColumnStats {
  double mean = 0.0;
  double sd = 1.0;
};

/// Affine transform applied per column by standardize(); stores enough to
/// invert it exactly.
struct StandardizationRecord {
  std::vector<ColumnStats> x_stats;
  std::vector<ColumnStats> z_stats;

  GridDataset apply(const GridDataset& ds) const;
  GridDataset invert(const GridDataset& ds) const;
};

/// Quadrature scheme over the grid: every presence location is a node
/// (d = 1, at cell resolution) and every empty cell contributes one dummy
/// node (d = 0). Node covariate rows are stored flat and row-major; x
/// rows carry a leading intercept 1.
struct QuadratureScheme {
  std::size_t r = 0;         // number of nodes, r = n + m - m_occupied
  std::size_t p = 0;         // environmental variables per cell
  std::size_t q = 0;         // bias variables per cell
  long long m = 0;           // total presence count
  long long m_occupied = 0;  // cells containing at least one presence
  double area_total = 0.0;

  std::vector<double> d;            // r, 0/1 presence indicator
  std::vector<double> w;            // r, quadrature weights, sum = area_total
  std::vector<double> x;            // r * (1+p), row-major, x[i*(1+p)] == 1
  std::vector<double> z;            // r * q, row-major
  std::vector<std::int32_t> origin; // r, index of the originating cell

  const double* x_row(std::size_t i) const { return x.data() + i * (1 + p); }
  const double* z_row(std::size_t i) const { return z.data() + i * q; }
};

/// Clamp every count to at most 1 (spatial deduplication of presences
/// within a cell). Pure map-in, map-out form.
std::map<std::string, long long> dedupe_presences(
    const std::map<std::string, long long>& raw_counts);

/// Replace dataset counts from a map keyed by cell id. Unknown ids throw
/// input_error. Used to push deduplicated counts back into a dataset.
GridDataset apply_counts(GridDataset ds, const std::map<std::string, long long>& counts);

/// Dedupe applied in place on a dataset (the operating flag lives at the
/// call site: simulation fits keep multiplicities, real-data fits dedupe).
GridDataset dedupe_dataset(GridDataset ds);

/// Standardize every x and z column to sample mean 0 and variance 1
/// (divisor n-1). A constant column is an error naming the column.
std::pair<GridDataset, StandardizationRecord> standardize(const GridDataset& ds);

/// Build the quadrature scheme. Cell with count m_i >= 1 yields m_i
/// presence nodes of weight |A|/(n*m_i); an empty cell yields one dummy
/// node of weight |A|/n. Deterministic and order-stable in the cell order.
QuadratureScheme build_quadrature(const GridDataset& ds);

/// Parse cells.csv with header cell_id,count,x1..xp,z1..zq. Missing or
/// non-numeric values are rejected. area_total defaults to n_cells.
GridDataset read_cells_csv(const std::string& path);

/// Parse pa.csv with header cell_id,label (label in {0,1}).
std::vector<std::pair<std::string, int>> read_pa_csv(const std::string& path);

/// Align PA labels with dataset cells: result[i] is 0/1 for surveyed
/// cells and -1 for cells absent from the PA file. Unknown PA cell ids
/// throw input_error.
std::vector<int> align_pa_labels(const GridDataset& ds,
                                 const std::vector<std::pair<std::string, int>>& pa);

}  // namespace mide
