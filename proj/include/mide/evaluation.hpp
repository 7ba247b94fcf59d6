#pragma once

#include <span>
#include <string>
#include <vector>

#include "mide/grid.hpp"
#include "mide/inference.hpp"
#include "mide/optimizer.hpp"

namespace mide {

/// Habitat-suitability map: per-cell intensity with the detection factor
/// dropped, plus its min-max standardization to [0,1].
struct PredictionMap {
  std::vector<std::string> cell_id;
  std::vector<double> raw;           // exp(beta_hat . x(s)) per cell
  std::vector<double> standardized;  // (raw - min)/(max - min); 0.5 if flat
  bool degenerate = false;           // all raw values equal
};

PredictionMap predict_intensity(const FitResult& fit, const GridDataset& ds);

/// Mann-Whitney AUC with the 0.5-per-tie convention. Both classes must be
/// present.
double auc(std::span<const double> scores, std::span<const int> labels);

struct CoefficientRow {
  std::string estimator;
  int index;
  double estimate;
};

struct CompareReport {
  double auc_mle;
  double auc_mide;
  std::vector<CoefficientRow> coefficients;  // 1+p rows per estimator
  WeightGroups mide_groups;                  // reliable vs other presences
};

/// Side-by-side evaluation of two fits on the same dataset against
/// independent presence-absence labels (aligned per cell; -1 = not
/// surveyed). Reliable presence flags are taken at cell resolution: a
/// presence node counts as corroborated when its cell has a PA presence.
CompareReport compare_report(const FitResult& fit_mle, const FitResult& fit_mide,
                             const GridDataset& ds, const QuadratureScheme& quad,
                             const std::vector<int>& pa_labels);

}  // namespace mide
