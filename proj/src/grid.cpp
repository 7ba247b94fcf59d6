#include "mide/grid.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "mide/csv.hpp"
#include "mide/error.hpp"

namespace mide {

long long GridDataset::total_count() const {
  long long m = 0;
  for (const auto& c : cells) m += c.count;
  return m;
}

void GridDataset::validate() const {
  if (cells.empty()) throw input_error("dataset has no cells");
  if (!(area_total > 0.0)) throw input_error("area_total must be positive");
  const std::size_t p = cells.front().x.size();
  const std::size_t q = cells.front().z.size();
  std::unordered_set<std::string> seen;
  seen.reserve(cells.size());
  for (const auto& c : cells) {
    if (c.count < 0) throw input_error("negative count in cell " + c.id);
    if (c.x.size() != p || c.z.size() != q)
      throw input_error("inconsistent variable count in cell " + c.id);
    for (double v : c.x)
      if (!std::isfinite(v)) throw input_error("non-finite covariate in cell " + c.id);
    for (double v : c.z)
      if (!std::isfinite(v)) throw input_error("non-finite bias variable in cell " + c.id);
    if (!seen.insert(c.id).second) throw input_error("duplicate cell_id " + c.id);
  }
}

std::map<std::string, long long> dedupe_presences(
    const std::map<std::string, long long>& raw_counts) {
  std::map<std::string, long long> out;
  for (const auto& [id, count] : raw_counts) {
    if (count < 0) throw input_error("negative count for cell " + id);
    out[id] = std::min<long long>(count, 1);
  }
  return out;
}

GridDataset apply_counts(GridDataset ds, const std::map<std::string, long long>& counts) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(ds.cells.size());
  for (std::size_t i = 0; i < ds.cells.size(); ++i) index[ds.cells[i].id] = i;
  for (const auto& [id, count] : counts) {
    auto it = index.find(id);
    if (it == index.end()) throw input_error("unknown cell_id " + id);
    ds.cells[it->second].count = count;
  }
  return ds;
}

GridDataset dedupe_dataset(GridDataset ds) {
  for (auto& c : ds.cells) c.count = std::min<long long>(c.count, 1);
  return ds;
}

namespace {
ColumnStats column_stats(const GridDataset& ds, bool bias, std::size_t col) {
  const double n = static_cast<double>(ds.cells.size());
  double mean = 0.0;
  for (const auto& c : ds.cells) mean += (bias ? c.z[col] : c.x[col]);
  mean /= n;
  double ss = 0.0;
  for (const auto& c : ds.cells) {
    const double dv = (bias ? c.z[col] : c.x[col]) - mean;
    ss += dv * dv;
  }
  const double var = ss / (n - 1.0);
  return {mean, std::sqrt(var)};
}
}  // namespace

GridDataset StandardizationRecord::apply(const GridDataset& ds) const {
  GridDataset out = ds;
  for (auto& c : out.cells) {
    for (std::size_t j = 0; j < c.x.size(); ++j)
      c.x[j] = (c.x[j] - x_stats[j].mean) / x_stats[j].sd;
    for (std::size_t j = 0; j < c.z.size(); ++j)
      c.z[j] = (c.z[j] - z_stats[j].mean) / z_stats[j].sd;
  }
  return out;
}

GridDataset StandardizationRecord::invert(const GridDataset& ds) const {
  GridDataset out = ds;
  for (auto& c : out.cells) {
    for (std::size_t j = 0; j < c.x.size(); ++j)
      c.x[j] = c.x[j] * x_stats[j].sd + x_stats[j].mean;
    for (std::size_t j = 0; j < c.z.size(); ++j)
      c.z[j] = c.z[j] * z_stats[j].sd + z_stats[j].mean;
  }
  return out;
}

std::pair<GridDataset, StandardizationRecord> standardize(const GridDataset& ds) {
  ds.validate();
  if (ds.cells.size() < 2) throw input_error("standardize: need at least 2 cells");
  StandardizationRecord rec;
  for (std::size_t j = 0; j < ds.n_cov(); ++j) {
    ColumnStats s = column_stats(ds, false, j);
    if (!(s.sd > 0.0))
      throw input_error("constant column x" + std::to_string(j + 1));
    rec.x_stats.push_back(s);
  }
  for (std::size_t j = 0; j < ds.n_bias(); ++j) {
    ColumnStats s = column_stats(ds, true, j);
    if (!(s.sd > 0.0))
      throw input_error("constant column z" + std::to_string(j + 1));
    rec.z_stats.push_back(s);
  }
  return {rec.apply(ds), rec};
}

QuadratureScheme build_quadrature(const GridDataset& ds) {
  ds.validate();
  QuadratureScheme quad;
  quad.p = ds.n_cov();
  quad.q = ds.n_bias();
  quad.area_total = ds.area_total;
  const std::size_t n = ds.cells.size();
  const double base_w = ds.area_total / static_cast<double>(n);

  for (const auto& c : ds.cells) {
    quad.m += c.count;
    if (c.count >= 1) ++quad.m_occupied;
  }
  quad.r = n + static_cast<std::size_t>(quad.m) -
           static_cast<std::size_t>(quad.m_occupied);

  quad.d.reserve(quad.r);
  quad.w.reserve(quad.r);
  quad.x.reserve(quad.r * (1 + quad.p));
  quad.z.reserve(quad.r * quad.q);
  quad.origin.reserve(quad.r);

  for (std::size_t ci = 0; ci < n; ++ci) {
    const Cell& c = ds.cells[ci];
    const long long nodes = std::max<long long>(c.count, 1);
    const double w = base_w / static_cast<double>(nodes);
    const double d = c.count >= 1 ? 1.0 : 0.0;
    for (long long k = 0; k < nodes; ++k) {
      quad.d.push_back(d);
      quad.w.push_back(w);
      quad.x.push_back(1.0);
      quad.x.insert(quad.x.end(), c.x.begin(), c.x.end());
      quad.z.insert(quad.z.end(), c.z.begin(), c.z.end());
      quad.origin.push_back(static_cast<std::int32_t>(ci));
    }
  }
  return quad;
}

GridDataset read_cells_csv(const std::string& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw input_error(path + ": empty file");
  const auto header = csv::split(lines[0]);
  if (header.size() < 2 || header[0] != "cell_id" || header[1] != "count")
    throw input_error(path + ": header must start with cell_id,count");
  std::size_t p = 0, q = 0;
  for (std::size_t j = 2; j < header.size(); ++j) {
    const std::string& h = header[j];
    if (!h.empty() && h[0] == 'x') {
      if (q > 0) throw input_error(path + ": x columns must precede z columns");
      ++p;
    } else if (!h.empty() && h[0] == 'z') {
      ++q;
    } else {
      throw input_error(path + ": unexpected column '" + h + "'");
    }
  }

  GridDataset ds;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::string ctx = path + ":" + std::to_string(li + 1);
    const auto fields = csv::split(lines[li]);
    if (fields.size() != header.size())
      throw input_error(ctx + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(fields.size()));
    Cell c;
    c.id = fields[0];
    if (c.id.empty()) throw input_error(ctx + ": empty cell_id");
    c.count = csv::parse_int(fields[1], ctx);
    for (std::size_t j = 0; j < p; ++j)
      c.x.push_back(csv::parse_double(fields[2 + j], ctx));
    for (std::size_t j = 0; j < q; ++j)
      c.z.push_back(csv::parse_double(fields[2 + p + j], ctx));
    ds.cells.push_back(std::move(c));
  }
  ds.area_total = static_cast<double>(ds.cells.size());
  ds.validate();
  return ds;
}

std::vector<std::pair<std::string, int>> read_pa_csv(const std::string& path) {
  const auto lines = csv::read_lines(path);
  if (lines.empty()) throw input_error(path + ": empty file");
  const auto header = csv::split(lines[0]);
  if (header.size() != 2 || header[0] != "cell_id" || header[1] != "label")
    throw input_error(path + ": header must be cell_id,label");
  std::vector<std::pair<std::string, int>> pa;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const std::string ctx = path + ":" + std::to_string(li + 1);
    const auto fields = csv::split(lines[li]);
    if (fields.size() != 2) throw input_error(ctx + ": expected 2 fields");
    const long long label = csv::parse_int(fields[1], ctx);
    if (label != 0 && label != 1)
      throw input_error(ctx + ": label must be 0 or 1");
    pa.emplace_back(fields[0], static_cast<int>(label));
  }
  return pa;
}

std::vector<int> align_pa_labels(const GridDataset& ds,
                                 const std::vector<std::pair<std::string, int>>& pa) {
  std::unordered_map<std::string, std::size_t> index;
  index.reserve(ds.cells.size());
  for (std::size_t i = 0; i < ds.cells.size(); ++i) index[ds.cells[i].id] = i;
  std::vector<int> labels(ds.cells.size(), -1);
  for (const auto& [id, label] : pa) {
    auto it = index.find(id);
    if (it == index.end()) throw input_error("pa data references unknown cell_id " + id);
    labels[it->second] = label;
  }
  return labels;
}

}  // namespace mide
