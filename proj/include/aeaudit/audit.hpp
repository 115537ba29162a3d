#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aeaudit/anomaly.hpp"
#include "aeaudit/models.hpp"

namespace aeaudit {

enum class GridSpace { Input2d, Latent2d };

const char* to_string(GridSpace s) noexcept;
GridSpace grid_space_from_string(const std::string& s);

struct Bounds {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
};

/// Grid cell index: i is the row (y), j the column (x).
struct Cell {
  std::size_t i = 0, j = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct CellPoint {
  Cell cell;
  Vector point;  ///< grid coordinates (input point or latent point)
  double loss = 0.0;
};

/// 4-connected set of cells with loss < ε.
struct Region {
  std::vector<Cell> cells;  ///< row-major order
  CellPoint representative;  ///< minimal loss cell, first in row-major order on ties
  double min_dist_to_train = 0.0;  ///< over cells
  double max_dist_to_train = 0.0;  ///< over cells
  bool contains_training_data = false;
  /// Some cell lies beyond the far threshold.
  bool out_of_bounds = false;
  /// Minimal loss cell among those beyond the far threshold.
  std::optional<CellPoint> far_representative;
  std::optional<Verdict> verdict;  ///< of the far representative, when scores are known
};

struct AuditGrid {
  GridSpace space = GridSpace::Input2d;
  Bounds bounds;
  std::size_t nx = 0, ny = 0;
  Matrix losses;  ///< ny×nx
  double epsilon = 0.1;
  double far_threshold = 0.0;
  std::vector<Region> regions;
  Matrix reference_points;  ///< training points or encodings in grid coordinates

  double x(std::size_t j) const noexcept;
  double y(std::size_t i) const noexcept;
  Vector point(std::size_t i, std::size_t j) const { return {x(j), y(i)}; }
  bool has_finding() const noexcept;
};

struct ScanOptions {
  std::optional<Bounds> bounds;  ///< default: data box inflated (4× input, 2× latent)
  std::size_t nx = 200, ny = 200;
  double epsilon = 0.1;
  std::optional<double> far_threshold;  ///< default: 3× RMS distance to the centroid
  std::size_t threads = 0;              ///< 0 = hardware concurrency
};

/// Bounding box of the rows of a two-column matrix, each axis widened
/// about its centre by `inflation`. A flat axis gets a unit extent.
Bounds inflated_bounds(const Matrix& points, double inflation);

/// 3·sqrt(mean‖xᵢ − x̄‖²).
double default_far_threshold(const Matrix& points);

/// loss(i, j) = L_R(p, reconstruct(p)) at p = (x_j, y_i). Training data
/// sets the default bounds, the far threshold and region distances.
AuditGrid scan_input_space(const Model& model, const Matrix& train, const ScanOptions& opts = {});

/// loss(i, j) = L_R(h(z), h(g(h(z)))) at z = (x_j, y_i). Distances are
/// measured to the training encodings.
AuditGrid scan_latent_space(const Model& model, const Matrix& train, const ScanOptions& opts = {});

/// Connected components (4-neighbourhood) of cells with loss < epsilon,
/// discovered in row-major order. `points` are in grid coordinates.
std::vector<Region> extract_regions(const AuditGrid& grid, double epsilon, const Matrix& points,
                                    double far_threshold);

/// Fills Region::verdict from the training score table.
void attach_verdicts(AuditGrid& grid, const Model& model, const ScoreTable& train_scores);

/// The point whose loss the grid recorded at `cell`, in input space:
/// the grid point itself for input grids, h(z) for latent grids.
Vector cell_input(const Model& model, const AuditGrid& grid, const Cell& cell);

struct AuditReport {
  GridSpace space = GridSpace::Input2d;
  Bounds bounds;
  std::size_t nx = 0, ny = 0;
  double epsilon = 0.0;
  double far_threshold = 0.0;
  std::vector<Region> regions;
  std::optional<double> min_normal_score;
  std::string model_file;
  std::uint64_t seed = 0;
  bool finding = false;
};

AuditReport make_audit_report(const AuditGrid& grid, const std::string& model_file,
                              std::uint64_t seed, std::optional<double> min_normal_score);
std::string audit_report_to_json(const AuditReport& report);
AuditReport audit_report_from_json(const std::string& text);

/// "x,y,loss" rows in row-major order.
void write_grid_csv(const AuditGrid& grid, const std::filesystem::path& path);
std::string grid_csv(const AuditGrid& grid);

struct HeatmapStyle {
  std::string sub_epsilon_fill = "#ff0000";
  std::string marker_fill = "#ffffff";
  std::size_t max_pixels = 800;
};

/// One <rect> per cell, colours on a log scale of the loss, sub-ε cells in
/// the configured red, reference points as circles. Row 0 is drawn at the
/// bottom.
std::string render_heatmap_svg(const AuditGrid& grid, const HeatmapStyle& style = {});
void render_heatmap(const AuditGrid& grid, const std::filesystem::path& path,
                    const HeatmapStyle& style = {});

}  // namespace aeaudit
