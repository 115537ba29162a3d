#include "aeaudit/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "aeaudit/error.hpp"
#include "json.hpp"

namespace aeaudit {

const char* to_string(GridSpace s) noexcept {
  return s == GridSpace::Input2d ? "input2d" : "latent2d";
}

GridSpace grid_space_from_string(const std::string& s) {
  if (s == "input2d") return GridSpace::Input2d;
  if (s == "latent2d") return GridSpace::Latent2d;
  fail(ErrorKind::Format, "unknown grid space '" + s + "'");
}

// Written as xmin + (w·j)/(n − 1) so that index 2j of a refined grid with
// 2n − 1 points lands on exactly the same double.
double AuditGrid::x(std::size_t j) const noexcept {
  const double w = bounds.xmax - bounds.xmin;
  return nx < 2 ? bounds.xmin : bounds.xmin + (w * static_cast<double>(j)) / static_cast<double>(nx - 1);
}

double AuditGrid::y(std::size_t i) const noexcept {
  const double h = bounds.ymax - bounds.ymin;
  return ny < 2 ? bounds.ymin : bounds.ymin + (h * static_cast<double>(i)) / static_cast<double>(ny - 1);
}

bool AuditGrid::has_finding() const noexcept {
  return std::any_of(regions.begin(), regions.end(), [](const Region& r) { return r.out_of_bounds; });
}

Bounds inflated_bounds(const Matrix& points, double inflation) {
  if (points.rows() == 0 || points.cols() != 2) {
    fail(ErrorKind::InputDomain, "bounds need a non-empty two-column point set");
  }
  double lo[2] = {points(0, 0), points(0, 1)}, hi[2] = {lo[0], lo[1]};
  for (std::size_t i = 1; i < points.rows(); ++i)
    for (int k = 0; k < 2; ++k) {
      lo[k] = std::min(lo[k], points(i, k));
      hi[k] = std::max(hi[k], points(i, k));
    }
  double out_lo[2], out_hi[2];
  for (int k = 0; k < 2; ++k) {
    const double mid = 0.5 * (lo[k] + hi[k]);
    double extent = hi[k] - lo[k];
    if (!(extent > 0.0)) extent = 1.0;
    out_lo[k] = mid - 0.5 * extent * inflation;
    out_hi[k] = mid + 0.5 * extent * inflation;
  }
  return {out_lo[0], out_hi[0], out_lo[1], out_hi[1]};
}

double default_far_threshold(const Matrix& points) {
  if (points.rows() == 0) fail(ErrorKind::InputDomain, "far threshold needs data");
  const Vector c = column_means(points);
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) total += squared_distance(points.row(i), c);
  return 3.0 * std::sqrt(total / static_cast<double>(points.rows()));
}

namespace {

void check_options(const ScanOptions& opts) {
  if (opts.nx < 2 || opts.ny < 2) fail(ErrorKind::InputDomain, "grid resolution must be at least 2×2");
  if (!(opts.epsilon > 0.0)) fail(ErrorKind::InputDomain, "epsilon must be positive");
  if (opts.bounds) {
    const Bounds& b = *opts.bounds;
    if (!(b.xmax > b.xmin) || !(b.ymax > b.ymin) || !std::isfinite(b.xmin + b.xmax + b.ymin + b.ymax)) {
      fail(ErrorKind::InputDomain, "grid bounds must be finite with max > min");
    }
  }
}

template <class CellLoss>
void fill_losses(AuditGrid& grid, std::size_t threads, CellLoss cell_loss) {
  grid.losses = Matrix(grid.ny, grid.nx);
  std::size_t workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, grid.ny);
  auto run_rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = 0; j < grid.nx; ++j) grid.losses(i, j) = cell_loss(i, j);
  };
  if (workers <= 1) {
    run_rows(0, grid.ny);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (grid.ny + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk, end = std::min(grid.ny, begin + chunk);
      if (begin < end) pool.emplace_back(run_rows, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  for (double v : grid.losses.data()) {
    if (!std::isfinite(v) || v < 0.0) {
      fail(ErrorKind::Numerical, "reconstruction loss is not finite on the audit grid");
    }
  }
}

AuditGrid base_grid(GridSpace space, const Matrix& points, double inflation,
                    const ScanOptions& opts) {
  check_options(opts);
  AuditGrid grid;
  grid.space = space;
  grid.bounds = opts.bounds ? *opts.bounds : inflated_bounds(points, inflation);
  grid.nx = opts.nx;
  grid.ny = opts.ny;
  grid.epsilon = opts.epsilon;
  grid.far_threshold = opts.far_threshold ? *opts.far_threshold : default_far_threshold(points);
  grid.reference_points = points;
  return grid;
}

}  // namespace

AuditGrid scan_input_space(const Model& model, const Matrix& train, const ScanOptions& opts) {
  if (input_dim(model) != 2) {
    fail(ErrorKind::UnsupportedDimension,
         "input-space audit needs a two-dimensional input, model has " +
             std::to_string(input_dim(model)));
  }
  if (train.cols() != 2) fail(ErrorKind::ShapeMismatch, "training data must have two columns");
  AuditGrid grid = base_grid(GridSpace::Input2d, train, 4.0, opts);
  fill_losses(grid, opts.threads, [&](std::size_t i, std::size_t j) {
    const Vector p = grid.point(i, j);
    return anomaly_score(model, p);
  });
  grid.regions = extract_regions(grid, grid.epsilon, grid.reference_points, grid.far_threshold);
  return grid;
}

AuditGrid scan_latent_space(const Model& model, const Matrix& train, const ScanOptions& opts) {
  if (latent_dim(model) != 2) {
    fail(ErrorKind::UnsupportedDimension,
         "latent-space audit needs a two-dimensional latent space, model has " +
             std::to_string(latent_dim(model)));
  }
  if (train.cols() != input_dim(model)) {
    fail(ErrorKind::ShapeMismatch, "training data width does not match the model input");
  }
  Matrix enc(train.rows(), 2);
  for (std::size_t i = 0; i < train.rows(); ++i) {
    const Vector z = encode(model, train.row(i));
    enc(i, 0) = z[0];
    enc(i, 1) = z[1];
  }
  AuditGrid grid = base_grid(GridSpace::Latent2d, enc, 2.0, opts);
  fill_losses(grid, opts.threads, [&](std::size_t i, std::size_t j) {
    const Vector z = grid.point(i, j);
    const Vector a = decode(model, z);
    return anomaly_score(model, a);
  });
  grid.regions = extract_regions(grid, grid.epsilon, grid.reference_points, grid.far_threshold);
  return grid;
}

std::vector<Region> extract_regions(const AuditGrid& grid, double epsilon, const Matrix& points,
                                    double far_threshold) {
  const std::size_t ny = grid.losses.rows(), nx = grid.losses.cols();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> label(nx * ny, kNone);
  std::vector<Region> regions;

  for (std::size_t i0 = 0; i0 < ny; ++i0) {
    for (std::size_t j0 = 0; j0 < nx; ++j0) {
      if (label[i0 * nx + j0] != kNone || !(grid.losses(i0, j0) < epsilon)) continue;
      const std::size_t id = regions.size();
      Region r;
      std::deque<Cell> queue{{i0, j0}};
      label[i0 * nx + j0] = id;
      while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        r.cells.push_back(c);
        const Cell nbrs[4] = {{c.i - 1, c.j}, {c.i + 1, c.j}, {c.i, c.j - 1}, {c.i, c.j + 1}};
        const bool ok[4] = {c.i > 0, c.i + 1 < ny, c.j > 0, c.j + 1 < nx};
        for (int k = 0; k < 4; ++k) {
          if (!ok[k]) continue;
          const std::size_t idx = nbrs[k].i * nx + nbrs[k].j;
          if (label[idx] == kNone && grid.losses(nbrs[k].i, nbrs[k].j) < epsilon) {
            label[idx] = id;
            queue.push_back(nbrs[k]);
          }
        }
      }
      std::sort(r.cells.begin(), r.cells.end(),
                [](const Cell& a, const Cell& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });

      r.min_dist_to_train = std::numeric_limits<double>::infinity();
      r.max_dist_to_train = 0.0;
      bool have_rep = false;
      for (const Cell& c : r.cells) {
        const double loss = grid.losses(c.i, c.j);
        const Vector p = grid.point(c.i, c.j);
        const double d = points.rows() ? pairwise_min_distance(points, p)
                                       : std::numeric_limits<double>::infinity();
        r.min_dist_to_train = std::min(r.min_dist_to_train, d);
        r.max_dist_to_train = std::max(r.max_dist_to_train, d);
        if (!have_rep || loss < r.representative.loss) {
          r.representative = {c, p, loss};
          have_rep = true;
        }
        if (d > far_threshold && (!r.far_representative || loss < r.far_representative->loss)) {
          r.far_representative = CellPoint{c, p, loss};
        }
      }
      r.out_of_bounds = r.far_representative.has_value();
      regions.push_back(std::move(r));
    }
  }

  // A region contains training data when some reference point falls in the
  // footprint of one of its cells.
  const double wx = grid.nx > 1 ? (grid.bounds.xmax - grid.bounds.xmin) / double(grid.nx - 1) : 1.0;
  const double wy = grid.ny > 1 ? (grid.bounds.ymax - grid.bounds.ymin) / double(grid.ny - 1) : 1.0;
  for (std::size_t k = 0; k < points.rows() && !regions.empty(); ++k) {
    const double fj = std::round((points(k, 0) - grid.bounds.xmin) / wx);
    const double fi = std::round((points(k, 1) - grid.bounds.ymin) / wy);
    if (!(fj >= 0.0 && fi >= 0.0 && fj < double(nx) && fi < double(ny))) continue;
    const std::size_t id = label[static_cast<std::size_t>(fi) * nx + static_cast<std::size_t>(fj)];
    if (id != kNone) regions[id].contains_training_data = true;
  }
  return regions;
}

void attach_verdicts(AuditGrid& grid, const Model& model, const ScoreTable& train_scores) {
  for (Region& r : grid.regions) {
    if (!r.far_representative) continue;
    const Vector a = cell_input(model, grid, r.far_representative->cell);
    r.verdict = verdict_for_score(r.far_representative->loss, train_scores,
                                  rounding_floor(a, train_scores.convention));
  }
}

Vector cell_input(const Model& model, const AuditGrid& grid, const Cell& cell) {
  const Vector p = grid.point(cell.i, cell.j);
  return grid.space == GridSpace::Input2d ? p : decode(model, p);
}

// ------------------------------------------------------------- report

AuditReport make_audit_report(const AuditGrid& grid, const std::string& model_file,
                              std::uint64_t seed, std::optional<double> min_normal_score) {
  AuditReport r;
  r.space = grid.space;
  r.bounds = grid.bounds;
  r.nx = grid.nx;
  r.ny = grid.ny;
  r.epsilon = grid.epsilon;
  r.far_threshold = grid.far_threshold;
  r.regions = grid.regions;
  r.min_normal_score = min_normal_score;
  r.model_file = model_file;
  r.seed = seed;
  r.finding = grid.has_finding();
  return r;
}

namespace {

using nlohmann::json;

json cell_point_json(const CellPoint& c) {
  return {{"cell", {c.cell.i, c.cell.j}}, {"point", c.point}, {"loss", c.loss}};
}

CellPoint cell_point_from(const json& j) {
  CellPoint c;
  c.cell = {j.at("cell").at(0).get<std::size_t>(), j.at("cell").at(1).get<std::size_t>()};
  c.point = j.at("point").get<Vector>();
  c.loss = j.at("loss").get<double>();
  return c;
}

json verdict_json(const Verdict& v) {
  json j = {{"undetected", v.undetected},
            {"score", v.score},
            {"min_normal_score", v.min_normal_score},
            {"margin", v.margin},
            {"ratio", nullptr}};
  if (v.ratio) j["ratio"] = *v.ratio;
  return j;
}

Verdict verdict_from(const json& j) {
  Verdict v;
  v.undetected = j.at("undetected").get<bool>();
  v.score = j.at("score").get<double>();
  v.min_normal_score = j.at("min_normal_score").get<double>();
  v.margin = j.at("margin").get<double>();
  if (!j.at("ratio").is_null()) v.ratio = j.at("ratio").get<double>();
  return v;
}

// JSON has no infinity; a region measured against no points stores null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double from_finite_or_null(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

std::string audit_report_to_json(const AuditReport& report) {
  json regions = json::array();
  for (std::size_t k = 0; k < report.regions.size(); ++k) {
    const Region& r = report.regions[k];
    json cells = json::array();
    for (const Cell& c : r.cells) cells.push_back({c.i, c.j});
    regions.push_back({{"id", k},
                       {"cell_count", r.cells.size()},
                       {"cells", cells},
                       {"representative", cell_point_json(r.representative)},
                       {"min_dist_to_train", finite_or_null(r.min_dist_to_train)},
                       {"max_dist_to_train", finite_or_null(r.max_dist_to_train)},
                       {"contains_training_data", r.contains_training_data},
                       {"out_of_bounds", r.out_of_bounds},
                       {"far_representative",
                        r.far_representative ? cell_point_json(*r.far_representative) : json(nullptr)},
                       {"verdict", r.verdict ? verdict_json(*r.verdict) : json(nullptr)}});
  }
  json j = {{"format", "aeaudit-audit"},
            {"version", 1},
            {"space", to_string(report.space)},
            {"bounds",
             {{"xmin", report.bounds.xmin},
              {"xmax", report.bounds.xmax},
              {"ymin", report.bounds.ymin},
              {"ymax", report.bounds.ymax}}},
            {"resolution", {{"nx", report.nx}, {"ny", report.ny}}},
            {"epsilon", report.epsilon},
            {"far_threshold", report.far_threshold},
            {"min_normal_score", report.min_normal_score ? json(*report.min_normal_score) : json(nullptr)},
            {"model_file", report.model_file},
            {"seed", report.seed},
            {"finding", report.finding},
            {"region_count", report.regions.size()},
            {"regions", regions}};
  return j.dump(2) + "\n";
}

AuditReport audit_report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string{}) != "aeaudit-audit") {
      fail(ErrorKind::Format, "not an aeaudit audit report");
    }
    if (j.at("version").get<int>() != 1) fail(ErrorKind::Version, "unsupported audit report version");
    AuditReport r;
    r.space = grid_space_from_string(j.at("space").get<std::string>());
    const json& b = j.at("bounds");
    r.bounds = {b.at("xmin").get<double>(), b.at("xmax").get<double>(), b.at("ymin").get<double>(),
                b.at("ymax").get<double>()};
    r.nx = j.at("resolution").at("nx").get<std::size_t>();
    r.ny = j.at("resolution").at("ny").get<std::size_t>();
    r.epsilon = j.at("epsilon").get<double>();
    r.far_threshold = j.at("far_threshold").get<double>();
    if (!j.at("min_normal_score").is_null()) r.min_normal_score = j.at("min_normal_score").get<double>();
    r.model_file = j.at("model_file").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.finding = j.at("finding").get<bool>();
    for (const json& jr : j.at("regions")) {
      Region reg;
      for (const json& c : jr.at("cells")) reg.cells.push_back({c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>()});
      reg.representative = cell_point_from(jr.at("representative"));
      reg.min_dist_to_train = from_finite_or_null(jr.at("min_dist_to_train"));
      reg.max_dist_to_train = from_finite_or_null(jr.at("max_dist_to_train"));
      reg.contains_training_data = jr.at("contains_training_data").get<bool>();
      reg.out_of_bounds = jr.at("out_of_bounds").get<bool>();
      if (!jr.at("far_representative").is_null()) reg.far_representative = cell_point_from(jr.at("far_representative"));
      if (!jr.at("verdict").is_null()) reg.verdict = verdict_from(jr.at("verdict"));
      r.regions.push_back(std::move(reg));
    }
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed audit report: ") + e.what());
  }
}

// ---------------------------------------------------------- grid CSV

std::string grid_csv(const AuditGrid& grid) {
  std::string out = "x,y,loss\n";
  for (std::size_t i = 0; i < grid.ny; ++i)
    for (std::size_t j = 0; j < grid.nx; ++j) {
      out += format_double(grid.x(j));
      out += ',';
      out += format_double(grid.y(i));
      out += ',';
      out += format_double(grid.losses(i, j));
      out += '\n';
    }
  return out;
}

void write_grid_csv(const AuditGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << grid_csv(grid);
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

// ------------------------------------------------------------ heatmap

namespace {

struct Rgb {
  double r, g, b;
};

// Viridis-like ramp; no red so the sub-ε overlay stays unambiguous.
constexpr Rgb kRamp[] = {{0x44, 0x01, 0x54}, {0x3b, 0x52, 0x8b}, {0x21, 0x91, 0x8c},
                         {0x5e, 0xc9, 0x62}, {0xfd, 0xe7, 0x25}};

std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  constexpr std::size_t n = std::size(kRamp) - 1;
  const double pos = t * static_cast<double>(n);
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(pos), n - 1);
  const double f = pos - static_cast<double>(k);
  auto mix = [&](double a, double b) { return static_cast<int>(std::lround(a + (b - a) * f)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(kRamp[k].r, kRamp[k + 1].r),
                mix(kRamp[k].g, kRamp[k + 1].g), mix(kRamp[k].b, kRamp[k + 1].b));
  return buf;
}

}  // namespace

std::string render_heatmap_svg(const AuditGrid& grid, const HeatmapStyle& style) {
  const std::size_t nx = grid.losses.cols(), ny = grid.losses.rows();
  const std::size_t cell = std::max<std::size_t>(1, style.max_pixels / std::max<std::size_t>({nx, ny, 1}));
  const std::size_t width = nx * cell, height = ny * cell;

  // Exponential colour scale: linear in log(loss) between the smallest
  // positive and the largest loss.
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double v : grid.losses.data()) {
    if (v > 0.0) lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const bool flat = !(hi > lo) || !std::isfinite(lo);
  const double log_lo = flat ? 0.0 : std::log(lo), log_span = flat ? 1.0 : std::log(hi) - std::log(lo);

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
     << "<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t i = 0; i < ny; ++i) {
    for (std::size_t j = 0; j < nx; ++j) {
      const double v = grid.losses(i, j);
      std::string fill;
      if (v < grid.epsilon) {
        fill = style.sub_epsilon_fill;
      } else {
        const double t = flat ? 0.0 : (std::log(std::max(v, lo)) - log_lo) / log_span;
        fill = ramp_color(t);
      }
      os << "<rect x=\"" << j * cell << "\" y=\"" << (ny - 1 - i) * cell << "\" width=\"" << cell
         << "\" height=\"" << cell << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  os << "</g>\n<g fill=\"" << style.marker_fill << "\" stroke=\"#000000\" stroke-width=\"0.5\">\n";
  const double bw = grid.bounds.xmax - grid.bounds.xmin, bh = grid.bounds.ymax - grid.bounds.ymin;
  for (std::size_t k = 0; k < grid.reference_points.rows(); ++k) {
    const double px = (grid.reference_points(k, 0) - grid.bounds.xmin) / bw;
    const double py = (grid.reference_points(k, 1) - grid.bounds.ymin) / bh;
    if (!(px >= 0.0 && px <= 1.0 && py >= 0.0 && py <= 1.0)) continue;
    // Grid points sit at cell centres, so map [0, 1] onto the centre span.
    const double cx = 0.5 * double(cell) + px * double(width - cell);
    const double cy = double(height) - 0.5 * double(cell) - py * double(height - cell);
    char buf[96];
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2\"/>\n", cx, cy);
    os << buf;
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

void render_heatmap(const AuditGrid& grid, const std::filesystem::path& path,
                    const HeatmapStyle& style) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << render_heatmap_svg(grid, style);
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace aeaudit
