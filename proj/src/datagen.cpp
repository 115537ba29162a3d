#include "aeaudit/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "aeaudit/error.hpp"
#include "aeaudit/rng.hpp"

namespace aeaudit {

namespace {

// Lower-triangular L with L·Lᵀ = C for symmetric positive semi-definite C.
Matrix psd_cholesky(const Matrix& c) {
  const std::size_t n = c.rows();
  if (c.cols() != n) fail(ErrorKind::InputDomain, "covariance must be square");
  const double scale = std::max(1.0, max_abs(c));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(c(i, j) - c(j, i)) > 1e-12 * scale)
        fail(ErrorKind::InputDomain, "covariance is not symmetric");

  const double tol = 1e-12 * scale;
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = c(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d < -tol) fail(ErrorKind::InputDomain, "covariance is not positive semi-definite");
    const bool zero_pivot = d <= tol;
    l(j, j) = zero_pivot ? 0.0 : std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = c(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (zero_pivot) {
        if (std::abs(s) > 1e-9 * scale)
          fail(ErrorKind::InputDomain, "covariance is not positive semi-definite");
        l(i, j) = 0.0;
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  }
  return l;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                   const std::string& file) {
  if (offset + 4 > bytes.size()) {
    fail(ErrorKind::Format, file + ": truncated header at offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

}  // namespace

void validate(const Dataset& ds) {
  if (!ds.x.all_finite()) fail(ErrorKind::InputDomain, "dataset contains NaN or Inf");
  if (ds.labels && ds.labels->size() != ds.x.rows()) {
    fail(ErrorKind::InputDomain, "dataset has " + std::to_string(ds.labels->size()) +
                                     " labels for " + std::to_string(ds.x.rows()) + " rows");
  }
  if (ds.image && ds.image->size() != ds.x.cols()) {
    fail(ErrorKind::InputDomain, "image shape does not match feature count");
  }
}

const char* to_string(Family f) noexcept {
  switch (f) {
    case Family::Gaussian: return "gaussian";
    case Family::DoubleGaussian: return "double_gaussian";
    case Family::Banana: return "banana";
    case Family::Diagonal: return "diagonal";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "gaussian") return Family::Gaussian;
  if (name == "double_gaussian" || name == "double-gaussian") return Family::DoubleGaussian;
  if (name == "banana") return Family::Banana;
  if (name == "diagonal") return Family::Diagonal;
  fail(ErrorKind::InputDomain, "unknown dataset family '" + name + "'");
}

SyntheticSpec resolved(SyntheticSpec spec) {
  if (spec.family == Family::Gaussian && spec.components.empty()) {
    spec.components.push_back({{0.0, 0.0}, Matrix{{1.0, 0.8}, {0.8, 1.0}}});
  }
  if (spec.family == Family::DoubleGaussian && spec.components.empty()) {
    spec.components.push_back({{-3.0, -3.0}, Matrix::identity(2)});
    spec.components.push_back({{3.0, 3.0}, Matrix::identity(2)});
  }
  return spec;
}

Dataset generate(const SyntheticSpec& raw) {
  const SyntheticSpec spec = resolved(raw);
  if (spec.samples_per_component < 1) {
    fail(ErrorKind::InputDomain, "samples_per_component must be at least 1");
  }
  Rng rng(spec.seed);
  const std::size_t m = spec.samples_per_component;
  Dataset ds;

  switch (spec.family) {
    case Family::Gaussian:
    case Family::DoubleGaussian: {
      const std::size_t want = spec.family == Family::Gaussian ? 1 : 2;
      if (spec.components.size() != want) {
        fail(ErrorKind::InputDomain, std::string(to_string(spec.family)) + " needs " +
                                         std::to_string(want) + " component(s)");
      }
      const std::size_t n = spec.components.front().mean.size();
      ds.x = Matrix(m * want, n);
      ds.labels = std::vector<int>(m * want);
      for (std::size_t c = 0; c < want; ++c) {
        const auto& comp = spec.components[c];
        if (comp.mean.size() != n || comp.covariance.rows() != n) {
          fail(ErrorKind::InputDomain, "component dimensions are inconsistent");
        }
        const Matrix l = psd_cholesky(comp.covariance);
        Vector z(n);
        for (std::size_t i = 0; i < m; ++i) {
          for (double& v : z) v = rng.normal();
          const std::size_t row = c * m + i;
          for (std::size_t a = 0; a < n; ++a) {
            double v = comp.mean[a];
            for (std::size_t b = 0; b <= a; ++b) v += l(a, b) * z[b];
            ds.x(row, a) = v;
          }
          (*ds.labels)[row] = static_cast<int>(c);
        }
      }
      break;
    }
    case Family::Banana: {
      if (!(spec.x_lo < spec.x_hi)) fail(ErrorKind::InputDomain, "banana x range is empty");
      if (spec.noise < 0.0) fail(ErrorKind::InputDomain, "banana noise must be non-negative");
      ds.x = Matrix(m, 2);
      for (std::size_t i = 0; i < m; ++i) {
        const double x1 = rng.uniform(spec.x_lo, spec.x_hi);
        double x2 = x1 * x1;
        if (spec.noise > 0.0) x2 += spec.noise * rng.normal();
        ds.x(i, 0) = x1;
        ds.x(i, 1) = x2;
      }
      break;
    }
    case Family::Diagonal: {
      if (!(spec.alpha_lo <= spec.alpha_hi)) {
        fail(ErrorKind::InputDomain, "diagonal alpha range is empty");
      }
      ds.x = Matrix(m, 2);
      for (std::size_t i = 0; i < m; ++i) {
        const double alpha = rng.uniform(spec.alpha_lo, spec.alpha_hi);
        ds.x(i, 0) = alpha;
        ds.x(i, 1) = alpha;
      }
      break;
    }
  }
  ds.role = Role::Train;
  validate(ds);
  return ds;
}

Dataset load_mnist(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path, const std::set<int>& keep_digits,
                   std::size_t max_per_digit) {
  const auto images = read_bytes(images_path);
  const auto labels = read_bytes(labels_path);
  const std::string img_name = images_path.filename().string();
  const std::string lbl_name = labels_path.filename().string();

  const std::uint32_t img_magic = be32(images, 0, img_name);
  if (img_magic != 0x00000803) {
    fail(ErrorKind::Format, img_name + ": bad magic number " + std::to_string(img_magic) +
                                " at offset 0 (expected 2051)");
  }
  const std::uint32_t lbl_magic = be32(labels, 0, lbl_name);
  if (lbl_magic != 0x00000801) {
    fail(ErrorKind::Format, lbl_name + ": bad magic number " + std::to_string(lbl_magic) +
                                " at offset 0 (expected 2049)");
  }
  const std::uint32_t count = be32(images, 4, img_name);
  const std::uint32_t rows = be32(images, 8, img_name);
  const std::uint32_t cols = be32(images, 12, img_name);
  const std::uint32_t label_count = be32(labels, 4, lbl_name);
  if (label_count != count) {
    fail(ErrorKind::Format, lbl_name + ": label count " + std::to_string(label_count) +
                                " at offset 4 does not match image count " +
                                std::to_string(count));
  }
  const std::size_t pixels = std::size_t{rows} * cols;
  const std::size_t need_img = 16 + std::size_t{count} * pixels;
  if (images.size() < need_img) {
    fail(ErrorKind::Format, img_name + ": truncated at offset " + std::to_string(images.size()) +
                                " (expected " + std::to_string(need_img) + " bytes)");
  }
  if (labels.size() < 8 + std::size_t{count}) {
    fail(ErrorKind::Format, lbl_name + ": truncated at offset " + std::to_string(labels.size()) +
                                " (expected " + std::to_string(8 + std::size_t{count}) +
                                " bytes)");
  }

  std::vector<std::size_t> keep;
  std::map<int, std::size_t> taken;
  for (std::size_t i = 0; i < count; ++i) {
    const int digit = labels[8 + i];
    if (!keep_digits.empty() && !keep_digits.contains(digit)) continue;
    if (max_per_digit > 0 && taken[digit] >= max_per_digit) continue;
    ++taken[digit];
    keep.push_back(i);
  }

  Dataset ds;
  ds.x = Matrix(keep.size(), pixels);
  ds.labels = std::vector<int>(keep.size());
  ds.image = ImageShape{1, rows, cols};
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const std::size_t base = 16 + keep[r] * pixels;
    for (std::size_t p = 0; p < pixels; ++p) ds.x(r, p) = images[base + p] / 255.0;
    (*ds.labels)[r] = labels[8 + keep[r]];
  }
  ds.role = Role::Train;
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());

  Dataset ds;
  std::vector<double> values;
  std::vector<int> labels;
  std::optional<std::size_t> label_col;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (first && has_header) {
      first = false;
      width = cells.size();
      for (std::size_t j = 0; j < cells.size(); ++j) {
        if (cells[j] == "label") {
          label_col = j;
        } else {
          ds.feature_names.emplace_back(cells[j]);
        }
      }
      continue;
    }
    if (first) {
      first = false;
      width = cells.size();
    }
    if (cells.size() != width) {
      fail(ErrorKind::Format, path.filename().string() + ": row " + std::to_string(line_no) +
                                  " has " + std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(width));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v = 0.0;
      const auto cell = cells[j];
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty() ||
          !std::isfinite(v)) {
        fail(ErrorKind::Format, path.filename().string() + ": row " + std::to_string(line_no) +
                                    ", column " + std::to_string(j + 1) + ": '" +
                                    std::string(cell) + "' is not a finite number");
      }
      if (label_col && j == *label_col) {
        if (v != std::floor(v)) {
          fail(ErrorKind::Format, path.filename().string() + ": row " +
                                      std::to_string(line_no) + ": label is not an integer");
        }
        labels.push_back(static_cast<int>(v));
      } else {
        values.push_back(v);
      }
    }
    ++rows;
  }
  const std::size_t n = label_col ? width - 1 : width;
  ds.x = Matrix(rows, n, std::move(values));
  if (label_col) ds.labels = std::move(labels);
  ds.role = Role::Train;
  return ds;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, ptr};
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    if (j) out << ',';
    if (j < ds.feature_names.size()) {
      out << ds.feature_names[j];
    } else {
      out << 'x' << (j + 1);
    }
  }
  if (ds.labels) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dim(); ++j) {
      if (j) out << ',';
      out << format_double(ds.x(i, j));
    }
    if (ds.labels) out << ',' << (*ds.labels)[i];
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

Vector Standardization::apply(std::span<const double> x) const {
  Vector z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / scale[j];
  return z;
}

Vector Standardization::invert(std::span<const double> z) const {
  Vector x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * scale[j] + mean[j];
  return x;
}

Matrix Standardization::apply(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const Vector z = apply(x.row(i));
    std::copy(z.begin(), z.end(), out.row(i).begin());
  }
  return out;
}

Standardization fit_standardization(const Matrix& x) {
  Standardization s;
  s.mean = column_means(x);
  s.scale.assign(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double d = x(i, j) - s.mean[j];
      s.scale[j] += d * d;
    }
  for (double& v : s.scale) {
    v = x.rows() > 0 ? std::sqrt(v / static_cast<double>(x.rows())) : 0.0;
    if (v == 0.0) v = 1.0;
  }
  return s;
}

}  // namespace aeaudit
