#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "aeaudit/numlin.hpp"

namespace aeaudit {

enum class Role { Train, Test };

/// Channel/height/width of one image sample stored as a flat CHW row.
struct ImageShape {
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const noexcept { return channels * height * width; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

struct Dataset {
  Matrix x;
  std::optional<std::vector<int>> labels;
  Role role = Role::Train;
  std::vector<std::string> feature_names;
  std::optional<ImageShape> image;

  std::size_t size() const noexcept { return x.rows(); }
  std::size_t dim() const noexcept { return x.cols(); }
};

/// Throws InputDomain on NaN/Inf entries or a label count that differs from m.
void validate(const Dataset& ds);

enum class Family { Gaussian, DoubleGaussian, Banana, Diagonal };

const char* to_string(Family f) noexcept;
Family family_from_string(const std::string& name);

/// One Gaussian component: mean and full covariance (row-major n×n).
struct GaussianComponent {
  Vector mean;
  Matrix covariance;
};

struct SyntheticSpec {
  Family family = Family::Gaussian;
  std::size_t samples_per_component = 100;
  std::uint64_t seed = 0;

  /// gaussian: one component; double_gaussian: two. Empty selects the
  /// family default.
  std::vector<GaussianComponent> components;
  /// banana: x₁ ~ U(x_range), x₂ = x₁² + noise·N(0,1)
  double noise = 0.1;
  double x_lo = -2.0;
  double x_hi = 2.0;
  /// diagonal: rows α·(1,1) with α ~ U(alpha_lo, alpha_hi)
  double alpha_lo = 0.0;
  double alpha_hi = 1.0;
};

/// Fill in family defaults so the saved settings echo exactly what was generated.
SyntheticSpec resolved(SyntheticSpec spec);

Dataset generate(const SyntheticSpec& spec);

/// JSON echo of a spec, written after resolving family defaults.
std::string synthetic_spec_to_json(const SyntheticSpec& spec);
/// Keys absent from `text` keep their defaults; unknown keys are rejected.
SyntheticSpec synthetic_spec_from_json(const std::string& text);

/// Reads an IDX image/label pair, keeps rows whose label is in
/// `keep_digits` (all digits when empty), at most `max_per_digit` per digit
/// (0 = no cap), in file order. Pixels are scaled to [0, 1].
Dataset load_mnist(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path, const std::set<int>& keep_digits,
                   std::size_t max_per_digit);

/// Rectangular numeric CSV. With a header, a column literally named
/// "label" is split off into Dataset::labels.
Dataset load_csv(const std::filesystem::path& path, bool has_header);
void save_csv(const Dataset& ds, const std::filesystem::path& path);

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);

struct Standardization {
  Vector mean;
  Vector scale;  ///< per-feature std; constant features get scale 1

  Vector apply(std::span<const double> x) const;
  Vector invert(std::span<const double> z) const;
  Matrix apply(const Matrix& x) const;
};

Standardization fit_standardization(const Matrix& x);

}  // namespace aeaudit
