#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "aeaudit/datagen.hpp"
#include "aeaudit/numlin.hpp"

namespace aeaudit {

// ---------------------------------------------------------------- PCA

struct PcaModel {
  Vector mean;   ///< column means of the fitted data
  Matrix v_d;    ///< n×d, orthonormal columns
  Vector sigma;  ///< all singular values of the centered data, descending

  std::size_t input_dim() const noexcept { return v_d.rows(); }
  std::size_t latent_dim() const noexcept { return v_d.cols(); }
};

PcaModel pca_fit(const Matrix& x, std::size_t d);
Matrix pca_encode(const PcaModel& model, const Matrix& x);
Matrix pca_decode(const PcaModel& model, const Matrix& y);
Vector pca_encode(const PcaModel& model, std::span<const double> x);
Vector pca_decode(const PcaModel& model, std::span<const double> y);

// ------------------------------------------------------- autoencoders

enum class LayerKind { Dense, Conv2d, UpConv2d, Flatten, Reshape };
enum class Activation { Linear, Relu, Sigmoid };

const char* to_string(LayerKind k) noexcept;
const char* to_string(Activation a) noexcept;
LayerKind layer_kind_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

/// Activation tensor shape, channels × height × width. Dense vectors are
/// {n, 1, 1}.
struct Shape {
  std::size_t c = 1, h = 1, w = 1;
  std::size_t size() const noexcept { return c * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// One layer plus its parameters.
///
/// Dense: weights are out×in (y = W·x + b).
/// Conv2d: weights [out_ch][in_ch][k][k]; zero padding `pad`, stride `stride`.
/// UpConv2d (transposed convolution): weights [in_ch][out_ch][k][k]; output
/// size (in − 1)·stride − 2·pad + k + output_pad.
/// Flatten/Reshape only relabel the shape and carry no parameters.
struct Layer {
  LayerKind kind = LayerKind::Dense;
  Activation act = Activation::Linear;
  Shape in;
  Shape out;
  std::size_t kernel = 0, stride = 1, pad = 0, output_pad = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  std::size_t param_count() const noexcept { return weights.size() + bias.size(); }
};

Layer dense_layer(std::size_t in, std::size_t out, Activation act);
Layer conv_layer(Shape in, std::size_t out_ch, std::size_t kernel, std::size_t stride,
                 std::size_t pad, Activation act);
Layer upconv_layer(Shape in, std::size_t out_ch, std::size_t kernel, std::size_t stride,
                   std::size_t pad, std::size_t output_pad, Activation act);
Layer flatten_layer(Shape in);
Layer reshape_layer(std::size_t in, Shape out);

struct AutoencoderModel {
  std::vector<Layer> encoder;
  std::vector<Layer> decoder;
  std::size_t latent_dim = 0;
  Shape input_shape;
  std::optional<Standardization> preprocessing;
  std::uint64_t seed = 0;

  std::size_t input_dim() const noexcept { return input_shape.size(); }

  /// Throws ShapeMismatch unless every layer chains into the next and the
  /// decoder restores the input shape.
  void check_shapes() const;
  bool all_finite() const noexcept;
  /// True when every layer is dense with linear activation.
  bool is_linear() const noexcept;
};

/// [n₀, n₁, …, n_k] fully connected autoencoder; the first narrowest width is
/// the latent layer. Every layer uses `act` except the last, which is linear.
AutoencoderModel make_mlp(const std::vector<std::size_t>& sizes, Activation act,
                          std::uint64_t seed);

/// 1×28×28 → conv(16, 3×3, s2, relu) → conv(32, 3×3, s2, relu) → flatten →
/// dense(latent, linear) and back through dense → reshape → upconv(16,
/// relu) → upconv(1, sigmoid).
AutoencoderModel make_mnist_conv(std::size_t latent_dim, std::uint64_t seed);

/// He-uniform for ReLU layers, Glorot-uniform otherwise; biases zero.
void initialize(AutoencoderModel& model, std::uint64_t seed);

/// Network-space forward of a single layer.
Vector layer_forward(const Layer& layer, std::span<const double> x);
/// Pre-activation output of a single layer.
Vector layer_affine(const Layer& layer, std::span<const double> x);
double activate(Activation act, double v) noexcept;

/// Raw-space encode/decode (standardization applied when present).
Vector encode(const AutoencoderModel& model, std::span<const double> x);
Vector decode(const AutoencoderModel& model, std::span<const double> z);

struct ForwardResult {
  Vector latent;
  Vector reconstruction;
};

ForwardResult ae_forward(const AutoencoderModel& model, std::span<const double> x);

/// Linear AE equivalent to the PCA projector: W_enc = V_dᵀ, b_enc = −V_dᵀ·x̄,
/// W_dec = V_d, b_dec = x̄.
AutoencoderModel pca_as_autoencoder(const PcaModel& pca);

// ------------------------------------------------------- any detector

using Model = std::variant<PcaModel, AutoencoderModel>;

std::size_t input_dim(const Model& model);
std::size_t latent_dim(const Model& model);
Vector reconstruct(const Model& model, std::span<const double> x);
Vector encode(const Model& model, std::span<const double> x);
Vector decode(const Model& model, std::span<const double> z);

// ------------------------------------------------------- persistence

inline constexpr int kModelFormatVersion = 1;

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);
std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);

}  // namespace aeaudit
