#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aeaudit/models.hpp"

namespace aeaudit {

enum class AdversaryMethod { AnalyticPca, AnalyticLinear, ReluToy, LatentDecode, Pgd };

const char* to_string(AdversaryMethod m) noexcept;

/// A synthesized input together with independently recomputed loss and
/// distance to the training data.
struct AdversaryResult {
  Vector a;
  double loss = 0.0;
  double min_dist_to_train = 0.0;
  double delta_requested = 0.0;
  AdversaryMethod method = AdversaryMethod::AnalyticPca;
  std::optional<Vector> latent_point;
  bool found = true;
  std::string diagnostics;
};

std::string adversary_to_json(const AdversaryResult& r);

/// Binary 8-bit PGM (P5, maxval 255) of a single-channel image; values are
/// clamped to [0, 1] before scaling.
void write_pgm(std::span<const double> pixels, std::size_t height, std::size_t width,
               const std::filesystem::path& path);

/// Zero-loss point at distance > delta from every row of x.
///
/// With encodings yᵢ, centroid ȳ and radius R = maxᵢ‖yᵢ − ȳ‖ the latent
/// point is c = ȳ + (R + δ + margin)·u, margin = max(1, 0.01·R), where u
/// points from ȳ to the farthest encoding. Then ‖c − yᵢ‖ ≥ δ + margin for
/// every i, and the distance from xᵢ to a = decode(c) can only be larger
/// because the part of xᵢ off the principal subspace adds to it
/// orthogonally.
AdversaryResult construct_pca_adversary(const PcaModel& model, const Matrix& x, double delta);

/// Same construction for an all-linear autoencoder, using its own affine
/// encoder/decoder. Refuses (ErrorKind::Refused) unless the principal
/// angles between the decoder's column space and the top-d principal
/// subspace of x are all below `max_angle`.
AdversaryResult construct_linear_ae_adversary(const AutoencoderModel& model, const Matrix& x,
                                              double delta, double max_angle = 1e-2);

/// Effective affine maps of an all-linear autoencoder in raw input space:
/// encode(x) = w_enc·x + b_enc (d×n), decode(z) = w_dec·z + b_dec (n×d).
struct AffineAutoencoder {
  Matrix w_enc;
  Vector b_enc;
  Matrix w_dec;
  Vector b_dec;
};
AffineAutoencoder affine_form(const AutoencoderModel& model);

/// Row-vector convention: x̂ = (x·W_enc + b_enc)·W_decᵀ + b_dec with W_enc and
/// W_dec both n×d.
struct BiasPair {
  Vector b_enc;  ///< length d
  Vector b_dec;  ///< length n
};

/// b_enc = −x̄·W_enc, b_dec = x̄.
BiasPair optimal_biases(const Matrix& w_enc, const Matrix& w_dec, const Matrix& x);

/// Mean reconstruction loss (1/(mn))·Σᵢ‖xᵢ − x̂ᵢ‖² of the biased linear map.
double linear_ae_loss(const Matrix& w_enc, const Matrix& w_dec, const BiasPair& b,
                      const Matrix& x);

/// total = centered + bias + cross, where centered only depends on the
/// weights, bias = ‖x̄(I − W_encW_decᵀ) − b_encW_decᵀ − b_dec‖²/n, and
/// cross vanishes because Σᵢ(xᵢ − x̄) = 0.
struct BiasDecomposition {
  double total = 0.0;
  double centered = 0.0;
  double bias = 0.0;
  double cross = 0.0;
};
BiasDecomposition bias_decomposition(const Matrix& w_enc, const Matrix& w_dec, const BiasPair& b,
                                     const Matrix& x);

/// Two-dimensional diagonal toy: encoder relu(β·(x₁ + x₂) + b), decoder
/// (1,1)·(z − b)/(2β). The bias keeps every pre-activation of the training
/// segment {α(1,1) : α ∈ [lo, hi]} non-negative, so the network is exact on
/// it and on the ray beyond.
struct ReluToy {
  AutoencoderModel network;
  AdversaryResult result;
  double encoder_bias = 0.0;
  bool in_distribution = false;  ///< c lies inside [lo, hi]
};

/// a = c·(1,1). Distance is measured to `train` when given, otherwise to the
/// continuous training segment.
ReluToy relu_toy_adversary(double beta, double lo, double hi, double c,
                           const Matrix& train = Matrix());

/// a = h(z), loss = L_R(a, h(g(a))).
AdversaryResult latent_decode_adversary(const AutoencoderModel& model, std::span<const double> z,
                                        const Matrix& x);

struct PgdOptions {
  double delta = 1.0;
  std::size_t steps = 500;
  double step_size = 1e-2;  ///< initial step; adapted by backtracking
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
  double box_inflation = 2.0;
};

/// Pushes a radially away from its nearest training row until every row is
/// farther than delta. If a bounded number of pushes does not settle, falls
/// back to the nearest feasible point found by bisection along the ray from
/// the centroid through a.
Vector project_outside(const Matrix& x, Vector a, double delta);

/// Feasible starting points, one per restart: even restarts sample the
/// inflated bounding box, odd restarts a point on a ray from the data
/// centroid through a training sample, 1.5–3 times as far out.
std::vector<Vector> pgd_initial_points(const Matrix& x, const PgdOptions& opts);

/// Projected gradient descent on L_R(a, h(g(a))) subject to
/// minᵢ‖a − xᵢ‖ ≥ δ. Each iteration tries a ← P(a − t·∇) and halves t until
/// the loss decreases (doubling it after a success). The best restart by
/// loss wins, ties to the lower index; loss and distance are re-evaluated
/// on the returned point. When no restart ends feasible and finite the
/// result has found = false.
AdversaryResult pgd_adversary(const AutoencoderModel& model, const Matrix& x,
                              const PgdOptions& opts);

}  // namespace aeaudit
