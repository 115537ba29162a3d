#include "aeaudit/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "aeaudit/error.hpp"
#include "aeaudit/rng.hpp"
#include "aeaudit/training.hpp"
#include "json.hpp"

namespace aeaudit {

namespace {

struct OutwardPoint {
  Vector c;
  double radius = 0.0;
};

// ȳ + (R + δ + margin)·u with u towards the farthest encoding.
OutwardPoint outward_latent(const Matrix& y, double delta) {
  const Vector centroid = column_means(y);
  double radius = 0.0;
  std::size_t far = 0;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    const double r = distance(y.row(i), centroid);
    if (r > radius) {
      radius = r;
      far = i;
    }
  }
  Vector u(y.cols(), 0.0);
  if (radius > 0.0) {
    u = scaled(subtract(y.row(far), centroid), 1.0 / radius);
  } else {
    u[0] = 1.0;
  }
  const double margin = std::max(1.0, 0.01 * radius);
  return {add(centroid, scaled(u, radius + delta + margin)), radius};
}

void require_delta(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    fail(ErrorKind::InputDomain, "delta must be positive and finite");
  }
}

double forward_loss(const AutoencoderModel& model, std::span<const double> a) {
  return reconstruction_loss(a, ae_forward(model, a).reconstruction);
}

std::string angles_text(const std::vector<double>& angles) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < angles.size(); ++i) os << (i ? ", " : "") << angles[i];
  os << ']';
  return os.str();
}

}  // namespace

const char* to_string(AdversaryMethod m) noexcept {
  switch (m) {
    case AdversaryMethod::AnalyticPca: return "analytic_pca";
    case AdversaryMethod::AnalyticLinear: return "analytic_linear";
    case AdversaryMethod::ReluToy: return "relu_toy";
    case AdversaryMethod::LatentDecode: return "latent_decode";
    case AdversaryMethod::Pgd: return "pgd";
  }
  return "unknown";
}

std::string adversary_to_json(const AdversaryResult& r) {
  nlohmann::json j = {{"method", to_string(r.method)},
                      {"found", r.found},
                      {"a", r.a},
                      {"loss", r.loss},
                      {"min_dist_to_train", r.min_dist_to_train},
                      {"delta_requested", r.delta_requested},
                      {"latent_point", nullptr},
                      {"diagnostics", r.diagnostics}};
  if (r.latent_point) j["latent_point"] = *r.latent_point;
  return j.dump(2) + "\n";
}

void write_pgm(std::span<const double> pixels, std::size_t height, std::size_t width,
               const std::filesystem::path& path) {
  if (pixels.size() != height * width) {
    fail(ErrorKind::ShapeMismatch, "write_pgm: pixel count does not match height×width");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  for (double v : pixels) {
    const double c = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

AdversaryResult construct_pca_adversary(const PcaModel& model, const Matrix& x, double delta) {
  require_delta(delta);
  if (x.rows() == 0) fail(ErrorKind::InputDomain, "construct_pca_adversary: empty data");
  const Matrix y = pca_encode(model, x);
  const OutwardPoint op = outward_latent(y, delta);

  AdversaryResult r;
  r.method = AdversaryMethod::AnalyticPca;
  r.delta_requested = delta;
  r.latent_point = op.c;
  r.a = pca_decode(model, op.c);
  r.loss = reconstruction_loss(r.a, pca_decode(model, pca_encode(model, r.a)));
  r.min_dist_to_train = pairwise_min_distance(x, r.a);
  return r;
}

AffineAutoencoder affine_form(const AutoencoderModel& model) {
  if (!model.is_linear()) {
    fail(ErrorKind::InputDomain, "affine_form: model has non-linear or non-dense layers");
  }
  const std::size_t n = model.input_dim(), d = model.latent_dim;
  AffineAutoencoder f;
  const Vector zeros_n(n, 0.0), zeros_d(d, 0.0);
  f.b_enc = encode(model, zeros_n);
  f.b_dec = decode(model, zeros_d);
  f.w_enc = Matrix(d, n);
  f.w_dec = Matrix(n, d);
  for (std::size_t j = 0; j < n; ++j) {
    Vector e(n, 0.0);
    e[j] = 1.0;
    const Vector col = subtract(encode(model, e), f.b_enc);
    for (std::size_t k = 0; k < d; ++k) f.w_enc(k, j) = col[k];
  }
  for (std::size_t k = 0; k < d; ++k) {
    Vector e(d, 0.0);
    e[k] = 1.0;
    const Vector col = subtract(decode(model, e), f.b_dec);
    for (std::size_t j = 0; j < n; ++j) f.w_dec(j, k) = col[j];
  }
  return f;
}

AdversaryResult construct_linear_ae_adversary(const AutoencoderModel& model, const Matrix& x,
                                              double delta, double max_angle) {
  require_delta(delta);
  if (!model.is_linear()) {
    fail(ErrorKind::InputDomain,
         "analytic construction needs an all-linear dense autoencoder; use pgd or latent search");
  }
  if (x.cols() != model.input_dim()) {
    fail(ErrorKind::ShapeMismatch, "construct_linear_ae_adversary: data/model width mismatch");
  }
  const std::size_t d = model.latent_dim;
  const AffineAutoencoder f = affine_form(model);
  const PcaModel pca = pca_fit(x, d);

  std::vector<double> dec_angles, enc_angles;
  try {
    dec_angles = principal_angles(f.w_dec, pca.v_d);
  } catch (const Error& e) {
    fail(ErrorKind::Refused, std::string("decoder weights are degenerate: ") + e.what());
  }
  try {
    enc_angles = principal_angles(f.w_enc.transpose(), pca.v_d);
  } catch (const Error&) {
    enc_angles.clear();
  }
  const double worst = dec_angles.empty() ? 0.0 : dec_angles.back();
  if (worst >= max_angle) {
    fail(ErrorKind::Refused, "linear autoencoder has not converged to the principal subspace: "
                             "decoder angles " + angles_text(dec_angles) + " rad (limit " +
                                 std::to_string(max_angle) + "), encoder angles " +
                                 angles_text(enc_angles));
  }

  Matrix y(x.rows(), d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const Vector yi = add(times_col(f.w_enc, x.row(i)), f.b_enc);
    std::copy(yi.begin(), yi.end(), y.row(i).begin());
  }
  const OutwardPoint op = outward_latent(y, delta);

  AdversaryResult r;
  r.method = AdversaryMethod::AnalyticLinear;
  r.delta_requested = delta;
  r.latent_point = op.c;
  r.a = decode(model, op.c);
  r.loss = forward_loss(model, r.a);
  r.min_dist_to_train = pairwise_min_distance(x, r.a);
  r.diagnostics = "decoder angles " + angles_text(dec_angles) + ", encoder angles " +
                  angles_text(enc_angles);
  return r;
}

BiasPair optimal_biases(const Matrix& w_enc, const Matrix& w_dec, const Matrix& x) {
  if (w_enc.rows() != x.cols() || w_dec.rows() != x.cols() || w_enc.cols() != w_dec.cols()) {
    fail(ErrorKind::ShapeMismatch, "optimal_biases: W_enc and W_dec must both be n×d");
  }
  if (x.rows() == 0) fail(ErrorKind::InputDomain, "optimal_biases: empty data");
  const Vector mean = column_means(x);
  return {scaled(row_times(mean, w_enc), -1.0), mean};
}

namespace {

Vector linear_reconstruct(const Matrix& w_enc, const Matrix& w_dec, const BiasPair& b,
                          std::span<const double> x) {
  const Vector z = add(row_times(x, w_enc), b.b_enc);
  return add(times_col(w_dec, z), b.b_dec);
}

}  // namespace

double linear_ae_loss(const Matrix& w_enc, const Matrix& w_dec, const BiasPair& b,
                      const Matrix& x) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    total += reconstruction_loss_sum(x.row(i), linear_reconstruct(w_enc, w_dec, b, x.row(i)));
  return total / (static_cast<double>(x.rows()) * static_cast<double>(x.cols()));
}

BiasDecomposition bias_decomposition(const Matrix& w_enc, const Matrix& w_dec, const BiasPair& b,
                                     const Matrix& x) {
  const std::size_t m = x.rows(), n = x.cols();
  const Vector mean = column_means(x);
  // (I − W_enc·W_decᵀ) as an n×n matrix acting on row vectors.
  Matrix resid = Matrix::identity(n) - matmul(w_enc, w_dec.transpose());
  // Constant part: x̄(I − W_encW_decᵀ) − b_enc·W_decᵀ − b_dec
  Vector constant = subtract(subtract(row_times(mean, resid), times_col(w_dec, b.b_enc)), b.b_dec);

  BiasDecomposition out;
  double cross = 0.0, centered = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Vector v = row_times(subtract(x.row(i), mean), resid);
    centered += dot(v, v);
    cross += 2.0 * dot(v, constant);
  }
  const double scale = 1.0 / (static_cast<double>(m) * static_cast<double>(n));
  out.centered = centered * scale;
  out.cross = cross * scale;
  out.bias = dot(constant, constant) / static_cast<double>(n);
  out.total = linear_ae_loss(w_enc, w_dec, b, x);
  return out;
}

ReluToy relu_toy_adversary(double beta, double lo, double hi, double c, const Matrix& train) {
  if (beta == 0.0 || !std::isfinite(beta)) fail(ErrorKind::InputDomain, "beta must be non-zero");
  if (!(lo <= hi)) fail(ErrorKind::InputDomain, "data range is empty");
  if (!train.empty() && train.cols() != 2) {
    fail(ErrorKind::ShapeMismatch, "relu toy works on two-dimensional data");
  }

  ReluToy toy;
  // Smallest non-negative bias with 2β·α + b ≥ 0 on [lo, hi].
  const double lowest = std::min(2.0 * beta * lo, 2.0 * beta * hi);
  toy.encoder_bias = std::max(0.0, -lowest);

  AutoencoderModel& net = toy.network;
  net.input_shape = {2, 1, 1};
  net.latent_dim = 1;
  Layer enc = dense_layer(2, 1, Activation::Relu);
  enc.weights = {beta, beta};
  enc.bias = {toy.encoder_bias};
  Layer dec = dense_layer(1, 2, Activation::Linear);
  const double w = 1.0 / (2.0 * beta);
  dec.weights = {w, w};
  dec.bias = {-toy.encoder_bias * w, -toy.encoder_bias * w};
  net.encoder = {enc};
  net.decoder = {dec};
  net.check_shapes();

  AdversaryResult& r = toy.result;
  r.method = AdversaryMethod::ReluToy;
  r.a = {c, c};
  r.loss = forward_loss(net, r.a);
  r.latent_point = encode(net, r.a);
  if (!train.empty()) {
    r.min_dist_to_train = pairwise_min_distance(train, r.a);
  } else {
    const double gap = c < lo ? lo - c : (c > hi ? c - hi : 0.0);
    r.min_dist_to_train = gap * std::sqrt(2.0);
  }
  toy.in_distribution = c >= lo && c <= hi;
  r.diagnostics = toy.in_distribution ? "c lies inside the training range (in-distribution)"
                                      : "c lies outside the training range";
  return toy;
}

AdversaryResult latent_decode_adversary(const AutoencoderModel& model, std::span<const double> z,
                                        const Matrix& x) {
  AdversaryResult r;
  r.method = AdversaryMethod::LatentDecode;
  r.latent_point = Vector(z.begin(), z.end());
  r.a = decode(model, z);
  r.loss = forward_loss(model, r.a);
  if (!x.empty()) r.min_dist_to_train = pairwise_min_distance(x, r.a);
  return r;
}

Vector project_outside(const Matrix& x, Vector a, double delta) {
  const double radius = delta * (1.0 + 1e-9) + 1e-12;
  for (int round = 0; round < 64; ++round) {
    const std::size_t i = nearest_row(x, a);
    const double d = distance(x.row(i), a);
    if (d > delta) return a;
    Vector dir = subtract(a, x.row(i));
    if (d > 0.0) {
      dir = scaled(dir, 1.0 / d);
    } else {
      // Coincident with a sample: leave along the direction away from the centroid.
      dir = subtract(x.row(i), column_means(x));
      const double nd = norm(dir);
      if (nd > 0.0) {
        dir = scaled(dir, 1.0 / nd);
      } else {
        std::fill(dir.begin(), dir.end(), 0.0);
        dir[0] = 1.0;
      }
    }
    a = add(x.row(i), scaled(dir, radius));
  }
  if (pairwise_min_distance(x, a) > delta) return a;

  // Local pushes can cycle inside a dense cloud. Walk out along the ray from
  // the centroid: beyond maxᵢ‖xᵢ − c‖ + radius every row is farther than
  // delta, and bisection keeps a feasible end.
  const Vector c = column_means(x);
  double reach = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) reach = std::max(reach, distance(x.row(i), c));
  Vector dir = subtract(a, c);
  const double nd = norm(dir);
  if (nd > 0.0) {
    dir = scaled(dir, 1.0 / nd);
  } else {
    std::fill(dir.begin(), dir.end(), 0.0);
    dir[0] = 1.0;
  }
  double lo = nd, hi = std::max(nd, reach + radius) * (1.0 + 1e-12) + 1e-12;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (pairwise_min_distance(x, add(c, scaled(dir, mid))) > delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return add(c, scaled(dir, hi));
}

std::vector<Vector> pgd_initial_points(const Matrix& x, const PgdOptions& opts) {
  if (x.rows() == 0) fail(ErrorKind::InputDomain, "pgd: empty training data");
  const std::size_t n = x.cols();
  Vector lo(n, std::numeric_limits<double>::infinity());
  Vector hi(n, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) {
      lo[j] = std::min(lo[j], x(i, j));
      hi[j] = std::max(hi[j], x(i, j));
    }
  const Vector centroid = column_means(x);

  std::vector<Vector> points;
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    Rng rng(derive_seed(opts.seed, 1000 + r));
    Vector a(n);
    if (r % 2 == 0) {
      for (std::size_t j = 0; j < n; ++j) {
        const double mid = 0.5 * (lo[j] + hi[j]);
        const double half = 0.5 * (hi[j] - lo[j]) * opts.box_inflation;
        a[j] = rng.uniform(mid - half, mid + half);
      }
    } else {
      const std::size_t i = static_cast<std::size_t>(rng.below(x.rows()));
      const double s = rng.uniform(1.5, 3.0);
      for (std::size_t j = 0; j < n; ++j) a[j] = centroid[j] + s * (x(i, j) - centroid[j]);
    }
    points.push_back(project_outside(x, std::move(a), opts.delta));
  }
  return points;
}

AdversaryResult pgd_adversary(const AutoencoderModel& model, const Matrix& x,
                              const PgdOptions& opts) {
  require_delta(opts.delta);
  if (!(opts.step_size > 0.0)) fail(ErrorKind::InputDomain, "pgd: step_size must be positive");
  if (opts.restarts == 0) fail(ErrorKind::InputDomain, "pgd: need at least one restart");
  if (x.cols() != model.input_dim()) fail(ErrorKind::ShapeMismatch, "pgd: data/model width mismatch");

  const std::vector<Vector> starts = pgd_initial_points(x, opts);
  const double max_step = opts.step_size * 1048576.0;

  struct Outcome {
    Vector a;
    double loss = std::numeric_limits<double>::infinity();
    double dist = 0.0;
    bool diverged = false;
    bool feasible = false;
  };
  std::vector<Outcome> outcomes(starts.size());

  for (std::size_t r = 0; r < starts.size(); ++r) {
    Outcome& out = outcomes[r];
    Vector a = starts[r];
    double f = 0.0;
    Vector g = input_gradient(model, a, &f);
    double t = opts.step_size;
    for (std::size_t step = 0; step < opts.steps && std::isfinite(f) && f > 0.0; ++step) {
      bool accepted = false;
      for (int tries = 0; tries < 40; ++tries) {
        Vector cand = a;
        for (std::size_t j = 0; j < cand.size(); ++j) cand[j] -= t * g[j];
        cand = project_outside(x, std::move(cand), opts.delta);
        double fc = 0.0;
        Vector gc = input_gradient(model, cand, &fc);
        if (std::isfinite(fc) && fc < f) {
          a = std::move(cand);
          f = fc;
          g = std::move(gc);
          t = std::min(2.0 * t, max_step);
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
    }
    out.a = std::move(a);
    out.loss = forward_loss(model, out.a);
    out.diverged = !std::isfinite(out.loss) ||
                   !std::all_of(out.a.begin(), out.a.end(), [](double v) { return std::isfinite(v); });
    if (!out.diverged) {
      out.dist = pairwise_min_distance(x, out.a);
      out.feasible = out.dist > opts.delta;
    }
  }

  AdversaryResult r;
  r.method = AdversaryMethod::Pgd;
  r.delta_requested = opts.delta;
  std::optional<std::size_t> best;
  std::size_t diverged = 0, infeasible = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].diverged) {
      ++diverged;
      continue;
    }
    if (!outcomes[i].feasible) {
      ++infeasible;
      continue;
    }
    if (!best || outcomes[i].loss < outcomes[*best].loss) best = i;
  }
  std::ostringstream diag;
  diag << outcomes.size() << " restarts, " << diverged << " diverged, " << infeasible
       << " ended inside the distance floor";
  if (!best) {
    r.found = false;
    diag << (diverged == outcomes.size() ? "; all restarts diverged" : "; no feasible restart");
    r.diagnostics = diag.str();
    // Still report the first non-diverged point, if any, for inspection.
    for (const auto& o : outcomes) {
      if (!o.diverged) {
        r.a = o.a;
        r.loss = o.loss;
        r.min_dist_to_train = o.dist;
        break;
      }
    }
    return r;
  }
  diag << "; best restart " << *best;
  r.diagnostics = diag.str();
  r.a = outcomes[*best].a;
  // Independent re-evaluation of the returned point.
  r.loss = forward_loss(model, r.a);
  r.min_dist_to_train = pairwise_min_distance(x, r.a);
  r.latent_point = encode(model, r.a);
  return r;
}

}  // namespace aeaudit
