#include "aeaudit/models.hpp"

#include <algorithm>
#include <cmath>

#include "aeaudit/error.hpp"
#include "aeaudit/rng.hpp"

namespace aeaudit {

namespace {

std::string shape_str(const Shape& s) {
  return std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

std::size_t conv_out_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  if (in + 2 * pad < k) fail(ErrorKind::ShapeMismatch, "conv kernel larger than padded input");
  return (in + 2 * pad - k) / stride + 1;
}

std::size_t upconv_out_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad,
                              std::size_t output_pad) {
  const long long v = static_cast<long long>((in - 1) * stride + k + output_pad) -
                      2 * static_cast<long long>(pad);
  if (v <= 0) fail(ErrorKind::ShapeMismatch, "transposed conv produces an empty output");
  return static_cast<std::size_t>(v);
}

Vector run_layers(const std::vector<Layer>& layers, std::span<const double> x) {
  Vector cur(x.begin(), x.end());
  for (const auto& layer : layers) cur = layer_forward(layer, cur);
  return cur;
}

}  // namespace

// ---------------------------------------------------------------- PCA

PcaModel pca_fit(const Matrix& x, std::size_t d) {
  if (x.rows() == 0 || x.cols() == 0) fail(ErrorKind::InputDomain, "pca_fit: empty data");
  const std::size_t r = std::min(x.rows(), x.cols());
  if (d < 1 || d > r) {
    fail(ErrorKind::InputDomain,
         "pca_fit: d = " + std::to_string(d) + " outside [1, " + std::to_string(r) + "]");
  }
  PcaModel model;
  model.mean = column_means(x);
  SvdResult s = svd(subtract_row(x, model.mean));
  model.v_d = s.v.leading_cols(d);
  model.sigma = std::move(s.sigma);
  return model;
}

Matrix pca_encode(const PcaModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim()) {
    fail(ErrorKind::ShapeMismatch, "pca_encode: data has " + std::to_string(x.cols()) +
                                       " columns, model expects " +
                                       std::to_string(model.input_dim()));
  }
  return matmul(subtract_row(x, model.mean), model.v_d);
}

Matrix pca_decode(const PcaModel& model, const Matrix& y) {
  if (y.cols() != model.latent_dim()) {
    fail(ErrorKind::ShapeMismatch, "pca_decode: latent has " + std::to_string(y.cols()) +
                                       " columns, model has " +
                                       std::to_string(model.latent_dim()));
  }
  return add_row(matmul(y, model.v_d.transpose()), model.mean);
}

Vector pca_encode(const PcaModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) fail(ErrorKind::ShapeMismatch, "pca_encode: length mismatch");
  return row_times(subtract(x, model.mean), model.v_d);
}

Vector pca_decode(const PcaModel& model, std::span<const double> y) {
  if (y.size() != model.latent_dim()) fail(ErrorKind::ShapeMismatch, "pca_decode: length mismatch");
  return add(times_col(model.v_d, y), model.mean);
}

// ------------------------------------------------------------- layers

const char* to_string(LayerKind k) noexcept {
  switch (k) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::UpConv2d: return "upconv2d";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Reshape: return "reshape";
  }
  return "unknown";
}

const char* to_string(Activation a) noexcept {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(const std::string& s) {
  for (auto k : {LayerKind::Dense, LayerKind::Conv2d, LayerKind::UpConv2d, LayerKind::Flatten,
                 LayerKind::Reshape})
    if (s == to_string(k)) return k;
  fail(ErrorKind::InputDomain, "unknown layer kind '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
  for (auto a : {Activation::Linear, Activation::Relu, Activation::Sigmoid})
    if (s == to_string(a)) return a;
  fail(ErrorKind::InputDomain, "unknown activation '" + s + "'");
}

Layer dense_layer(std::size_t in, std::size_t out, Activation act) {
  if (in == 0 || out == 0) fail(ErrorKind::InputDomain, "dense layer with zero width");
  Layer l;
  l.kind = LayerKind::Dense;
  l.act = act;
  l.in = {in, 1, 1};
  l.out = {out, 1, 1};
  l.weights.assign(in * out, 0.0);
  l.bias.assign(out, 0.0);
  return l;
}

Layer conv_layer(Shape in, std::size_t out_ch, std::size_t kernel, std::size_t stride,
                 std::size_t pad, Activation act) {
  if (kernel == 0 || stride == 0 || out_ch == 0) {
    fail(ErrorKind::InputDomain, "conv layer needs positive kernel, stride and channels");
  }
  Layer l;
  l.kind = LayerKind::Conv2d;
  l.act = act;
  l.in = in;
  l.kernel = kernel;
  l.stride = stride;
  l.pad = pad;
  l.out = {out_ch, conv_out_extent(in.h, kernel, stride, pad),
           conv_out_extent(in.w, kernel, stride, pad)};
  l.weights.assign(out_ch * in.c * kernel * kernel, 0.0);
  l.bias.assign(out_ch, 0.0);
  return l;
}

Layer upconv_layer(Shape in, std::size_t out_ch, std::size_t kernel, std::size_t stride,
                   std::size_t pad, std::size_t output_pad, Activation act) {
  if (kernel == 0 || stride == 0 || out_ch == 0) {
    fail(ErrorKind::InputDomain, "upconv layer needs positive kernel, stride and channels");
  }
  Layer l;
  l.kind = LayerKind::UpConv2d;
  l.act = act;
  l.in = in;
  l.kernel = kernel;
  l.stride = stride;
  l.pad = pad;
  l.output_pad = output_pad;
  l.out = {out_ch, upconv_out_extent(in.h, kernel, stride, pad, output_pad),
           upconv_out_extent(in.w, kernel, stride, pad, output_pad)};
  l.weights.assign(in.c * out_ch * kernel * kernel, 0.0);
  l.bias.assign(out_ch, 0.0);
  return l;
}

Layer flatten_layer(Shape in) {
  Layer l;
  l.kind = LayerKind::Flatten;
  l.in = in;
  l.out = {in.size(), 1, 1};
  return l;
}

Layer reshape_layer(std::size_t in, Shape out) {
  if (in != out.size()) fail(ErrorKind::ShapeMismatch, "reshape changes element count");
  Layer l;
  l.kind = LayerKind::Reshape;
  l.in = {in, 1, 1};
  l.out = out;
  return l;
}

double activate(Activation act, double v) noexcept {
  switch (act) {
    case Activation::Linear: return v;
    case Activation::Relu: return v > 0.0 ? v : 0.0;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-v));
  }
  return v;
}

Vector layer_affine(const Layer& layer, std::span<const double> x) {
  if (x.size() != layer.in.size()) {
    fail(ErrorKind::ShapeMismatch, std::string(to_string(layer.kind)) + " layer expects " +
                                       std::to_string(layer.in.size()) + " inputs, got " +
                                       std::to_string(x.size()));
  }
  switch (layer.kind) {
    case LayerKind::Flatten:
    case LayerKind::Reshape:
      return {x.begin(), x.end()};
    case LayerKind::Dense: {
      const std::size_t in = layer.in.size(), out = layer.out.size();
      Vector y(layer.bias);
      for (std::size_t o = 0; o < out; ++o) {
        const double* w = layer.weights.data() + o * in;
        double s = 0.0;
        for (std::size_t i = 0; i < in; ++i) s += w[i] * x[i];
        y[o] += s;
      }
      return y;
    }
    case LayerKind::Conv2d: {
      const auto [ci, hi, wi] = layer.in;
      const auto [co, ho, wo] = layer.out;
      const std::size_t k = layer.kernel, s = layer.stride;
      const long p = static_cast<long>(layer.pad);
      Vector y(co * ho * wo);
      for (std::size_t o = 0; o < co; ++o) {
        double* yo = y.data() + o * ho * wo;
        std::fill(yo, yo + ho * wo, layer.bias[o]);
        for (std::size_t c = 0; c < ci; ++c) {
          const double* xc = x.data() + c * hi * wi;
          const double* wk = layer.weights.data() + (o * ci + c) * k * k;
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const double wv = wk[ky * k + kx];
              for (std::size_t oy = 0; oy < ho; ++oy) {
                const long iy = static_cast<long>(oy * s + ky) - p;
                if (iy < 0 || iy >= static_cast<long>(hi)) continue;
                for (std::size_t ox = 0; ox < wo; ++ox) {
                  const long ix = static_cast<long>(ox * s + kx) - p;
                  if (ix < 0 || ix >= static_cast<long>(wi)) continue;
                  yo[oy * wo + ox] += wv * xc[iy * wi + ix];
                }
              }
            }
        }
      }
      return y;
    }
    case LayerKind::UpConv2d: {
      const auto [ci, hi, wi] = layer.in;
      const auto [co, ho, wo] = layer.out;
      const std::size_t k = layer.kernel, s = layer.stride;
      const long p = static_cast<long>(layer.pad);
      Vector y(co * ho * wo);
      for (std::size_t o = 0; o < co; ++o)
        std::fill(y.begin() + o * ho * wo, y.begin() + (o + 1) * ho * wo, layer.bias[o]);
      for (std::size_t c = 0; c < ci; ++c) {
        const double* xc = x.data() + c * hi * wi;
        for (std::size_t o = 0; o < co; ++o) {
          double* yo = y.data() + o * ho * wo;
          const double* wk = layer.weights.data() + (c * co + o) * k * k;
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const double wv = wk[ky * k + kx];
              for (std::size_t iy = 0; iy < hi; ++iy) {
                const long oy = static_cast<long>(iy * s + ky) - p;
                if (oy < 0 || oy >= static_cast<long>(ho)) continue;
                for (std::size_t ix = 0; ix < wi; ++ix) {
                  const long ox = static_cast<long>(ix * s + kx) - p;
                  if (ox < 0 || ox >= static_cast<long>(wo)) continue;
                  yo[oy * wo + ox] += wv * xc[iy * wi + ix];
                }
              }
            }
        }
      }
      return y;
    }
  }
  return {};
}

Vector layer_forward(const Layer& layer, std::span<const double> x) {
  Vector y = layer_affine(layer, x);
  if (layer.act != Activation::Linear)
    for (double& v : y) v = activate(layer.act, v);
  return y;
}

// -------------------------------------------------------- autoencoder

void AutoencoderModel::check_shapes() const {
  if (encoder.empty() || decoder.empty()) {
    fail(ErrorKind::ShapeMismatch, "autoencoder needs at least one encoder and decoder layer");
  }
  Shape cur = input_shape;
  auto walk = [&](const std::vector<Layer>& layers, const char* part) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const Layer& l = layers[i];
      if (l.in.size() != cur.size() ||
          ((l.kind == LayerKind::Conv2d || l.kind == LayerKind::UpConv2d || l.kind == LayerKind::Flatten) &&
           !(l.in == cur))) {
        fail(ErrorKind::ShapeMismatch, std::string(part) + " layer " + std::to_string(i) +
                                           " expects " + shape_str(l.in) + " but receives " +
                                           shape_str(cur));
      }
      std::size_t want_w = 0, want_b = 0;
      switch (l.kind) {
        case LayerKind::Dense:
          want_w = l.in.size() * l.out.size();
          want_b = l.out.size();
          break;
        case LayerKind::Conv2d:
          want_w = l.out.c * l.in.c * l.kernel * l.kernel;
          want_b = l.out.c;
          break;
        case LayerKind::UpConv2d:
          want_w = l.in.c * l.out.c * l.kernel * l.kernel;
          want_b = l.out.c;
          break;
        case LayerKind::Flatten:
        case LayerKind::Reshape:
          if (l.act != Activation::Linear) {
            fail(ErrorKind::ShapeMismatch, "flatten/reshape layers cannot carry an activation");
          }
          break;
      }
      if (l.weights.size() != want_w || l.bias.size() != want_b) {
        fail(ErrorKind::ShapeMismatch, std::string(part) + " layer " + std::to_string(i) +
                                           " has the wrong parameter count");
      }
      cur = l.out;
    }
  };
  walk(encoder, "encoder");
  if (cur.size() != latent_dim) {
    fail(ErrorKind::ShapeMismatch, "encoder output " + std::to_string(cur.size()) +
                                       " differs from latent_dim " + std::to_string(latent_dim));
  }
  walk(decoder, "decoder");
  if (!(cur == input_shape) && cur.size() != input_shape.size()) {
    fail(ErrorKind::ShapeMismatch, "decoder output " + shape_str(cur) +
                                       " does not restore input " + shape_str(input_shape));
  }
  if (preprocessing && (preprocessing->mean.size() != input_dim() ||
                        preprocessing->scale.size() != input_dim())) {
    fail(ErrorKind::ShapeMismatch, "preprocessing length differs from input size");
  }
}

bool AutoencoderModel::all_finite() const noexcept {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  for (const auto* part : {&encoder, &decoder})
    for (const auto& l : *part)
      if (!finite(l.weights) || !finite(l.bias)) return false;
  return true;
}

bool AutoencoderModel::is_linear() const noexcept {
  for (const auto* part : {&encoder, &decoder})
    for (const auto& l : *part)
      if (l.kind != LayerKind::Dense || l.act != Activation::Linear) return false;
  return true;
}

AutoencoderModel make_mlp(const std::vector<std::size_t>& sizes, Activation act,
                          std::uint64_t seed) {
  if (sizes.size() < 3) {
    fail(ErrorKind::InputDomain, "architecture needs at least input, latent and output sizes");
  }
  if (sizes.front() != sizes.back()) {
    fail(ErrorKind::InputDomain, "architecture must end with the input width");
  }
  if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) {
    fail(ErrorKind::InputDomain, "architecture contains a zero-width layer");
  }
  const auto latent_it = std::min_element(sizes.begin() + 1, sizes.end() - 1);
  const std::size_t latent_idx = static_cast<std::size_t>(latent_it - sizes.begin());

  AutoencoderModel model;
  model.input_shape = {sizes.front(), 1, 1};
  model.latent_dim = *latent_it;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const bool last = i + 2 == sizes.size();
    Layer l = dense_layer(sizes[i], sizes[i + 1], last ? Activation::Linear : act);
    (i < latent_idx ? model.encoder : model.decoder).push_back(std::move(l));
  }
  initialize(model, seed);
  model.check_shapes();
  return model;
}

AutoencoderModel make_mnist_conv(std::size_t latent_dim, std::uint64_t seed) {
  if (latent_dim == 0) fail(ErrorKind::InputDomain, "latent_dim must be positive");
  AutoencoderModel model;
  model.input_shape = {1, 28, 28};
  model.latent_dim = latent_dim;

  Layer c1 = conv_layer(model.input_shape, 16, 3, 2, 1, Activation::Relu);
  Layer c2 = conv_layer(c1.out, 32, 3, 2, 1, Activation::Relu);
  const Shape bottleneck = c2.out;
  Layer flat = flatten_layer(bottleneck);
  Layer to_latent = dense_layer(bottleneck.size(), latent_dim, Activation::Linear);
  model.encoder = {c1, c2, flat, to_latent};

  Layer from_latent = dense_layer(latent_dim, bottleneck.size(), Activation::Linear);
  Layer unflat = reshape_layer(bottleneck.size(), bottleneck);
  Layer u1 = upconv_layer(bottleneck, 16, 3, 2, 1, 1, Activation::Relu);
  Layer u2 = upconv_layer(u1.out, 1, 3, 2, 1, 1, Activation::Sigmoid);
  model.decoder = {from_latent, unflat, u1, u2};

  initialize(model, seed);
  model.check_shapes();
  return model;
}

void initialize(AutoencoderModel& model, std::uint64_t seed) {
  model.seed = seed;
  Rng rng(derive_seed(seed, 0));
  for (auto* part : {&model.encoder, &model.decoder}) {
    for (auto& l : *part) {
      if (l.weights.empty()) continue;
      double fan_in = 0.0, fan_out = 0.0;
      switch (l.kind) {
        case LayerKind::Dense:
          fan_in = static_cast<double>(l.in.size());
          fan_out = static_cast<double>(l.out.size());
          break;
        case LayerKind::Conv2d:
        case LayerKind::UpConv2d:
          fan_in = static_cast<double>(l.in.c * l.kernel * l.kernel);
          fan_out = static_cast<double>(l.out.c * l.kernel * l.kernel);
          break;
        default:
          break;
      }
      const double limit = l.act == Activation::Relu ? std::sqrt(6.0 / fan_in)
                                                     : std::sqrt(6.0 / (fan_in + fan_out));
      for (double& w : l.weights) w = rng.uniform(-limit, limit);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
  }
}

Vector encode(const AutoencoderModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    fail(ErrorKind::ShapeMismatch, "input has " + std::to_string(x.size()) +
                                       " values, model expects " +
                                       std::to_string(model.input_dim()));
  }
  if (model.preprocessing) return run_layers(model.encoder, model.preprocessing->apply(x));
  return run_layers(model.encoder, x);
}

Vector decode(const AutoencoderModel& model, std::span<const double> z) {
  if (z.size() != model.latent_dim) {
    fail(ErrorKind::ShapeMismatch, "latent has " + std::to_string(z.size()) +
                                       " values, model expects " +
                                       std::to_string(model.latent_dim));
  }
  Vector out = run_layers(model.decoder, z);
  if (model.preprocessing) return model.preprocessing->invert(out);
  return out;
}

ForwardResult ae_forward(const AutoencoderModel& model, std::span<const double> x) {
  ForwardResult r;
  r.latent = encode(model, x);
  r.reconstruction = decode(model, r.latent);
  return r;
}

AutoencoderModel pca_as_autoencoder(const PcaModel& pca) {
  const std::size_t n = pca.input_dim(), d = pca.latent_dim();
  AutoencoderModel model;
  model.input_shape = {n, 1, 1};
  model.latent_dim = d;
  Layer enc = dense_layer(n, d, Activation::Linear);
  Layer dec = dense_layer(d, n, Activation::Linear);
  for (std::size_t k = 0; k < d; ++k) {
    double b = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      enc.weights[k * n + j] = pca.v_d(j, k);
      dec.weights[j * d + k] = pca.v_d(j, k);
      b -= pca.v_d(j, k) * pca.mean[j];
    }
    enc.bias[k] = b;
  }
  dec.bias = pca.mean;
  model.encoder = {enc};
  model.decoder = {dec};
  model.check_shapes();
  return model;
}

// ------------------------------------------------------- any detector

std::size_t input_dim(const Model& model) {
  return std::visit([](const auto& m) { return m.input_dim(); }, model);
}

std::size_t latent_dim(const Model& model) {
  if (const auto* p = std::get_if<PcaModel>(&model)) return p->latent_dim();
  return std::get<AutoencoderModel>(model).latent_dim;
}

Vector encode(const Model& model, std::span<const double> x) {
  if (const auto* p = std::get_if<PcaModel>(&model)) return pca_encode(*p, x);
  return encode(std::get<AutoencoderModel>(model), x);
}

Vector decode(const Model& model, std::span<const double> z) {
  if (const auto* p = std::get_if<PcaModel>(&model)) return pca_decode(*p, z);
  return decode(std::get<AutoencoderModel>(model), z);
}

Vector reconstruct(const Model& model, std::span<const double> x) {
  return decode(model, encode(model, x));
}

}  // namespace aeaudit
