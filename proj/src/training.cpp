#include "aeaudit/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "aeaudit/error.hpp"
#include "aeaudit/rng.hpp"
#include "json.hpp"

namespace aeaudit {

namespace {

using nlohmann::json;

// Flattened view of encoder followed by decoder layers.
std::vector<const Layer*> all_layers(const AutoencoderModel& m) {
  std::vector<const Layer*> out;
  for (const auto& l : m.encoder) out.push_back(&l);
  for (const auto& l : m.decoder) out.push_back(&l);
  return out;
}

struct Trace {
  std::vector<Vector> inputs;   // input to layer i
  std::vector<Vector> outputs;  // post-activation output of layer i
};

Trace forward_trace(const std::vector<const Layer*>& layers, std::span<const double> x) {
  Trace t;
  t.inputs.reserve(layers.size());
  t.outputs.reserve(layers.size());
  Vector cur(x.begin(), x.end());
  for (const Layer* l : layers) {
    t.inputs.push_back(cur);
    cur = layer_forward(*l, cur);
    t.outputs.push_back(cur);
  }
  return t;
}

// Backpropagates `g` (dLoss/d output of `layer`) through one layer. Adds
// parameter gradients into `acc` when non-null; returns dLoss/d input.
Vector layer_backward(const Layer& layer, const Vector& input, const Vector& output, Vector g,
                      LayerGradient* acc) {
  switch (layer.act) {
    case Activation::Linear:
      break;
    case Activation::Relu:
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!(output[i] > 0.0)) g[i] = 0.0;
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= output[i] * (1.0 - output[i]);
      break;
  }

  switch (layer.kind) {
    case LayerKind::Flatten:
    case LayerKind::Reshape:
      return g;
    case LayerKind::Dense: {
      const std::size_t in = layer.in.size(), out = layer.out.size();
      Vector gx(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double go = g[o];
        if (go == 0.0) continue;
        const double* w = layer.weights.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) gx[i] += w[i] * go;
        if (acc) {
          double* dw = acc->weights.data() + o * in;
          for (std::size_t i = 0; i < in; ++i) dw[i] += go * input[i];
          acc->bias[o] += go;
        }
      }
      return gx;
    }
    case LayerKind::Conv2d: {
      const auto [ci, hi, wi] = layer.in;
      const auto [co, ho, wo] = layer.out;
      const std::size_t k = layer.kernel, s = layer.stride;
      const long p = static_cast<long>(layer.pad);
      Vector gx(ci * hi * wi, 0.0);
      for (std::size_t o = 0; o < co; ++o) {
        const double* go = g.data() + o * ho * wo;
        if (acc) {
          double sum = 0.0;
          for (std::size_t q = 0; q < ho * wo; ++q) sum += go[q];
          acc->bias[o] += sum;
        }
        for (std::size_t c = 0; c < ci; ++c) {
          const double* xc = input.data() + c * hi * wi;
          double* gxc = gx.data() + c * hi * wi;
          const double* wk = layer.weights.data() + (o * ci + c) * k * k;
          double* dwk = acc ? acc->weights.data() + (o * ci + c) * k * k : nullptr;
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const double wv = wk[ky * k + kx];
              double dw = 0.0;
              for (std::size_t oy = 0; oy < ho; ++oy) {
                const long iy = static_cast<long>(oy * s + ky) - p;
                if (iy < 0 || iy >= static_cast<long>(hi)) continue;
                for (std::size_t ox = 0; ox < wo; ++ox) {
                  const long ix = static_cast<long>(ox * s + kx) - p;
                  if (ix < 0 || ix >= static_cast<long>(wi)) continue;
                  const double gv = go[oy * wo + ox];
                  dw += gv * xc[iy * wi + ix];
                  gxc[iy * wi + ix] += wv * gv;
                }
              }
              if (dwk) dwk[ky * k + kx] += dw;
            }
        }
      }
      return gx;
    }
    case LayerKind::UpConv2d: {
      const auto [ci, hi, wi] = layer.in;
      const auto [co, ho, wo] = layer.out;
      const std::size_t k = layer.kernel, s = layer.stride;
      const long p = static_cast<long>(layer.pad);
      Vector gx(ci * hi * wi, 0.0);
      if (acc) {
        for (std::size_t o = 0; o < co; ++o) {
          double sum = 0.0;
          for (std::size_t q = 0; q < ho * wo; ++q) sum += g[o * ho * wo + q];
          acc->bias[o] += sum;
        }
      }
      for (std::size_t c = 0; c < ci; ++c) {
        const double* xc = input.data() + c * hi * wi;
        double* gxc = gx.data() + c * hi * wi;
        for (std::size_t o = 0; o < co; ++o) {
          const double* go = g.data() + o * ho * wo;
          const double* wk = layer.weights.data() + (c * co + o) * k * k;
          double* dwk = acc ? acc->weights.data() + (c * co + o) * k * k : nullptr;
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const double wv = wk[ky * k + kx];
              double dw = 0.0;
              for (std::size_t iy = 0; iy < hi; ++iy) {
                const long oy = static_cast<long>(iy * s + ky) - p;
                if (oy < 0 || oy >= static_cast<long>(ho)) continue;
                for (std::size_t ix = 0; ix < wi; ++ix) {
                  const long ox = static_cast<long>(ix * s + kx) - p;
                  if (ox < 0 || ox >= static_cast<long>(wo)) continue;
                  const double gv = go[oy * wo + ox];
                  dw += gv * xc[iy * wi + ix];
                  gxc[iy * wi + ix] += wv * gv;
                }
              }
              if (dwk) dwk[ky * k + kx] += dw;
            }
        }
      }
      return gx;
    }
  }
  return {};
}

Gradients zero_gradients(const AutoencoderModel& m) {
  Gradients g;
  for (const auto& l : m.encoder) g.encoder.push_back({Vector(l.weights.size()), Vector(l.bias.size())});
  for (const auto& l : m.decoder) g.decoder.push_back({Vector(l.weights.size()), Vector(l.bias.size())});
  return g;
}

std::vector<LayerGradient*> all_grads(Gradients& g) {
  std::vector<LayerGradient*> out;
  for (auto& l : g.encoder) out.push_back(&l);
  for (auto& l : g.decoder) out.push_back(&l);
  return out;
}

// Adds the gradient of (scale · ‖x − N(x)‖²) for one network-space sample and
// returns the per-sample mean loss.
double accumulate_sample(const std::vector<const Layer*>& layers, std::span<const double> x,
                         double scale, const std::vector<LayerGradient*>& acc) {
  Trace t = forward_trace(layers, x);
  const Vector& xhat = t.outputs.back();
  Vector g(xhat.size());
  double sq = 0.0;
  for (std::size_t j = 0; j < xhat.size(); ++j) {
    const double r = xhat[j] - x[j];
    sq += r * r;
    g[j] = 2.0 * scale * r;
  }
  for (std::size_t i = layers.size(); i-- > 0;) {
    g = layer_backward(*layers[i], t.inputs[i], t.outputs[i], std::move(g), acc[i]);
  }
  return sq / static_cast<double>(xhat.size());
}

void check_batch(const AutoencoderModel& model, const Matrix& batch) {
  if (batch.cols() != model.input_dim()) {
    fail(ErrorKind::ShapeMismatch, "batch has " + std::to_string(batch.cols()) +
                                       " columns, model expects " +
                                       std::to_string(model.input_dim()));
  }
  if (batch.rows() == 0) fail(ErrorKind::InputDomain, "empty batch");
}

}  // namespace

double reconstruction_loss(std::span<const double> x, std::span<const double> xhat) {
  if (x.size() != xhat.size()) {
    fail(ErrorKind::ShapeMismatch, "reconstruction_loss: lengths " + std::to_string(x.size()) +
                                       " and " + std::to_string(xhat.size()));
  }
  if (x.empty()) fail(ErrorKind::InputDomain, "reconstruction_loss: empty vectors");
  return reconstruction_loss_sum(x, xhat) / static_cast<double>(x.size());
}

double reconstruction_loss_sum(std::span<const double> x, std::span<const double> xhat) {
  if (x.size() != xhat.size()) {
    fail(ErrorKind::ShapeMismatch, "reconstruction_loss: lengths " + std::to_string(x.size()) +
                                       " and " + std::to_string(xhat.size()));
  }
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double d = x[j] - xhat[j];
    s += d * d;
  }
  return s;
}

Gradients backward(const AutoencoderModel& model, const Matrix& batch) {
  check_batch(model, batch);
  const auto layers = all_layers(model);
  Gradients g = zero_gradients(model);
  auto acc = all_grads(g);
  const double scale =
      1.0 / (static_cast<double>(batch.rows()) * static_cast<double>(batch.cols()));
  double total = 0.0;
  for (std::size_t i = 0; i < batch.rows(); ++i)
    total += accumulate_sample(layers, batch.row(i), scale, acc);
  g.loss = total / static_cast<double>(batch.rows());
  return g;
}

double batch_loss(const AutoencoderModel& model, const Matrix& batch) {
  check_batch(model, batch);
  const auto layers = all_layers(model);
  double total = 0.0;
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    Vector cur = batch.row_vector(i);
    for (const Layer* l : layers) cur = layer_forward(*l, cur);
    total += reconstruction_loss(batch.row(i), cur);
  }
  return total / static_cast<double>(batch.rows());
}

Vector input_gradient(const AutoencoderModel& model, std::span<const double> a, double* loss) {
  if (a.size() != model.input_dim()) {
    fail(ErrorKind::ShapeMismatch, "input_gradient: point has " + std::to_string(a.size()) +
                                       " values, model expects " +
                                       std::to_string(model.input_dim()));
  }
  const auto layers = all_layers(model);
  const std::size_t n = a.size();
  const Vector xs = model.preprocessing ? model.preprocessing->apply(a) : Vector(a.begin(), a.end());
  Trace t = forward_trace(layers, xs);
  const Vector recon =
      model.preprocessing ? model.preprocessing->invert(t.outputs.back()) : t.outputs.back();

  // r = a − F(a);  ∇ = (2/n)(r − J_Fᵀ r), with J_F = diag(σ)·J_N·diag(1/σ).
  Vector r = subtract(a, recon);
  Vector g = r;
  if (model.preprocessing)
    for (std::size_t j = 0; j < n; ++j) g[j] *= model.preprocessing->scale[j];
  for (std::size_t i = layers.size(); i-- > 0;)
    g = layer_backward(*layers[i], t.inputs[i], t.outputs[i], std::move(g), nullptr);
  if (model.preprocessing)
    for (std::size_t j = 0; j < n; ++j) g[j] /= model.preprocessing->scale[j];

  Vector grad(n);
  const double c = 2.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) grad[j] = c * (r[j] - g[j]);
  if (loss) *loss = reconstruction_loss(a, recon);
  return grad;
}

const char* to_string(OptimizerKind k) noexcept {
  return k == OptimizerKind::Sgd ? "sgd" : "adam";
}

OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  fail(ErrorKind::InputDomain, "unknown optimizer '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorKind::InputDomain, "learning_rate must be positive");
  }
  if (!full_batch && batch_size < 1) fail(ErrorKind::InputDomain, "batch_size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(adam_eps > 0.0)) {
    fail(ErrorKind::InputDomain, "invalid Adam parameters");
  }
}

std::string train_config_to_json(const TrainConfig& c) {
  json j = {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"full_batch", c.full_batch},
            {"learning_rate", c.learning_rate},
            {"optimizer", to_string(c.optimizer)},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"adam_eps", c.adam_eps},
            {"seed", c.seed},
            {"shuffle", c.shuffle},
            {"loss_log_interval", c.loss_log_interval},
            {"standardize", c.standardize},
            {"checkpoint_every", c.checkpoint_every}};
  return j.dump(2) + "\n";
}

TrainConfig train_config_from_json(const std::string& text, TrainConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Format, std::string("train config: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::Format, "train config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "full_batch") c.full_batch = value.get<bool>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "optimizer") c.optimizer = optimizer_from_string(value.get<std::string>());
      else if (key == "beta1") c.beta1 = value.get<double>();
      else if (key == "beta2") c.beta2 = value.get<double>();
      else if (key == "adam_eps") c.adam_eps = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "shuffle") c.shuffle = value.get<bool>();
      else if (key == "loss_log_interval") c.loss_log_interval = value.get<std::size_t>();
      else if (key == "standardize") c.standardize = value.get<bool>();
      else if (key == "checkpoint_every") c.checkpoint_every = value.get<std::size_t>();
      else fail(ErrorKind::Format, "train config: unknown key '" + key + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string train_report_to_json(const TrainReport& r, bool include_wall_time) {
  json j = {{"epochs", r.epoch_losses.size()},
            {"epoch_losses", r.epoch_losses},
            {"final_loss", r.final_loss},
            {"seed", r.seed}};
  if (include_wall_time) j["wall_time_seconds"] = r.wall_time_seconds;
  return j.dump(2) + "\n";
}

Optimizer::Optimizer(const AutoencoderModel& model, const TrainConfig& cfg) : cfg_(cfg) {
  for (const auto* part : {&model.encoder, &model.decoder})
    for (const auto& l : *part) {
      moments_.push_back({Vector(l.weights.size()), Vector(l.weights.size())});
      moments_.push_back({Vector(l.bias.size()), Vector(l.bias.size())});
    }
}

void Optimizer::update(std::vector<double>& params, const std::vector<double>& grad,
                       Moments& mom) {
  const double lr = cfg_.learning_rate;
  if (cfg_.optimizer == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
    return;
  }
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    mom.m[i] = b1 * mom.m[i] + (1.0 - b1) * grad[i];
    mom.v[i] = b2 * mom.v[i] + (1.0 - b2) * grad[i] * grad[i];
    const double mhat = mom.m[i] / c1;
    const double vhat = mom.v[i] / c2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
  }
}

void Optimizer::step(AutoencoderModel& model, const Gradients& grads) {
  ++t_;
  std::size_t k = 0;
  auto apply = [&](std::vector<Layer>& layers, const std::vector<LayerGradient>& g) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      update(layers[i].weights, g[i].weights, moments_[k++]);
      update(layers[i].bias, g[i].bias, moments_[k++]);
    }
  };
  apply(model.encoder, grads.encoder);
  apply(model.decoder, grads.decoder);
}

TrainResult train(AutoencoderModel model, const Dataset& data, const TrainConfig& cfg,
                  const TrainCallbacks& callbacks) {
  cfg.validate();
  if (data.role != Role::Train) fail(ErrorKind::InputDomain, "train: dataset role must be train");
  if (data.size() == 0) fail(ErrorKind::InputDomain, "train: empty dataset");
  validate(data);
  model.check_shapes();
  if (data.dim() != model.input_dim()) {
    fail(ErrorKind::ShapeMismatch, "train: data has " + std::to_string(data.dim()) +
                                       " features, model expects " +
                                       std::to_string(model.input_dim()));
  }

  const auto start = std::chrono::steady_clock::now();
  if (cfg.standardize) {
    if (data.image) fail(ErrorKind::InputDomain, "standardization applies to tabular data only");
    model.preprocessing = fit_standardization(data.x);
  }
  const Matrix x = model.preprocessing ? model.preprocessing->apply(data.x) : data.x;
  const std::size_t m = x.rows();
  const std::size_t bs = cfg.full_batch ? m : std::min(cfg.batch_size, m);

  Optimizer opt(model, cfg);
  TrainReport report;
  report.seed = cfg.seed;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle && !cfg.full_batch) {
      Rng rng(derive_seed(cfg.seed, epoch + 1));
      for (std::size_t i = m; i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);
    }
    double epoch_total = 0.0;
    for (std::size_t start_i = 0; start_i < m; start_i += bs) {
      const std::size_t count = std::min(bs, m - start_i);
      Matrix batch(count, x.cols());
      for (std::size_t r = 0; r < count; ++r) {
        const auto src = x.row(order[start_i + r]);
        std::copy(src.begin(), src.end(), batch.row(r).begin());
      }
      const Gradients g = backward(model, batch);
      epoch_total += g.loss * static_cast<double>(count);
      opt.step(model, g);
    }
    const double epoch_loss = epoch_total / static_cast<double>(m);
    if (!std::isfinite(epoch_loss) || !model.all_finite()) {
      fail(ErrorKind::Training,
           "training diverged in epoch " + std::to_string(epoch + 1) + "; last good epoch " +
               (epoch == 0 ? std::string("none") : std::to_string(epoch)));
    }
    report.epoch_losses.push_back(epoch_loss);
    if (callbacks.on_log && cfg.loss_log_interval > 0 &&
        ((epoch + 1) % cfg.loss_log_interval == 0 || epoch + 1 == cfg.epochs)) {
      callbacks.on_log("epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.epochs) +
                       " loss " + format_double(epoch_loss));
    }
    if (callbacks.on_checkpoint && cfg.checkpoint_every > 0 &&
        (epoch + 1) % cfg.checkpoint_every == 0) {
      callbacks.on_checkpoint(epoch + 1, model);
    }
  }
  report.final_loss = batch_loss(model, x);
  if (!std::isfinite(report.final_loss)) {
    fail(ErrorKind::Training, "training produced a non-finite final loss; last good epoch " +
                                  std::to_string(report.epoch_losses.size()));
  }
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(model), std::move(report)};
}

}  // namespace aeaudit
