#include <fstream>
#include <sstream>

#include "aeaudit/error.hpp"
#include "aeaudit/models.hpp"
#include "json.hpp"

namespace aeaudit {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "aeaudit-model";

json nest(std::span<const double> flat, std::span<const std::size_t> dims) {
  if (dims.size() == 1) return json(std::vector<double>(flat.begin(), flat.end()));
  json arr = json::array();
  const std::size_t stride = flat.size() / dims[0];
  for (std::size_t i = 0; i < dims[0]; ++i)
    arr.push_back(nest(flat.subspan(i * stride, stride), dims.subspan(1)));
  return arr;
}

void unnest(const json& node, std::span<const std::size_t> dims, std::vector<double>& out) {
  if (!node.is_array() || node.size() != dims[0]) {
    fail(ErrorKind::Format, "parameter array does not match its declared shape");
  }
  for (const auto& item : node) {
    if (dims.size() == 1) {
      if (!item.is_number()) fail(ErrorKind::Format, "parameter entry is not a number");
      out.push_back(item.get<double>());
    } else {
      unnest(item, dims.subspan(1), out);
    }
  }
}

std::vector<std::size_t> weight_dims(const Layer& l) {
  switch (l.kind) {
    case LayerKind::Dense: return {l.out.size(), l.in.size()};
    case LayerKind::Conv2d: return {l.out.c, l.in.c, l.kernel, l.kernel};
    case LayerKind::UpConv2d: return {l.in.c, l.out.c, l.kernel, l.kernel};
    default: return {};
  }
}

json shape_json(const Shape& s) { return json::array({s.c, s.h, s.w}); }

Shape shape_from(const json& j) {
  if (!j.is_array() || j.size() != 3) fail(ErrorKind::Format, "shape must be [c, h, w]");
  return {j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>()};
}

json layer_spec(const Layer& l) {
  json j = {{"kind", to_string(l.kind)},
            {"activation", to_string(l.act)},
            {"in_shape", shape_json(l.in)},
            {"out_shape", shape_json(l.out)}};
  if (l.kind == LayerKind::Conv2d || l.kind == LayerKind::UpConv2d) {
    j["kernel"] = l.kernel;
    j["stride"] = l.stride;
    j["pad"] = l.pad;
    if (l.kind == LayerKind::UpConv2d) j["output_pad"] = l.output_pad;
  }
  return j;
}

json layer_params(const Layer& l) {
  if (l.weights.empty()) return json::object();
  const auto dims = weight_dims(l);
  return {{"weights", nest(l.weights, dims)}, {"bias", l.bias}};
}

Layer layer_from(const json& spec, const json& params) {
  const LayerKind kind = layer_kind_from_string(spec.at("kind").get<std::string>());
  const Activation act = activation_from_string(spec.at("activation").get<std::string>());
  const Shape in = shape_from(spec.at("in_shape"));
  const Shape out = shape_from(spec.at("out_shape"));
  Layer l;
  switch (kind) {
    case LayerKind::Dense:
      l = dense_layer(in.size(), out.size(), act);
      break;
    case LayerKind::Conv2d:
      l = conv_layer(in, out.c, spec.at("kernel").get<std::size_t>(),
                     spec.at("stride").get<std::size_t>(), spec.at("pad").get<std::size_t>(), act);
      break;
    case LayerKind::UpConv2d:
      l = upconv_layer(in, out.c, spec.at("kernel").get<std::size_t>(),
                       spec.at("stride").get<std::size_t>(), spec.at("pad").get<std::size_t>(),
                       spec.at("output_pad").get<std::size_t>(), act);
      break;
    case LayerKind::Flatten:
      l = flatten_layer(in);
      break;
    case LayerKind::Reshape:
      l = reshape_layer(in.size(), out);
      break;
  }
  l.act = act;
  if (!(l.out == out)) fail(ErrorKind::Format, "layer out_shape inconsistent with its settings");
  if (!l.weights.empty()) {
    std::vector<double> w;
    const auto dims = weight_dims(l);
    unnest(params.at("weights"), dims, w);
    l.weights = std::move(w);
    const auto& b = params.at("bias");
    if (!b.is_array() || b.size() != l.bias.size()) fail(ErrorKind::Format, "bias length mismatch");
    l.bias = b.get<std::vector<double>>();
  }
  return l;
}

json matrix_json(const Matrix& m) {
  const std::size_t dims[] = {m.rows(), m.cols()};
  return nest(m.data(), dims);
}

Matrix matrix_from(const json& j, std::size_t rows, std::size_t cols) {
  std::vector<double> flat;
  const std::size_t dims[] = {rows, cols};
  unnest(j, dims, flat);
  return Matrix(rows, cols, std::move(flat));
}

json to_json(const PcaModel& m) {
  return {{"format", kFormatTag},
          {"version", kModelFormatVersion},
          {"kind", "pca"},
          {"architecture", {{"input_dim", m.input_dim()}, {"latent_dim", m.latent_dim()}}},
          {"preprocessing", nullptr},
          {"parameters", {{"mean", m.mean}, {"v_d", matrix_json(m.v_d)}, {"sigma", m.sigma}}},
          {"training_seed", 0}};
}

json to_json(const AutoencoderModel& m) {
  json arch = {{"input_shape", shape_json(m.input_shape)}, {"latent_dim", m.latent_dim}};
  json enc_specs = json::array(), dec_specs = json::array();
  json enc_params = json::array(), dec_params = json::array();
  for (const auto& l : m.encoder) {
    enc_specs.push_back(layer_spec(l));
    enc_params.push_back(layer_params(l));
  }
  for (const auto& l : m.decoder) {
    dec_specs.push_back(layer_spec(l));
    dec_params.push_back(layer_params(l));
  }
  arch["encoder"] = enc_specs;
  arch["decoder"] = dec_specs;
  json pre = nullptr;
  if (m.preprocessing) {
    pre = {{"type", "standardize"}, {"mean", m.preprocessing->mean}, {"scale", m.preprocessing->scale}};
  }
  return {{"format", kFormatTag},
          {"version", kModelFormatVersion},
          {"kind", "autoencoder"},
          {"architecture", arch},
          {"preprocessing", pre},
          {"parameters", {{"encoder", enc_params}, {"decoder", dec_params}}},
          {"training_seed", m.seed}};
}

Model from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string{}) != kFormatTag) {
    fail(ErrorKind::Format, "not an aeaudit model file");
  }
  if (!j.contains("version") || !j["version"].is_number_integer()) {
    fail(ErrorKind::Format, "model file has no version");
  }
  const int version = j["version"].get<int>();
  if (version != kModelFormatVersion) {
    fail(ErrorKind::Version, "model file version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kModelFormatVersion) + ")");
  }
  const std::string kind = j.at("kind").get<std::string>();
  const json& arch = j.at("architecture");
  const json& params = j.at("parameters");
  if (kind == "pca") {
    PcaModel m;
    const auto n = arch.at("input_dim").get<std::size_t>();
    const auto d = arch.at("latent_dim").get<std::size_t>();
    m.mean = params.at("mean").get<std::vector<double>>();
    m.sigma = params.at("sigma").get<std::vector<double>>();
    m.v_d = matrix_from(params.at("v_d"), n, d);
    if (m.mean.size() != n) fail(ErrorKind::Format, "pca mean length mismatch");
    return m;
  }
  if (kind != "autoencoder") fail(ErrorKind::Format, "unknown model kind '" + kind + "'");

  AutoencoderModel m;
  m.input_shape = shape_from(arch.at("input_shape"));
  m.latent_dim = arch.at("latent_dim").get<std::size_t>();
  const json& enc = arch.at("encoder");
  const json& dec = arch.at("decoder");
  const json& enc_p = params.at("encoder");
  const json& dec_p = params.at("decoder");
  if (enc.size() != enc_p.size() || dec.size() != dec_p.size()) {
    fail(ErrorKind::Format, "parameter list does not match architecture");
  }
  for (std::size_t i = 0; i < enc.size(); ++i) m.encoder.push_back(layer_from(enc[i], enc_p[i]));
  for (std::size_t i = 0; i < dec.size(); ++i) m.decoder.push_back(layer_from(dec[i], dec_p[i]));
  const json& pre = j.at("preprocessing");
  if (!pre.is_null()) {
    Standardization s;
    s.mean = pre.at("mean").get<std::vector<double>>();
    s.scale = pre.at("scale").get<std::vector<double>>();
    m.preprocessing = std::move(s);
  }
  m.seed = j.at("training_seed").get<std::uint64_t>();
  m.check_shapes();
  if (!m.all_finite()) fail(ErrorKind::Format, "model parameters contain NaN or Inf");
  return m;
}

}  // namespace

std::string model_to_json(const Model& model) {
  const json j = std::visit([](const auto& m) { return to_json(m); }, model);
  return j.dump() + "\n";
}

Model model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Format, std::string("corrupt model file: ") + e.what());
  }
  try {
    return from_json(j);
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed model file: ") + e.what());
  }
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << model_to_json(model);
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace aeaudit
