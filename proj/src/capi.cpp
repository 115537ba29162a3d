#include "aeaudit/aeaudit.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <set>
#include <string>

#include "aeaudit/adversary.hpp"
#include "aeaudit/anomaly.hpp"
#include "aeaudit/audit.hpp"
#include "aeaudit/datagen.hpp"
#include "aeaudit/error.hpp"
#include "aeaudit/models.hpp"
#include "aeaudit/training.hpp"
#include "json.hpp"

struct aeaudit_dataset {
  aeaudit::Dataset ds;
};
struct aeaudit_model {
  aeaudit::Model model;
};
struct aeaudit_scores {
  aeaudit::ScoreTable table;
};
struct aeaudit_audit {
  aeaudit::AuditGrid grid;
  std::optional<double> min_normal_score;
};
struct aeaudit_adversary {
  aeaudit::AdversaryResult result;
};

namespace {

using namespace aeaudit;
using nlohmann::json;

thread_local std::string g_last_error;

aeaudit_status status_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::InputDomain: return AEAUDIT_ERR_INPUT_DOMAIN;
    case ErrorKind::Numerical: return AEAUDIT_ERR_NUMERICAL;
    case ErrorKind::Format: return AEAUDIT_ERR_FORMAT;
    case ErrorKind::Version: return AEAUDIT_ERR_VERSION;
    case ErrorKind::ShapeMismatch: return AEAUDIT_ERR_SHAPE_MISMATCH;
    case ErrorKind::DegenerateBasis: return AEAUDIT_ERR_DEGENERATE_BASIS;
    case ErrorKind::UnsupportedDimension: return AEAUDIT_ERR_UNSUPPORTED_DIMENSION;
    case ErrorKind::Training: return AEAUDIT_ERR_TRAINING;
    case ErrorKind::Refused: return AEAUDIT_ERR_REFUSED;
    case ErrorKind::Io: return AEAUDIT_ERR_IO;
  }
  return AEAUDIT_ERR_INTERNAL;
}

// Runs body, translating every exception into a status code.
template <class F>
aeaudit_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return AEAUDIT_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const json::exception& e) {
    g_last_error = std::string("invalid JSON: ") + e.what();
    return AEAUDIT_ERR_FORMAT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return AEAUDIT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AEAUDIT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown internal error";
    return AEAUDIT_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_options(const char* text) {
  if (!text || !*text) return json::object();
  json j = json::parse(text);
  if (!j.is_object()) fail(ErrorKind::Format, "options must be a JSON object");
  return j;
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(ErrorKind::Format, "unknown option '" + key + "'");
  }
}

const AutoencoderModel& as_autoencoder(const Model& m, const char* what) {
  if (const auto* ae = std::get_if<AutoencoderModel>(&m)) return *ae;
  fail(ErrorKind::InputDomain, std::string(what) + " needs an autoencoder model, not PCA");
}

AutoencoderModel network_view(const Model& m) {
  if (const auto* ae = std::get_if<AutoencoderModel>(&m)) return *ae;
  return pca_as_autoencoder(std::get<PcaModel>(m));
}

void fill_verdict(const Verdict& v, aeaudit_verdict* out) {
  out->undetected = v.undetected ? 1 : 0;
  out->score = v.score;
  out->min_normal_score = v.min_normal_score;
  out->margin = v.margin;
  out->has_ratio = v.ratio ? 1 : 0;
  out->ratio = v.ratio.value_or(0.0);
}

}  // namespace

extern "C" {

const char* aeaudit_version(void) { return "1.0.0"; }

const char* aeaudit_status_string(aeaudit_status status) {
  switch (status) {
    case AEAUDIT_OK: return "ok";
    case AEAUDIT_ERR_NULL_ARG: return "null-argument";
    case AEAUDIT_ERR_INPUT_DOMAIN: return "input-domain";
    case AEAUDIT_ERR_NUMERICAL: return "numerical";
    case AEAUDIT_ERR_FORMAT: return "format";
    case AEAUDIT_ERR_VERSION: return "version";
    case AEAUDIT_ERR_SHAPE_MISMATCH: return "shape-mismatch";
    case AEAUDIT_ERR_DEGENERATE_BASIS: return "degenerate-basis";
    case AEAUDIT_ERR_UNSUPPORTED_DIMENSION: return "unsupported-dimension";
    case AEAUDIT_ERR_TRAINING: return "training";
    case AEAUDIT_ERR_REFUSED: return "refused";
    case AEAUDIT_ERR_IO: return "io";
    case AEAUDIT_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* aeaudit_last_error(void) { return g_last_error.c_str(); }

void aeaudit_string_free(char* s) { std::free(s); }

#define AEAUDIT_REQUIRE(p)                          \
  do {                                              \
    if (!(p)) {                                     \
      g_last_error = #p " is NULL";                 \
      return AEAUDIT_ERR_NULL_ARG;                  \
    }                                               \
  } while (0)

// ---- datasets

aeaudit_status aeaudit_dataset_generate(const char* spec_json, aeaudit_dataset** out,
                                        char** resolved_spec_json) {
  AEAUDIT_REQUIRE(spec_json);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    const SyntheticSpec spec = synthetic_spec_from_json(spec_json);
    auto h = std::make_unique<aeaudit_dataset>();
    h->ds = generate(spec);
    if (resolved_spec_json) *resolved_spec_json = dup_string(synthetic_spec_to_json(spec));
    *out = h.release();
  });
}

aeaudit_status aeaudit_dataset_load_csv(const char* path, int has_header, aeaudit_dataset** out) {
  AEAUDIT_REQUIRE(path);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    auto h = std::make_unique<aeaudit_dataset>();
    h->ds = load_csv(path, has_header != 0);
    *out = h.release();
  });
}

aeaudit_status aeaudit_dataset_load_mnist(const char* images_path, const char* labels_path,
                                          const int* digits, size_t digit_count,
                                          size_t max_per_digit, aeaudit_dataset** out) {
  AEAUDIT_REQUIRE(images_path);
  AEAUDIT_REQUIRE(labels_path);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    std::set<int> keep;
    if (digits) keep.insert(digits, digits + digit_count);
    auto h = std::make_unique<aeaudit_dataset>();
    h->ds = load_mnist(images_path, labels_path, keep, max_per_digit);
    *out = h.release();
  });
}

aeaudit_status aeaudit_dataset_from_array(const double* data, size_t rows, size_t cols,
                                          aeaudit_dataset** out) {
  AEAUDIT_REQUIRE(data);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    auto h = std::make_unique<aeaudit_dataset>();
    h->ds.x = Matrix(rows, cols, std::vector<double>(data, data + rows * cols));
    validate(h->ds);
    *out = h.release();
  });
}

aeaudit_status aeaudit_dataset_save_csv(const aeaudit_dataset* ds, const char* path) {
  AEAUDIT_REQUIRE(ds);
  AEAUDIT_REQUIRE(path);
  return guarded([&] { save_csv(ds->ds, path); });
}

aeaudit_status aeaudit_dataset_shape(const aeaudit_dataset* ds, size_t* rows, size_t* cols) {
  AEAUDIT_REQUIRE(ds);
  if (rows) *rows = ds->ds.size();
  if (cols) *cols = ds->ds.dim();
  return AEAUDIT_OK;
}

aeaudit_status aeaudit_dataset_row(const aeaudit_dataset* ds, size_t index, double* out,
                                   size_t len) {
  AEAUDIT_REQUIRE(ds);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    if (index >= ds->ds.size()) fail(ErrorKind::InputDomain, "row index out of range");
    if (len != ds->ds.dim()) fail(ErrorKind::ShapeMismatch, "output length differs from row width");
    const auto row = ds->ds.x.row(index);
    std::copy(row.begin(), row.end(), out);
  });
}

aeaudit_status aeaudit_dataset_set_role(aeaudit_dataset* ds, int test) {
  AEAUDIT_REQUIRE(ds);
  ds->ds.role = test ? Role::Test : Role::Train;
  return AEAUDIT_OK;
}

void aeaudit_dataset_free(aeaudit_dataset* ds) { delete ds; }

// ---- models

aeaudit_status aeaudit_model_mlp(const size_t* sizes, size_t count, const char* activation,
                                 uint64_t seed, aeaudit_model** out) {
  AEAUDIT_REQUIRE(sizes);
  AEAUDIT_REQUIRE(activation);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    auto h = std::make_unique<aeaudit_model>();
    h->model = make_mlp(std::vector<std::size_t>(sizes, sizes + count),
                        activation_from_string(activation), seed);
    *out = h.release();
  });
}

aeaudit_status aeaudit_model_preset(const char* name, size_t latent_dim, uint64_t seed,
                                    aeaudit_model** out) {
  AEAUDIT_REQUIRE(name);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    if (std::string(name) != "mnist-conv2") {
      fail(ErrorKind::InputDomain, std::string("unknown model preset '") + name + "'");
    }
    auto h = std::make_unique<aeaudit_model>();
    h->model = make_mnist_conv(latent_dim ? latent_dim : 2, seed);
    *out = h.release();
  });
}

aeaudit_status aeaudit_model_fit_pca(const aeaudit_dataset* ds, size_t latent_dim,
                                     aeaudit_model** out) {
  AEAUDIT_REQUIRE(ds);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    auto h = std::make_unique<aeaudit_model>();
    h->model = pca_fit(ds->ds.x, latent_dim);
    *out = h.release();
  });
}

aeaudit_status aeaudit_model_load(const char* path, aeaudit_model** out) {
  AEAUDIT_REQUIRE(path);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    auto h = std::make_unique<aeaudit_model>();
    h->model = load_model(path);
    *out = h.release();
  });
}

aeaudit_status aeaudit_model_save(const aeaudit_model* model, const char* path) {
  AEAUDIT_REQUIRE(model);
  AEAUDIT_REQUIRE(path);
  return guarded([&] { save_model(model->model, path); });
}

aeaudit_status aeaudit_model_get_info(const aeaudit_model* model, aeaudit_model_info* info) {
  AEAUDIT_REQUIRE(model);
  AEAUDIT_REQUIRE(info);
  return guarded([&] {
    info->input_dim = input_dim(model->model);
    info->latent_dim = latent_dim(model->model);
    const auto* ae = std::get_if<AutoencoderModel>(&model->model);
    info->is_pca = ae ? 0 : 1;
    info->is_linear = ae ? (ae->is_linear() ? 1 : 0) : 1;
    if (ae) {
      info->channels = ae->input_shape.c;
      info->height = ae->input_shape.h;
      info->width = ae->input_shape.w;
    } else {
      info->channels = info->input_dim;
      info->height = info->width = 1;
    }
  });
}

aeaudit_status aeaudit_model_reconstruct(const aeaudit_model* model, const double* x, size_t n,
                                         double* out) {
  AEAUDIT_REQUIRE(model);
  AEAUDIT_REQUIRE(x);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    if (n != input_dim(model->model)) fail(ErrorKind::ShapeMismatch, "input length mismatch");
    const Vector r = reconstruct(model->model, std::span<const double>(x, n));
    std::copy(r.begin(), r.end(), out);
  });
}

aeaudit_status aeaudit_model_encode(const aeaudit_model* model, const double* x, size_t n,
                                    double* z, size_t d) {
  AEAUDIT_REQUIRE(model);
  AEAUDIT_REQUIRE(x);
  AEAUDIT_REQUIRE(z);
  return guarded([&] {
    if (n != input_dim(model->model) || d != latent_dim(model->model)) {
      fail(ErrorKind::ShapeMismatch, "encode: length mismatch");
    }
    const Vector r = encode(model->model, std::span<const double>(x, n));
    std::copy(r.begin(), r.end(), z);
  });
}

aeaudit_status aeaudit_model_decode(const aeaudit_model* model, const double* z, size_t d,
                                    double* x, size_t n) {
  AEAUDIT_REQUIRE(model);
  AEAUDIT_REQUIRE(z);
  AEAUDIT_REQUIRE(x);
  return guarded([&] {
    if (n != input_dim(model->model) || d != latent_dim(model->model)) {
      fail(ErrorKind::ShapeMismatch, "decode: length mismatch");
    }
    const Vector r = decode(model->model, std::span<const double>(z, d));
    std::copy(r.begin(), r.end(), x);
  });
}

void aeaudit_model_free(aeaudit_model* model) { delete model; }

// ---- training

aeaudit_status aeaudit_train_config_default(char** out) {
  AEAUDIT_REQUIRE(out);
  return guarded([&] { *out = dup_string(train_config_to_json(TrainConfig{})); });
}

aeaudit_status aeaudit_train(aeaudit_model* model, const aeaudit_dataset* data,
                             const char* config_json, aeaudit_log_fn log,
                             aeaudit_checkpoint_fn checkpoint, void* user, char** report_json) {
  AEAUDIT_REQUIRE(model);
  AEAUDIT_REQUIRE(data);
  return guarded([&] {
    const AutoencoderModel& ae = as_autoencoder(model->model, "training");
    const TrainConfig cfg =
        config_json && *config_json ? train_config_from_json(config_json) : TrainConfig{};
    TrainCallbacks cb;
    if (log) cb.on_log = [&](const std::string& line) { log(line.c_str(), user); };
    if (checkpoint) {
      cb.on_checkpoint = [&](std::size_t epoch, const AutoencoderModel& snap) {
        aeaudit_model tmp{snap};
        checkpoint(epoch, &tmp, user);
      };
    }
    TrainResult result = train(ae, data->ds, cfg, cb);
    std::string report = report_json ? train_report_to_json(result.report) : std::string();
    model->model = std::move(result.model);
    if (report_json) *report_json = dup_string(report);
  });
}

// ---- scoring

aeaudit_status aeaudit_score(const aeaudit_model* model, const aeaudit_dataset* data,
                             const char* convention, aeaudit_scores** out) {
  AEAUDIT_REQUIRE(model);
  AEAUDIT_REQUIRE(data);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    const LossConvention conv =
        convention ? convention_from_string(convention) : LossConvention::Mean;
    auto h = std::make_unique<aeaudit_scores>();
    h->table = score(model->model, data->ds, conv);
    *out = h.release();
  });
}

aeaudit_status aeaudit_scores_summary(const aeaudit_scores* scores, size_t* count,
                                      double* min_score, double* max_score) {
  AEAUDIT_REQUIRE(scores);
  if (count) *count = scores->table.entries.size();
  if (min_score) *min_score = scores->table.min_normal_score;
  if (max_score) *max_score = scores->table.max_normal_score;
  return AEAUDIT_OK;
}

aeaudit_status aeaudit_scores_values(const aeaudit_scores* scores, double* out, size_t len) {
  AEAUDIT_REQUIRE(scores);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    const auto v = scores->table.scores_by_index();
    if (len != v.size()) fail(ErrorKind::ShapeMismatch, "output length differs from score count");
    std::copy(v.begin(), v.end(), out);
  });
}

aeaudit_status aeaudit_scores_write_csv(const aeaudit_scores* scores, const char* path) {
  AEAUDIT_REQUIRE(scores);
  AEAUDIT_REQUIRE(path);
  return guarded([&] { write_scores_csv(scores->table, path); });
}

aeaudit_status aeaudit_scores_summary_json(const aeaudit_scores* scores, char** out) {
  AEAUDIT_REQUIRE(scores);
  AEAUDIT_REQUIRE(out);
  return guarded([&] { *out = dup_string(score_summary_json(scores->table)); });
}

aeaudit_status aeaudit_verdict_for(const aeaudit_model* model, const aeaudit_scores* train_scores,
                                   const double* a, size_t n, aeaudit_verdict* out) {
  AEAUDIT_REQUIRE(model);
  AEAUDIT_REQUIRE(train_scores);
  AEAUDIT_REQUIRE(a);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    if (n != input_dim(model->model)) fail(ErrorKind::ShapeMismatch, "input length mismatch");
    fill_verdict(is_undetected(std::span<const double>(a, n), model->model, train_scores->table),
                 out);
  });
}

void aeaudit_scores_free(aeaudit_scores* scores) { delete scores; }

// ---- audit

aeaudit_status aeaudit_audit_run(const aeaudit_model* model, const aeaudit_dataset* train,
                                 const char* options_json, aeaudit_audit** out) {
  AEAUDIT_REQUIRE(model);
  AEAUDIT_REQUIRE(train);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    const json o = parse_options(options_json);
    reject_unknown(o, {"space", "nx", "ny", "epsilon", "far_threshold", "bounds", "threads"});
    ScanOptions opts;
    opts.nx = o.value("nx", opts.nx);
    opts.ny = o.value("ny", opts.ny);
    opts.epsilon = o.value("epsilon", opts.epsilon);
    opts.threads = o.value("threads", opts.threads);
    if (o.contains("far_threshold") && !o["far_threshold"].is_null()) {
      opts.far_threshold = o["far_threshold"].get<double>();
    }
    if (o.contains("bounds") && !o["bounds"].is_null()) {
      const auto b = o["bounds"].get<std::vector<double>>();
      if (b.size() != 4) fail(ErrorKind::InputDomain, "bounds must be [xmin, xmax, ymin, ymax]");
      opts.bounds = Bounds{b[0], b[1], b[2], b[3]};
    }
    const std::string space = o.value("space", std::string("auto"));
    auto h = std::make_unique<aeaudit_audit>();
    if (space == "input" || (space == "auto" && input_dim(model->model) == 2)) {
      h->grid = scan_input_space(model->model, train->ds.x, opts);
    } else if (space == "latent" || space == "auto") {
      h->grid = scan_latent_space(model->model, train->ds.x, opts);
    } else {
      fail(ErrorKind::InputDomain, "space must be auto, input or latent");
    }
    const ScoreTable table = score(model->model, train->ds);
    attach_verdicts(h->grid, model->model, table);
    h->min_normal_score = table.min_normal_score;
    *out = h.release();
  });
}

aeaudit_status aeaudit_audit_summary(const aeaudit_audit* audit, int* finding,
                                     size_t* region_count, size_t* nx, size_t* ny) {
  AEAUDIT_REQUIRE(audit);
  if (finding) *finding = audit->grid.has_finding() ? 1 : 0;
  if (region_count) *region_count = audit->grid.regions.size();
  if (nx) *nx = audit->grid.nx;
  if (ny) *ny = audit->grid.ny;
  return AEAUDIT_OK;
}

aeaudit_status aeaudit_audit_loss(const aeaudit_audit* audit, size_t i, size_t j, double* loss) {
  AEAUDIT_REQUIRE(audit);
  AEAUDIT_REQUIRE(loss);
  return guarded([&] {
    if (i >= audit->grid.ny || j >= audit->grid.nx) fail(ErrorKind::InputDomain, "cell out of range");
    *loss = audit->grid.losses(i, j);
  });
}

aeaudit_status aeaudit_audit_min_point(const aeaudit_audit* audit, double point[2], double* loss) {
  AEAUDIT_REQUIRE(audit);
  AEAUDIT_REQUIRE(point);
  const AuditGrid& g = audit->grid;
  std::size_t bi = 0, bj = 0;
  for (std::size_t i = 0; i < g.ny; ++i)
    for (std::size_t j = 0; j < g.nx; ++j)
      if (g.losses(i, j) < g.losses(bi, bj)) {
        bi = i;
        bj = j;
      }
  point[0] = g.x(bj);
  point[1] = g.y(bi);
  if (loss) *loss = g.losses(bi, bj);
  return AEAUDIT_OK;
}

aeaudit_status aeaudit_audit_report_json(const aeaudit_audit* audit, const char* model_file,
                                         uint64_t seed, char** out) {
  AEAUDIT_REQUIRE(audit);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    const AuditReport r =
        make_audit_report(audit->grid, model_file ? model_file : "", seed, audit->min_normal_score);
    *out = dup_string(audit_report_to_json(r));
  });
}

aeaudit_status aeaudit_audit_write_grid_csv(const aeaudit_audit* audit, const char* path) {
  AEAUDIT_REQUIRE(audit);
  AEAUDIT_REQUIRE(path);
  return guarded([&] { write_grid_csv(audit->grid, path); });
}

aeaudit_status aeaudit_audit_write_svg(const aeaudit_audit* audit, const char* path) {
  AEAUDIT_REQUIRE(audit);
  AEAUDIT_REQUIRE(path);
  return guarded([&] { render_heatmap(audit->grid, path); });
}

void aeaudit_audit_free(aeaudit_audit* audit) { delete audit; }

// ---- adversarial anomalies

aeaudit_status aeaudit_attack(const aeaudit_model* model, const aeaudit_dataset* train,
                              const char* options_json, aeaudit_adversary** out) {
  AEAUDIT_REQUIRE(model);
  AEAUDIT_REQUIRE(train);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    const json o = parse_options(options_json);
    reject_unknown(o, {"method", "delta", "steps", "step_size", "restarts", "seed", "z", "max_angle"});
    const std::string method = o.value("method", std::string("analytic"));
    const Matrix& x = train->ds.x;
    if (x.cols() != input_dim(model->model)) {
      fail(ErrorKind::ShapeMismatch, "training data width does not match the model input");
    }
    auto h = std::make_unique<aeaudit_adversary>();
    if (method == "analytic") {
      const double delta = o.value("delta", 1.0);
      if (const auto* pca = std::get_if<PcaModel>(&model->model)) {
        h->result = construct_pca_adversary(*pca, x, delta);
      } else {
        const auto& ae = std::get<AutoencoderModel>(model->model);
        if (!ae.is_linear()) {
          fail(ErrorKind::InputDomain,
               "the analytic construction only applies to PCA and all-linear autoencoders; "
               "use --method pgd or --method latent for non-linear models");
        }
        h->result = construct_linear_ae_adversary(ae, x, delta, o.value("max_angle", 1e-2));
      }
    } else if (method == "pgd") {
      PgdOptions p;
      p.delta = o.value("delta", p.delta);
      p.steps = o.value("steps", p.steps);
      p.step_size = o.value("step_size", p.step_size);
      p.restarts = o.value("restarts", p.restarts);
      p.seed = o.value("seed", p.seed);
      h->result = pgd_adversary(network_view(model->model), x, p);
    } else if (method == "latent") {
      if (!o.contains("z")) fail(ErrorKind::InputDomain, "latent method needs a latent point z");
      const auto z = o["z"].get<std::vector<double>>();
      if (z.size() != latent_dim(model->model)) {
        fail(ErrorKind::ShapeMismatch, "z has " + std::to_string(z.size()) +
                                           " entries, model latent dimension is " +
                                           std::to_string(latent_dim(model->model)));
      }
      h->result = latent_decode_adversary(network_view(model->model), z, x);
    } else {
      fail(ErrorKind::InputDomain, "method must be analytic, pgd or latent");
    }
    *out = h.release();
  });
}

aeaudit_status aeaudit_adversary_json(const aeaudit_adversary* adv,
                                      const aeaudit_scores* train_scores, char** out) {
  AEAUDIT_REQUIRE(adv);
  AEAUDIT_REQUIRE(out);
  return guarded([&] {
    json j = json::parse(adversary_to_json(adv->result));
    if (train_scores) {
      const Verdict v = verdict_for_score(adv->result.loss, train_scores->table,
                                          rounding_floor(adv->result.a, train_scores->table.convention));
      j["verdict"] = {{"undetected", v.undetected},
                      {"score", v.score},
                      {"min_normal_score", v.min_normal_score},
                      {"margin", v.margin},
                      {"ratio", v.ratio ? json(*v.ratio) : json(nullptr)}};
    }
    *out = dup_string(j.dump(2) + "\n");
  });
}

aeaudit_status aeaudit_adversary_point(const aeaudit_adversary* adv, double* out, size_t len,
                                       double* loss, double* min_dist, int* found) {
  AEAUDIT_REQUIRE(adv);
  return guarded([&] {
    if (out) {
      if (len != adv->result.a.size()) fail(ErrorKind::ShapeMismatch, "output length mismatch");
      std::copy(adv->result.a.begin(), adv->result.a.end(), out);
    }
    if (loss) *loss = adv->result.loss;
    if (min_dist) *min_dist = adv->result.min_dist_to_train;
    if (found) *found = adv->result.found ? 1 : 0;
  });
}

aeaudit_status aeaudit_adversary_write_pgm(const aeaudit_adversary* adv, const aeaudit_model* model,
                                           const char* path) {
  AEAUDIT_REQUIRE(adv);
  AEAUDIT_REQUIRE(model);
  AEAUDIT_REQUIRE(path);
  return guarded([&] {
    const auto* ae = std::get_if<AutoencoderModel>(&model->model);
    if (!ae || ae->input_shape.c != 1 || ae->input_shape.h < 2) {
      fail(ErrorKind::InputDomain, "PGM export needs a single-channel image model");
    }
    write_pgm(adv->result.a, ae->input_shape.h, ae->input_shape.w, path);
  });
}

void aeaudit_adversary_free(aeaudit_adversary* adv) { delete adv; }

}  // extern "C"
