// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aeaudit/aeaudit.h"
#include "json.hpp"

#ifndef AEAUDIT_DEFAULT_MNIST_DIR
#define AEAUDIT_DEFAULT_MNIST_DIR "data/mnist"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitFinding = 3;

struct CommandFailed {
  int code;
};

int exit_code_for(aeaudit_status s) {
  switch (s) {
    case AEAUDIT_OK: return kExitOk;
    case AEAUDIT_ERR_NUMERICAL:
    case AEAUDIT_ERR_TRAINING:
    case AEAUDIT_ERR_DEGENERATE_BASIS:
    case AEAUDIT_ERR_INTERNAL: return kExitInternal;
    default: return kExitUsage;
  }
}

void check(aeaudit_status s, const std::string& what) {
  if (s == AEAUDIT_OK) return;
  std::cerr << "error: " << what << ": " << aeaudit_last_error() << " ["
            << aeaudit_status_string(s) << "]\n";
  throw CommandFailed{exit_code_for(s)};
}

[[noreturn]] void usage_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  throw CommandFailed{kExitUsage};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DatasetPtr = std::unique_ptr<aeaudit_dataset, Deleter<aeaudit_dataset, aeaudit_dataset_free>>;
using ModelPtr = std::unique_ptr<aeaudit_model, Deleter<aeaudit_model, aeaudit_model_free>>;
using ScoresPtr = std::unique_ptr<aeaudit_scores, Deleter<aeaudit_scores, aeaudit_scores_free>>;
using AuditPtr = std::unique_ptr<aeaudit_audit, Deleter<aeaudit_audit, aeaudit_audit_free>>;
using AdversaryPtr =
    std::unique_ptr<aeaudit_adversary, Deleter<aeaudit_adversary, aeaudit_adversary_free>>;

std::string take_string(char* s) {
  std::string out = s ? s : "";
  aeaudit_string_free(s);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) usage_error("cannot write " + path.string());
  out << text;
  if (!out) usage_error("failed writing " + path.string());
}

void ensure_parent(const fs::path& path) {
  const fs::path dir = path.parent_path();
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) usage_error("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// JSON config: top-level keys name options of the invoked subcommand
// (dashes or underscores), or an object keyed by subcommand name.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<std::string> active;
    for (const CLI::App* sub : root_->get_subcommands()) active.push_back(sub->get_name());

    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        for (const auto& [k, v] : value.items()) items.push_back(item({key}, k, v));
      } else {
        items.push_back(item(active, key, value));
      }
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static CLI::ConfigItem item(std::vector<std::string> parents, std::string name, const json& v) {
    for (char& c : name)
      if (c == '_') c = '-';
    CLI::ConfigItem it;
    it.parents = std::move(parents);
    it.name = std::move(name);
    if (v.is_array()) {
      std::string joined;
      for (std::size_t i = 0; i < v.size(); ++i) joined += (i ? "," : "") + scalar(v[i]);
      it.inputs = {joined};
    } else {
      it.inputs = {scalar(v)};
    }
    return it;
  }

  const CLI::App* root_;
};

// ------------------------------------------------------- data options

struct DataOptions {
  std::string csv;
  bool no_header = false;
  std::string mnist_images;
  std::string mnist_labels;
  std::vector<int> digits;
  std::size_t max_per_digit = 0;
};

void add_data_options(CLI::App* cmd, DataOptions& d, const std::string& flag = "--data") {
  cmd->add_option(flag, d.csv, "Training data CSV");
  cmd->add_flag("--no-header", d.no_header, "CSV has no header row");
  cmd->add_option("--mnist-images", d.mnist_images, "IDX image file");
  cmd->add_option("--mnist-labels", d.mnist_labels, "IDX label file");
  cmd->add_option("--digits", d.digits, "Digits to keep, e.g. 0,1")->delimiter(',');
  cmd->add_option("--max-per-digit", d.max_per_digit, "Cap per digit (0 = no cap)");
}

bool wants_mnist(const DataOptions& d) {
  return d.csv.empty() && (!d.mnist_images.empty() || !d.digits.empty());
}

DatasetPtr load_data(const DataOptions& d, std::size_t default_cap = 0) {
  aeaudit_dataset* ds = nullptr;
  if (!d.csv.empty()) {
    check(aeaudit_dataset_load_csv(d.csv.c_str(), d.no_header ? 0 : 1, &ds), "loading " + d.csv);
  } else if (wants_mnist(d)) {
    const std::string images =
        d.mnist_images.empty() ? AEAUDIT_DEFAULT_MNIST_DIR "/mnist5k-images-idx3-ubyte" : d.mnist_images;
    const std::string labels =
        d.mnist_labels.empty() ? AEAUDIT_DEFAULT_MNIST_DIR "/mnist5k-labels-idx1-ubyte" : d.mnist_labels;
    const std::size_t cap = d.max_per_digit ? d.max_per_digit : default_cap;
    check(aeaudit_dataset_load_mnist(images.c_str(), labels.c_str(),
                                     d.digits.empty() ? nullptr : d.digits.data(), d.digits.size(),
                                     cap, &ds),
          "loading MNIST " + images);
  } else {
    usage_error("no data given: use --data FILE.csv or --mnist-images/--digits");
  }
  return DatasetPtr(ds);
}

ModelPtr load_model_file(const std::string& path) {
  aeaudit_model* m = nullptr;
  check(aeaudit_model_load(path.c_str(), &m), "loading model " + path);
  return ModelPtr(m);
}

aeaudit_model_info info_of(const aeaudit_model* m) {
  aeaudit_model_info info{};
  check(aeaudit_model_get_info(m, &info), "model info");
  return info;
}

// ------------------------------------------------------------ gen-data

struct GenArgs {
  std::string family = "gaussian";
  std::size_t n = 100;
  std::uint64_t seed = 0;
  std::optional<double> noise, x_lo, x_hi, alpha_lo, alpha_hi;
  std::string out;
};

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".spec.json");
  return p;
}

int run_gen_data(const GenArgs& a) {
  json spec = {{"family", a.family}, {"samples_per_component", a.n}, {"seed", a.seed}};
  if (a.noise) spec["noise"] = *a.noise;
  if (a.x_lo) spec["x_lo"] = *a.x_lo;
  if (a.x_hi) spec["x_hi"] = *a.x_hi;
  if (a.alpha_lo) spec["alpha_lo"] = *a.alpha_lo;
  if (a.alpha_hi) spec["alpha_hi"] = *a.alpha_hi;

  aeaudit_dataset* raw = nullptr;
  char* resolved = nullptr;
  check(aeaudit_dataset_generate(spec.dump().c_str(), &raw, &resolved), "invalid dataset spec");
  DatasetPtr ds(raw);
  const std::string resolved_text = take_string(resolved);

  ensure_parent(a.out);
  check(aeaudit_dataset_save_csv(ds.get(), a.out.c_str()), "writing " + a.out);
  const fs::path side = sidecar_path(a.out);
  write_text(side, resolved_text);
  std::size_t rows = 0, cols = 0;
  aeaudit_dataset_shape(ds.get(), &rows, &cols);
  std::cout << "wrote " << a.out << " (" << rows << " rows, " << cols << " columns) and "
            << side.string() << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- train

struct TrainArgs {
  DataOptions data;
  std::vector<std::size_t> arch;
  std::string act = "relu";
  std::string preset;
  std::size_t latent = 2;
  std::size_t pca = 0;
  std::optional<std::size_t> epochs, batch_size;
  bool full_batch = false;
  std::optional<double> lr;
  std::string optimizer;
  std::uint64_t seed = 0;
  bool standardize = false;
  std::size_t checkpoint_every = 0;
  std::size_t log_every = 0;
  std::string out = "model.json";
  std::string report;
};

struct CheckpointCtx {
  fs::path stem;
  int failures = 0;
};

void on_checkpoint(size_t epoch, const aeaudit_model* snapshot, void* user) {
  auto* ctx = static_cast<CheckpointCtx*>(user);
  const fs::path path = ctx->stem.string() + ".epoch" + std::to_string(epoch) + ".json";
  if (aeaudit_model_save(snapshot, path.string().c_str()) != AEAUDIT_OK) ++ctx->failures;
}

void on_log(const char* line, void*) { std::cerr << line << "\n"; }

int run_train(const TrainArgs& a) {
  const int modes = (!a.arch.empty()) + (!a.preset.empty()) + (a.pca > 0);
  if (modes != 1) usage_error("give exactly one of --arch, --preset or --pca");

  // The conv preset defaults to at most 1000 images per digit.
  DatasetPtr ds = load_data(a.data, a.preset.empty() ? 0 : 1000);
  ensure_parent(a.out);
  const fs::path report_path =
      a.report.empty() ? fs::path(a.out).parent_path() / "report.json" : fs::path(a.report);

  if (a.pca > 0) {
    aeaudit_model* m = nullptr;
    check(aeaudit_model_fit_pca(ds.get(), a.pca, &m), "fitting PCA");
    ModelPtr model(m);
    check(aeaudit_model_save(model.get(), a.out.c_str()), "writing " + a.out);
    const json report = {{"kind", "pca"}, {"latent_dim", a.pca}, {"seed", a.seed}};
    write_text(report_path, report.dump(2) + "\n");
    std::cout << "wrote " << a.out << " and " << report_path.string() << "\n";
    return kExitOk;
  }

  aeaudit_model* m = nullptr;
  if (!a.preset.empty()) {
    check(aeaudit_model_preset(a.preset.c_str(), a.latent, a.seed, &m), "building preset");
  } else {
    check(aeaudit_model_mlp(a.arch.data(), a.arch.size(), a.act.c_str(), a.seed, &m),
          "bad architecture");
  }
  ModelPtr model(m);

  json cfg = {{"seed", a.seed}};
  if (!a.preset.empty()) cfg["epochs"] = 20;
  if (a.epochs) cfg["epochs"] = *a.epochs;
  if (a.batch_size) cfg["batch_size"] = *a.batch_size;
  if (a.full_batch) cfg["full_batch"] = true;
  if (a.lr) cfg["learning_rate"] = *a.lr;
  if (!a.optimizer.empty()) cfg["optimizer"] = a.optimizer;
  if (a.standardize) cfg["standardize"] = true;
  if (a.checkpoint_every) cfg["checkpoint_every"] = a.checkpoint_every;
  if (a.log_every) cfg["loss_log_interval"] = a.log_every;

  CheckpointCtx ctx{fs::path(a.out).replace_extension("")};
  char* report = nullptr;
  check(aeaudit_train(model.get(), ds.get(), cfg.dump().c_str(), a.log_every ? on_log : nullptr,
                      a.checkpoint_every ? on_checkpoint : nullptr, &ctx, &report),
        "training");
  const std::string report_text = take_string(report);
  if (ctx.failures) usage_error("failed to write " + std::to_string(ctx.failures) + " checkpoint(s)");
  check(aeaudit_model_save(model.get(), a.out.c_str()), "writing " + a.out);
  write_text(report_path, report_text);
  const json r = json::parse(report_text);
  std::cout << "final loss " << fmt(r.value("final_loss", 0.0)) << "; wrote " << a.out << " and "
            << report_path.string() << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- audit

struct AuditArgs {
  std::string model;
  DataOptions data;
  std::string space = "auto";
  std::size_t resolution = 200;
  std::optional<std::size_t> nx, ny;
  double epsilon = 0.1;
  std::optional<double> far_threshold;
  std::vector<double> bounds;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

int run_audit(const AuditArgs& a) {
  ModelPtr model = load_model_file(a.model);
  DatasetPtr ds = load_data(a.data);
  json opts = {{"space", a.space},
               {"nx", a.nx.value_or(a.resolution)},
               {"ny", a.ny.value_or(a.resolution)},
               {"epsilon", a.epsilon}};
  if (a.far_threshold) opts["far_threshold"] = *a.far_threshold;
  if (!a.bounds.empty()) opts["bounds"] = a.bounds;

  aeaudit_audit* raw = nullptr;
  check(aeaudit_audit_run(model.get(), ds.get(), opts.dump().c_str(), &raw), "audit");
  AuditPtr audit(raw);

  const fs::path dir(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) usage_error("cannot create " + dir.string());
  const fs::path grid = dir / "grid.csv", report = dir / "audit.json", svg = dir / "heatmap.svg";
  check(aeaudit_audit_write_grid_csv(audit.get(), grid.string().c_str()), "writing grid");
  check(aeaudit_audit_write_svg(audit.get(), svg.string().c_str()), "writing heatmap");
  char* text = nullptr;
  check(aeaudit_audit_report_json(audit.get(), a.model.c_str(), a.seed, &text), "report");
  write_text(report, take_string(text));

  int finding = 0;
  std::size_t regions = 0, nx = 0, ny = 0;
  aeaudit_audit_summary(audit.get(), &finding, &regions, &nx, &ny);
  std::cout << "grid " << nx << "x" << ny << ", " << regions << " sub-epsilon region(s), "
            << (finding ? "out-of-bounds finding" : "no out-of-bounds finding") << "\n"
            << "wrote " << grid.string() << ", " << report.string() << ", " << svg.string() << "\n";
  return finding ? kExitFinding : kExitOk;
}

// -------------------------------------------------------------- attack

struct AttackArgs {
  std::string model;
  DataOptions data;
  std::string method = "analytic";
  double delta = 1.0;
  std::size_t steps = 500;
  double step_size = 1e-2;
  std::size_t restarts = 10;
  std::uint64_t seed = 0;
  std::vector<double> z;
  std::string out = "adversary.json";
  std::string pgm;
};

int run_attack(const AttackArgs& a) {
  ModelPtr model = load_model_file(a.model);
  DatasetPtr ds = load_data(a.data);
  json opts = {{"method", a.method}};
  if (a.method == "latent") {
    if (a.z.empty()) usage_error("--method latent needs --z");
    opts["z"] = a.z;
  } else {
    opts["delta"] = a.delta;
  }
  if (a.method == "pgd") {
    opts["steps"] = a.steps;
    opts["step_size"] = a.step_size;
    opts["restarts"] = a.restarts;
    opts["seed"] = a.seed;
  }
  aeaudit_adversary* raw = nullptr;
  check(aeaudit_attack(model.get(), ds.get(), opts.dump().c_str(), &raw), "attack");
  AdversaryPtr adv(raw);

  aeaudit_scores* sraw = nullptr;
  check(aeaudit_score(model.get(), ds.get(), nullptr, &sraw), "scoring training data");
  ScoresPtr scores(sraw);

  char* text = nullptr;
  check(aeaudit_adversary_json(adv.get(), scores.get(), &text), "exporting result");
  const std::string result_text = take_string(text);
  ensure_parent(a.out);
  write_text(a.out, result_text);

  const aeaudit_model_info info = info_of(model.get());
  std::string pgm = a.pgm;
  if (pgm.empty() && info.channels == 1 && info.height > 1) {
    pgm = fs::path(a.out).replace_extension(".pgm").string();
  }
  if (!pgm.empty()) check(aeaudit_adversary_write_pgm(adv.get(), model.get(), pgm.c_str()), "PGM export");

  const json r = json::parse(result_text);
  const bool found = r.at("found").get<bool>();
  const json& v = r.at("verdict");
  const bool undetected = v.at("undetected").get<bool>();
  std::cout << "method " << r.at("method").get<std::string>() << ", found " << (found ? "yes" : "no")
            << "\nloss " << fmt(r.at("loss").get<double>()) << ", min distance to training data "
            << fmt(r.at("min_dist_to_train").get<double>()) << "\nverdict: "
            << (undetected ? "undetected" : "detected") << ", margin "
            << fmt(v.at("margin").get<double>()) << " (min normal score "
            << fmt(v.at("min_normal_score").get<double>()) << ")\nwrote " << a.out
            << (pgm.empty() ? "" : " and " + pgm) << "\n";
  if (!found) return kExitOk;
  const bool far_enough = a.method == "latent" || r.at("min_dist_to_train").get<double>() > a.delta;
  return undetected && far_enough ? kExitFinding : kExitOk;
}

// --------------------------------------------------------------- score

struct ScoreArgs {
  std::string model;
  DataOptions data;
  std::string train;
  std::string convention = "mean";
  std::string out = "scores.csv";
};

int run_score(const ScoreArgs& a) {
  ModelPtr model = load_model_file(a.model);
  DatasetPtr ds = load_data(a.data);
  if (!a.train.empty()) aeaudit_dataset_set_role(ds.get(), 1);

  aeaudit_scores* raw = nullptr;
  check(aeaudit_score(model.get(), ds.get(), a.convention.c_str(), &raw), "scoring");
  ScoresPtr scores(raw);
  ensure_parent(a.out);
  check(aeaudit_scores_write_csv(scores.get(), a.out.c_str()), "writing " + a.out);

  std::size_t count = 0;
  double lo = 0.0, hi = 0.0;
  aeaudit_scores_summary(scores.get(), &count, &lo, &hi);
  std::cout << "scored " << count << " samples; min score " << fmt(lo) << ", max score " << fmt(hi)
            << "\nwrote " << a.out << "\n";

  if (!a.train.empty()) {
    DataOptions td;
    td.csv = a.train;
    td.no_header = a.data.no_header;
    DatasetPtr train = load_data(td);
    aeaudit_scores* traw = nullptr;
    check(aeaudit_score(model.get(), train.get(), a.convention.c_str(), &traw), "scoring reference");
    ScoresPtr tscores(traw);
    double tmin = 0.0, tmax = 0.0;
    aeaudit_scores_summary(tscores.get(), nullptr, &tmin, &tmax);
    std::cout << "reference min normal score " << fmt(tmin) << ", max " << fmt(tmax) << "\n";
    std::vector<double> values(count);
    check(aeaudit_scores_values(scores.get(), values.data(), values.size()), "reading scores");
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] <= tmin) {
        ++flagged;
        std::cout << "flagged row " << i << ": score " << fmt(values[i])
                  << " <= min normal score (undetectable by the worst-case criterion)\n";
      }
    }
    std::cout << flagged << " row(s) flagged\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruction-loss anomaly detectors and their blind spots"};
  app.require_subcommand(1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON file with option values (command-line flags take precedence)");
  app.set_version_flag("--version", std::string(aeaudit_version()));

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  c_gen->add_option("--family", gen.family, "gaussian, double_gaussian, banana or diagonal")
      ->capture_default_str();
  c_gen->add_option("--n", gen.n, "Samples per component")->capture_default_str();
  c_gen->add_option("--seed", gen.seed)->capture_default_str();
  c_gen->add_option("--noise", gen.noise, "banana noise level");
  c_gen->add_option("--x-lo", gen.x_lo, "banana x range");
  c_gen->add_option("--x-hi", gen.x_hi);
  c_gen->add_option("--alpha-lo", gen.alpha_lo, "diagonal alpha range");
  c_gen->add_option("--alpha-hi", gen.alpha_hi);
  c_gen->add_option("-o,--out", gen.out, "Output CSV")->required();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train an autoencoder or fit PCA");
  add_data_options(c_train, tr.data);
  c_train->add_option("--arch", tr.arch, "Layer sizes, e.g. 2,5,1,5,2")->delimiter(',');
  c_train->add_option("--act", tr.act, "Hidden activation: linear, relu or sigmoid")->capture_default_str();
  c_train->add_option("--preset", tr.preset, "Preset architecture (mnist-conv2)");
  c_train->add_option("--latent", tr.latent, "Latent size for presets")->capture_default_str();
  c_train->add_option("--pca", tr.pca, "Fit PCA with this many components instead");
  c_train->add_option("--epochs", tr.epochs);
  c_train->add_option("--batch-size", tr.batch_size);
  c_train->add_flag("--full-batch", tr.full_batch);
  c_train->add_option("--lr", tr.lr, "Learning rate");
  c_train->add_option("--optimizer", tr.optimizer, "adam or sgd");
  c_train->add_option("--seed", tr.seed)->capture_default_str();
  c_train->add_flag("--standardize", tr.standardize, "Standardize features (tabular data)");
  c_train->add_option("--checkpoint-every", tr.checkpoint_every, "Save a model every k epochs");
  c_train->add_option("--log-every", tr.log_every, "Print the loss every k epochs");
  c_train->add_option("-o,--out", tr.out, "Model file")->capture_default_str();
  c_train->add_option("--report", tr.report, "Training report (default: report.json next to the model)");

  AuditArgs au;
  auto* c_audit = app.add_subcommand("audit", "Scan input or latent space for low-loss regions");
  c_audit->add_option("--model", au.model)->required();
  add_data_options(c_audit, au.data);
  c_audit->add_option("--space", au.space, "auto, input or latent")->capture_default_str();
  c_audit->add_option("--resolution", au.resolution, "Grid points per axis")->capture_default_str();
  c_audit->add_option("--nx", au.nx);
  c_audit->add_option("--ny", au.ny);
  c_audit->add_option("--epsilon", au.epsilon)->capture_default_str();
  c_audit->add_option("--far-threshold", au.far_threshold);
  c_audit->add_option("--bounds", au.bounds, "xmin,xmax,ymin,ymax")->delimiter(',');
  c_audit->add_option("--seed", au.seed, "Recorded in the report")->capture_default_str();
  c_audit->add_option("--out-dir", au.out_dir)->capture_default_str();

  AttackArgs at;
  auto* c_attack = app.add_subcommand("attack", "Construct or search for an adversarial anomaly");
  c_attack->add_option("--model", at.model)->required();
  add_data_options(c_attack, at.data);
  c_attack->add_option("--method", at.method, "analytic, pgd or latent")->capture_default_str();
  c_attack->add_option("--delta", at.delta, "Distance floor to the training data")->capture_default_str();
  c_attack->add_option("--steps", at.steps)->capture_default_str();
  c_attack->add_option("--step-size", at.step_size)->capture_default_str();
  c_attack->add_option("--restarts", at.restarts)->capture_default_str();
  c_attack->add_option("--seed", at.seed)->capture_default_str();
  c_attack->add_option("--z", at.z, "Latent point, e.g. --z=-4.2,-5.2")->delimiter(',');
  c_attack->add_option("-o,--out", at.out)->capture_default_str();
  c_attack->add_option("--pgm", at.pgm, "PGM path for image models (default: next to --out)");

  ScoreArgs sc;
  auto* c_score = app.add_subcommand("score", "Score samples by reconstruction loss");
  c_score->add_option("--model", sc.model)->required();
  add_data_options(c_score, sc.data);
  c_score->add_option("--train", sc.train, "Training CSV; rows scoring at or below its minimum are flagged");
  c_score->add_option("--convention", sc.convention, "mean or sum")->capture_default_str();
  c_score->add_option("-o,--out", sc.out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_gen->parsed()) return run_gen_data(gen);
    if (c_train->parsed()) return run_train(tr);
    if (c_audit->parsed()) return run_audit(au);
    if (c_attack->parsed()) return run_attack(at);
    if (c_score->parsed()) return run_score(sc);
  } catch (const CommandFailed& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
