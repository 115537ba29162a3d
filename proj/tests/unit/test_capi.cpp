#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "aeaudit/aeaudit.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Deleter {
  void operator()(aeaudit_dataset* p) const { aeaudit_dataset_free(p); }
  void operator()(aeaudit_model* p) const { aeaudit_model_free(p); }
  void operator()(aeaudit_scores* p) const { aeaudit_scores_free(p); }
  void operator()(aeaudit_audit* p) const { aeaudit_audit_free(p); }
  void operator()(aeaudit_adversary* p) const { aeaudit_adversary_free(p); }
  void operator()(char* p) const { aeaudit_string_free(p); }
};
template <class T>
using Owned = std::unique_ptr<T, Deleter>;

std::string take(char* s) {
  Owned<char> hold(s);
  return s ? std::string(s) : std::string();
}

Owned<aeaudit_dataset> diagonal_dataset(std::size_t m) {
  std::vector<double> data;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = double(i) / double(m - 1);
    data.push_back(a);
    data.push_back(a);
  }
  aeaudit_dataset* ds = nullptr;
  EXPECT_EQ(aeaudit_dataset_from_array(data.data(), m, 2, &ds), AEAUDIT_OK);
  return Owned<aeaudit_dataset>(ds);
}

}  // namespace

TEST(CApi, VersionAndStatusStrings) {
  EXPECT_GT(std::strlen(aeaudit_version()), 0u);
  for (int s = AEAUDIT_OK; s <= AEAUDIT_ERR_INTERNAL; ++s)
    EXPECT_GT(std::strlen(aeaudit_status_string(aeaudit_status(s))), 0u);
  EXPECT_STRNE(aeaudit_status_string(AEAUDIT_ERR_IO), aeaudit_status_string(AEAUDIT_ERR_FORMAT));
}

TEST(CApi, NullArgumentsAreRejected) {
  aeaudit_dataset* ds = nullptr;
  EXPECT_EQ(aeaudit_dataset_generate(nullptr, &ds, nullptr), AEAUDIT_ERR_NULL_ARG);
  EXPECT_EQ(aeaudit_dataset_generate("{}", nullptr, nullptr), AEAUDIT_ERR_NULL_ARG);
  EXPECT_GT(std::strlen(aeaudit_last_error()), 0u);
  size_t r, c;
  EXPECT_EQ(aeaudit_dataset_shape(nullptr, &r, &c), AEAUDIT_ERR_NULL_ARG);
  aeaudit_model* m = nullptr;
  EXPECT_EQ(aeaudit_model_mlp(nullptr, 3, "relu", 0, &m), AEAUDIT_ERR_NULL_ARG);
  EXPECT_EQ(aeaudit_score(nullptr, nullptr, nullptr, nullptr), AEAUDIT_ERR_NULL_ARG);
  EXPECT_EQ(aeaudit_audit_run(nullptr, nullptr, nullptr, nullptr), AEAUDIT_ERR_NULL_ARG);
  // Freeing NULL is a no-op.
  aeaudit_dataset_free(nullptr);
  aeaudit_model_free(nullptr);
  aeaudit_scores_free(nullptr);
  aeaudit_audit_free(nullptr);
  aeaudit_adversary_free(nullptr);
  aeaudit_string_free(nullptr);
}

TEST(CApi, ErrorKindsMapToDistinctCodes) {
  aeaudit_dataset* ds = nullptr;
  EXPECT_EQ(aeaudit_dataset_generate("{not json", &ds, nullptr), AEAUDIT_ERR_FORMAT);
  EXPECT_EQ(aeaudit_dataset_generate(R"({"family":"spiral"})", &ds, nullptr), AEAUDIT_ERR_INPUT_DOMAIN);
  EXPECT_NE(std::string(aeaudit_last_error()).find("spiral"), std::string::npos);
  EXPECT_EQ(aeaudit_dataset_load_csv("/nonexistent/x.csv", 1, &ds), AEAUDIT_ERR_IO);
  EXPECT_EQ(ds, nullptr);
  aeaudit_model* m = nullptr;
  const size_t bad[] = {2, 3};
  EXPECT_EQ(aeaudit_model_mlp(bad, 2, "relu", 0, &m), AEAUDIT_ERR_INPUT_DOMAIN);
  const size_t sizes[] = {3, 2, 3};
  ASSERT_EQ(aeaudit_model_mlp(sizes, 3, "linear", 0, &m), AEAUDIT_OK);
  Owned<aeaudit_model> model(m);
  auto two = diagonal_dataset(5);
  aeaudit_scores* sc = nullptr;
  EXPECT_EQ(aeaudit_score(model.get(), two.get(), nullptr, &sc), AEAUDIT_ERR_SHAPE_MISMATCH);
  aeaudit_audit* au = nullptr;
  EXPECT_EQ(aeaudit_audit_run(model.get(), two.get(), R"({"space":"input"})", &au), AEAUDIT_ERR_UNSUPPORTED_DIMENSION);
  EXPECT_EQ(aeaudit_audit_run(model.get(), two.get(), R"({"colour":1})", &au), AEAUDIT_ERR_FORMAT);
}

TEST(CApi, DatasetRoundTrip) {
  aeaudit_dataset* raw = nullptr;
  char* resolved = nullptr;
  ASSERT_EQ(aeaudit_dataset_generate(R"({"family":"banana","samples_per_component":25,"seed":3,"noise":0})",
                                     &raw, &resolved),
            AEAUDIT_OK);
  Owned<aeaudit_dataset> ds(raw);
  EXPECT_EQ(json::parse(take(resolved))["family"], "banana");
  size_t r = 0, c = 0;
  ASSERT_EQ(aeaudit_dataset_shape(ds.get(), &r, &c), AEAUDIT_OK);
  EXPECT_EQ(r, 25u);
  EXPECT_EQ(c, 2u);
  double row[2];
  ASSERT_EQ(aeaudit_dataset_row(ds.get(), 4, row, 2), AEAUDIT_OK);
  EXPECT_EQ(row[1], row[0] * row[0]);
  EXPECT_EQ(aeaudit_dataset_row(ds.get(), 25, row, 2), AEAUDIT_ERR_INPUT_DOMAIN);
  EXPECT_NE(aeaudit_dataset_row(ds.get(), 0, row, 1), AEAUDIT_OK);
  const fs::path p = fs::temp_directory_path() / "aeaudit_capi_ds.csv";
  ASSERT_EQ(aeaudit_dataset_save_csv(ds.get(), p.c_str()), AEAUDIT_OK);
  aeaudit_dataset* back = nullptr;
  ASSERT_EQ(aeaudit_dataset_load_csv(p.c_str(), 1, &back), AEAUDIT_OK);
  Owned<aeaudit_dataset> hold(back);
  double row2[2];
  aeaudit_dataset_row(back, 4, row2, 2);
  EXPECT_EQ(row2[0], row[0]);
  EXPECT_EQ(row2[1], row[1]);
}

TEST(CApi, PcaPipelineFindsAndAttacksTheDiagonal) {
  auto ds = diagonal_dataset(40);
  aeaudit_model* m = nullptr;
  ASSERT_EQ(aeaudit_model_fit_pca(ds.get(), 1, &m), AEAUDIT_OK);
  Owned<aeaudit_model> model(m);
  aeaudit_model_info info{};
  ASSERT_EQ(aeaudit_model_get_info(model.get(), &info), AEAUDIT_OK);
  EXPECT_EQ(info.input_dim, 2u);
  EXPECT_EQ(info.latent_dim, 1u);
  EXPECT_TRUE(info.is_pca);

  const double x[2] = {3.0, 3.0};
  double xr[2], z[1];
  ASSERT_EQ(aeaudit_model_reconstruct(model.get(), x, 2, xr), AEAUDIT_OK);
  EXPECT_NEAR(xr[0], 3.0, 1e-12);
  ASSERT_EQ(aeaudit_model_encode(model.get(), x, 2, z, 1), AEAUDIT_OK);
  ASSERT_EQ(aeaudit_model_decode(model.get(), z, 1, xr, 2), AEAUDIT_OK);
  EXPECT_NEAR(xr[1], 3.0, 1e-12);
  EXPECT_EQ(aeaudit_model_encode(model.get(), x, 2, z, 2), AEAUDIT_ERR_SHAPE_MISMATCH);

  aeaudit_scores* s = nullptr;
  ASSERT_EQ(aeaudit_score(model.get(), ds.get(), "mean", &s), AEAUDIT_OK);
  Owned<aeaudit_scores> scores(s);
  size_t count;
  double lo, hi;
  ASSERT_EQ(aeaudit_scores_summary(scores.get(), &count, &lo, &hi), AEAUDIT_OK);
  EXPECT_EQ(count, 40u);
  std::vector<double> values(40);
  ASSERT_EQ(aeaudit_scores_values(scores.get(), values.data(), 40), AEAUDIT_OK);
  EXPECT_EQ(*std::min_element(values.begin(), values.end()), lo);

  aeaudit_audit* a = nullptr;
  ASSERT_EQ(aeaudit_audit_run(model.get(), ds.get(), R"({"nx":21,"ny":21,"epsilon":0.05,"bounds":[-3,3,-3,3]})", &a),
            AEAUDIT_OK);
  Owned<aeaudit_audit> audit(a);
  int finding = 0;
  size_t regions, nx, ny;
  ASSERT_EQ(aeaudit_audit_summary(audit.get(), &finding, &regions, &nx, &ny), AEAUDIT_OK);
  EXPECT_EQ(finding, 1);
  EXPECT_EQ(nx, 21u);
  double loss;
  ASSERT_EQ(aeaudit_audit_loss(audit.get(), 20, 0, &loss), AEAUDIT_OK);
  EXPECT_NEAR(loss, 36.0 / 4.0, 1e-12);
  EXPECT_EQ(aeaudit_audit_loss(audit.get(), 21, 0, &loss), AEAUDIT_ERR_INPUT_DOMAIN);
  double pt[2];
  ASSERT_EQ(aeaudit_audit_min_point(audit.get(), pt, &loss), AEAUDIT_OK);
  EXPECT_EQ(pt[0], pt[1]);
  char* rep = nullptr;
  ASSERT_EQ(aeaudit_audit_report_json(audit.get(), "m.json", 3, &rep), AEAUDIT_OK);
  const json report = json::parse(take(rep));
  EXPECT_EQ(report["finding"], true);
  EXPECT_EQ(report["seed"], 3);

  aeaudit_adversary* adv = nullptr;
  ASSERT_EQ(aeaudit_attack(model.get(), ds.get(), R"({"method":"analytic","delta":4})", &adv), AEAUDIT_OK);
  Owned<aeaudit_adversary> attack(adv);
  double ap[2], aloss, dist;
  int found;
  ASSERT_EQ(aeaudit_adversary_point(attack.get(), ap, 2, &aloss, &dist, &found), AEAUDIT_OK);
  EXPECT_EQ(found, 1);
  EXPECT_GT(dist, 4.0);
  aeaudit_verdict v{};
  ASSERT_EQ(aeaudit_verdict_for(model.get(), scores.get(), ap, 2, &v), AEAUDIT_OK);
  EXPECT_EQ(v.undetected, 1);
  char* aj = nullptr;
  ASSERT_EQ(aeaudit_adversary_json(attack.get(), scores.get(), &aj), AEAUDIT_OK);
  const json advj = json::parse(take(aj));
  EXPECT_EQ(advj["method"], "analytic_pca");
  EXPECT_EQ(advj["verdict"]["undetected"], true);
}

TEST(CApi, TrainingCallbacksAndReport) {
  aeaudit_dataset* raw = nullptr;
  ASSERT_EQ(aeaudit_dataset_generate(R"({"samples_per_component":30})", &raw, nullptr), AEAUDIT_OK);
  Owned<aeaudit_dataset> ds(raw);
  const size_t sizes[] = {2, 4, 1, 4, 2};
  aeaudit_model* m = nullptr;
  ASSERT_EQ(aeaudit_model_mlp(sizes, 5, "relu", 1, &m), AEAUDIT_OK);
  Owned<aeaudit_model> model(m);
  struct Counts {
    int logs = 0, checkpoints = 0;
  } counts;
  char* report = nullptr;
  ASSERT_EQ(aeaudit_train(model.get(), ds.get(), R"({"epochs":6,"loss_log_interval":2,"checkpoint_every":3})",
                          [](const char*, void* u) { ++static_cast<Counts*>(u)->logs; },
                          [](size_t, const aeaudit_model* snap, void* u) {
                            aeaudit_model_info info{};
                            if (aeaudit_model_get_info(snap, &info) == AEAUDIT_OK) ++static_cast<Counts*>(u)->checkpoints;
                          },
                          &counts, &report),
            AEAUDIT_OK);
  EXPECT_EQ(counts.logs, 3);
  EXPECT_EQ(counts.checkpoints, 2);
  EXPECT_EQ(json::parse(take(report))["epoch_losses"].size(), 6u);
  EXPECT_EQ(aeaudit_train(model.get(), ds.get(), R"({"epochz":6})", nullptr, nullptr, nullptr, nullptr),
            AEAUDIT_ERR_FORMAT);
  char* cfg = nullptr;
  ASSERT_EQ(aeaudit_train_config_default(&cfg), AEAUDIT_OK);
  EXPECT_EQ(json::parse(take(cfg))["epochs"], 2000);
}

TEST(CApi, ModelFilesAndAnalyticRefusalOnNonlinear) {
  const size_t sizes[] = {2, 3, 1, 3, 2};
  aeaudit_model* m = nullptr;
  ASSERT_EQ(aeaudit_model_mlp(sizes, 5, "relu", 2, &m), AEAUDIT_OK);
  Owned<aeaudit_model> model(m);
  const fs::path p = fs::temp_directory_path() / "aeaudit_capi_model.json";
  ASSERT_EQ(aeaudit_model_save(model.get(), p.c_str()), AEAUDIT_OK);
  aeaudit_model* back = nullptr;
  ASSERT_EQ(aeaudit_model_load(p.c_str(), &back), AEAUDIT_OK);
  Owned<aeaudit_model> hold(back);
  const double x[2] = {0.3, -1.2};
  double r1[2], r2[2];
  aeaudit_model_reconstruct(model.get(), x, 2, r1);
  aeaudit_model_reconstruct(back, x, 2, r2);
  EXPECT_EQ(r1[0], r2[0]);
  EXPECT_EQ(r1[1], r2[1]);
  auto ds = diagonal_dataset(10);
  aeaudit_adversary* adv = nullptr;
  EXPECT_EQ(aeaudit_attack(model.get(), ds.get(), R"({"method":"analytic"})", &adv), AEAUDIT_ERR_INPUT_DOMAIN);
  EXPECT_EQ(aeaudit_model_load("/nonexistent.json", &back), AEAUDIT_ERR_IO);
  aeaudit_model* preset = nullptr;
  ASSERT_EQ(aeaudit_model_preset("mnist-conv2", 0, 1, &preset), AEAUDIT_OK);
  Owned<aeaudit_model> conv(preset);
  aeaudit_model_info info{};
  aeaudit_model_get_info(preset, &info);
  EXPECT_EQ(info.height, 28u);
  EXPECT_EQ(info.latent_dim, 2u);
  EXPECT_EQ(aeaudit_model_preset("resnet", 0, 1, &preset), AEAUDIT_ERR_INPUT_DOMAIN);
}

TEST(CApi, LastErrorIsPerThread) {
  aeaudit_dataset* ds = nullptr;
  aeaudit_dataset_generate("{bad", &ds, nullptr);
  const std::string here = aeaudit_last_error();
  std::string there;
  std::thread([&] { there = aeaudit_last_error(); }).join();
  EXPECT_FALSE(here.empty());
  EXPECT_TRUE(there.empty());
}
