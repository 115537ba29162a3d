#include "aeaudit/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>

#include "aeaudit/error.hpp"
#include "aeaudit/training.hpp"
#include "json.hpp"

namespace aeaudit {

const char* to_string(LossConvention c) noexcept { return c == LossConvention::Sum ? "sum" : "mean"; }

LossConvention convention_from_string(const std::string& s) {
  if (s == "mean") return LossConvention::Mean;
  if (s == "sum") return LossConvention::Sum;
  fail(ErrorKind::InputDomain, "unknown loss convention '" + s + "'");
}

double anomaly_score(const Model& model, std::span<const double> x, LossConvention convention) {
  const Vector xhat = reconstruct(model, x);
  return convention == LossConvention::Sum ? reconstruction_loss_sum(x, xhat)
                                           : reconstruction_loss(x, xhat);
}

std::vector<double> ScoreTable::scores_by_index() const {
  std::vector<double> out(entries.size());
  for (const auto& e : entries) out.at(e.index) = e.score;
  return out;
}

ScoreTable score(const Model& model, const Dataset& data, LossConvention convention) {
  if (data.size() == 0) fail(ErrorKind::InputDomain, "score: empty dataset");
  if (data.dim() != input_dim(model)) {
    fail(ErrorKind::ShapeMismatch, "score: data has " + std::to_string(data.dim()) +
                                       " features, model expects " +
                                       std::to_string(input_dim(model)));
  }
  ScoreTable t;
  t.role = data.role;
  t.convention = convention;
  t.entries.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    ScoreEntry e;
    e.index = i;
    e.score = anomaly_score(model, data.x.row(i), convention);
    if (data.labels) e.label = (*data.labels)[i];
    t.entries.push_back(e);
  }
  std::stable_sort(t.entries.begin(), t.entries.end(),
                   [](const ScoreEntry& a, const ScoreEntry& b) { return a.score > b.score; });
  t.max_normal_score = t.entries.front().score;
  t.min_normal_score = t.entries.back().score;
  return t;
}

double rounding_floor(std::span<const double> a, LossConvention convention) {
  double amax = 1.0;
  for (double v : a) amax = std::max(amax, std::abs(v));
  const double r = 64.0 * std::numeric_limits<double>::epsilon() * amax;
  return convention == LossConvention::Sum ? r * r * static_cast<double>(a.size()) : r * r;
}

Verdict verdict_for_score(double s, const ScoreTable& train_scores, double tie_tolerance) {
  Verdict v;
  v.score = s;
  v.min_normal_score = train_scores.min_normal_score;
  v.undetected = s <= train_scores.min_normal_score + tie_tolerance;
  v.margin = train_scores.min_normal_score - s;
  if (train_scores.min_normal_score > 0.0) v.ratio = s / train_scores.min_normal_score;
  return v;
}

Verdict is_undetected(std::span<const double> a, const Model& model, const ScoreTable& train_scores) {
  return verdict_for_score(anomaly_score(model, a, train_scores.convention), train_scores,
                           rounding_floor(a, train_scores.convention));
}

void write_scores_csv(const ScoreTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << "index,score,label\n";
  for (const auto& e : table.entries) {
    out << e.index << ',' << format_double(e.score) << ',';
    if (e.label) out << *e.label;
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

std::string score_summary_json(const ScoreTable& table) {
  nlohmann::json j = {{"count", table.entries.size()},
                      {"convention", to_string(table.convention)},
                      {"role", table.role == Role::Train ? "train" : "test"},
                      {"min_normal_score", table.min_normal_score},
                      {"max_normal_score", table.max_normal_score}};
  return j.dump(2) + "\n";
}

}  // namespace aeaudit
