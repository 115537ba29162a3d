#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aeaudit/datagen.hpp"
#include "aeaudit/models.hpp"

namespace aeaudit {

/// Per-sample score convention. Mean is L_R itself; Sum is n·L_R.
enum class LossConvention { Mean, Sum };

const char* to_string(LossConvention c) noexcept;
LossConvention convention_from_string(const std::string& s);

/// Anomaly score of one sample: the reconstruction loss of x under `model`.
double anomaly_score(const Model& model, std::span<const double> x,
                     LossConvention convention = LossConvention::Mean);

struct ScoreEntry {
  std::size_t index = 0;
  double score = 0.0;
  std::optional<int> label;
};

struct ScoreTable {
  std::vector<ScoreEntry> entries;  ///< descending by score, ties by index
  double min_normal_score = 0.0;
  double max_normal_score = 0.0;
  Role role = Role::Train;
  LossConvention convention = LossConvention::Mean;

  /// Scores in original sample order.
  std::vector<double> scores_by_index() const;
};

ScoreTable score(const Model& model, const Dataset& data,
                 LossConvention convention = LossConvention::Mean);

struct Verdict {
  bool undetected = false;  ///< score(a) ≤ min normal score
  double score = 0.0;
  double min_normal_score = 0.0;
  double margin = 0.0;           ///< min_normal_score − score(a)
  std::optional<double> ratio;   ///< score(a) / min_normal_score, absent when the minimum is 0
};

/// Size of the loss that floating-point rounding alone can produce when
/// reconstructing a exactly: (64·eps·max(1, ‖a‖∞))² per coordinate.
double rounding_floor(std::span<const double> a, LossConvention convention);

/// Worst-case criterion: a counts as undetected when it ranks as no more
/// anomalous than the least anomalous training sample. Ties count, and a
/// difference below `tie_tolerance` is a tie.
Verdict is_undetected(std::span<const double> a, const Model& model, const ScoreTable& train_scores);
Verdict verdict_for_score(double score, const ScoreTable& train_scores, double tie_tolerance = 0.0);

void write_scores_csv(const ScoreTable& table, const std::filesystem::path& path);
std::string score_summary_json(const ScoreTable& table);

}  // namespace aeaudit
