#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "comorbid/filtermodel.hpp"
#include "comorbid/types.hpp"

namespace comorbid::evaluation {

/// Gold instance with its context features already encoded.
using Instance = filtermodel::TrainInstance;

struct FoldPlan {
  std::uint32_t k = 0;
  std::uint64_t seed = 0;
  /// Fold index per instance, parallel to the input.
  std::vector<std::uint32_t> assignments;
};

/// Stratified by (condition CUI, label). Strata are visited in sorted order;
/// each is shuffled with one shared Xoshiro256(seed) and dealt round-robin,
/// continuing from the fold where the previous stratum stopped.
/// Throws ArgumentError for k < 2.
FoldPlan kfold_split(std::span<const Instance> instances, std::uint32_t k, std::uint64_t seed);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
};

/// Zero denominators give 0 and raise the matching flag; F1 is 0 when P+R is 0.
Prf prf(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn);
/// F1 from already computed precision and recall.
double f1_score(double precision, double recall);

struct ConditionMetrics {
  Cui cui;
  ChapterId chapter;
  std::size_t instances = 0;
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  Prf metrics;
};

struct ChapterMetrics {
  ChapterId chapter;
  /// Gold mentions of the evaluated conditions in this chapter.
  std::size_t instances = 0;
  std::size_t conditions = 0;
  /// Means over the chapter's conditions (F1 is not recomputed from P and R).
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct SkippedCondition {
  Cui cui;
  ChapterId chapter;
  std::size_t instances = 0;
  std::string reason;
};

struct ChapterMetricsReport {
  std::vector<ConditionMetrics> conditions;
  /// Chapters with at least one evaluated condition, in chapter order.
  std::vector<ChapterMetrics> chapters;
  std::vector<SkippedCondition> skipped;
  std::size_t instances = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// k-fold cross-validation with one forest per condition and fold.
///
/// A condition is evaluated only when every training split holds both
/// classes; otherwise it is skipped ("single-class" when one class is
/// missing altogether, "insufficient-class-support" otherwise). The feature
/// vocabulary of each forest is built from its training split alone.
/// Throws ArgumentError for empty input.
ChapterMetricsReport evaluate(std::span<const Instance> instances, std::uint32_t k,
                              const filtermodel::ForestParams& params, std::uint64_t seed,
                              unsigned threads = 1);

/// Seed for the forest of (condition, fold); stable across platforms.
std::uint64_t forest_seed(std::uint64_t seed, const Cui& cui, std::uint32_t fold);

/// `chapter,instances,precision,recall,f1`, one row per bundled chapter
/// (empty metrics where no data), then a `macro` row.
std::string to_csv(const ChapterMetricsReport& report);
/// Per-condition CSV including the confusion counts.
std::string conditions_csv(const ChapterMetricsReport& report);
/// Aligned plain-text table, chapters as columns.
std::string to_text_table(const ChapterMetricsReport& report);

}  // namespace comorbid::evaluation
