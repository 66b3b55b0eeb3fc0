#include "doctest.h"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "comorbid/error.hpp"
#include "comorbid/evaluation.hpp"
#include "comorbid/rng.hpp"
#include "oracles.hpp"

using namespace comorbid;
using namespace comorbid::evaluation;

namespace {

Instance make(const char* cui, int chapter, bool positive, filtermodel::FeatureKeys features = {}) {
  std::sort(features.begin(), features.end());
  return Instance{std::move(features), positive ? Label::TrueMention : Label::NotMention, Cui(cui),
                  ChapterId(chapter)};
}

filtermodel::FeatureKey same(const char* cui) { return {filtermodel::Slot::SameSentence, Cui(cui)}; }

// Marker feature present exactly on positives, plus some noise.
void add_separable(std::vector<Instance>& out, const char* cui, int chapter, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    filtermodel::FeatureKeys f{same(cui)};
    if (i % 2 == 0) f.push_back(same("C0000900"));
    if (i % 3 == 0) f.push_back(same("C0000901"));
    out.push_back(make(cui, chapter, i % 2 == 0, f));
  }
}

// Random labels and features; no structure to learn.
void add_noise(std::vector<Instance>& out, Xoshiro256& rng, const char* cui, int chapter, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    filtermodel::FeatureKeys f{same(cui)};
    for (const char* extra : {"C0000910", "C0000911", "C0000912"})
      if (rng.below(2)) f.push_back(same(extra));
    out.push_back(make(cui, chapter, rng.below(2) == 0, f));
  }
  out[out.size() - n].label = Label::TrueMention;
  out[out.size() - n + 1].label = Label::NotMention;
}

filtermodel::ForestParams small_forest() {
  filtermodel::ForestParams p;
  p.n_trees = 15;
  return p;
}

}  // namespace

TEST_CASE("kfold examples") {
  std::vector<Instance> hundred(100, make("C0000001", 1, true));
  const auto plan = kfold_split(hundred, 10, 3);
  CHECK(plan.k == 10);
  CHECK(plan.seed == 3);
  std::map<std::uint32_t, int> sizes;
  for (auto f : plan.assignments) sizes[f]++;
  CHECK(sizes.size() == 10);
  for (auto& [f, n] : sizes) CHECK(n == 10);

  std::vector<Instance> ten;
  for (int i = 0; i < 10; ++i) ten.push_back(make("C0000001", 1, i < 7));
  const auto two = kfold_split(ten, 2, 11);
  int pos[2] = {0, 0}, neg[2] = {0, 0};
  for (std::size_t i = 0; i < ten.size(); ++i) (i < 7 ? pos : neg)[two.assignments[i]]++;
  CHECK(std::abs(pos[0] - pos[1]) == 1);
  CHECK(std::abs(neg[0] - neg[1]) == 1);
  const int size0 = pos[0] + neg[0];
  CHECK((size0 == 4 || size0 == 5 || size0 == 6));

  CHECK_THROWS_AS(kfold_split(ten, 1, 0), ArgumentError);
  CHECK_THROWS_AS(kfold_split(ten, 0, 0), ArgumentError);
}

TEST_CASE("kfold partitions every stratum evenly") {
  Xoshiro256 rng(12);
  for (int round = 0; round < 300; ++round) {
    std::vector<Instance> data;
    const auto n = 1 + rng.below(80);
    const char* cuis[] = {"C0000001", "C0000002", "C0000003"};
    for (std::uint64_t i = 0; i < n; ++i) data.push_back(make(cuis[rng.below(3)], 1, rng.below(2) == 0));
    const std::uint32_t k = 2 + static_cast<std::uint32_t>(rng.below(9));
    const auto plan = kfold_split(data, k, round);
    REQUIRE(plan.assignments.size() == data.size());
    std::map<std::pair<std::string, int>, std::vector<int>> strata;
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(plan.assignments[i] < k);
      auto& counts = strata[{data[i].cui.str(), static_cast<int>(data[i].label)}];
      counts.resize(k);
      counts[plan.assignments[i]]++;
    }
    for (auto& [_, counts] : strata) {
      const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
      CHECK(*hi - *lo <= 1);
    }
    CHECK(kfold_split(data, k, round).assignments == plan.assignments);
  }
}

TEST_CASE("prf examples") {
  const auto empty = prf(0, 0, 0);
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.f1 == 0.0);
  CHECK(empty.precision_undefined);
  CHECK(empty.recall_undefined);

  const auto r = prf(6, 2, 3);
  CHECK(r.precision == 0.75);
  CHECK(r.recall == 6.0 / 9.0);
  CHECK(r.f1 == doctest::Approx(12.0 / 17.0).epsilon(1e-12));
  CHECK_FALSE(r.precision_undefined);

  const auto no_tp = prf(0, 4, 4);
  CHECK(no_tp.f1 == 0.0);
  CHECK_FALSE(no_tp.precision_undefined);

  CHECK(f1_score(0.0, 0.0) == 0.0);
}

TEST_CASE("f1 from reference precision and recall rows") {
  std::ifstream in(oracle::data("fixtures/chapter_prf.tsv"));
  REQUIRE(in);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string chapter;
    double p, r, f;
    ss >> chapter >> p >> r >> f;
    INFO(chapter);
    CHECK(std::abs(f1_score(p, r) - f) <= 0.0015);
    ++rows;
  }
  CHECK(rows == 18);
  CHECK(std::abs(f1_score(0.879, 1.000) - 0.936) <= 0.001);
  CHECK(std::abs(f1_score(0.866, 0.961) - 0.911) <= 0.001);
}

TEST_CASE("separable condition is recovered") {
  std::vector<Instance> data;
  add_separable(data, "C0000001", 10, 40);
  const auto report = evaluate(data, 10, filtermodel::ForestParams{}, 42);
  REQUIRE(report.conditions.size() == 1);
  CHECK(report.conditions[0].metrics.f1 >= 0.95);
  CHECK(report.skipped.empty());
}

TEST_CASE("skip reasons") {
  std::vector<Instance> data;
  for (int i = 0; i < 3; ++i) data.push_back(make("C0000002", 1, true, {same("C0000002")}));
  // One negative: the fold holding it trains without negatives.
  for (int i = 0; i < 6; ++i) data.push_back(make("C0000003", 1, i != 0, {same("C0000003")}));
  add_separable(data, "C0000001", 1, 20);
  const auto report = evaluate(data, 2, small_forest(), 1);
  REQUIRE(report.skipped.size() == 2);
  CHECK(report.skipped[0].cui == Cui("C0000002"));
  CHECK(report.skipped[0].reason == "single-class");
  CHECK(report.skipped[0].instances == 3);
  CHECK(report.skipped[1].cui == Cui("C0000003"));
  CHECK(report.skipped[1].reason == "insufficient-class-support");
  REQUIRE(report.conditions.size() == 1);
  CHECK(report.chapters.size() == 1);
  CHECK(report.chapters[0].instances == 20);

  std::vector<Instance> none;
  CHECK_THROWS_AS(evaluate(none, 10, small_forest(), 1), ArgumentError);
}

TEST_CASE("aggregation, conservation and metric algebra") {
  Xoshiro256 rng(5);
  std::vector<Instance> data;
  add_separable(data, "C0000001", 1, 30);
  add_noise(data, rng, "C0000002", 1, 30);
  add_noise(data, rng, "C0000003", 4, 25);
  add_separable(data, "C0000004", 10, 24);
  add_noise(data, rng, "C0000005", 10, 40);
  const auto report = evaluate(data, 5, small_forest(), 77);
  REQUIRE(report.conditions.size() == 5);

  std::map<Cui, std::size_t> per_condition;
  for (const auto& i : data) per_condition[i.cui]++;
  std::map<int, std::vector<const ConditionMetrics*>> by_chapter;
  for (const auto& c : report.conditions) {
    CHECK(c.tp + c.fp + c.fn + c.tn == per_condition[c.cui]);
    CHECK(c.instances == per_condition[c.cui]);
    const auto expected = prf(c.tp, c.fp, c.fn);
    CHECK(c.metrics.precision == expected.precision);
    CHECK(c.metrics.recall == expected.recall);
    if (c.metrics.precision + c.metrics.recall > 0) {
      const double h = 2 * c.metrics.precision * c.metrics.recall / (c.metrics.precision + c.metrics.recall);
      CHECK(std::abs(c.metrics.f1 - h) <= 1e-12);
    }
    for (double v : {c.metrics.precision, c.metrics.recall, c.metrics.f1}) CHECK((v >= 0.0 && v <= 1.0));
    by_chapter[c.chapter.number()].push_back(&c);
  }

  REQUIRE(report.chapters.size() == 3);
  double p = 0, r = 0, f = 0;
  std::size_t total = 0;
  for (const auto& ch : report.chapters) {
    const auto& members = by_chapter[ch.chapter.number()];
    double cp = 0, cr = 0, cf = 0;
    std::size_t n = 0;
    for (const auto* c : members) {
      cp += c->metrics.precision;
      cr += c->metrics.recall;
      cf += c->metrics.f1;
      n += c->instances;
    }
    const auto m = static_cast<double>(members.size());
    CHECK(ch.conditions == members.size());
    CHECK(ch.instances == n);
    CHECK(ch.precision == doctest::Approx(cp / m).epsilon(1e-12));
    CHECK(ch.recall == doctest::Approx(cr / m).epsilon(1e-12));
    CHECK(ch.f1 == doctest::Approx(cf / m).epsilon(1e-12));
    p += ch.precision;
    r += ch.recall;
    f += ch.f1;
    total += ch.instances;
  }
  CHECK(report.precision == doctest::Approx(p / 3).epsilon(1e-12));
  CHECK(report.recall == doctest::Approx(r / 3).epsilon(1e-12));
  CHECK(report.f1 == doctest::Approx(f / 3).epsilon(1e-12));
  CHECK(report.instances == total);
}

TEST_CASE("reports are deterministic") {
  Xoshiro256 rng(6);
  std::vector<Instance> data;
  add_noise(data, rng, "C0000002", 1, 40);
  add_separable(data, "C0000004", 10, 30);
  const auto a = evaluate(data, 10, small_forest(), 9, 1);
  const auto b = evaluate(data, 10, small_forest(), 9, 1);
  const auto c = evaluate(data, 10, small_forest(), 9, 3);
  CHECK(to_csv(a) == to_csv(b));
  CHECK(conditions_csv(a) == conditions_csv(b));
  CHECK(to_csv(a) == to_csv(c));
  CHECK(conditions_csv(a) == conditions_csv(c));
  CHECK(to_text_table(a) == to_text_table(c));

  CHECK(forest_seed(9, Cui("C0000002"), 3) == forest_seed(9, Cui("C0000002"), 3));
  CHECK(forest_seed(9, Cui("C0000002"), 3) != forest_seed(9, Cui("C0000002"), 4));
  CHECK(forest_seed(9, Cui("C0000002"), 3) != forest_seed(9, Cui("C0000004"), 3));
}

TEST_CASE("csv layout") {
  std::vector<Instance> data;
  add_separable(data, "C0000001", 10, 20);
  const auto csv = to_csv(evaluate(data, 2, small_forest(), 1));
  std::istringstream in(csv);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  REQUIRE(lines.size() == 16);
  CHECK(lines[0] == "chapter,instances,precision,recall,f1");
  CHECK(lines[1] == "I,0,,,");
  CHECK(lines[10].rfind("X,20,", 0) == 0);
  CHECK(lines[15].rfind("macro,20,", 0) == 0);
}
