#include "comorbid/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <thread>

#include "comorbid/error.hpp"
#include "comorbid/rng.hpp"
#include "comorbid/terminology.hpp"

namespace comorbid::evaluation {

namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

FoldPlan kfold_split(std::span<const Instance> instances, std::uint32_t k, std::uint64_t seed) {
  if (k < 2) throw ArgumentError("k-fold split needs k >= 2, got " + std::to_string(k));
  std::map<std::pair<Cui, Label>, std::vector<std::uint32_t>> strata;
  for (std::size_t i = 0; i < instances.size(); ++i)
    strata[{instances[i].cui, instances[i].label}].push_back(static_cast<std::uint32_t>(i));

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(instances.size(), 0);
  Xoshiro256 rng(seed);
  std::uint32_t offset = 0;
  for (auto& [_, members] : strata) {
    for (std::size_t i = members.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.below(i));
      std::swap(members[i - 1], members[j]);
    }
    for (std::size_t pos = 0; pos < members.size(); ++pos)
      plan.assignments[members[pos]] = static_cast<std::uint32_t>((offset + pos) % k);
    offset = static_cast<std::uint32_t>((offset + members.size()) % k);
  }
  return plan;
}

Prf prf(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  Prf r;
  if (tp + fp == 0) {
    r.precision_undefined = true;
  } else {
    r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    r.recall_undefined = true;
  } else {
    r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

double f1_score(double precision, double recall) {
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::uint64_t forest_seed(std::uint64_t seed, const Cui& cui, std::uint32_t fold) {
  const auto& s = cui.str();
  SplitMix64 mix(seed ^ fnv1a64(s.data(), s.size()));
  std::uint64_t out = mix.next();
  for (std::uint32_t i = 0; i < fold; ++i) out = mix.next();
  return out;
}

ChapterMetricsReport evaluate(std::span<const Instance> instances, std::uint32_t k,
                              const filtermodel::ForestParams& params, std::uint64_t seed, unsigned threads) {
  if (instances.empty()) throw ArgumentError("evaluate needs gold instances");
  const auto plan = kfold_split(instances, k, seed);

  std::map<Cui, std::vector<std::uint32_t>> by_condition;
  for (std::size_t i = 0; i < instances.size(); ++i)
    by_condition[instances[i].cui].push_back(static_cast<std::uint32_t>(i));

  struct Outcome {
    std::optional<ConditionMetrics> metrics;
    std::optional<SkippedCondition> skipped;
  };
  std::vector<std::pair<Cui, const std::vector<std::uint32_t>*>> work;
  for (const auto& [cui, members] : by_condition) work.emplace_back(cui, &members);
  std::vector<Outcome> outcomes(work.size());

  auto run = [&](std::size_t w) {
    const auto& [cui, members] = work[w];
    const ChapterId chapter = instances[members->front()].chapter;
    std::vector<std::size_t> pos_per_fold(k, 0), neg_per_fold(k, 0);
    std::size_t pos = 0, neg = 0;
    for (auto i : *members) {
      if (instances[i].label == Label::TrueMention) {
        ++pos;
        ++pos_per_fold[plan.assignments[i]];
      } else {
        ++neg;
        ++neg_per_fold[plan.assignments[i]];
      }
    }
    if (pos == 0 || neg == 0) {
      outcomes[w].skipped = SkippedCondition{cui, chapter, members->size(), "single-class"};
      return;
    }
    for (std::uint32_t f = 0; f < k; ++f) {
      if (pos_per_fold[f] == pos || neg_per_fold[f] == neg) {
        outcomes[w].skipped = SkippedCondition{cui, chapter, members->size(), "insufficient-class-support"};
        return;
      }
    }

    ConditionMetrics m;
    m.cui = cui;
    m.chapter = chapter;
    m.instances = members->size();
    for (std::uint32_t f = 0; f < k; ++f) {
      std::vector<Instance> train;
      std::vector<const Instance*> test;
      for (auto i : *members) {
        if (plan.assignments[i] == f)
          test.push_back(&instances[i]);
        else
          train.push_back(instances[i]);
      }
      if (test.empty()) continue;
      const auto model = filtermodel::train_forest(train, params, forest_seed(seed, cui, f));
      for (const auto* t : test) {
        const bool predicted = filtermodel::predict(model, t->features).label == Label::TrueMention;
        const bool actual = t->label == Label::TrueMention;
        if (predicted && actual) ++m.tp;
        else if (predicted) ++m.fp;
        else if (actual) ++m.fn;
        else ++m.tn;
      }
    }
    m.metrics = prf(m.tp, m.fp, m.fn);
    outcomes[w].metrics = m;
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto w = next++; w < work.size(); w = next++) run(w);
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(work.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
  }

  ChapterMetricsReport report;
  std::map<ChapterId, std::vector<const ConditionMetrics*>> by_chapter;
  for (auto& o : outcomes) {
    if (o.metrics) report.conditions.push_back(*o.metrics);
    if (o.skipped) report.skipped.push_back(*o.skipped);
  }
  for (const auto& c : report.conditions) by_chapter[c.chapter].push_back(&c);
  for (const auto& [chapter, conds] : by_chapter) {
    ChapterMetrics cm;
    cm.chapter = chapter;
    cm.conditions = conds.size();
    for (const auto* c : conds) {
      cm.instances += c->instances;
      cm.precision += c->metrics.precision;
      cm.recall += c->metrics.recall;
      cm.f1 += c->metrics.f1;
    }
    const auto n = static_cast<double>(conds.size());
    cm.precision /= n;
    cm.recall /= n;
    cm.f1 /= n;
    report.instances += cm.instances;
    report.chapters.push_back(cm);
  }
  if (!report.chapters.empty()) {
    for (const auto& cm : report.chapters) {
      report.precision += cm.precision;
      report.recall += cm.recall;
      report.f1 += cm.f1;
    }
    const auto n = static_cast<double>(report.chapters.size());
    report.precision /= n;
    report.recall /= n;
    report.f1 /= n;
  }
  return report;
}

std::string to_csv(const ChapterMetricsReport& report) {
  std::string out = "chapter,instances,precision,recall,f1\n";
  for (const auto& chapter : terminology::chapters()) {
    auto it = std::find_if(report.chapters.begin(), report.chapters.end(),
                           [&](const ChapterMetrics& c) { return c.chapter == chapter.id; });
    out += chapter.id.roman() + ",";
    if (it == report.chapters.end()) {
      out += "0,,,\n";
    } else {
      out += std::to_string(it->instances) + "," + fixed(it->precision) + "," + fixed(it->recall) + "," +
             fixed(it->f1) + "\n";
    }
  }
  out += "macro," + std::to_string(report.instances) + ",";
  if (report.chapters.empty())
    out += ",,\n";
  else
    out += fixed(report.precision) + "," + fixed(report.recall) + "," + fixed(report.f1) + "\n";
  return out;
}

std::string conditions_csv(const ChapterMetricsReport& report) {
  std::string out = "cui,chapter,instances,tp,fp,fn,tn,precision,recall,f1,status\n";
  for (const auto& c : report.conditions) {
    out += c.cui.str() + "," + c.chapter.roman() + "," + std::to_string(c.instances) + "," +
           std::to_string(c.tp) + "," + std::to_string(c.fp) + "," + std::to_string(c.fn) + "," +
           std::to_string(c.tn) + "," + fixed(c.metrics.precision) + "," + fixed(c.metrics.recall) + "," +
           fixed(c.metrics.f1) + ",evaluated\n";
  }
  for (const auto& s : report.skipped)
    out += s.cui.str() + "," + s.chapter.roman() + "," + std::to_string(s.instances) + ",,,,,,,,skipped:" +
           s.reason + "\n";
  return out;
}

std::string to_text_table(const ChapterMetricsReport& report) {
  constexpr std::size_t kPerRow = 6;
  constexpr int kLabelWidth = 16;
  constexpr int kColWidth = 8;
  auto pad = [](std::string s, int width) {
    if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), ' ');
    return s;
  };
  auto label = [](std::string s) {
    s.resize(static_cast<std::size_t>(kLabelWidth), ' ');
    return s;
  };

  std::string out = "Macro-average precision, recall and F1 per ICD-10 chapter (k-fold cross-validation)\n";
  out += "Instances are gold mentions of evaluated conditions.\n\n";
  for (std::size_t b = 0; b < report.chapters.size(); b += kPerRow) {
    const auto e = std::min(report.chapters.size(), b + kPerRow);
    std::string rows[5] = {label("ICD10 chapter"), label("Instances"), label("Precision"), label("Recall"),
                           label("F1")};
    for (auto i = b; i < e; ++i) {
      const auto& c = report.chapters[i];
      rows[0] += pad(c.chapter.roman(), kColWidth);
      rows[1] += pad(std::to_string(c.instances), kColWidth);
      rows[2] += pad(fixed3(c.precision), kColWidth);
      rows[3] += pad(fixed3(c.recall), kColWidth);
      rows[4] += pad(fixed3(c.f1), kColWidth);
    }
    for (auto& r : rows) out += r + "\n";
    out += "\n";
  }
  out += label("Macro average") + "P " + fixed3(report.precision) + "  R " + fixed3(report.recall) + "  F1 " +
         fixed3(report.f1) + "  (" + std::to_string(report.instances) + " instances)\n";
  if (!report.skipped.empty()) {
    out += "\nSkipped conditions:\n";
    for (const auto& s : report.skipped)
      out += "  " + s.cui.str() + " (chapter " + s.chapter.roman() + ", " + std::to_string(s.instances) +
             " instances): " + s.reason + "\n";
  }
  return out;
}

}  // namespace comorbid::evaluation
