#include "comorbid/synthetic.hpp"

#include <array>
#include <chrono>
#include <cstdio>

#include "comorbid/error.hpp"
#include "comorbid/rng.hpp"
#include "comorbid/unicode.hpp"
#include "embedded.hpp"

namespace comorbid::synthetic {

namespace {

struct Condition {
  const char* cui;
  const char* true_context;
  const char* decoy_context;
  bool noisy;
};

// Targets and their context concepts, all from data/synthetic/lexicon.tsv.
constexpr std::array<Condition, 14> kConditions{{
    {"C9000101", "C9000210", "C9000201", true},
    {"C9000102", "C9000202", "C9000208", false},
    {"C9000103", "C9000201", "C9000207", false},
    {"C9000104", "C9000206", "C9000205", false},
    {"C9000105", "C9000203", "C9000209", false},
    {"C9000106", "C9000208", "C9000204", false},
    {"C9000107", "C9000204", "C9000206", false},
    {"C9000108", "C9000205", "C9000202", false},
    {"C9000109", "C9000207", "C9000203", false},
    {"C9000110", "C9000206", "C9000210", false},
    {"C9000111", "C9000207", "C9000201", false},
    {"C9000112", "C9000208", "C9000205", false},
    {"C9000113", "C9000209", "C9000204", true},
    {"C9000114", "C9000209", "C9000202", false},
}};

constexpr std::array<const char*, 10> kFiller{{
    "Mood settled and engaging well with the team.",
    "Attended the appointment with the care coordinator.",
    "Plan to review again in four weeks.",
    "Sleeping reasonably and eating well.",
    "Medication adherence discussed with the patient.",
    "Café visits with family continue at weekends.",
    "Reports feeling calmer since the last visit.",
    "Housing support worker present for part of the review.",
    "Naïve to clozapine; options explained.",
    "Physical observations taken in clinic.",
}};

// {T} is the target surface, {C} the context surface.
constexpr std::array<const char*, 5> kRelevant{{
    "Seen in clinic with {T} and {C}.",
    "{C} noted alongside {T} at this review.",
    "Medication for {T} continued and {C} monitored.",
    "GP letter mentions {T} together with {C}.",
    "Discussed {T} and {C} with the patient.",
}};

constexpr std::array<const char*, 3> kNegated{{
    "There is no evidence of {T}.",
    "Denies {T}.",
    "{T} was ruled out.",
}};

constexpr std::array<const char*, 2> kHistoric{{
    "History of {T} as a child.",
    "Previous {T} noted in old records.",
}};

constexpr const char* kTimestamp = "2020-01-01T00:00:00Z";

std::string pick_surface(const terminology::LexiconEntry& entry, Xoshiro256& rng) {
  const auto n = entry.synonyms.size() + 1;
  const auto i = rng.below(n);
  return i == 0 ? entry.preferred_term : entry.synonyms[i - 1];
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

struct Builder {
  std::string text;
  std::size_t length = 0;  // in code points

  void append(std::string_view piece) {
    text += piece;
    length += unicode::length(piece);
  }
};

/// Appends `tmpl` with placeholders filled in; returns the target's span
/// and stores the target as written in `written`.
std::pair<std::size_t, std::size_t> fill(Builder& b, std::string_view tmpl, const std::string& target,
                                         const std::string& context, std::string& written) {
  std::pair<std::size_t, std::size_t> span{0, 0};
  std::size_t i = 0;
  bool at_start = true;
  while (i < tmpl.size()) {
    if (tmpl.compare(i, 3, "{T}") == 0 || tmpl.compare(i, 3, "{C}") == 0) {
      const bool is_target = tmpl[i + 1] == 'T';
      auto surface = is_target ? target : context;
      if (at_start) surface = capitalize(surface);
      if (is_target) {
        span.first = b.length;
        written = surface;
      }
      b.append(surface);
      if (is_target) span.second = b.length;
      i += 3;
    } else {
      b.append(tmpl.substr(i, 1));
      ++i;
    }
    at_start = false;
  }
  return span;
}

}  // namespace

const terminology::IcdMapping& mapping() {
  static const terminology::IcdMapping m = terminology::parse_mapping(embedded::synthetic_mapping);
  return m;
}

const terminology::Lexicon& lexicon() {
  static const terminology::Lexicon l = terminology::parse_lexicon(embedded::synthetic_lexicon, mapping());
  return l;
}

SyntheticCorpus generate(std::uint64_t seed, const Options& options) {
  if (options.disagreement_rate < 0.0 || options.disagreement_rate > 1.0)
    throw ArgumentError("disagreement_rate must be in [0, 1]");
  const auto& lex = lexicon();
  auto entry = [&](const char* cui) -> const terminology::LexiconEntry& {
    const auto* e = lex.find(Cui(cui));
    if (!e) throw ValidationError(std::string("synthetic lexicon lacks ") + cui);
    return *e;
  };

  Xoshiro256 rng(seed);
  auto chance = [&](double p) { return static_cast<double>(rng.below(1'000'000)) < p * 1'000'000.0; };
  const auto flip_threshold = options.disagreement_rate;

  SyntheticCorpus out;
  std::size_t total_bytes = 0;
  const auto base_day = std::chrono::sys_days{std::chrono::year{2012} / 1 / 1};

  for (std::size_t d = 0;; ++d) {
    if (options.target_bytes == 0 ? d >= options.documents : total_bytes >= options.target_bytes) break;

    char id[32], patient[32];
    std::snprintf(id, sizeof id, "syn-%05zu", d + 1);
    std::snprintf(patient, sizeof patient, "p-%04zu", d / 4 + 1);
    corpus::Document doc;
    doc.doc_id = id;
    doc.patient_id = patient;
    doc.date = corpus::Date{base_day + std::chrono::days{static_cast<int>(rng.below(365 * 6))}};

    Builder b;
    const auto plantings = 3 + rng.below(3);
    for (std::uint64_t p = 0; p < plantings; ++p) {
      if (p > 0) b.append(rng.below(4) == 0 ? "\n" : " ");
      b.append(kFiller[rng.below(kFiller.size())]);
      b.append(" ");

      const auto& cond = kConditions[rng.below(kConditions.size())];
      const auto& target = entry(cond.cui);
      const auto surface = pick_surface(target, rng);

      PlantedMention pm;
      pm.noisy = cond.noisy;
      const auto kind = rng.below(20);
      std::pair<std::size_t, std::size_t> span;
      if (kind < 2) {
        pm.negated = true;
        span = fill(b, kNegated[rng.below(kNegated.size())], surface, {}, pm.surface);
      } else if (kind < 4) {
        pm.temporality = Temporality::Historic;
        span = fill(b, kHistoric[rng.below(kHistoric.size())], surface, {}, pm.surface);
      } else {
        bool real, true_context;
        if (cond.noisy) {
          real = rng.below(2) == 0;
          true_context = rng.below(2) == 0;
        } else {
          real = rng.below(5) < 3;
          true_context = real;
        }
        pm.label = real ? Label::TrueMention : Label::NotMention;
        const auto& ctx = entry(true_context ? cond.true_context : cond.decoy_context);
        span = fill(b, kRelevant[rng.below(kRelevant.size())], surface, pick_surface(ctx, rng), pm.surface);
      }
      pm.ref = MentionRef{doc.doc_id, span.first, span.second, target.cui};

      if (options.target_bytes == 0) {
        annotation::AnnotationRecord a{pm.ref, "ann1", pm.label == Label::TrueMention, pm.negated, pm.temporality,
                                       kTimestamp};
        auto second = a;
        second.annotator_id = "ann2";
        if (chance(flip_threshold)) second.correct = !second.correct;
        out.annotations.push_back(std::move(a));
        out.annotations.push_back(std::move(second));
      }
      out.planted.push_back(std::move(pm));
    }
    doc.text = std::move(b.text);
    total_bytes += doc.text.size();
    out.documents.push_back(std::move(doc));
  }
  return out;
}

}  // namespace comorbid::synthetic
