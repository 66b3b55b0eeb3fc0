#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "comorbid/annotation.hpp"
#include "comorbid/corpus.hpp"
#include "comorbid/terminology.hpp"
#include "comorbid/types.hpp"

namespace comorbid::synthetic {

/// A condition mention the generator placed on purpose, with its truth.
struct PlantedMention {
  MentionRef ref;
  std::string surface;
  Label label = Label::TrueMention;
  bool negated = false;
  Temporality temporality = Temporality::Recent;
  /// The condition's label is independent of its context.
  bool noisy = false;
};

struct Options {
  std::size_t documents = 160;
  /// When non-zero, keep adding documents until the corpus text reaches
  /// this many bytes (annotations are then not generated).
  std::size_t target_bytes = 0;
  /// Fraction of planted targets on which the second annotator flips `correct`.
  double disagreement_rate = 0.05;
};

struct SyntheticCorpus {
  std::vector<corpus::Document> documents;
  std::vector<PlantedMention> planted;
  /// Two annotators' verdicts on the planted targets.
  std::vector<annotation::AnnotationRecord> annotations;
};

/// The bundled synthetic terminology (data/synthetic).
const terminology::IcdMapping& mapping();
const terminology::Lexicon& lexicon();

/// Deterministic in `seed`. Each target condition has a "true" and a "decoy"
/// context concept; separable conditions always put the true-context concept
/// in the target's sentence when the mention is real and the decoy otherwise.
/// Noisy conditions draw the context independently of the label.
SyntheticCorpus generate(std::uint64_t seed, const Options& options = {});

}  // namespace comorbid::synthetic
