#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "comorbid/types.hpp"

namespace comorbid::filtermodel {

enum class Slot : std::uint8_t { SameSentence = 0, PriorSentence = 1 };

struct FeatureKey {
  Slot slot;
  Cui cui;
  auto operator<=>(const FeatureKey&) const = default;
};

/// Sorted, duplicate-free set of active context features.
using FeatureKeys = std::vector<FeatureKey>;

/// Bag of CUIs in the target's sentence and in the sentence before it.
/// `doc_mentions` must contain every mention of the target's document.
FeatureKeys encode_features(const Mention& target, std::span<const Mention> doc_mentions);

/// Sorted feature ids over a frozen vocabulary.
struct FeatureVector {
  std::vector<std::uint32_t> ids;
  bool contains(std::uint32_t id) const;
  bool operator==(const FeatureVector&) const = default;
};

/// (slot, cui) -> dense id. Ids follow the sort order of the keys.
class FeatureVocab {
 public:
  FeatureVocab() = default;
  /// Takes sorted unique keys.
  explicit FeatureVocab(std::vector<FeatureKey> keys);

  static FeatureVocab build(std::span<const FeatureKeys> examples);

  /// Keys missing from the vocabulary are ignored.
  FeatureVector encode(const FeatureKeys& keys) const;
  std::optional<std::uint32_t> id_of(const FeatureKey& key) const;
  std::size_t size() const { return keys_.size(); }
  const std::vector<FeatureKey>& keys() const { return keys_; }

  bool operator==(const FeatureVocab& other) const { return keys_ == other.keys_; }

 private:
  std::vector<FeatureKey> keys_;
};

struct TrainInstance {
  FeatureKeys features;
  Label label = Label::NotMention;
  Cui cui;
  ChapterId chapter;
};

struct ForestParams {
  std::uint32_t n_trees = 100;
  /// Candidate features per node. Unset means floor(sqrt(vocab size)), min 1.
  std::optional<std::uint32_t> max_features;
  std::uint32_t min_leaf = 1;
  /// 0 means unlimited.
  std::uint32_t max_depth = 0;
  /// When false every tree sees the training set exactly once, in order.
  bool bootstrap = true;

  std::uint32_t features_for(std::size_t vocab_size) const;
  bool operator==(const ForestParams&) const = default;
};

/// Internal nodes split on feature presence: absent goes left, present right.
struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;
  std::int32_t feature = kLeaf;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  /// Training counts, meaningful on leaves only.
  std::uint32_t true_count = 0;
  std::uint32_t false_count = 0;

  bool is_leaf() const { return feature == kLeaf; }
  bool operator==(const TreeNode&) const = default;
};

/// Nodes in preorder; the root is node 0.
struct Tree {
  std::vector<TreeNode> nodes;
  /// Leaf reached by a feature vector.
  const TreeNode& leaf_for(const FeatureVector& features) const;
  /// Leaf vote; a tied leaf votes TrueMention.
  Label vote(const FeatureVector& features) const;
  bool operator==(const Tree&) const = default;
};

struct ForestModel {
  Cui condition_cui;
  ForestParams params;
  FeatureVocab vocab;
  std::uint64_t seed = 0;
  std::vector<Tree> trees;
  bool operator==(const ForestModel&) const = default;
};

/// Per-tree bootstrap sample indices, recorded when requested.
struct TrainTrace {
  std::vector<std::vector<std::uint32_t>> samples;
};

/// 1 - sum(p_i^2) over the two classes. Throws ArgumentError if empty.
double gini(std::uint64_t true_count, std::uint64_t false_count);

/// Trains one random forest for a single condition.
///
/// Tree `t` draws from `Xoshiro256(seed + t)`: first the bootstrap sample
/// (n draws of `below(n)`), then, at each impure node in preorder, a partial
/// Fisher-Yates shuffle of the feature ids from which candidates are taken
/// until `max_features` have been tried and at least one of them splits the
/// node. The split with the highest Gini gain wins, lowest feature id on ties
/// (gains are compared exactly in integer arithmetic). Zero-gain splits are
/// accepted as long as both children are non-empty.
///
/// `threads` only affects wall time; the model is identical for any value.
/// Throws ArgumentError for empty input or mixed CUIs and
/// DegenerateDataError when only one class is present.
ForestModel train_forest(std::span<const TrainInstance> instances, const ForestParams& params,
                         std::uint64_t seed, unsigned threads = 1, TrainTrace* trace = nullptr);

struct Prediction {
  Label label = Label::NotMention;
  /// Fraction of trees voting TrueMention.
  double score = 0.0;
  std::uint32_t true_votes = 0;
};

/// Majority vote. Exactly half the trees voting TrueMention yields TrueMention.
Prediction predict(const ForestModel& model, const FeatureKeys& features);
Prediction predict(const ForestModel& model, const FeatureVector& features);

inline constexpr std::uint32_t kModelVersion = 1;

/// Little-endian binary model file: magic `CMRF`, version, condition CUI,
/// params, seed, vocab, trees, CRC-32 trailer.
std::string serialize_model(const ForestModel& model);
/// Throws VersionError on a version mismatch and ParseError on anything
/// truncated, corrupt or inconsistent.
ForestModel deserialize_model(std::string_view bytes);

}  // namespace comorbid::filtermodel
