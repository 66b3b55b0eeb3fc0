#include "comorbid/filtermodel.hpp"

#include <boost/crc.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <numeric>
#include <set>
#include <thread>

#include "comorbid/error.hpp"
#include "comorbid/rng.hpp"

namespace comorbid::filtermodel {

FeatureKeys encode_features(const Mention& target, std::span<const Mention> doc_mentions) {
  std::set<FeatureKey> keys;
  keys.insert(FeatureKey{Slot::SameSentence, target.cui});
  for (const auto& m : doc_mentions) {
    if (m.doc_id != target.doc_id) continue;
    if (m.sentence_index == target.sentence_index)
      keys.insert(FeatureKey{Slot::SameSentence, m.cui});
    else if (target.sentence_index > 0 && m.sentence_index + 1 == target.sentence_index)
      keys.insert(FeatureKey{Slot::PriorSentence, m.cui});
  }
  return FeatureKeys(keys.begin(), keys.end());
}

bool FeatureVector::contains(std::uint32_t id) const {
  return std::binary_search(ids.begin(), ids.end(), id);
}

FeatureVocab::FeatureVocab(std::vector<FeatureKey> keys) : keys_(std::move(keys)) {
  for (std::size_t i = 1; i < keys_.size(); ++i)
    if (!(keys_[i - 1] < keys_[i])) throw ValidationError("feature vocabulary must be sorted and unique");
}

FeatureVocab FeatureVocab::build(std::span<const FeatureKeys> examples) {
  std::set<FeatureKey> all;
  for (const auto& ex : examples) all.insert(ex.begin(), ex.end());
  return FeatureVocab(std::vector<FeatureKey>(all.begin(), all.end()));
}

std::optional<std::uint32_t> FeatureVocab::id_of(const FeatureKey& key) const {
  auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return std::nullopt;
  return static_cast<std::uint32_t>(it - keys_.begin());
}

FeatureVector FeatureVocab::encode(const FeatureKeys& keys) const {
  FeatureVector v;
  for (const auto& k : keys)
    if (auto id = id_of(k)) v.ids.push_back(*id);
  std::sort(v.ids.begin(), v.ids.end());
  v.ids.erase(std::unique(v.ids.begin(), v.ids.end()), v.ids.end());
  return v;
}

std::uint32_t ForestParams::features_for(std::size_t vocab_size) const {
  if (max_features) return *max_features;
  auto root = static_cast<std::uint32_t>(std::sqrt(static_cast<double>(vocab_size)));
  while (static_cast<std::uint64_t>(root + 1) * (root + 1) <= vocab_size) ++root;
  while (static_cast<std::uint64_t>(root) * root > vocab_size) --root;
  return std::max<std::uint32_t>(root, 1);
}

double gini(std::uint64_t true_count, std::uint64_t false_count) {
  const auto total = true_count + false_count;
  if (total == 0) throw ArgumentError("gini of an empty node");
  const double p = static_cast<double>(true_count) / static_cast<double>(total);
  const double q = static_cast<double>(false_count) / static_cast<double>(total);
  return 1.0 - (p * p + q * q);
}

const TreeNode& Tree::leaf_for(const FeatureVector& features) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf())
    i = features.contains(static_cast<std::uint32_t>(nodes[i].feature)) ? nodes[i].right : nodes[i].left;
  return nodes[i];
}

Label Tree::vote(const FeatureVector& features) const {
  const auto& leaf = leaf_for(features);
  return leaf.true_count >= leaf.false_count ? Label::TrueMention : Label::NotMention;
}

namespace {

constexpr std::size_t kMaxInstances = 1u << 20;

struct Counts {
  std::uint64_t pos = 0;
  std::uint64_t neg = 0;
  std::uint64_t total() const { return pos + neg; }
};

// Sum over children of (pos^2 + neg^2) / n as an exact fraction. Larger is
// purer: weighted Gini = 1 - this / parent_n.
struct Purity {
  unsigned __int128 num = 0;
  unsigned __int128 den = 1;
  static Purity of(const Counts& l, const Counts& r) {
    const unsigned __int128 sl = l.pos * l.pos + l.neg * l.neg;
    const unsigned __int128 sr = r.pos * r.pos + r.neg * r.neg;
    return Purity{sl * r.total() + sr * l.total(),
                  static_cast<unsigned __int128>(l.total()) * r.total()};
  }
  bool operator>(const Purity& o) const { return num * o.den > o.num * den; }
};

class TreeGrower {
 public:
  TreeGrower(const std::vector<std::uint8_t>& present, const std::vector<Label>& labels,
             std::size_t vocab, const ForestParams& params, std::uint32_t max_features,
             std::uint64_t seed)
      : present_(present),
        labels_(labels),
        vocab_(vocab),
        params_(params),
        max_features_(max_features),
        rng_(seed),
        perm_(vocab) {}

  Tree grow(std::vector<std::uint32_t>* sample_out) {
    const auto n = labels_.size();
    std::vector<std::uint32_t> sample(n);
    if (params_.bootstrap) {
      for (auto& s : sample) s = static_cast<std::uint32_t>(rng_.below(n));
    } else {
      std::iota(sample.begin(), sample.end(), 0u);
    }
    if (sample_out) *sample_out = sample;
    Tree tree;
    build(tree, sample, 0);
    return tree;
  }

 private:
  bool has(std::uint32_t instance, std::uint32_t feature) const {
    return present_[static_cast<std::size_t>(instance) * vocab_ + feature] != 0;
  }

  Counts tally(const std::vector<std::uint32_t>& sample) const {
    Counts c;
    for (auto i : sample) (labels_[i] == Label::TrueMention ? c.pos : c.neg)++;
    return c;
  }

  std::uint32_t build(Tree& tree, const std::vector<std::uint32_t>& sample, std::uint32_t depth) {
    const auto index = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const Counts counts = tally(sample);

    auto make_leaf = [&] {
      auto& node = tree.nodes[index];
      node.true_count = static_cast<std::uint32_t>(counts.pos);
      node.false_count = static_cast<std::uint32_t>(counts.neg);
      return index;
    };

    if (counts.pos == 0 || counts.neg == 0) return make_leaf();
    if (params_.max_depth != 0 && depth >= params_.max_depth) return make_leaf();
    if (sample.size() < 2 * static_cast<std::size_t>(params_.min_leaf) || vocab_ == 0) return make_leaf();

    std::iota(perm_.begin(), perm_.end(), 0u);
    std::optional<std::uint32_t> best;
    Purity best_purity;
    std::uint32_t tried = 0;
    for (std::size_t i = 0; i < vocab_; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(vocab_ - i));
      std::swap(perm_[i], perm_[j]);
      const auto feature = perm_[i];
      ++tried;

      Counts left, right;
      for (auto s : sample) {
        auto& side = has(s, feature) ? right : left;
        (labels_[s] == Label::TrueMention ? side.pos : side.neg)++;
      }
      if (left.total() >= params_.min_leaf && right.total() >= params_.min_leaf) {
        const auto purity = Purity::of(left, right);
        if (!best || purity > best_purity || (!(best_purity > purity) && feature < *best)) {
          best = feature;
          best_purity = purity;
        }
      }
      if (tried >= max_features_ && best) break;
    }
    if (!best) return make_leaf();

    std::vector<std::uint32_t> left, right;
    for (auto s : sample) (has(s, *best) ? right : left).push_back(s);
    tree.nodes[index].feature = static_cast<std::int32_t>(*best);
    const auto l = build(tree, left, depth + 1);
    const auto r = build(tree, right, depth + 1);
    tree.nodes[index].left = l;
    tree.nodes[index].right = r;
    return index;
  }

  const std::vector<std::uint8_t>& present_;
  const std::vector<Label>& labels_;
  std::size_t vocab_;
  const ForestParams& params_;
  std::uint32_t max_features_;
  Xoshiro256 rng_;
  std::vector<std::uint32_t> perm_;
};

void check_params(const ForestParams& p) {
  if (p.n_trees < 1) throw ArgumentError("n_trees must be at least 1");
  if (p.min_leaf < 1) throw ArgumentError("min_leaf must be at least 1");
  if (p.max_features && *p.max_features < 1) throw ArgumentError("max_features must be at least 1");
}

}  // namespace

ForestModel train_forest(std::span<const TrainInstance> instances, const ForestParams& params,
                         std::uint64_t seed, unsigned threads, TrainTrace* trace) {
  check_params(params);
  if (instances.empty()) throw ArgumentError("train_forest needs at least one instance");
  if (instances.size() > kMaxInstances) throw ArgumentError("too many training instances for one condition");
  const Cui cui = instances.front().cui;
  std::size_t positives = 0;
  for (const auto& inst : instances) {
    if (inst.cui != cui)
      throw ArgumentError("training instances mix conditions " + cui.str() + " and " + inst.cui.str());
    if (inst.label == Label::TrueMention) ++positives;
  }
  if (positives == 0 || positives == instances.size())
    throw DegenerateDataError("training data for " + cui.str() + " has a single class");

  ForestModel model;
  model.condition_cui = cui;
  model.params = params;
  model.seed = seed;
  {
    std::vector<FeatureKeys> keys;
    keys.reserve(instances.size());
    for (const auto& inst : instances) keys.push_back(inst.features);
    model.vocab = FeatureVocab::build(keys);
  }

  const std::size_t n = instances.size();
  const std::size_t v = model.vocab.size();
  std::vector<std::uint8_t> present(n * v, 0);
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = instances[i].label;
    for (auto id : model.vocab.encode(instances[i].features).ids) present[i * v + id] = 1;
  }
  const auto max_features = std::min<std::uint32_t>(params.features_for(v), static_cast<std::uint32_t>(std::max<std::size_t>(v, 1)));

  model.trees.resize(params.n_trees);
  if (trace) trace->samples.assign(params.n_trees, {});
  std::atomic<std::uint32_t> next{0};
  auto worker = [&] {
    for (auto t = next++; t < params.n_trees; t = next++) {
      TreeGrower grower(present, labels, v, params, max_features, seed + t);
      model.trees[t] = grower.grow(trace ? &trace->samples[t] : nullptr);
    }
  };
  const unsigned workers = std::max(1u, std::min(threads, params.n_trees));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return model;
}

Prediction predict(const ForestModel& model, const FeatureVector& features) {
  Prediction p;
  for (const auto& tree : model.trees)
    if (tree.vote(features) == Label::TrueMention) ++p.true_votes;
  const auto n = static_cast<std::uint32_t>(model.trees.size());
  p.score = n == 0 ? 0.0 : static_cast<double>(p.true_votes) / n;
  p.label = 2ull * p.true_votes >= n ? Label::TrueMention : Label::NotMention;
  return p;
}

Prediction predict(const ForestModel& model, const FeatureKeys& features) {
  return predict(model, model.vocab.encode(features));
}

// ---------------------------------------------------------------------------
// Model file

namespace {

constexpr char kMagic[4] = {'C', 'M', 'R', 'F'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void raw(const char* data, std::size_t n) { out_.append(data, n); }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ParseError("model file truncated at byte " + std::to_string(pos_));
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32(std::string_view bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

}  // namespace

std::string serialize_model(const ForestModel& model) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kModelVersion);
  w.str(model.condition_cui.str());
  w.u32(model.params.n_trees);
  w.u32(model.params.max_features.value_or(0));
  w.u32(model.params.min_leaf);
  w.u32(model.params.max_depth);
  w.u8(model.params.bootstrap ? 1 : 0);
  w.u64(model.seed);
  w.u32(static_cast<std::uint32_t>(model.vocab.size()));
  for (const auto& key : model.vocab.keys()) {
    w.u8(static_cast<std::uint8_t>(key.slot));
    w.str(key.cui.str());
  }
  w.u32(static_cast<std::uint32_t>(model.trees.size()));
  for (const auto& tree : model.trees) {
    w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
    for (const auto& node : tree.nodes) {
      if (node.is_leaf()) {
        w.u8(0);
        w.u32(node.true_count);
        w.u32(node.false_count);
      } else {
        w.u8(1);
        w.u32(static_cast<std::uint32_t>(node.feature));
        w.u32(node.left);
        w.u32(node.right);
      }
    }
  }
  w.u32(crc32(w.bytes()));
  return std::move(w.bytes());
}

ForestModel deserialize_model(std::string_view bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ParseError("not a forest model file (bad magic)");
  Reader header(bytes.substr(4, 4));
  const auto version = header.u32();
  if (version != kModelVersion)
    throw VersionError("unsupported model version: expected " + std::to_string(kModelVersion) + ", found " +
                       std::to_string(version));
  if (bytes.size() < 12) throw ParseError("model file truncated");
  const auto body = bytes.substr(0, bytes.size() - 4);
  Reader trailer(bytes.substr(bytes.size() - 4));
  if (crc32(body) != trailer.u32()) throw ParseError("model checksum mismatch (truncated or corrupt)");

  Reader r(body.substr(8));
  ForestModel model;
  try {
    model.condition_cui = Cui(r.str());
    model.params.n_trees = r.u32();
    if (auto mf = r.u32(); mf != 0) model.params.max_features = mf;
    model.params.min_leaf = r.u32();
    model.params.max_depth = r.u32();
    const auto bootstrap = r.u8();
    if (bootstrap > 1) throw ParseError("bad bootstrap flag");
    model.params.bootstrap = bootstrap == 1;
    check_params(model.params);
    model.seed = r.u64();

    const auto vocab_size = r.u32();
    if (vocab_size > r.remaining()) throw ParseError("vocabulary size exceeds file size");
    std::vector<FeatureKey> keys;
    keys.reserve(vocab_size);
    for (std::uint32_t i = 0; i < vocab_size; ++i) {
      const auto slot = r.u8();
      if (slot > 1) throw ParseError("bad feature slot");
      keys.push_back(FeatureKey{static_cast<Slot>(slot), Cui(r.str())});
    }
    model.vocab = FeatureVocab(std::move(keys));

    const auto tree_count = r.u32();
    if (tree_count != model.params.n_trees) throw ParseError("tree count does not match n_trees");
    model.trees.resize(tree_count);
    for (auto& tree : model.trees) {
      const auto node_count = r.u32();
      if (node_count == 0 || node_count > r.remaining()) throw ParseError("bad node count");
      tree.nodes.resize(node_count);
      for (std::uint32_t i = 0; i < node_count; ++i) {
        auto& node = tree.nodes[i];
        const auto kind = r.u8();
        if (kind == 0) {
          node.true_count = r.u32();
          node.false_count = r.u32();
        } else if (kind == 1) {
          const auto feature = r.u32();
          node.left = r.u32();
          node.right = r.u32();
          if (feature >= vocab_size) throw ParseError("split feature outside the vocabulary");
          if (node.left <= i || node.right <= i || node.left >= node_count || node.right >= node_count)
            throw ParseError("bad child index");
          node.feature = static_cast<std::int32_t>(feature);
        } else {
          throw ParseError("bad node kind");
        }
      }
    }
  } catch (const ValidationError& e) {
    throw ParseError(std::string("invalid model: ") + e.what());
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("invalid model: ") + e.what());
  }
  if (r.remaining() != 0) throw ParseError("trailing bytes after model");
  return model;
}

}  // namespace comorbid::filtermodel
