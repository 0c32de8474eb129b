#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "elda/common.hpp"

namespace elda {

// (topic id, count) rows, sorted ascending by topic id, counts >= 1.
using CountRow = std::vector<std::pair<uint32_t, uint32_t>>;

// Article store: one topic per article. Immutable after load; concurrent
// reads are unrestricted.
struct KnowledgeBase {
  std::vector<std::string> titles;                // index is the topic id
  std::vector<std::vector<uint32_t>> in_links;    // sorted, self-free
  std::map<std::string, CountRow> mention_counts; // anchor text -> topic counts
  std::map<std::string, CountRow> word_counts;    // content word -> topic counts

  uint32_t num_topics() const { return static_cast<uint32_t>(titles.size()); }

  void validate() const;  // throws std::invalid_argument on broken invariants
  void save(const std::filesystem::path& path) const;
  static KnowledgeBase load(const std::filesystem::path& path);
};

// In-link set overlap score in [0, 1]; 0 for disjoint sets, 1 for a == b with
// a nonempty in-link set.
double google_similarity(const KnowledgeBase& kb, uint32_t a, uint32_t b);

struct SimEdge {
  uint32_t a, b;  // a <= b
  double sim;
};

// Fixed pair -> similarity table scoped to one document's candidate topics.
// Pairs outside the table score 0. Immutable after build, so concurrent
// readers need no coordination; each worker builds its own per document.
class SimilarityCache {
 public:
  SimilarityCache() = default;

  static SimilarityCache over_topics(const KnowledgeBase& kb,
                                     const std::vector<uint32_t>& topics);
  static SimilarityCache from_edges(const std::vector<SimEdge>& edges);

  double sim(uint32_t a, uint32_t b) const {
    if (a > b) std::swap(a, b);
    auto it = pairs_.find((static_cast<uint64_t>(a) << 32) | b);
    return it == pairs_.end() ? 0.0 : it->second;
  }

  std::vector<SimEdge> edges() const;
  size_t size() const { return pairs_.size(); }

 private:
  std::unordered_map<uint64_t, double> pairs_;
};

// Mean similarity of `candidate` to the topics assigned elsewhere in the
// document. `others` holds the assignment multiset with the resampled
// position already removed; `excluded` is that position's previous topic.
// Returns 1.0 when there is nothing to compare against.
double coherence(uint32_t candidate, const CountMap& others, std::optional<uint32_t> excluded,
                 const SimilarityCache& sim);

struct SyntheticKbOptions {
  uint32_t num_topics = 100;
  uint32_t vocab_words = 500;
  uint32_t vocab_mentions = 200;
  double ambiguity = 3.0;       // mean candidate topics per mention, >= 1
  uint64_t seed = 1;
  uint32_t groups = 0;          // 0: one group per ~10 topics
  double in_group_bias = 0.85;  // share of in-links drawn within the group
  double word_ambiguity = 2.0;  // mean topics per content word
};

// Random article graph with block structure: topics fall into groups, in-links
// stay mostly inside the group, mentions spread candidates across groups while
// words stay group-local. Every topic ends up with at least one in-link, one
// word and one mention.
KnowledgeBase generate_synthetic_kb(const SyntheticKbOptions& opts);

}  // namespace elda
