#pragma once

#include <cstdint>
#include <vector>

#include "elda/document.hpp"
#include "elda/kb.hpp"

namespace elda {

struct GenOptions {
  uint32_t num_docs = 100;
  double mean_words = 30;     // Poisson document lengths
  double mean_mentions = 8;   // Poisson, floored at 1 so every doc is gradable
  double alpha = 0.5;         // Dirichlet weight over the doc's topic support
  uint32_t support = 8;       // max topics per document (seed + graph neighbors)
  uint64_t seed = 1;
};

struct GeneratedCorpus {
  std::vector<Document> docs;   // ids "d000000", "d000001", ...
  std::vector<GoldRecord> gold; // one record per mention position
};

// Runs the generative story forward against the KB: each document draws a
// seed topic, widens it to the graph-similar support, draws theta over that
// support, then draws every token's topic from theta and its symbol from the
// topic's KB count distribution. Gold labels are the generating topics.
// Requires every KB topic to carry at least one word and one mention count.
GeneratedCorpus generate_corpus(const KnowledgeBase& kb, const GenOptions& opts);

}  // namespace elda
