#pragma once

#include <cstdint>
#include <vector>

#include "elda/document.hpp"
#include "elda/kb.hpp"
#include "elda/model.hpp"
#include "elda/rng.hpp"

namespace elda {

// Relatedness vote cast by mention position j for `candidate`: the mean over
// j's candidate topics k' of sim(candidate, k') * (lambda_hat_{k',w_j} + beta).
// A mention without a model row casts a zero vote.
double tagme_votes(const Document& doc, size_t j, uint32_t candidate,
                   const RowMap& mention_rows, double beta_mention, const SimilarityCache& sim);

struct TagmeInit {
  std::vector<uint32_t> z_word;
  std::vector<uint32_t> z_mention;
};

// Voting-based initial assignment. Each mention position keeps the candidates
// whose total vote from the other mentions reaches epsilon * max vote and
// whose within-row probability reaches tau, then takes the kept candidate
// with the largest lambda_hat (ties to the lower topic id). An empty keep set
// falls back to the unfiltered argmax; a mention or word without a model row
// draws uniformly over all topics. Words take their row argmax directly.
TagmeInit tagme_init(const Document& doc, const RowMap& word_rows, const RowMap& mention_rows,
                     const Hyperparams& hp, const SimilarityCache& sim, Rng& rng);

}  // namespace elda
