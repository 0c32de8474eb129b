#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "elda/document.hpp"
#include "elda/model.hpp"

namespace elda {

struct EvalReport {
  double micro = 0;      // sum correct / sum total
  double macro = 0;      // mean per-doc accuracy over docs with >= 1 gold mention
  double micro_std = 0;  // bootstrap standard deviation of micro
  std::vector<std::tuple<std::string, uint32_t, uint32_t>> per_doc;  // (doc id, correct, total)

  // human-readable block followed by machine-readable key=value lines
  std::string text() const;
};

// Most likely topic for the mention under the stored model row, lowest id on
// ties; -1 when the model has no row (counted as wrong by score()).
int64_t baseline_predict(const std::string& mention, const SparseModel& model);

// Compares predictions to gold by (doc id, mention index). Every gold record
// needs a matching prediction; the first one missing names the failure.
// Bootstrap: `resamples` draws of the gold mention set with replacement.
EvalReport score(const std::vector<Annotation>& predictions, const std::vector<GoldRecord>& gold,
                 uint64_t bootstrap_seed, uint32_t resamples = 1000);

// Left-to-right estimate of log p(doc | model), nats. Positions are consumed
// words first, then mentions; each position's predictive probability is
// averaged over `particles` sequential assignments, then the particles extend
// by one sampled topic. Empty documents score 0.
double left_to_right_ll(const Document& doc, const SparseModel& model, uint32_t particles,
                        uint64_t seed);

}  // namespace elda
