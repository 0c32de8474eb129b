#pragma once

#include <cstdint>
#include <string>

namespace elda {

enum class Vocab : uint8_t { word = 0, mention = 1 };

struct Hyperparams {
  double alpha = 1e-3;
  double beta_word = 1e-5;
  double beta_mention = 1e-5;
  uint32_t num_topics = 0;
  uint32_t vocab_words = 0;
  uint32_t vocab_mentions = 0;
  uint32_t sweeps = 50;    // Gibbs sweeps per document
  uint32_t burnin = 10;    // sweeps discarded before averaging
  uint32_t iterations = 1; // outer passes over the corpus
  uint32_t top_topics_per_word = 500;
  double rho_local = 0.05;
  double rho_global = 0.5;
  double epsilon = 0.25;  // candidate filter: relatedness floor, fraction of max
  double tau = 0.02;      // candidate filter: prior probability floor
  bool use_coherence = false;
  bool coherence_words = false;  // also weight content-word sampling

  double beta(Vocab v) const { return v == Vocab::word ? beta_word : beta_mention; }
  uint32_t vocab_size(Vocab v) const { return v == Vocab::word ? vocab_words : vocab_mentions; }

  void validate() const;  // throws std::invalid_argument

  std::string encode() const;  // little-endian fixed-width record value
  static Hyperparams decode(const std::string& value);
};

}  // namespace elda
