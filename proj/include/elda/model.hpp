#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "elda/hyperparams.hpp"
#include "elda/kb.hpp"

namespace elda {

// (topic id, value) rows, sorted ascending by topic id, values > 0.
using Row = std::vector<std::pair<uint32_t, double>>;
using RowMap = std::map<std::string, Row>;

// Centered variational parameters: stored values are lambda_hat = lambda - beta,
// so an absent entry means lambda = beta exactly. Topic sums are kept per
// vocabulary and must match the stored entries.
struct SparseModel {
  Hyperparams hp;
  RowMap words;
  RowMap mentions;
  std::vector<double> sums_word;     // size num_topics
  std::vector<double> sums_mention;  // size num_topics

  RowMap& rows(Vocab v) { return v == Vocab::word ? words : mentions; }
  const RowMap& rows(Vocab v) const { return v == Vocab::word ? words : mentions; }
  std::vector<double>& sums(Vocab v) { return v == Vocab::word ? sums_word : sums_mention; }
  const std::vector<double>& sums(Vocab v) const {
    return v == Vocab::word ? sums_word : sums_mention;
  }

  // deterministic order: vocab, then symbol ascending, then topic ascending
  void recompute_sums();
  void check_consistency(double tol = 1e-9) const;  // throws NumericError

  void save(const std::filesystem::path& path) const;
  static SparseModel load(const std::filesystem::path& path);
};

// lambda_hat_kv = P(k | v), the topic posterior of each symbol estimated from
// KB co-occurrence counts. Word rows keep only the top hp.top_topics_per_word
// topics by P(k | v) (ties to the lower topic id); mention rows are complete.
SparseModel init_from_kb(const KnowledgeBase& kb, Hyperparams hp);

// Row wire format: (u32 topic, f64 value) pairs, topics ascending.
std::string encode_row(const Row& row);
Row decode_row(const std::string& value, const std::string& key);

// Per-vocabulary transform used by the sampler:
//   kappa_kv    = exp(psi(beta + lambda_hat_kv)) - exp(psi(beta))
//   kappa_prime = exp(psi(V * beta + lambda_hat_k.))
struct TransformedModel {
  double exp_psi_beta = 0;
  RowMap kappa;                      // same support as the model rows
  std::vector<double> kappa_prime;   // size num_topics
};

TransformedModel transform(const SparseModel& model, Vocab vocab);

// One κ row for a single symbol, computed against the given exp(psi(beta)).
Row transform_row(const Row& model_row, double beta, double exp_psi_beta);
std::vector<double> transform_kappa_prime(const std::vector<double>& sums, double beta,
                                          uint32_t vocab_size);

// Per-document (or per-shard) update expressed as integer sweep-count sums
// plus the common divisor (sweeps - burnin). Keeping the counts integral makes
// cross-document accumulation exact, so reduce results cannot depend on how
// documents were grouped.
struct UpdateCounts {
  using IntRow = std::vector<std::pair<uint32_t, int64_t>>;  // sorted by topic
  std::map<std::string, IntRow> words;
  std::map<std::string, IntRow> mentions;
  uint32_t divisor = 1;

  std::map<std::string, IntRow>& rows(Vocab v) { return v == Vocab::word ? words : mentions; }
  const std::map<std::string, IntRow>& rows(Vocab v) const {
    return v == Vocab::word ? words : mentions;
  }

  bool empty() const { return words.empty() && mentions.empty(); }
  void merge(const UpdateCounts& other);          // exact integer addition
  RowMap materialize(Vocab v) const;              // value = count / divisor
};

// In-place stochastic update of a shard-local model after one document:
//   lambda_hat <- (1 - rho) * lambda_hat + rho * shard_docs * lambda_hat_doc
// Every stored entry decays; entries falling below 1e-12 are pruned. Topic
// sums are maintained incrementally. rho = 0 leaves the model untouched.
void interpolate_local(SparseModel& local, const UpdateCounts& doc_update, double rho_local,
                       uint64_t shard_docs);

// Global step over per-shard updates:
//   lambda_hat_t = (1 - rho) * lambda_hat_{t-1} + (rho / M) * sum_m update_m
// Shard updates are merged with exact integer addition before the single
// division, entries below 1e-12 are pruned, and topic sums are recomputed.
SparseModel interpolate_global(const SparseModel& prev, const std::vector<UpdateCounts>& updates,
                               uint32_t num_shards, double rho_global);

}  // namespace elda
