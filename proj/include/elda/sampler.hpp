#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "elda/document.hpp"
#include "elda/model.hpp"
#include "elda/rng.hpp"

namespace elda {

// Per-document sampling machinery. The collapsed per-topic mass at a word
// position decomposes into four parts,
//   mu_d  = alpha * exp(psi(beta)) / kappa'_k          (document-independent, dense)
//   mu_v  = alpha * kappa_kv / kappa'_k                (per distinct symbol, sparse)
//   mu_c  = N_k * exp(psi(beta)) / kappa'_k            (per assigned topic)
//   mu_cv = N_k * kappa_kv / kappa'_k                  (assigned-topic/symbol overlap)
// and draws walk the sparse parts first so the expected number of evaluated
// cells tracks document sparsity, not the topic count.

struct SymbolSlot {
  Vocab stream = Vocab::word;
  std::string symbol;
  Row kappa;   // empty when the symbol has no model row
  Row mu_v;    // alpha * kappa / kappa', sorted by topic
  double z_v = 0;
};

struct SamplerStats {
  uint64_t draws = 0;
  uint64_t cells = 0;          // topic cells examined across all draws
  uint64_t sparse_draws = 0;   // draws resolved before the dense component
  uint64_t sparse_cells = 0;
  uint64_t zero_mass_draws = 0;

  void accumulate(const SamplerStats& o) {
    draws += o.draws;
    cells += o.cells;
    sparse_draws += o.sparse_draws;
    sparse_cells += o.sparse_cells;
    zero_mass_draws += o.zero_mass_draws;
  }
};

struct SamplerWorkspace {
  Hyperparams hp;
  std::array<double, 2> exp_psi_beta{};               // by Vocab
  std::array<const std::vector<double>*, 2> kappa_prime{};  // size K each
  std::array<std::vector<double>, 2> mu_d;            // dense, by Vocab
  std::array<double, 2> z_d{};
  std::vector<SymbolSlot> slots;
  std::vector<uint32_t> word_slot;     // word position -> slot
  std::vector<uint32_t> mention_slot;  // mention position -> slot
  SamplerStats stats;
};

// Resolves the document's distinct symbols against the per-vocabulary
// transforms and precomputes mu_d and the per-symbol mu_v vectors.
// The transforms must outlive the workspace.
SamplerWorkspace precompute_static(const Document& doc, const TransformedModel& words,
                                   const TransformedModel& mentions, const Hyperparams& hp);

// Current assignment. n_k counts every position of both streams; n_slot[s]
// holds the per-symbol topic counts, so summing n_slot matches n_k.
struct AssignmentState {
  std::vector<uint32_t> z_word;
  std::vector<uint32_t> z_mention;
  CountMap n_k;
  std::vector<CountMap> n_slot;
  std::array<double, 2> c_sum{};  // sum_k N_k / kappa'_s[k], per stream

  void rebuild(const SamplerWorkspace& ws);
  void add(const SamplerWorkspace& ws, uint32_t slot, uint32_t topic);
  void remove(const SamplerWorkspace& ws, uint32_t slot, uint32_t topic);
};

// Coherence hook: returns the weight for `candidate` given the rest of the
// document's assignment (position under resample already removed).
using CoherenceFn =
    std::function<double(uint32_t candidate, const CountMap& others, std::optional<uint32_t> excluded)>;

// Observer invoked before each draw; used by equivalence tests.
struct StepView {
  Vocab stream;
  const std::string* symbol;
  const CountMap* n_k;  // with the position removed
  std::optional<uint32_t> excluded;
  double z_d, z_v, z_c, z_cv, z_total;
  std::function<double(uint32_t)> mu_d, mu_v, mu_c, mu_cv;  // per-topic component values
};
using StepInspector = std::function<void(const StepView&)>;

// Draws a topic for one position. The position's previous topic must already
// be removed from `st`; `excluded` is that topic. Exact boundary hits resolve
// to the lower topic id. Zero total mass falls back to a uniform draw over the
// document's assigned topics (uniform over all topics if none).
uint32_t sample_position(SamplerWorkspace& ws, AssignmentState& st, uint32_t slot,
                         std::optional<uint32_t> excluded, const CoherenceFn* coherence,
                         Rng& rng, const StepInspector* inspector = nullptr);

struct DocResult {
  UpdateCounts update;                 // integer sweep-count sums, divisor = sweeps - burnin
  std::vector<uint32_t> final_z_word;
  std::vector<uint32_t> final_z_mention;
  std::vector<uint32_t> mention_pred;  // per-position mode over kept sweeps
  SamplerStats stats;
};

// Runs hp.sweeps Gibbs sweeps from the given initial assignment, averaging
// per-sweep counts after burn-in. Requires burnin < sweeps.
DocResult run_document(const Document& doc, const std::vector<uint32_t>& z0_word,
                       const std::vector<uint32_t>& z0_mention, SamplerWorkspace& ws,
                       const CoherenceFn* coherence, Rng& rng,
                       const StepInspector* inspector = nullptr);

// Production coherence hook: mean similarity of the candidate to the rest of
// the document's assigned topics (see kb coherence).
CoherenceFn make_coherence_fn(const SimilarityCache& sim);

}  // namespace elda
