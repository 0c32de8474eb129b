#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "elda/document.hpp"
#include "elda/kb.hpp"
#include "elda/model.hpp"
#include "elda/sampler.hpp"
#include "elda/sorted_table.hpp"

namespace elda {

// Self-contained unit of map work: the document, the model rows for every
// symbol it contains (empty for unmodeled symbols), and the similarity edges
// among its mention-candidate topics. Running the sampler on a packet needs
// nothing else beyond the dense per-topic sums and hyperparameters.
struct DocumentPacket {
  Document doc;
  RowMap word_rows;
  RowMap mention_rows;
  std::vector<SimEdge> edges;
};

std::string encode_packet(const DocumentPacket& p);
DocumentPacket decode_packet(const std::string& doc_id, const std::string& value);

// Inverted index: corpus table ("D/<id>" -> doc) to symbol table
// ("W/<word>" / "M/<mention>" -> ascending list of doc ids, one incidence per
// doc regardless of token multiplicity).
void rekey_by_symbol(const std::filesystem::path& corpus, const std::filesystem::path& out);

// Outer join of the symbol index against a model table. Output is keyed by
// "D/<id>"; each value bundles (symbol key, row bytes) for every symbol in the
// document, with empty row bytes for symbols the model does not store.
void join_model(const std::filesystem::path& symbol_index,
                const std::filesystem::path& model_table, const std::filesystem::path& out);

// Merges the corpus with the parameter bundles and attaches the similarity
// edges over each document's mention-candidate topics, producing the packet
// table ("D/<id>" -> DocumentPacket).
void join_graph(const std::filesystem::path& corpus, const std::filesystem::path& bundles,
                const KnowledgeBase& kb, const std::filesystem::path& out);

struct ShardOutput {
  UpdateCounts update;
  std::vector<Annotation> annotations;
  SamplerStats stats;
};

// Sequential SVI pass over one shard's packets in doc-id order: per document
// transform, vote-based init, Gibbs sampling, then local interpolation when
// rho_local > 0. The shard-local model is assembled from the packets alone.
ShardOutput map_shard(const std::vector<DocumentPacket>& packets,
                      const std::vector<double>& sums_word,
                      const std::vector<double>& sums_mention, const Hyperparams& hp,
                      uint64_t seed, uint32_t iteration);

// Sums shard updates entrywise (exact integer addition, ascending shard
// index) into an update table keyed like a model file.
void reduce_updates(const std::vector<ShardOutput>& shards, const std::filesystem::path& out);
UpdateCounts read_update_table(const std::filesystem::path& path, uint32_t divisor);

struct IterationResult {
  SparseModel model;
  std::vector<Annotation> annotations;  // sorted by (doc id, mention index)
  SamplerStats stats;
};

// One full training iteration: rekey -> join_model -> join_graph -> shard by
// fnv1a64(doc id) % num_shards -> map (up to `workers` shards concurrently)
// -> reduce -> global interpolation. All intermediate tables live under
// workdir and are removed before returning, also on error; the input model is
// never modified.
IterationResult run_iteration(const std::filesystem::path& corpus, const SparseModel& model,
                              const KnowledgeBase& kb, uint32_t num_shards, uint32_t workers,
                              uint64_t seed, uint32_t iteration,
                              const std::filesystem::path& workdir);

}  // namespace elda
