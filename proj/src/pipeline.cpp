#include "elda/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <set>
#include <thread>

#include "elda/digamma.hpp"
#include "elda/rng.hpp"
#include "elda/tagme.hpp"

namespace elda {

namespace fs = std::filesystem;

namespace {

constexpr char kDocPrefix[] = "D/";

std::string doc_id_of(const std::string& key, const char* stage) {
  if (key.rfind(kDocPrefix, 0) != 0)
    throw DataError(std::string(stage) + ": unexpected key \"" + key + "\"");
  return key.substr(2);
}

bool is_symbol_key(const std::string& key) {
  return key.rfind("W/", 0) == 0 || key.rfind("M/", 0) == 0;
}

// Removes registered paths when the scope ends, errors included.
struct TempFiles {
  std::vector<fs::path> paths;
  fs::path track(fs::path p) {
    paths.push_back(p);
    return p;
  }
  ~TempFiles() {
    std::error_code ec;
    for (const auto& p : paths) fs::remove(p, ec);
  }
};

}  // namespace

std::string encode_packet(const DocumentPacket& p) {
  std::string v;
  put_str(v, encode_document(p.doc));
  for (const RowMap* rows : {&p.word_rows, &p.mention_rows}) {
    put_u32(v, static_cast<uint32_t>(rows->size()));
    for (const auto& [sym, row] : *rows) {
      put_str(v, sym);
      put_str(v, encode_row(row));
    }
  }
  put_u32(v, static_cast<uint32_t>(p.edges.size()));
  for (const SimEdge& e : p.edges) {
    put_u32(v, e.a);
    put_u32(v, e.b);
    put_f64(v, e.sim);
  }
  return v;
}

DocumentPacket decode_packet(const std::string& doc_id, const std::string& value) {
  ByteReader r(value, "packet \"" + doc_id + "\"");
  DocumentPacket p;
  p.doc = decode_document(doc_id, r.str());
  for (RowMap* rows : {&p.word_rows, &p.mention_rows}) {
    uint32_t n = r.u32();
    for (uint32_t i = 0; i < n; ++i) {
      std::string sym = r.str();
      std::string bytes = r.str();
      if (!bytes.empty()) rows->emplace(std::move(sym), decode_row(bytes, doc_id));
    }
  }
  uint32_t ne = r.u32();
  p.edges.reserve(ne);
  for (uint32_t i = 0; i < ne; ++i) {
    SimEdge e;
    e.a = r.u32();
    e.b = r.u32();
    e.sim = r.f64();
    p.edges.push_back(e);
  }
  r.expect_done();
  return p;
}

void rekey_by_symbol(const fs::path& corpus, const fs::path& out) {
  std::map<std::string, std::vector<std::string>> index;
  SortedTableReader reader(corpus);
  while (auto rec = reader.next()) {
    std::string id = doc_id_of(rec->key, "rekey_by_symbol");
    if (id.find('\x1f') != std::string::npos)
      throw DataError("rekey_by_symbol: doc id contains reserved byte 0x1f: \"" + id + "\"");
    Document doc = decode_document(id, rec->value);
    std::set<std::string> keys;
    for (const auto& w : doc.words) keys.insert("W/" + w);
    for (const auto& m : doc.mentions) keys.insert("M/" + m);
    // corpus keys ascend, so each per-symbol doc list stays sorted and unique
    for (const auto& k : keys) index[k].push_back(id);
  }
  SortedTableWriter writer(out);
  for (const auto& [sym, ids] : index) {
    std::string v;
    put_u32(v, static_cast<uint32_t>(ids.size()));
    for (const auto& id : ids) put_str(v, id);
    writer.add(sym, v);
  }
  writer.finish();
}

void join_model(const fs::path& symbol_index, const fs::path& model_table, const fs::path& out) {
  // doc id -> (symbol key, row bytes), accumulated in ascending symbol order
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> bundles;
  merge_join(symbol_index, model_table,
             [&](const std::string& key, const std::optional<std::string>& left,
                 const std::optional<std::string>& right) {
               if (!left) return;  // model-only key: no document needs it
               if (!is_symbol_key(key))
                 throw DataError("join_model: unexpected index key \"" + key + "\"");
               ByteReader r(*left, "symbol index \"" + key + "\"");
               uint32_t n = r.u32();
               const std::string row = right.value_or(std::string());
               for (uint32_t i = 0; i < n; ++i) bundles[r.str()].emplace_back(key, row);
               r.expect_done();
             });
  SortedTableWriter writer(out);
  for (const auto& [id, entries] : bundles) {
    std::string v;
    put_u32(v, static_cast<uint32_t>(entries.size()));
    for (const auto& [sym, row] : entries) {
      put_str(v, sym);
      put_str(v, row);
    }
    writer.add(kDocPrefix + id, v);
  }
  writer.finish();
}

void join_graph(const fs::path& corpus, const fs::path& bundles, const KnowledgeBase& kb,
                const fs::path& out) {
  SortedTableWriter writer(out);
  merge_join(corpus, bundles,
             [&](const std::string& key, const std::optional<std::string>& doc_bytes,
                 const std::optional<std::string>& bundle) {
               if (!doc_bytes) throw DataError("join_graph: bundle for unknown document " + key);
               std::string id = doc_id_of(key, "join_graph");
               DocumentPacket p;
               p.doc = decode_document(id, *doc_bytes);
               if (bundle) {
                 ByteReader r(*bundle, "bundle \"" + key + "\"");
                 uint32_t n = r.u32();
                 for (uint32_t i = 0; i < n; ++i) {
                   std::string sym = r.str();
                   std::string row = r.str();
                   if (row.empty()) continue;
                   RowMap& rows = sym[0] == 'W' ? p.word_rows : p.mention_rows;
                   rows.emplace(sym.substr(2), decode_row(row, sym));
                 }
                 r.expect_done();
               }
               std::set<uint32_t> cand;
               for (const auto& [sym, row] : p.mention_rows)
                 for (const auto& [t, x] : row) cand.insert(t);
               std::vector<uint32_t> topics(cand.begin(), cand.end());
               p.edges = SimilarityCache::over_topics(kb, topics).edges();
               writer.add(key, encode_packet(p));
             });
  writer.finish();
}

ShardOutput map_shard(const std::vector<DocumentPacket>& packets,
                      const std::vector<double>& sums_word,
                      const std::vector<double>& sums_mention, const Hyperparams& hp,
                      uint64_t seed, uint32_t iteration) {
  SparseModel local;
  local.hp = hp;
  local.sums_word = sums_word;
  local.sums_mention = sums_mention;
  for (const DocumentPacket& p : packets) {
    for (const auto& [sym, row] : p.word_rows) local.words.emplace(sym, row);
    for (const auto& [sym, row] : p.mention_rows) local.mentions.emplace(sym, row);
  }

  const bool frozen = hp.rho_local == 0.0;
  std::array<double, 2> exp_psi_beta{std::exp(digamma(hp.beta_word)),
                                     std::exp(digamma(hp.beta_mention))};
  std::array<std::vector<double>, 2> kappa_prime;
  std::array<RowMap, 2> kappa_cache;  // valid only while the local model is frozen
  for (Vocab s : {Vocab::word, Vocab::mention})
    kappa_prime[static_cast<int>(s)] =
        transform_kappa_prime(local.sums(s), hp.beta(s), hp.vocab_size(s));

  ShardOutput out;
  out.update.divisor = hp.sweeps - hp.burnin;
  for (const DocumentPacket& p : packets) {
    const Document& doc = p.doc;
    try {
      if (!frozen)
        for (Vocab s : {Vocab::word, Vocab::mention})
          kappa_prime[static_cast<int>(s)] =
              transform_kappa_prime(local.sums(s), hp.beta(s), hp.vocab_size(s));

      std::array<TransformedModel, 2> tm;
      for (Vocab s : {Vocab::word, Vocab::mention}) {
        const int si = static_cast<int>(s);
        tm[si].exp_psi_beta = exp_psi_beta[si];
        tm[si].kappa_prime = kappa_prime[si];
        const auto& tokens = s == Vocab::word ? doc.words : doc.mentions;
        const RowMap& rows = local.rows(s);
        for (const std::string& tok : tokens) {
          if (tm[si].kappa.count(tok)) continue;
          auto rit = rows.find(tok);
          if (rit == rows.end()) continue;
          if (frozen) {
            auto cit = kappa_cache[si].find(tok);
            if (cit == kappa_cache[si].end())
              cit = kappa_cache[si]
                        .emplace(tok, transform_row(rit->second, hp.beta(s), exp_psi_beta[si]))
                        .first;
            tm[si].kappa.emplace(tok, cit->second);
          } else {
            tm[si].kappa.emplace(tok, transform_row(rit->second, hp.beta(s), exp_psi_beta[si]));
          }
        }
      }

      SimilarityCache sim = SimilarityCache::from_edges(p.edges);
      Rng rng(derive_seed(seed, doc.id, iteration, kSaltTrain));
      TagmeInit z0 = tagme_init(doc, local.words, local.mentions, hp, sim, rng);

      CoherenceFn coh;
      const CoherenceFn* coh_ptr = nullptr;
      if (hp.use_coherence) {
        coh = make_coherence_fn(sim);
        coh_ptr = &coh;
      }

      SamplerWorkspace ws = precompute_static(doc, tm[0], tm[1], hp);
      DocResult res = run_document(doc, z0.z_word, z0.z_mention, ws, coh_ptr, rng);

      for (size_t i = 0; i < doc.mentions.size(); ++i)
        out.annotations.push_back(Annotation{doc.id, static_cast<uint32_t>(i), doc.mentions[i],
                                             static_cast<int64_t>(res.mention_pred[i])});
      out.update.merge(res.update);
      out.stats.accumulate(res.stats);

      if (!frozen) interpolate_local(local, res.update, hp.rho_local, packets.size());
    } catch (const DataError& e) {
      throw DataError("document \"" + doc.id + "\": " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("document \"" + doc.id + "\": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("document \"" + doc.id + "\": " + e.what());
    }
  }
  return out;
}

void reduce_updates(const std::vector<ShardOutput>& shards, const fs::path& out) {
  UpdateCounts total;
  for (const ShardOutput& s : shards) total.merge(s.update);
  SortedTableWriter writer(out);
  for (Vocab vocab : {Vocab::mention, Vocab::word}) {
    const char* prefix = vocab == Vocab::mention ? "M/" : "W/";
    for (const auto& [sym, row] : total.rows(vocab)) {
      std::string v;
      for (const auto& [t, c] : row) {
        put_u32(v, t);
        put_i64(v, c);
      }
      writer.add(prefix + sym, v);
    }
  }
  writer.finish();
}

UpdateCounts read_update_table(const fs::path& path, uint32_t divisor) {
  UpdateCounts total;
  total.divisor = divisor;
  SortedTableReader reader(path);
  while (auto rec = reader.next()) {
    if (!is_symbol_key(rec->key))
      throw DataError("update table: unexpected key \"" + rec->key + "\"");
    if (rec->value.size() % 12 != 0)
      throw DataError("update table: bad value length for key \"" + rec->key + "\"");
    ByteReader r(rec->value, "update key \"" + rec->key + "\"");
    UpdateCounts::IntRow row;
    uint32_t prev = 0;
    bool first = true;
    while (!r.done()) {
      uint32_t t = r.u32();
      int64_t c = r.i64();
      if (!first && t <= prev)
        throw DataError("update table: unsorted topics in key \"" + rec->key + "\"");
      prev = t;
      first = false;
      row.emplace_back(t, c);
    }
    auto& rows = rec->key[0] == 'M' ? total.mentions : total.words;
    rows.emplace(rec->key.substr(2), std::move(row));
  }
  return total;
}

IterationResult run_iteration(const fs::path& corpus, const SparseModel& model,
                              const KnowledgeBase& kb, uint32_t num_shards, uint32_t workers,
                              uint64_t seed, uint32_t iteration, const fs::path& workdir) {
  if (num_shards == 0) throw std::invalid_argument("run_iteration: num_shards must be >= 1");
  if (workers == 0) workers = num_shards;
  fs::create_directories(workdir);

  TempFiles tmp;
  fs::path model_t = tmp.track(workdir / "model.stbl");
  fs::path symbols_t = tmp.track(workdir / "symbols.stbl");
  fs::path bundles_t = tmp.track(workdir / "bundles.stbl");
  fs::path packets_t = tmp.track(workdir / "packets.stbl");
  fs::path update_t = tmp.track(workdir / "update.stbl");

  model.save(model_t);
  rekey_by_symbol(corpus, symbols_t);
  join_model(symbols_t, model_t, bundles_t);
  join_graph(corpus, bundles_t, kb, packets_t);

  std::vector<std::vector<DocumentPacket>> shards(num_shards);
  {
    SortedTableReader reader(packets_t);
    while (auto rec = reader.next()) {
      std::string id = doc_id_of(rec->key, "shard split");
      uint32_t m = static_cast<uint32_t>(fnv1a64(id) % num_shards);
      shards[m].push_back(decode_packet(id, rec->value));
    }
  }

  std::vector<ShardOutput> outs(num_shards);
  std::vector<std::exception_ptr> errors(num_shards);
  for (uint32_t base = 0; base < num_shards; base += workers) {
    uint32_t wave = std::min(workers, num_shards - base);
    std::vector<std::thread> threads;
    threads.reserve(wave);
    for (uint32_t i = 0; i < wave; ++i) {
      uint32_t m = base + i;
      threads.emplace_back([&, m]() {
        try {
          outs[m] = map_shard(shards[m], model.sums_word, model.sums_mention, model.hp, seed,
                              iteration);
        } catch (...) {
          errors[m] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  reduce_updates(outs, update_t);
  UpdateCounts total = read_update_table(update_t, model.hp.sweeps - model.hp.burnin);

  IterationResult res;
  res.model = interpolate_global(model, {total}, 1, model.hp.rho_global);
  for (ShardOutput& s : outs) {
    res.annotations.insert(res.annotations.end(), s.annotations.begin(), s.annotations.end());
    res.stats.accumulate(s.stats);
  }
  std::sort(res.annotations.begin(), res.annotations.end(), [](const auto& a, const auto& b) {
    return a.doc_id != b.doc_id ? a.doc_id < b.doc_id : a.mention_index < b.mention_index;
  });
  return res;
}

}  // namespace elda
