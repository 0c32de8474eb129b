#include "elda/model.hpp"

#include <algorithm>
#include <cmath>

#include "elda/common.hpp"
#include "elda/digamma.hpp"
#include "elda/sorted_table.hpp"

namespace elda {

static constexpr double kPruneThreshold = 1e-12;

void SparseModel::recompute_sums() {
  sums_word.assign(hp.num_topics, 0.0);
  sums_mention.assign(hp.num_topics, 0.0);
  for (const auto& [w, row] : words)
    for (const auto& [t, v] : row) sums_word[t] += v;
  for (const auto& [m, row] : mentions)
    for (const auto& [t, v] : row) sums_mention[t] += v;
}

void SparseModel::check_consistency(double tol) const {
  SparseModel copy;
  copy.hp = hp;
  for (Vocab vocab : {Vocab::word, Vocab::mention}) {
    std::vector<double> fresh(hp.num_topics, 0.0);
    for (const auto& [sym, row] : rows(vocab)) {
      (void)sym;
      for (const auto& [t, v] : row) {
        if (!(v > 0)) throw NumericError("model: non-positive stored entry");
        fresh[t] += v;
      }
    }
    const auto& stored = sums(vocab);
    for (uint32_t t = 0; t < hp.num_topics; ++t)
      if (std::abs(fresh[t] - stored[t]) > tol)
        throw NumericError("model: topic sums drifted from entries");
  }
}

SparseModel init_from_kb(const KnowledgeBase& kb, Hyperparams hp) {
  if (kb.num_topics() == 0 || (kb.word_counts.empty() && kb.mention_counts.empty()))
    throw std::invalid_argument("init_from_kb: empty knowledge base");
  hp.num_topics = kb.num_topics();
  hp.vocab_words = static_cast<uint32_t>(kb.word_counts.size());
  hp.vocab_mentions = static_cast<uint32_t>(kb.mention_counts.size());
  hp.validate();

  SparseModel model;
  model.hp = hp;

  auto posterior_row = [](const CountRow& counts) {
    uint64_t total = 0;
    for (const auto& [t, c] : counts) total += c;
    Row row;
    row.reserve(counts.size());
    for (const auto& [t, c] : counts)
      row.emplace_back(t, static_cast<double>(c) / static_cast<double>(total));
    return row;
  };

  for (const auto& [sym, counts] : kb.word_counts) {
    Row row = posterior_row(counts);
    if (row.size() > hp.top_topics_per_word) {
      // keep the top entries by P(k|v), ties to the lower topic id
      std::stable_sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      row.resize(hp.top_topics_per_word);
      std::sort(row.begin(), row.end());
    }
    model.words.emplace(sym, std::move(row));
  }
  for (const auto& [sym, counts] : kb.mention_counts)
    model.mentions.emplace(sym, posterior_row(counts));

  model.recompute_sums();
  return model;
}

Row transform_row(const Row& model_row, double beta, double exp_psi_beta) {
  Row out;
  out.reserve(model_row.size());
  for (const auto& [t, v] : model_row) {
    double kappa = std::exp(digamma(beta + v)) - exp_psi_beta;
    out.emplace_back(t, kappa);
  }
  return out;
}

std::vector<double> transform_kappa_prime(const std::vector<double>& sums, double beta,
                                          uint32_t vocab_size) {
  std::vector<double> kp(sums.size());
  double vb = static_cast<double>(vocab_size) * beta;
  for (size_t t = 0; t < sums.size(); ++t) {
    kp[t] = std::exp(digamma(vb + sums[t]));
    if (!(kp[t] > 0) || !std::isfinite(kp[t]))
      throw NumericError("transform: kappa_prime must be positive finite");
  }
  return kp;
}

TransformedModel transform(const SparseModel& model, Vocab vocab) {
  TransformedModel tm;
  double beta = model.hp.beta(vocab);
  tm.exp_psi_beta = std::exp(digamma(beta));
  for (const auto& [sym, row] : model.rows(vocab))
    tm.kappa.emplace(sym, transform_row(row, beta, tm.exp_psi_beta));
  tm.kappa_prime = transform_kappa_prime(model.sums(vocab), beta, model.hp.vocab_size(vocab));
  return tm;
}

void UpdateCounts::merge(const UpdateCounts& other) {
  if (other.empty()) return;
  if (empty()) divisor = other.divisor;
  if (divisor != other.divisor)
    throw std::invalid_argument("UpdateCounts::merge: mismatched divisors");
  for (Vocab vocab : {Vocab::word, Vocab::mention}) {
    auto& mine = rows(vocab);
    for (const auto& [sym, orow] : other.rows(vocab)) {
      IntRow& row = mine[sym];
      IntRow merged;
      merged.reserve(row.size() + orow.size());
      size_t i = 0, j = 0;
      while (i < row.size() || j < orow.size()) {
        if (j == orow.size() || (i < row.size() && row[i].first < orow[j].first))
          merged.push_back(row[i++]);
        else if (i == row.size() || orow[j].first < row[i].first)
          merged.push_back(orow[j++]);
        else {
          merged.emplace_back(row[i].first, row[i].second + orow[j].second);
          ++i;
          ++j;
        }
      }
      row = std::move(merged);
    }
  }
}

RowMap UpdateCounts::materialize(Vocab v) const {
  RowMap out;
  double div = static_cast<double>(divisor);
  for (const auto& [sym, irow] : rows(v)) {
    Row row;
    row.reserve(irow.size());
    for (const auto& [t, c] : irow)
      if (c != 0) row.emplace_back(t, static_cast<double>(c) / div);
    if (!row.empty()) out.emplace(sym, std::move(row));
  }
  return out;
}

void interpolate_local(SparseModel& local, const UpdateCounts& doc_update, double rho_local,
                       uint64_t shard_docs) {
  if (rho_local == 0.0) return;
  double keep = 1.0 - rho_local;
  for (Vocab vocab : {Vocab::word, Vocab::mention}) {
    auto& rows = local.rows(vocab);
    auto& sums = local.sums(vocab);
    for (uint32_t t = 0; t < local.hp.num_topics; ++t) sums[t] *= keep;
    for (auto it = rows.begin(); it != rows.end();) {
      Row& row = it->second;
      size_t out = 0;
      for (size_t i = 0; i < row.size(); ++i) {
        double v = row[i].second * keep;
        if (v < kPruneThreshold) {
          sums[row[i].first] -= v;
          continue;
        }
        row[out++] = {row[i].first, v};
      }
      row.resize(out);
      it = row.empty() ? rows.erase(it) : std::next(it);
    }
    double scale = rho_local * static_cast<double>(shard_docs) /
                   static_cast<double>(doc_update.divisor);
    for (const auto& [sym, irow] : doc_update.rows(vocab)) {
      Row& row = local.rows(vocab)[sym];
      for (const auto& [t, c] : irow) {
        if (c == 0) continue;
        double add = scale * static_cast<double>(c);
        auto pos = std::lower_bound(row.begin(), row.end(), std::pair<uint32_t, double>{t, 0.0},
                                    [](const auto& a, const auto& b) { return a.first < b.first; });
        if (pos != row.end() && pos->first == t)
          pos->second += add;
        else
          row.insert(pos, {t, add});
        sums[t] += add;
      }
    }
  }
}

SparseModel interpolate_global(const SparseModel& prev, const std::vector<UpdateCounts>& updates,
                               uint32_t num_shards, double rho_global) {
  if (num_shards == 0) throw std::invalid_argument("interpolate_global: num_shards must be >= 1");
  UpdateCounts total;
  for (const auto& u : updates) total.merge(u);  // ascending shard index, exact

  SparseModel next;
  next.hp = prev.hp;
  double keep = 1.0 - rho_global;
  double scale = rho_global / static_cast<double>(num_shards);
  double div = static_cast<double>(total.divisor);

  for (Vocab vocab : {Vocab::word, Vocab::mention}) {
    const auto& prev_rows = prev.rows(vocab);
    const auto& upd_rows = total.rows(vocab);
    auto& out_rows = next.rows(vocab);

    auto pi = prev_rows.begin();
    auto ui = upd_rows.begin();
    while (pi != prev_rows.end() || ui != upd_rows.end()) {
      bool take_prev = ui == upd_rows.end() ||
                       (pi != prev_rows.end() && pi->first < ui->first);
      bool take_upd = pi == prev_rows.end() ||
                      (ui != upd_rows.end() && ui->first < pi->first);
      const std::string& sym = take_upd ? ui->first : pi->first;
      const Row* prow = (!take_upd) ? &pi->second : nullptr;
      const UpdateCounts::IntRow* urow = (!take_prev) ? &ui->second : nullptr;

      Row row;
      size_t i = 0, j = 0;
      size_t ni = prow ? prow->size() : 0, nj = urow ? urow->size() : 0;
      while (i < ni || j < nj) {
        uint32_t tp = i < ni ? (*prow)[i].first : UINT32_MAX;
        uint32_t tu = j < nj ? (*urow)[j].first : UINT32_MAX;
        uint32_t t = std::min(tp, tu);
        if (t >= prev.hp.num_topics)
          throw std::invalid_argument("interpolate_global: topic id exceeds num_topics");
        double v = 0.0;
        if (tp == t) v += keep * (*prow)[i++].second;
        if (tu == t) v += scale * (static_cast<double>((*urow)[j++].second) / div);
        if (v >= kPruneThreshold) row.emplace_back(t, v);
        if (!(v >= 0) || !std::isfinite(v))
          throw NumericError("interpolate_global: non-finite entry");
      }
      if (!row.empty()) out_rows.emplace(sym, std::move(row));
      if (!take_upd) ++pi;
      if (!take_prev) ++ui;
    }
  }

  next.recompute_sums();
  next.check_consistency();
  return next;
}

// ---- serialization: H/hyperparams, then M/<mention>, then W/<word> ----

std::string encode_row(const Row& row) {
  std::string v;
  for (const auto& [t, x] : row) {
    put_u32(v, t);
    put_f64(v, x);
  }
  return v;
}

Row decode_row(const std::string& value, const std::string& key) {
  if (value.size() % 12 != 0)
    throw DataError("model: bad value length for key \"" + key + "\"");
  Row row;
  ByteReader r(value, "model key \"" + key + "\"");
  uint32_t prev = 0;
  bool first = true;
  while (!r.done()) {
    uint32_t t = r.u32();
    double x = r.f64();
    if (!first && t <= prev) throw DataError("model: unsorted topics in key \"" + key + "\"");
    prev = t;
    first = false;
    row.emplace_back(t, x);
  }
  return row;
}

void SparseModel::save(const std::filesystem::path& path) const {
  SortedTableWriter w(path);
  w.add("H/hyperparams", hp.encode());
  for (const auto& [m, row] : mentions) w.add("M/" + m, encode_row(row));
  for (const auto& [word, row] : words) w.add("W/" + word, encode_row(row));
  w.finish();
}

SparseModel SparseModel::load(const std::filesystem::path& path) {
  SparseModel model;
  SortedTableReader r(path);
  bool have_header = false;
  while (auto rec = r.next()) {
    if (rec->key == "H/hyperparams") {
      model.hp = Hyperparams::decode(rec->value);
      have_header = true;
      continue;
    }
    if (rec->key.size() < 2 || rec->key[1] != '/')
      throw DataError(path.string() + ": unrecognized key \"" + rec->key + "\"");
    std::string sym = rec->key.substr(2);
    if (rec->key[0] == 'M')
      model.mentions.emplace(sym, decode_row(rec->value, rec->key));
    else if (rec->key[0] == 'W')
      model.words.emplace(sym, decode_row(rec->value, rec->key));
    else
      throw DataError(path.string() + ": unrecognized key \"" + rec->key + "\"");
  }
  if (!have_header) throw DataError(path.string() + ": missing hyperparams record");
  model.hp.validate();
  model.recompute_sums();
  return model;
}

}  // namespace elda
