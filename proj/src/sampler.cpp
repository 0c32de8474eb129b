#include "elda/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "elda/kb.hpp"

namespace elda {

namespace {

constexpr uint32_t kNone = UINT32_MAX;

// slot_sums[t] += counts[t], exact integer merge
void add_counts(UpdateCounts::IntRow& acc, const CountMap& counts) {
  UpdateCounts::IntRow merged;
  merged.reserve(acc.size() + counts.distinct());
  auto a = acc.begin();
  auto b = counts.entries().begin();
  while (a != acc.end() || b != counts.entries().end()) {
    if (b == counts.entries().end() || (a != acc.end() && a->first < b->first)) {
      merged.push_back(*a++);
    } else if (a == acc.end() || b->first < a->first) {
      merged.emplace_back(b->first, static_cast<int64_t>(b->second));
      ++b;
    } else {
      merged.emplace_back(a->first, a->second + static_cast<int64_t>(b->second));
      ++a;
      ++b;
    }
  }
  acc = std::move(merged);
}

double row_value(const Row& row, uint32_t topic) {
  auto it = std::lower_bound(row.begin(), row.end(), topic,
                             [](const auto& e, uint32_t t) { return e.first < t; });
  return (it != row.end() && it->first == topic) ? it->second : 0.0;
}

}  // namespace

SamplerWorkspace precompute_static(const Document& doc, const TransformedModel& words,
                                   const TransformedModel& mentions, const Hyperparams& hp) {
  SamplerWorkspace ws;
  ws.hp = hp;
  const uint32_t K = hp.num_topics;
  const std::array<const TransformedModel*, 2> tm{&words, &mentions};
  for (int s = 0; s < 2; ++s) {
    ws.exp_psi_beta[s] = tm[s]->exp_psi_beta;
    ws.kappa_prime[s] = &tm[s]->kappa_prime;
    if (tm[s]->kappa_prime.size() != K)
      throw std::invalid_argument("transform size does not match num_topics");
    ws.mu_d[s].resize(K);
    double z = 0;
    for (uint32_t k = 0; k < K; ++k) {
      double m = hp.alpha * tm[s]->exp_psi_beta / tm[s]->kappa_prime[k];
      ws.mu_d[s][k] = m;
      z += m;
    }
    ws.z_d[s] = z;
  }

  auto add_stream = [&](Vocab stream, const std::vector<std::string>& tokens,
                        std::vector<uint32_t>& pos_slot) {
    const TransformedModel& t = *tm[static_cast<int>(stream)];
    const std::vector<double>& kp = t.kappa_prime;
    std::map<std::string, uint32_t> seen;
    pos_slot.reserve(tokens.size());
    for (const std::string& tok : tokens) {
      auto it = seen.find(tok);
      if (it == seen.end()) {
        SymbolSlot slot;
        slot.stream = stream;
        slot.symbol = tok;
        auto row = t.kappa.find(tok);
        if (row != t.kappa.end()) slot.kappa = row->second;
        slot.mu_v.reserve(slot.kappa.size());
        double z = 0;
        for (const auto& [k, kv] : slot.kappa) {
          double m = ws.hp.alpha * kv / kp[k];
          if (m > 0) {
            slot.mu_v.emplace_back(k, m);
            z += m;
          }
        }
        slot.z_v = z;
        it = seen.emplace(tok, static_cast<uint32_t>(ws.slots.size())).first;
        ws.slots.push_back(std::move(slot));
      }
      pos_slot.push_back(it->second);
    }
  };
  add_stream(Vocab::word, doc.words, ws.word_slot);
  add_stream(Vocab::mention, doc.mentions, ws.mention_slot);
  return ws;
}

void AssignmentState::rebuild(const SamplerWorkspace& ws) {
  n_k.clear();
  n_slot.assign(ws.slots.size(), CountMap{});
  c_sum = {0.0, 0.0};
  const std::vector<double>& kp_w = *ws.kappa_prime[0];
  const std::vector<double>& kp_m = *ws.kappa_prime[1];
  auto put = [&](uint32_t slot, uint32_t topic) {
    n_k.inc(topic);
    n_slot[slot].inc(topic);
    c_sum[0] += 1.0 / kp_w[topic];
    c_sum[1] += 1.0 / kp_m[topic];
  };
  for (size_t i = 0; i < z_word.size(); ++i) put(ws.word_slot[i], z_word[i]);
  for (size_t i = 0; i < z_mention.size(); ++i) put(ws.mention_slot[i], z_mention[i]);
}

void AssignmentState::add(const SamplerWorkspace& ws, uint32_t slot, uint32_t topic) {
  n_k.inc(topic);
  n_slot[slot].inc(topic);
  c_sum[0] += 1.0 / (*ws.kappa_prime[0])[topic];
  c_sum[1] += 1.0 / (*ws.kappa_prime[1])[topic];
}

void AssignmentState::remove(const SamplerWorkspace& ws, uint32_t slot, uint32_t topic) {
  n_k.dec(topic);
  n_slot[slot].dec(topic);
  c_sum[0] -= 1.0 / (*ws.kappa_prime[0])[topic];
  c_sum[1] -= 1.0 / (*ws.kappa_prime[1])[topic];
}

uint32_t sample_position(SamplerWorkspace& ws, AssignmentState& st, uint32_t slot_idx,
                         std::optional<uint32_t> excluded, const CoherenceFn* coherence,
                         Rng& rng, const StepInspector* inspector) {
  const SymbolSlot& slot = ws.slots[slot_idx];
  const int s = static_cast<int>(slot.stream);
  const std::vector<double>& kp = *ws.kappa_prime[s];
  const double epb = ws.exp_psi_beta[s];
  const auto& nk = st.n_k.entries();

  const bool coh = coherence != nullptr;
  std::vector<double> w;
  if (coh) {
    w.resize(nk.size());
    for (size_t i = 0; i < nk.size(); ++i) w[i] = (*coherence)(nk[i].first, st.n_k, excluded);
  }
  auto weight_at = [&](size_t i) { return coh ? w[i] : 1.0; };

  const double z_d = ws.z_d[s];
  const double z_v = slot.z_v;
  double z_c = 0;
  if (coh) {
    for (size_t i = 0; i < nk.size(); ++i)
      z_c += w[i] * nk[i].second * epb / kp[nk[i].first];
  } else {
    z_c = st.c_sum[s] * epb;
  }
  double z_cv = 0;
  {
    size_t a = 0, b = 0;
    while (a < nk.size() && b < slot.kappa.size()) {
      if (nk[a].first < slot.kappa[b].first) {
        ++a;
      } else if (slot.kappa[b].first < nk[a].first) {
        ++b;
      } else {
        z_cv += weight_at(a) * nk[a].second * slot.kappa[b].second / kp[nk[a].first];
        ++a;
        ++b;
      }
    }
  }
  const double z_total = z_d + z_v + z_c + z_cv;

  if (inspector) {
    auto weight_of = [&](uint32_t topic) {
      if (!coh) return 1.0;
      for (size_t i = 0; i < nk.size(); ++i)
        if (nk[i].first == topic) return w[i];
      return 1.0;
    };
    StepView view;
    view.stream = slot.stream;
    view.symbol = &slot.symbol;
    view.n_k = &st.n_k;
    view.excluded = excluded;
    view.z_d = z_d;
    view.z_v = z_v;
    view.z_c = z_c;
    view.z_cv = z_cv;
    view.z_total = z_total;
    view.mu_d = [&ws, s](uint32_t k) { return ws.mu_d[s][k]; };
    view.mu_v = [&slot](uint32_t k) { return row_value(slot.mu_v, k); };
    view.mu_c = [&st, epb, &kp, weight_of](uint32_t k) {
      return weight_of(k) * st.n_k.count(k) * epb / kp[k];
    };
    view.mu_cv = [&st, &slot, &kp, weight_of](uint32_t k) {
      return weight_of(k) * st.n_k.count(k) * row_value(slot.kappa, k) / kp[k];
    };
    (*inspector)(view);
  }

  ++ws.stats.draws;
  if (!(z_total > 0) || !std::isfinite(z_total)) {
    // uniform over the document's currently assigned distinct topics, the
    // position under resampling included; uniform over K with no assignment
    ++ws.stats.zero_mass_draws;
    std::vector<uint32_t> assigned;
    assigned.reserve(nk.size() + 1);
    for (const auto& [t, c] : nk) assigned.push_back(t);
    if (excluded && !st.n_k.contains(*excluded)) {
      auto pos = std::lower_bound(assigned.begin(), assigned.end(), *excluded);
      assigned.insert(pos, *excluded);
    }
    if (!assigned.empty())
      return assigned[rng.uniform_below(static_cast<uint32_t>(assigned.size()))];
    return rng.uniform_below(ws.hp.num_topics);
  }

  double u = rng.uniform01() * z_total;
  uint64_t cells = 0;
  uint32_t picked = kNone;
  uint32_t last = kNone;
  auto take = [&](uint32_t topic, double m) {
    if (!(m > 0)) return false;
    ++cells;
    last = topic;
    u -= m;
    return u <= 0;
  };

  // assigned-topic/symbol intersection
  {
    size_t a = 0, b = 0;
    while (a < nk.size() && b < slot.kappa.size()) {
      if (nk[a].first < slot.kappa[b].first) {
        ++a;
      } else if (slot.kappa[b].first < nk[a].first) {
        ++b;
      } else {
        double m = weight_at(a) * nk[a].second * slot.kappa[b].second / kp[nk[a].first];
        if (take(nk[a].first, m)) {
          picked = nk[a].first;
          break;
        }
        ++a;
        ++b;
      }
    }
  }
  // assigned topics
  if (picked == kNone) {
    for (size_t i = 0; i < nk.size(); ++i) {
      double m = weight_at(i) * nk[i].second * epb / kp[nk[i].first];
      if (take(nk[i].first, m)) {
        picked = nk[i].first;
        break;
      }
    }
  }
  // symbol support
  if (picked == kNone) {
    for (const auto& [k, m] : slot.mu_v) {
      if (take(k, m)) {
        picked = k;
        break;
      }
    }
  }
  bool dense = false;
  if (picked == kNone) {
    dense = true;
    const std::vector<double>& mud = ws.mu_d[s];
    for (uint32_t k = 0; k < mud.size(); ++k) {
      if (take(k, mud[k])) {
        picked = k;
        break;
      }
    }
  }
  if (picked == kNone) picked = last;  // rounding leftovers land on the final cell

  ws.stats.cells += cells;
  if (!dense) {
    ++ws.stats.sparse_draws;
    ws.stats.sparse_cells += cells;
  }
  return picked;
}

DocResult run_document(const Document& doc, const std::vector<uint32_t>& z0_word,
                       const std::vector<uint32_t>& z0_mention, SamplerWorkspace& ws,
                       const CoherenceFn* coherence, Rng& rng, const StepInspector* inspector) {
  const Hyperparams& hp = ws.hp;
  if (hp.sweeps <= hp.burnin) throw std::invalid_argument("sweeps must exceed burnin");
  if (z0_word.size() != doc.words.size() || z0_mention.size() != doc.mentions.size())
    throw std::invalid_argument("initial assignment length does not match document");
  for (uint32_t z : z0_word)
    if (z >= hp.num_topics) throw std::invalid_argument("initial word topic out of range");
  for (uint32_t z : z0_mention)
    if (z >= hp.num_topics) throw std::invalid_argument("initial mention topic out of range");

  ws.stats = SamplerStats{};
  AssignmentState st;
  st.z_word = z0_word;
  st.z_mention = z0_mention;

  const CoherenceFn* word_coh = hp.coherence_words ? coherence : nullptr;
  std::vector<UpdateCounts::IntRow> slot_sums(ws.slots.size());
  std::vector<CountMap> mention_tally(doc.mentions.size());

  for (uint32_t sweep = 0; sweep < hp.sweeps; ++sweep) {
    st.rebuild(ws);
    for (size_t i = 0; i < doc.words.size(); ++i) {
      uint32_t slot = ws.word_slot[i];
      uint32_t old = st.z_word[i];
      st.remove(ws, slot, old);
      uint32_t z = sample_position(ws, st, slot, old, word_coh, rng, inspector);
      st.add(ws, slot, z);
      st.z_word[i] = z;
    }
    for (size_t i = 0; i < doc.mentions.size(); ++i) {
      uint32_t slot = ws.mention_slot[i];
      uint32_t old = st.z_mention[i];
      st.remove(ws, slot, old);
      uint32_t z = sample_position(ws, st, slot, old, coherence, rng, inspector);
      st.add(ws, slot, z);
      st.z_mention[i] = z;
    }
    if (sweep >= hp.burnin) {
      for (size_t j = 0; j < ws.slots.size(); ++j) add_counts(slot_sums[j], st.n_slot[j]);
      for (size_t i = 0; i < doc.mentions.size(); ++i) mention_tally[i].inc(st.z_mention[i]);
    }
  }

  DocResult res;
  res.update.divisor = hp.sweeps - hp.burnin;
  for (size_t j = 0; j < ws.slots.size(); ++j) {
    if (slot_sums[j].empty()) continue;
    res.update.rows(ws.slots[j].stream)[ws.slots[j].symbol] = std::move(slot_sums[j]);
  }
  res.final_z_word = st.z_word;
  res.final_z_mention = st.z_mention;
  res.mention_pred.reserve(doc.mentions.size());
  for (const CountMap& tally : mention_tally) {
    uint32_t best_topic = 0;
    uint32_t best_count = 0;
    for (const auto& [t, c] : tally.entries()) {
      if (c > best_count) {
        best_count = c;
        best_topic = t;
      }
    }
    res.mention_pred.push_back(best_topic);
  }
  res.stats = ws.stats;
  return res;
}

CoherenceFn make_coherence_fn(const SimilarityCache& sim) {
  return [&sim](uint32_t candidate, const CountMap& others, std::optional<uint32_t> excluded) {
    return coherence(candidate, others, excluded, sim);
  };
}

}  // namespace elda
