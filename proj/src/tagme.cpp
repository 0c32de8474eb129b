#include "elda/tagme.hpp"

#include <algorithm>

namespace elda {

namespace {

const Row* find_row(const RowMap& rows, const std::string& symbol) {
  auto it = rows.find(symbol);
  if (it == rows.end() || it->second.empty()) return nullptr;
  return &it->second;
}

// argmax by value, ties to the lower topic id; pre: row non-empty
uint32_t row_argmax(const Row& row) {
  uint32_t best = row.front().first;
  double best_v = row.front().second;
  for (const auto& [k, v] : row) {
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  return best;
}

}  // namespace

double tagme_votes(const Document& doc, size_t j, uint32_t candidate,
                   const RowMap& mention_rows, double beta_mention, const SimilarityCache& sim) {
  const Row* row = find_row(mention_rows, doc.mentions.at(j));
  if (!row) return 0.0;
  double total = 0;
  for (const auto& [k, lambda_hat] : *row)
    total += sim.sim(candidate, k) * (lambda_hat + beta_mention);
  return total / static_cast<double>(row->size());
}

TagmeInit tagme_init(const Document& doc, const RowMap& word_rows, const RowMap& mention_rows,
                     const Hyperparams& hp, const SimilarityCache& sim, Rng& rng) {
  TagmeInit out;
  out.z_word.reserve(doc.words.size());
  out.z_mention.reserve(doc.mentions.size());

  for (const std::string& w : doc.words) {
    const Row* row = find_row(word_rows, w);
    out.z_word.push_back(row ? row_argmax(*row) : rng.uniform_below(hp.num_topics));
  }

  for (size_t i = 0; i < doc.mentions.size(); ++i) {
    const Row* row = find_row(mention_rows, doc.mentions[i]);
    if (!row) {
      out.z_mention.push_back(rng.uniform_below(hp.num_topics));
      continue;
    }
    double row_sum = 0;
    for (const auto& [k, v] : *row) row_sum += v;

    std::vector<double> rel(row->size(), 0.0);
    for (size_t j = 0; j < doc.mentions.size(); ++j) {
      if (j == i) continue;
      for (size_t c = 0; c < row->size(); ++c)
        rel[c] += tagme_votes(doc, j, (*row)[c].first, mention_rows, hp.beta_mention, sim);
    }
    double max_rel = 0;
    for (double r : rel) max_rel = std::max(max_rel, r);

    bool have_pick = false;
    uint32_t pick = 0;
    double pick_v = 0;
    for (size_t c = 0; c < row->size(); ++c) {
      const auto& [k, lambda_hat] = (*row)[c];
      if (rel[c] < hp.epsilon * max_rel) continue;
      if (row_sum > 0 && lambda_hat / row_sum < hp.tau) continue;
      if (!have_pick || lambda_hat > pick_v) {
        have_pick = true;
        pick = k;
        pick_v = lambda_hat;
      }
    }
    if (!have_pick) pick = row_argmax(*row);
    out.z_mention.push_back(pick);
  }
  return out;
}

}  // namespace elda
