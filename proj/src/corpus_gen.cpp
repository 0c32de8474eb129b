#include "elda/corpus_gen.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "elda/rng.hpp"

namespace elda {

namespace {

// symbols of one topic with cumulative counts, for CDF draws
struct TopicDist {
  std::vector<const std::string*> symbols;
  std::vector<uint64_t> cum;
  uint64_t total = 0;
};

std::vector<TopicDist> invert(const std::map<std::string, CountRow>& counts, uint32_t K,
                              const char* what) {
  std::vector<TopicDist> dists(K);
  for (const auto& [sym, row] : counts) {
    for (const auto& [t, c] : row) {
      dists[t].symbols.push_back(&sym);
      dists[t].total += c;
      dists[t].cum.push_back(dists[t].total);
    }
  }
  for (uint32_t t = 0; t < K; ++t)
    if (dists[t].total == 0)
      throw std::invalid_argument(std::string("generate_corpus: topic ") + std::to_string(t) +
                                  " has no " + what);
  return dists;
}

const std::string& draw_symbol(const TopicDist& d, Rng& rng) {
  uint64_t u = static_cast<uint64_t>(rng.uniform01() * static_cast<double>(d.total));
  if (u >= d.total) u = d.total - 1;
  size_t i = std::lower_bound(d.cum.begin(), d.cum.end(), u + 1) - d.cum.begin();
  return *d.symbols[i];
}

}  // namespace

GeneratedCorpus generate_corpus(const KnowledgeBase& kb, const GenOptions& opts) {
  const uint32_t K = kb.num_topics();
  if (K == 0) throw std::invalid_argument("generate_corpus: empty knowledge base");
  if (opts.support == 0) throw std::invalid_argument("generate_corpus: support must be >= 1");
  if (!(opts.alpha > 0)) throw std::invalid_argument("generate_corpus: alpha must be > 0");

  std::vector<TopicDist> word_dist = invert(kb.word_counts, K, "word counts");
  std::vector<TopicDist> mention_dist = invert(kb.mention_counts, K, "mention counts");

  GeneratedCorpus out;
  out.docs.reserve(opts.num_docs);
  Rng rng(opts.seed);

  for (uint32_t d = 0; d < opts.num_docs; ++d) {
    uint32_t seed_topic = rng.uniform_below(K);

    // support: seed topic plus its most graph-similar neighbors
    std::vector<std::pair<double, uint32_t>> near;
    for (uint32_t t = 0; t < K; ++t) {
      if (t == seed_topic) continue;
      double s = google_similarity(kb, seed_topic, t);
      if (s > 0) near.emplace_back(s, t);
    }
    std::sort(near.begin(), near.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<uint32_t> support{seed_topic};
    for (size_t i = 0; i + 1 < opts.support && i < near.size(); ++i)
      support.push_back(near[i].second);
    std::sort(support.begin(), support.end());

    std::vector<double> theta = rng.dirichlet_symmetric(opts.alpha, support.size());
    auto draw_topic = [&]() {
      double u = rng.uniform01();
      double acc = 0;
      for (size_t i = 0; i < theta.size(); ++i) {
        acc += theta[i];
        if (u < acc) return support[i];
      }
      return support.back();
    };

    Document doc;
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "d%06u", d);
    doc.id = idbuf;

    uint32_t nw = rng.poisson(opts.mean_words);
    uint32_t nm = std::max<uint32_t>(1, rng.poisson(opts.mean_mentions));
    doc.words.reserve(nw);
    doc.mentions.reserve(nm);
    for (uint32_t i = 0; i < nw; ++i) {
      uint32_t z = draw_topic();
      doc.words.push_back(draw_symbol(word_dist[z], rng));
    }
    for (uint32_t i = 0; i < nm; ++i) {
      uint32_t z = draw_topic();
      doc.mentions.push_back(draw_symbol(mention_dist[z], rng));
      out.gold.push_back(GoldRecord{doc.id, i, z});
    }
    out.docs.push_back(std::move(doc));
  }
  return out;
}

}  // namespace elda
