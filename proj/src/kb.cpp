#include "elda/kb.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "elda/rng.hpp"
#include "elda/sorted_table.hpp"

namespace elda {

static void validate_row(const std::string& sym, const CountRow& row, uint32_t k) {
  uint32_t prev = 0;
  bool first = true;
  for (const auto& [t, c] : row) {
    if (t >= k) throw std::invalid_argument("kb: topic id out of range for \"" + sym + "\"");
    if (c == 0) throw std::invalid_argument("kb: zero count for \"" + sym + "\"");
    if (!first && t <= prev)
      throw std::invalid_argument("kb: unsorted or duplicate topics for \"" + sym + "\"");
    prev = t;
    first = false;
  }
}

void KnowledgeBase::validate() const {
  uint32_t k = num_topics();
  if (in_links.size() != titles.size())
    throw std::invalid_argument("kb: in_links/titles size mismatch");
  for (uint32_t t = 0; t < k; ++t) {
    uint32_t prev = 0;
    bool first = true;
    for (uint32_t s : in_links[t]) {
      if (s >= k) throw std::invalid_argument("kb: in-link source out of range");
      if (s == t) throw std::invalid_argument("kb: self in-link");
      if (!first && s <= prev) throw std::invalid_argument("kb: unsorted in-link list");
      prev = s;
      first = false;
    }
  }
  for (const auto& [m, row] : mention_counts) validate_row(m, row, k);
  for (const auto& [w, row] : word_counts) validate_row(w, row, k);
}

static std::string topic_key(uint32_t t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "T/%08u", t);
  return buf;
}

static std::string encode_count_row(const CountRow& row) {
  std::string v;
  for (const auto& [t, c] : row) {
    put_u32(v, t);
    put_u32(v, c);
  }
  return v;
}

static CountRow decode_count_row(const std::string& value, const std::string& key) {
  if (value.size() % 8 != 0) throw DataError("kb: bad value length for key \"" + key + "\"");
  CountRow row;
  ByteReader r(value, "kb key \"" + key + "\"");
  while (!r.done()) {
    uint32_t t = r.u32();
    uint32_t c = r.u32();
    row.emplace_back(t, c);
  }
  return row;
}

void KnowledgeBase::save(const std::filesystem::path& path) const {
  SortedTableWriter w(path);
  // key order: M/* < T/* < W/*
  for (const auto& [m, row] : mention_counts) w.add("M/" + m, encode_count_row(row));
  for (uint32_t t = 0; t < num_topics(); ++t) {
    std::string v;
    put_str(v, titles[t]);
    put_u32(v, static_cast<uint32_t>(in_links[t].size()));
    for (uint32_t s : in_links[t]) put_u32(v, s);
    w.add(topic_key(t), v);
  }
  for (const auto& [word, row] : word_counts) w.add("W/" + word, encode_count_row(row));
  w.finish();
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path) {
  KnowledgeBase kb;
  SortedTableReader r(path);
  std::vector<std::pair<uint32_t, std::pair<std::string, std::vector<uint32_t>>>> topics;
  while (auto rec = r.next()) {
    if (rec->key.size() < 2 || rec->key[1] != '/')
      throw DataError(path.string() + ": unrecognized key \"" + rec->key + "\"");
    std::string name = rec->key.substr(2);
    switch (rec->key[0]) {
      case 'M':
        kb.mention_counts.emplace(name, decode_count_row(rec->value, rec->key));
        break;
      case 'W':
        kb.word_counts.emplace(name, decode_count_row(rec->value, rec->key));
        break;
      case 'T': {
        uint32_t id = 0;
        try {
          id = static_cast<uint32_t>(std::stoul(name));
        } catch (...) {
          throw DataError(path.string() + ": bad topic key \"" + rec->key + "\"");
        }
        ByteReader br(rec->value, "kb key \"" + rec->key + "\"");
        std::string title = br.str();
        uint32_t n = br.u32();
        std::vector<uint32_t> links(n);
        for (uint32_t i = 0; i < n; ++i) links[i] = br.u32();
        br.expect_done();
        topics.push_back({id, {std::move(title), std::move(links)}});
        break;
      }
      default:
        throw DataError(path.string() + ": unrecognized key \"" + rec->key + "\"");
    }
  }
  std::sort(topics.begin(), topics.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (size_t i = 0; i < topics.size(); ++i) {
    if (topics[i].first != i)
      throw DataError(path.string() + ": topic ids not contiguous from 0");
    kb.titles.push_back(std::move(topics[i].second.first));
    kb.in_links.push_back(std::move(topics[i].second.second));
  }
  kb.validate();
  return kb;
}

double google_similarity(const KnowledgeBase& kb, uint32_t a, uint32_t b) {
  uint32_t k = kb.num_topics();
  if (a >= k || b >= k) throw std::invalid_argument("google_similarity: topic out of range");
  if (k < 2) throw std::invalid_argument("google_similarity: needs at least 2 topics");
  const auto& la = kb.in_links[a];
  const auto& lb = kb.in_links[b];
  size_t inter = 0;
  if (a == b) {
    inter = la.size();
  } else {
    size_t i = 0, j = 0;
    while (i < la.size() && j < lb.size()) {
      if (la[i] < lb[j])
        ++i;
      else if (lb[j] < la[i])
        ++j;
      else {
        ++inter;
        ++i;
        ++j;
      }
    }
  }
  if (inter == 0) return 0.0;
  double big = static_cast<double>(std::max(la.size(), lb.size()));
  double small = static_cast<double>(std::min(la.size(), lb.size()));
  double s = 1.0 - (std::log(big) - std::log(static_cast<double>(inter))) /
                       (std::log(static_cast<double>(k)) - std::log(small));
  return std::clamp(s, 0.0, 1.0);
}

SimilarityCache SimilarityCache::over_topics(const KnowledgeBase& kb,
                                             const std::vector<uint32_t>& topics) {
  SimilarityCache c;
  for (size_t i = 0; i < topics.size(); ++i) {
    for (size_t j = i; j < topics.size(); ++j) {
      uint32_t a = std::min(topics[i], topics[j]);
      uint32_t b = std::max(topics[i], topics[j]);
      uint64_t key = (static_cast<uint64_t>(a) << 32) | b;
      if (c.pairs_.count(key)) continue;
      double s = google_similarity(kb, a, b);
      if (s > 0) c.pairs_.emplace(key, s);
    }
  }
  return c;
}

SimilarityCache SimilarityCache::from_edges(const std::vector<SimEdge>& edges) {
  SimilarityCache c;
  for (const auto& e : edges) {
    uint32_t a = std::min(e.a, e.b), b = std::max(e.a, e.b);
    c.pairs_[(static_cast<uint64_t>(a) << 32) | b] = e.sim;
  }
  return c;
}

std::vector<SimEdge> SimilarityCache::edges() const {
  std::vector<SimEdge> out;
  out.reserve(pairs_.size());
  for (const auto& [key, s] : pairs_)
    out.push_back({static_cast<uint32_t>(key >> 32), static_cast<uint32_t>(key & 0xffffffffu), s});
  std::sort(out.begin(), out.end(), [](const SimEdge& x, const SimEdge& y) {
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  return out;
}

double coherence(uint32_t candidate, const CountMap& others, std::optional<uint32_t> excluded,
                 const SimilarityCache& sim) {
  if (others.empty()) return 1.0;
  // distinct topic count of the full assignment, i.e. including the excluded
  // position's topic when it occurs nowhere else
  size_t full = others.distinct();
  if (excluded && !others.contains(*excluded)) ++full;
  if (full <= 1) return 1.0;
  double s = 0.0;
  for (const auto& [t, c] : others.entries()) {
    (void)c;
    s += sim.sim(candidate, t);
  }
  return s / static_cast<double>(full - 1);
}

KnowledgeBase generate_synthetic_kb(const SyntheticKbOptions& opts) {
  if (opts.num_topics < 2) throw std::invalid_argument("synthetic kb: need >= 2 topics");
  if (opts.vocab_words == 0 || opts.vocab_mentions == 0)
    throw std::invalid_argument("synthetic kb: empty vocabulary");
  if (opts.ambiguity < 1.0 || opts.word_ambiguity < 1.0)
    throw std::invalid_argument("synthetic kb: ambiguity must be >= 1");

  uint32_t k = opts.num_topics;
  uint32_t groups = opts.groups ? opts.groups : std::max(1u, k / 10);
  groups = std::min(groups, k);
  uint32_t gsize = (k + groups - 1) / groups;
  auto group_of = [&](uint32_t t) { return t / gsize; };
  auto group_span = [&](uint32_t g) {
    uint32_t lo = g * gsize;
    uint32_t hi = std::min(k, lo + gsize);
    return std::pair<uint32_t, uint32_t>(lo, hi);
  };
  uint32_t ngroups = (k + gsize - 1) / gsize;

  Rng rng(opts.seed);
  KnowledgeBase kb;
  kb.titles.resize(k);
  kb.in_links.resize(k);
  for (uint32_t t = 0; t < k; ++t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "entry_%06u", t);
    kb.titles[t] = buf;
  }

  // in-links: pareto-ish degree, sources biased into the topic's own group
  for (uint32_t t = 0; t < k; ++t) {
    double u = rng.uniform01();
    uint32_t deg = static_cast<uint32_t>(std::lround(2.0 * std::pow(1.0 - u, -0.7)));
    deg = std::clamp(deg, 2u, std::min(k - 1, 64u));
    std::set<uint32_t> src;
    auto [lo, hi] = group_span(group_of(t));
    uint32_t span = hi - lo;
    for (uint32_t attempt = 0; attempt < deg * 8 && src.size() < deg; ++attempt) {
      uint32_t s;
      if (span > 1 && rng.uniform01() < opts.in_group_bias)
        s = lo + rng.uniform_below(span);
      else
        s = rng.uniform_below(k);
      if (s != t) src.insert(s);
    }
    kb.in_links[t].assign(src.begin(), src.end());
  }

  auto skewed_counts = [&](size_t n) {
    std::vector<uint32_t> c(n);
    double v = 90.0;
    for (size_t i = 0; i < n; ++i) {
      c[i] = std::max<uint32_t>(1, static_cast<uint32_t>(std::lround(v)));
      v *= 0.3;
    }
    return c;
  };

  // mentions: candidates spread over distinct groups, skewed priors
  for (uint32_t i = 0; i < opts.vocab_mentions; ++i) {
    uint32_t c = 1 + rng.poisson(opts.ambiguity - 1.0);
    c = std::min({c, k, std::max(1u, ngroups)});
    std::set<uint32_t> gset;
    std::vector<uint32_t> cands;
    for (uint32_t attempt = 0; attempt < c * 16 && cands.size() < c; ++attempt) {
      uint32_t g = rng.uniform_below(ngroups);
      if (gset.count(g)) continue;
      auto [lo, hi] = group_span(g);
      uint32_t t = lo + rng.uniform_below(hi - lo);
      gset.insert(g);
      cands.push_back(t);
    }
    auto counts = skewed_counts(cands.size());
    CountRow row;
    for (size_t j = 0; j < cands.size(); ++j) row.emplace_back(cands[j], counts[j]);
    std::sort(row.begin(), row.end());
    char buf[32];
    std::snprintf(buf, sizeof buf, "m%05u", i);
    kb.mention_counts.emplace(buf, std::move(row));
  }

  // words: all candidates inside one group
  for (uint32_t i = 0; i < opts.vocab_words; ++i) {
    uint32_t c = 1 + rng.poisson(opts.word_ambiguity - 1.0);
    uint32_t g = rng.uniform_below(ngroups);
    auto [lo, hi] = group_span(g);
    c = std::min(c, hi - lo);
    std::set<uint32_t> cset;
    for (uint32_t attempt = 0; attempt < c * 16 && cset.size() < c; ++attempt)
      cset.insert(lo + rng.uniform_below(hi - lo));
    std::vector<uint32_t> cands(cset.begin(), cset.end());
    // put the heavy count on a random candidate, not always the lowest id
    if (cands.size() > 1) std::swap(cands[0], cands[rng.uniform_below(cands.size())]);
    auto counts = skewed_counts(cands.size());
    CountRow row;
    for (size_t j = 0; j < cands.size(); ++j) row.emplace_back(cands[j], counts[j]);
    std::sort(row.begin(), row.end());
    char buf[32];
    std::snprintf(buf, sizeof buf, "w%05u", i);
    kb.word_counts.emplace(buf, std::move(row));
  }

  // each topic must be reachable from both vocabularies; close gaps by moving
  // a redundant incidence so row widths, and with them the ambiguity, stay put
  auto cover_fix = [&](std::map<std::string, CountRow>& table, uint32_t vocab,
                       const char* prefix) {
    std::vector<uint32_t> cover(k, 0);
    for (const auto& [s, row] : table)
      for (const auto& [t, c] : row) ++cover[t];
    for (uint32_t t = 0; t < k; ++t) {
      if (cover[t]) continue;
      bool moved = false;
      for (auto& [s, row] : table) {
        for (auto& e : row) {
          if (cover[e.first] <= 1) continue;
          --cover[e.first];
          e.first = t;
          ++cover[t];
          std::sort(row.begin(), row.end());
          moved = true;
          break;
        }
        if (moved) break;
      }
      if (!moved) {  // fewer symbols than topics: widening is unavoidable
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s%05u", prefix, t % vocab);
        CountRow& row = table[buf];
        auto it = std::lower_bound(row.begin(), row.end(), std::pair<uint32_t, uint32_t>{t, 0});
        if (it == row.end() || it->first != t) row.insert(it, {t, 1});
        ++cover[t];
      }
    }
  };
  cover_fix(kb.word_counts, opts.vocab_words, "w");
  cover_fix(kb.mention_counts, opts.vocab_mentions, "m");

  kb.validate();
  return kb;
}

}  // namespace elda
