#include "elda/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "elda/rng.hpp"

namespace elda {

std::string EvalReport::text() const {
  char buf[256];
  std::string out;
  uint64_t mentions = 0;
  for (const auto& [id, c, t] : per_doc) mentions += t;
  std::snprintf(buf, sizeof(buf), "mentions evaluated: %llu\n",
                static_cast<unsigned long long>(mentions));
  out += buf;
  std::snprintf(buf, sizeof(buf), "documents: %zu\n", per_doc.size());
  out += buf;
  std::snprintf(buf, sizeof(buf), "micro accuracy: %.4f (bootstrap std %.4f)\n", micro,
                micro_std);
  out += buf;
  std::snprintf(buf, sizeof(buf), "macro accuracy: %.4f\n\n", macro);
  out += buf;
  std::snprintf(buf, sizeof(buf), "micro=%.6f\nmicro_std=%.6f\nmacro=%.6f\nmentions=%llu\ndocuments=%zu\n",
                micro, micro_std, macro, static_cast<unsigned long long>(mentions),
                per_doc.size());
  out += buf;
  return out;
}

int64_t baseline_predict(const std::string& mention, const SparseModel& model) {
  auto it = model.mentions.find(mention);
  if (it == model.mentions.end() || it->second.empty()) return -1;
  uint32_t best = it->second.front().first;
  double best_v = it->second.front().second;
  for (const auto& [t, v] : it->second) {
    if (v > best_v) {
      best_v = v;
      best = t;
    }
  }
  return best;
}

EvalReport score(const std::vector<Annotation>& predictions, const std::vector<GoldRecord>& gold,
                 uint64_t bootstrap_seed, uint32_t resamples) {
  if (gold.empty()) throw std::invalid_argument("score: empty gold standard");

  std::map<std::pair<std::string, uint32_t>, int64_t> pred;
  for (const Annotation& a : predictions) {
    auto [it, inserted] = pred.emplace(std::make_pair(a.doc_id, a.mention_index), a.topic);
    if (!inserted && it->second != a.topic)
      throw std::invalid_argument("score: conflicting predictions for doc \"" + a.doc_id +
                                  "\" mention " + std::to_string(a.mention_index));
  }

  std::vector<char> correct;
  correct.reserve(gold.size());
  std::map<std::string, std::pair<uint32_t, uint32_t>> docs;  // id -> (correct, total)
  for (const GoldRecord& g : gold) {
    auto it = pred.find(std::make_pair(g.doc_id, g.mention_index));
    if (it == pred.end())
      throw std::invalid_argument("score: no prediction for doc \"" + g.doc_id + "\" mention " +
                                  std::to_string(g.mention_index));
    bool ok = it->second == static_cast<int64_t>(g.topic);
    correct.push_back(ok ? 1 : 0);
    auto& [c, t] = docs[g.doc_id];
    ++t;
    if (ok) ++c;
  }

  EvalReport rep;
  uint64_t hits = 0;
  for (char c : correct) hits += c;
  rep.micro = static_cast<double>(hits) / static_cast<double>(correct.size());
  double macro_sum = 0;
  for (const auto& [id, ct] : docs) {
    macro_sum += static_cast<double>(ct.first) / static_cast<double>(ct.second);
    rep.per_doc.emplace_back(id, ct.first, ct.second);
  }
  rep.macro = macro_sum / static_cast<double>(docs.size());

  if (resamples > 0) {
    Rng rng(bootstrap_seed);
    const uint32_t n = static_cast<uint32_t>(correct.size());
    std::vector<double> micros(resamples);
    for (uint32_t r = 0; r < resamples; ++r) {
      uint64_t h = 0;
      for (uint32_t i = 0; i < n; ++i) h += correct[rng.uniform_below(n)];
      micros[r] = static_cast<double>(h) / static_cast<double>(n);
    }
    double mean = 0;
    for (double m : micros) mean += m;
    mean /= resamples;
    double var = 0;
    for (double m : micros) var += (m - mean) * (m - mean);
    rep.micro_std = std::sqrt(var / resamples);
  }
  return rep;
}

namespace {

// predictive-term caches for one symbol: per-row-entry lambda_hat / denom_k
struct SymbolTerms {
  const Row* row = nullptr;
  std::vector<double> extra;
  std::vector<double> cum;  // prefix sums of alpha * extra
  double t2 = 0;            // sum of alpha * extra
};

}  // namespace

double left_to_right_ll(const Document& doc, const SparseModel& model, uint32_t particles,
                        uint64_t seed) {
  if (particles == 0) throw std::invalid_argument("left_to_right_ll: particles must be >= 1");
  const size_t total_len = doc.words.size() + doc.mentions.size();
  if (total_len == 0) return 0.0;

  const Hyperparams& hp = model.hp;
  const uint32_t K = hp.num_topics;
  const double alpha = hp.alpha;

  // per stream: base_k = beta / (V*beta + sums_k), plus dense prefix sums
  std::array<std::vector<double>, 2> base;
  std::array<std::vector<double>, 2> cum_base;
  std::array<double, 2> t1{};
  for (Vocab s : {Vocab::word, Vocab::mention}) {
    const int si = static_cast<int>(s);
    const double beta = hp.beta(s);
    const auto& sums = model.sums(s);
    base[si].resize(K);
    cum_base[si].resize(K);
    double acc = 0;
    for (uint32_t k = 0; k < K; ++k) {
      double denom = static_cast<double>(hp.vocab_size(s)) * beta + sums[k];
      if (!(denom > 0)) throw NumericError("left_to_right_ll: nonpositive denominator");
      base[si][k] = beta / denom;
      acc += alpha * base[si][k];
      cum_base[si][k] = acc;
    }
    t1[si] = acc;
  }

  std::array<std::map<std::string, SymbolTerms>, 2> terms;
  auto symbol_terms = [&](Vocab s, const std::string& sym) -> const SymbolTerms& {
    const int si = static_cast<int>(s);
    auto it = terms[si].find(sym);
    if (it != terms[si].end()) return it->second;
    SymbolTerms st;
    auto rit = model.rows(s).find(sym);
    if (rit != model.rows(s).end() && !rit->second.empty()) {
      st.row = &rit->second;
      const double beta = hp.beta(s);
      const auto& sums = model.sums(s);
      double acc = 0;
      for (const auto& [k, lh] : *st.row) {
        double denom = static_cast<double>(hp.vocab_size(s)) * beta + sums[k];
        double extra = lh / denom;
        st.extra.push_back(extra);
        acc += alpha * extra;
        st.cum.push_back(acc);
      }
      st.t2 = acc;
    }
    return terms[si].emplace(sym, std::move(st)).first->second;
  };

  std::vector<CountMap> n(particles);
  std::vector<std::array<double, 2>> t3(particles, {0.0, 0.0});
  Rng rng(derive_seed(seed, doc.id, 0, kSaltLikelihood));

  double ll = 0;
  size_t assigned = 0;
  auto consume = [&](Vocab s, const std::string& sym) {
    const int si = static_cast<int>(s);
    const SymbolTerms& st = symbol_terms(s, sym);
    const double denom_theta = static_cast<double>(K) * alpha + static_cast<double>(assigned);

    double p_sum = 0;
    std::vector<double> numer(particles);
    std::vector<double> t4(particles);
    for (uint32_t r = 0; r < particles; ++r) {
      double t4r = 0;
      if (st.row) {
        const auto& nk = n[r].entries();
        size_t a = 0, b = 0;
        while (a < nk.size() && b < st.row->size()) {
          if (nk[a].first < (*st.row)[b].first) {
            ++a;
          } else if ((*st.row)[b].first < nk[a].first) {
            ++b;
          } else {
            t4r += nk[a].second * st.extra[b];
            ++a;
            ++b;
          }
        }
      }
      t4[r] = t4r;
      numer[r] = t1[si] + st.t2 + t3[r][si] + t4r;
      p_sum += numer[r] / denom_theta;
    }
    double p = p_sum / particles;
    if (!(p > 0) || !std::isfinite(p))
      throw NumericError("left_to_right_ll: nonpositive predictive probability");
    ll += std::log(p);

    for (uint32_t r = 0; r < particles; ++r) {
      double u = rng.uniform01() * numer[r];
      const auto& nk = n[r].entries();
      uint32_t z = K - 1;
      bool done = false;
      if (st.row) {  // assigned/symbol intersection
        size_t a = 0, b = 0;
        while (a < nk.size() && b < st.row->size()) {
          if (nk[a].first < (*st.row)[b].first) {
            ++a;
          } else if ((*st.row)[b].first < nk[a].first) {
            ++b;
          } else {
            u -= nk[a].second * st.extra[b];
            if (u <= 0) {
              z = nk[a].first;
              done = true;
              break;
            }
            ++a;
            ++b;
          }
        }
      }
      if (!done) {  // assigned topics
        for (const auto& [k, c] : nk) {
          u -= c * base[si][k];
          if (u <= 0) {
            z = k;
            done = true;
            break;
          }
        }
      }
      if (!done && st.row) {  // symbol support
        if (u <= st.t2) {
          size_t i = std::lower_bound(st.cum.begin(), st.cum.end(), u) - st.cum.begin();
          if (i >= st.row->size()) i = st.row->size() - 1;
          z = (*st.row)[i].first;
          done = true;
        } else {
          u -= st.t2;
        }
      }
      if (!done) {  // dense prior
        size_t k = std::lower_bound(cum_base[si].begin(), cum_base[si].end(), u) -
                   cum_base[si].begin();
        z = k < K ? static_cast<uint32_t>(k) : K - 1;
      }
      n[r].inc(z);
      t3[r][0] += base[0][z];
      t3[r][1] += base[1][z];
    }
    ++assigned;
  };

  for (const std::string& w : doc.words) consume(Vocab::word, w);
  for (const std::string& m : doc.mentions) consume(Vocab::mention, m);
  return ll;
}

}  // namespace elda
