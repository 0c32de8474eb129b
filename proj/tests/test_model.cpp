#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "elda/common.hpp"
#include "elda/digamma.hpp"
#include "elda/kb.hpp"
#include "elda/model.hpp"
#include "elda/rng.hpp"
#include "support/oracles.hpp"

using namespace elda;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  fs::path d = fs::temp_directory_path() / "elda_model_tests";
  fs::create_directories(d);
  return d;
}

Hyperparams base_hp(uint32_t k, uint32_t vw, uint32_t vm) {
  Hyperparams hp;
  hp.num_topics = k;
  hp.vocab_words = vw;
  hp.vocab_mentions = vm;
  return hp;
}

KnowledgeBase tiny_kb() {
  KnowledgeBase kb;
  kb.titles = {"t0", "t1", "t2"};
  kb.in_links = {{1}, {0}, {0}};
  kb.word_counts["w_ratio"] = {{1, 3}, {2, 1}};
  kb.word_counts["w_single"] = {{0, 5}};
  kb.mention_counts["m0"] = {{0, 2}, {1, 2}};
  kb.mention_counts["m1"] = {{2, 4}};
  return kb;
}

}  // namespace

TEST_CASE("init_from_kb turns counts into per-symbol posteriors") {
  SparseModel model = init_from_kb(tiny_kb(), Hyperparams{});
  CHECK(model.hp.num_topics == 3);
  CHECK(model.hp.vocab_words == 2);
  CHECK(model.hp.vocab_mentions == 2);

  const Row& ratio = model.words.at("w_ratio");
  REQUIRE(ratio.size() == 2);
  CHECK(ratio[0].first == 1);
  CHECK(ratio[0].second == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(ratio[1].first == 2);
  CHECK(ratio[1].second == doctest::Approx(0.25).epsilon(1e-15));

  const Row& single = model.words.at("w_single");
  REQUIRE(single.size() == 1);
  CHECK(single[0].second == doctest::Approx(1.0).epsilon(1e-15));

  const Row& m0 = model.mentions.at("m0");
  REQUIRE(m0.size() == 2);
  CHECK(m0[0].second == doctest::Approx(0.5).epsilon(1e-15));

  model.check_consistency();
}

TEST_CASE("init truncates word rows to the strongest topics, mentions stay complete") {
  KnowledgeBase kb;
  const uint32_t k = 600;
  kb.titles.resize(k);
  kb.in_links.resize(k);
  for (uint32_t t = 0; t < k; ++t) {
    kb.titles[t] = "t" + std::to_string(t);
    kb.in_links[t] = {t == 0 ? 1u : 0u};
  }
  CountRow wide;
  for (uint32_t t = 0; t < k; ++t) wide.push_back({t, 1 + (t % 7)});
  kb.word_counts["wide"] = wide;
  kb.mention_counts["wide_m"] = wide;

  SparseModel model = init_from_kb(kb, Hyperparams{});  // default keeps 500
  const Row& row = model.words.at("wide");
  CHECK(row.size() == 500);
  CHECK(model.mentions.at("wide_m").size() == 600);

  // sort-truncate oracle: top 500 probabilities, ties to the lower topic id
  std::vector<std::pair<uint32_t, uint32_t>> by_count(wide.begin(), wide.end());
  std::stable_sort(by_count.begin(), by_count.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<uint32_t> expected;
  for (size_t i = 0; i < 500; ++i) expected.push_back(by_count[i].first);
  std::sort(expected.begin(), expected.end());
  REQUIRE(row.size() == expected.size());
  for (size_t i = 0; i < row.size(); ++i) CHECK(row[i].first == expected[i]);

  // and a pure tie keeps the lowest ids
  Hyperparams one;
  one.top_topics_per_word = 3;
  CountRow flat;
  for (uint32_t t = 0; t < 10; ++t) flat.push_back({t, 2});
  kb.word_counts.clear();
  kb.word_counts["flat"] = flat;
  SparseModel m2 = init_from_kb(kb, one);
  const Row& fl = m2.words.at("flat");
  REQUIRE(fl.size() == 3);
  CHECK(fl[0].first == 0);
  CHECK(fl[1].first == 1);
  CHECK(fl[2].first == 2);
}

TEST_CASE("transform computes kappa and kappa_prime from the centered rows") {
  Hyperparams hp = base_hp(2, 3, 1);
  hp.beta_word = 0.1;
  SparseModel model;
  model.hp = hp;
  model.words["w"] = {{0, 1.0}};
  model.recompute_sums();

  TransformedModel tm = transform(model, Vocab::word);
  CHECK(tm.exp_psi_beta == doctest::Approx(std::exp(digamma(0.1))).epsilon(1e-15));

  const Row& krow = tm.kappa.at("w");
  REQUIRE(krow.size() == 1);
  CHECK(krow[0].first == 0);
  // exp(psi(0.1 + 1.0)) - exp(psi(0.1)), 30-digit reference
  CHECK(krow[0].second == doctest::Approx(0.654554556328316219144598399156).epsilon(1e-12));

  // kappa_prime: exp(psi(V*beta + sums_k))
  REQUIRE(tm.kappa_prime.size() == 2);
  CHECK(tm.kappa_prime[0] == doctest::Approx(std::exp(digamma(0.3 + 1.0))).epsilon(1e-14));
  CHECK(tm.kappa_prime[1] == doctest::Approx(std::exp(digamma(0.3))).epsilon(1e-14));
}

TEST_CASE("kappa entries invert back to the model values") {
  Hyperparams hp = base_hp(50, 200, 100);
  Rng rng(77);
  SparseModel model;
  model.hp = hp;
  for (int i = 0; i < 40; ++i) {
    Row row;
    for (uint32_t t = 0; t < 50; ++t)
      if (rng.uniform01() < 0.2) row.push_back({t, rng.uniform01() * 5 + 1e-6});
    if (!row.empty()) model.words["w" + std::to_string(i)] = row;
  }
  model.recompute_sums();
  TransformedModel tm = transform(model, Vocab::word);
  for (const auto& [sym, krow] : tm.kappa) {
    const Row& mrow = model.words.at(sym);
    REQUIRE(krow.size() == mrow.size());
    for (size_t i = 0; i < krow.size(); ++i) {
      // psi(beta + lambda_hat) == log(kappa + exp(psi(beta)))
      double lhs = std::exp(digamma(hp.beta_word + mrow[i].second));
      double rhs = krow[i].second + tm.exp_psi_beta;
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("update counts materialize divides once and merge adds exactly") {
  UpdateCounts a;
  a.divisor = 4;
  a.words["w"] = {{0, 3}, {2, 5}};
  RowMap mat = a.materialize(Vocab::word);
  const Row& row = mat.at("w");
  CHECK(row[0].second == 0.75);
  CHECK(row[1].second == 1.25);

  UpdateCounts b;
  b.divisor = 4;
  b.words["w"] = {{2, 1}, {7, 2}};
  b.mentions["m"] = {{1, 1}};
  a.merge(b);
  CHECK(a.words.at("w") == UpdateCounts::IntRow{{0, 3}, {2, 6}, {7, 2}});
  CHECK(a.mentions.at("m") == UpdateCounts::IntRow{{1, 1}});

  UpdateCounts c;
  c.divisor = 5;
  c.words["x"] = {{0, 1}};
  CHECK_THROWS_AS(a.merge(c), std::invalid_argument);
}

TEST_CASE("merge result does not depend on grouping") {
  Rng rng(4);
  std::vector<UpdateCounts> parts(6);
  for (auto& u : parts) {
    u.divisor = 3;
    for (int s = 0; s < 4; ++s) {
      UpdateCounts::IntRow row;
      for (uint32_t t = 0; t < 10; ++t)
        if (rng.uniform01() < 0.4) row.push_back({t, static_cast<int64_t>(rng.uniform_below(20))});
      if (!row.empty()) u.words["w" + std::to_string(s)] = row;
    }
  }
  UpdateCounts left;
  for (const auto& u : parts) left.merge(u);
  UpdateCounts right;
  for (size_t i = parts.size(); i-- > 0;) right.merge(parts[i]);
  CHECK(left.words == right.words);
  CHECK(left.divisor == right.divisor);
}

TEST_CASE("interpolate_local applies decay plus scaled document counts") {
  Hyperparams hp = base_hp(3, 4, 4);
  hp.rho_local = 0.5;
  SparseModel local;
  local.hp = hp;
  local.words["w"] = {{0, 2.0}};
  local.recompute_sums();

  UpdateCounts doc;
  doc.divisor = 1;
  doc.words["w"] = {{0, 4}};
  interpolate_local(local, doc, 0.5, 10);
  // (1 - 0.5) * 2.0 + 0.5 * 10 * 4 / 1 = 21
  CHECK(local.words.at("w")[0].second == 21.0);
  CHECK(local.sums_word[0] == doctest::Approx(21.0).epsilon(1e-12));
  local.check_consistency();
}

TEST_CASE("interpolate_local with rho 0 is an exact no-op") {
  Hyperparams hp = base_hp(3, 4, 4);
  SparseModel local;
  local.hp = hp;
  local.words["w"] = {{0, 0.123456789}, {2, 7.5}};
  local.mentions["m"] = {{1, 0.25}};
  local.recompute_sums();
  SparseModel before = local;

  UpdateCounts doc;
  doc.divisor = 2;
  doc.words["w"] = {{1, 5}};
  interpolate_local(local, doc, 0.0, 10);
  CHECK(local.words == before.words);
  CHECK(local.mentions == before.mentions);
  CHECK(local.sums_word == before.sums_word);
  CHECK(local.sums_mention == before.sums_mention);
}

TEST_CASE("interpolate_local with rho 1 and one document replaces the row") {
  Hyperparams hp = base_hp(3, 4, 4);
  SparseModel local;
  local.hp = hp;
  local.words["w"] = {{0, 2.0}, {1, 3.0}};
  local.recompute_sums();

  UpdateCounts doc;
  doc.divisor = 2;
  doc.words["w"] = {{1, 5}};
  interpolate_local(local, doc, 1.0, 1);
  const Row& row = local.words.at("w");
  REQUIRE(row.size() == 1);  // topic 0 decayed to zero and was pruned
  CHECK(row[0].first == 1);
  CHECK(row[0].second == 2.5);
  local.check_consistency();
}

TEST_CASE("interpolate_local prunes entries that decay away") {
  Hyperparams hp = base_hp(2, 4, 4);
  SparseModel local;
  local.hp = hp;
  local.words["w"] = {{0, 1e-12}, {1, 1.0}};
  local.recompute_sums();
  UpdateCounts doc;
  doc.divisor = 1;
  interpolate_local(local, doc, 0.5, 1);
  const Row& row = local.words.at("w");
  REQUIRE(row.size() == 1);
  CHECK(row[0].first == 1);
  local.check_consistency();
}

TEST_CASE("interpolate_global blends the previous model with the shard mean") {
  Hyperparams hp = base_hp(2, 4, 4);
  hp.rho_global = 0.5;
  SparseModel prev;
  prev.hp = hp;
  prev.words["w"] = {{0, 1.0}};
  prev.recompute_sums();

  UpdateCounts s1, s2;
  s1.divisor = s2.divisor = 1;
  s1.words["w"] = {{0, 4}};
  s2.words["w"] = {{0, 2}};
  SparseModel next = interpolate_global(prev, {s1, s2}, 2, 0.5);
  // (1 - 0.5) * 1.0 + (0.5 / 2) * (4 + 2) = 2.0
  CHECK(next.words.at("w")[0].second == 2.0);
  next.check_consistency();
  // the input is untouched
  CHECK(prev.words.at("w")[0].second == 1.0);
}

TEST_CASE("interpolate_global with rho 0 returns the previous model bit for bit") {
  Hyperparams hp = base_hp(3, 4, 4);
  SparseModel prev;
  prev.hp = hp;
  prev.words["w"] = {{0, 0.1}, {2, 0.2}};
  prev.mentions["m"] = {{1, 0.7}};
  prev.recompute_sums();

  UpdateCounts s;
  s.divisor = 1;
  s.words["w"] = {{1, 9}};
  s.words["new"] = {{0, 3}};
  SparseModel next = interpolate_global(prev, {s}, 1, 0.0);

  fs::path p1 = tmp_dir() / "g0_prev.model", p2 = tmp_dir() / "g0_next.model";
  prev.save(p1);
  next.save(p2);
  CHECK(oracle::files_equal(p1.string(), p2.string()));
}

TEST_CASE("interpolate_global with rho 1 and one shard equals the update exactly") {
  Hyperparams hp = base_hp(3, 4, 4);
  SparseModel prev;
  prev.hp = hp;
  prev.words["w"] = {{0, 0.5}};
  prev.recompute_sums();

  UpdateCounts s;
  s.divisor = 4;
  s.words["w"] = {{1, 7}};
  s.mentions["m"] = {{2, 3}};
  SparseModel next = interpolate_global(prev, {s}, 1, 1.0);
  const Row& row = next.words.at("w");
  REQUIRE(row.size() == 1);
  CHECK(row[0].first == 1);
  CHECK(row[0].second == 7.0 / 4.0);  // exact in binary
  CHECK(next.mentions.at("m")[0].second == 3.0 / 4.0);
}

TEST_CASE("interpolate_global rejects topics beyond the model size") {
  Hyperparams hp = base_hp(2, 4, 4);
  SparseModel prev;
  prev.hp = hp;
  prev.recompute_sums();
  UpdateCounts s;
  s.divisor = 1;
  s.words["w"] = {{5, 1}};
  CHECK_THROWS_AS(interpolate_global(prev, {s}, 1, 0.5), std::invalid_argument);
}

TEST_CASE("model save/load round trip is byte exact") {
  Hyperparams hp = base_hp(6, 10, 8);
  hp.alpha = 0.007;
  hp.use_coherence = true;
  Rng rng(55);
  SparseModel model;
  model.hp = hp;
  for (int i = 0; i < 9; ++i) {
    Row wr, mr;
    for (uint32_t t = 0; t < 6; ++t) {
      if (rng.uniform01() < 0.5) wr.push_back({t, rng.uniform01() * 3});
      if (rng.uniform01() < 0.5) mr.push_back({t, rng.uniform01()});
    }
    if (!wr.empty()) model.words["w" + std::to_string(i)] = wr;
    if (!mr.empty()) model.mentions["m" + std::to_string(i)] = mr;
  }
  model.recompute_sums();

  fs::path p1 = tmp_dir() / "rt1.model", p2 = tmp_dir() / "rt2.model";
  model.save(p1);
  SparseModel back = SparseModel::load(p1);
  back.save(p2);
  CHECK(oracle::files_equal(p1.string(), p2.string()));
  CHECK(back.words == model.words);
  CHECK(back.mentions == model.mentions);
  CHECK(back.hp.alpha == model.hp.alpha);
  CHECK(back.hp.use_coherence == model.hp.use_coherence);
  back.check_consistency();
}

TEST_CASE("consistency checking flags corrupted sums") {
  SparseModel model;
  model.hp = base_hp(2, 4, 4);
  model.words["w"] = {{0, 1.0}};
  model.recompute_sums();
  model.check_consistency();
  model.sums_word[0] += 1e-6;
  CHECK_THROWS_AS(model.check_consistency(), NumericError);
  model.sums_word[0] -= 1e-6;
  model.sums_word[0] += 1e-10;  // inside the tolerance
  model.check_consistency();
}

TEST_CASE("row codec round trips") {
  Row row{{0, 0.125}, {3, 2.5}, {9, 1e-9}};
  std::string bytes = encode_row(row);
  Row back = decode_row(bytes, "test");
  CHECK(back == row);
  CHECK_THROWS_AS(decode_row(bytes.substr(0, bytes.size() - 1), "test"), DataError);
}

TEST_CASE("hyperparams validate and encode/decode round trip") {
  Hyperparams hp = base_hp(4, 9, 9);
  hp.validate();
  Hyperparams bad = hp;
  bad.alpha = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = hp;
  bad.burnin = bad.sweeps;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = hp;
  bad.rho_local = 1.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  hp.rho_global = 0.25;
  hp.coherence_words = true;
  hp.top_topics_per_word = 77;
  std::string bytes = hp.encode();
  Hyperparams back = Hyperparams::decode(bytes);
  CHECK(back.rho_global == hp.rho_global);
  CHECK(back.coherence_words == hp.coherence_words);
  CHECK(back.top_topics_per_word == hp.top_topics_per_word);
  CHECK(back.num_topics == hp.num_topics);
}
