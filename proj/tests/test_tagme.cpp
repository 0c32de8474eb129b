#include <map>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "elda/kb.hpp"
#include "elda/model.hpp"
#include "elda/rng.hpp"
#include "elda/tagme.hpp"

using namespace elda;

namespace {

Hyperparams make_hp(uint32_t k, double epsilon = 0.25, double tau = 0.02) {
  Hyperparams hp;
  hp.num_topics = k;
  hp.vocab_words = 100;
  hp.vocab_mentions = 100;
  hp.epsilon = epsilon;
  hp.tau = tau;
  return hp;
}

}  // namespace

TEST_CASE("vote arithmetic fixtures") {
  Document doc;
  doc.id = "d";
  doc.mentions = {"a", "b"};
  Hyperparams hp = make_hp(10);

  // single candidate, sim 1, lambda 0.8 -> 0.8 (lambda = lambda_hat + beta)
  RowMap rows;
  rows["b"] = {{4, 0.8 - hp.beta_mention}};
  SimilarityCache sim1 = SimilarityCache::from_edges({{2, 4, 1.0}});
  CHECK(tagme_votes(doc, 1, 2, rows, hp.beta_mention, sim1) ==
        doctest::Approx(0.8).epsilon(1e-12));

  // all sims zero -> 0
  SimilarityCache sim0 = SimilarityCache::from_edges({});
  CHECK(tagme_votes(doc, 1, 2, rows, hp.beta_mention, sim0) == 0.0);

  // two candidates, sims {0.5, 0.25}, lambdas {0.4, 0.8} -> 0.2
  RowMap rows2;
  rows2["b"] = {{4, 0.4 - hp.beta_mention}, {5, 0.8 - hp.beta_mention}};
  SimilarityCache sim2 = SimilarityCache::from_edges({{2, 4, 0.5}, {2, 5, 0.25}});
  CHECK(tagme_votes(doc, 1, 2, rows2, hp.beta_mention, sim2) ==
        doctest::Approx(0.2).epsilon(1e-12));

  // a mention without a row casts a zero vote
  CHECK(tagme_votes(doc, 0, 2, rows2, hp.beta_mention, sim2) == 0.0);
}

TEST_CASE("single-mention documents fall back to the argmax row entry") {
  Document doc;
  doc.id = "d";
  doc.mentions = {"m"};
  RowMap mrows;
  mrows["m"] = {{1, 0.3}, {4, 2.0}, {7, 0.5}};
  Hyperparams hp = make_hp(10);
  SimilarityCache sim = SimilarityCache::from_edges({});
  Rng rng(1);
  TagmeInit z = tagme_init(doc, {}, mrows, hp, sim, rng);
  REQUIRE(z.z_mention.size() == 1);
  CHECK(z.z_mention[0] == 4);
}

TEST_CASE("argmax ties resolve to the lower topic id") {
  Document doc;
  doc.id = "d";
  doc.words = {"w"};
  doc.mentions = {"m"};
  RowMap wrows, mrows;
  wrows["w"] = {{2, 1.5}, {6, 1.5}};
  mrows["m"] = {{3, 0.9}, {8, 0.9}};
  Hyperparams hp = make_hp(10);
  SimilarityCache sim = SimilarityCache::from_edges({});
  Rng rng(1);
  TagmeInit z = tagme_init(doc, wrows, mrows, hp, sim, rng);
  CHECK(z.z_word[0] == 2);
  CHECK(z.z_mention[0] == 3);
}

TEST_CASE("graph-coherent candidate beats the higher-prior candidate") {
  // ambiguous mention: topic 0 has the big prior, topic 3 is graph-linked to
  // the two anchor mentions' candidates
  Document doc;
  doc.id = "d";
  doc.mentions = {"amb", "anchor1", "anchor2"};
  Hyperparams hp = make_hp(6);

  RowMap mrows;
  mrows["amb"] = {{0, 5.0}, {3, 0.5}};
  mrows["anchor1"] = {{4, 1.0}};
  mrows["anchor2"] = {{5, 0.7}};
  SimilarityCache sim = SimilarityCache::from_edges({{3, 4, 0.9}, {3, 5, 0.8}, {4, 5, 0.6}});

  // brute-force relatedness for every candidate of "amb"
  auto rel_of = [&](uint32_t cand) {
    double rel = 0;
    for (size_t j = 1; j < doc.mentions.size(); ++j)
      rel += tagme_votes(doc, j, cand, mrows, hp.beta_mention, sim);
    return rel;
  };
  double rel0 = rel_of(0);
  double rel3 = rel_of(3);
  CHECK(rel0 == 0.0);
  // sim(3,4) * (1.0 + beta) + sim(3,5) * (0.7 + beta)
  CHECK(rel3 == doctest::Approx(0.9 * (1.0 + hp.beta_mention) + 0.8 * (0.7 + hp.beta_mention))
                    .epsilon(1e-12));

  Rng rng(1);
  TagmeInit z = tagme_init(doc, {}, mrows, hp, sim, rng);
  // topic 0 fails the relatedness filter (rel 0 < eps * rel3); topic 3 passes
  // both filters (P(3|amb) = 0.5/5.5 > tau) and wins despite the smaller prior
  CHECK(z.z_mention[0] == 3);
  // the baseline pick would have been the prior argmax
  CHECK(mrows["amb"][0].first == 0);
  CHECK(z.z_mention[1] == 4);
  CHECK(z.z_mention[2] == 5);
}

TEST_CASE("epsilon 1 keeps only the candidates with maximal relatedness") {
  Document doc;
  doc.id = "d";
  doc.mentions = {"amb", "anchor"};
  Hyperparams hp = make_hp(6, 1.0, 0.0);

  RowMap mrows;
  // candidate 1 has a weaker link but the bigger prior; candidate 2 is max-rel
  mrows["amb"] = {{1, 3.0}, {2, 0.2}};
  mrows["anchor"] = {{4, 1.0}};
  SimilarityCache sim = SimilarityCache::from_edges({{1, 4, 0.3}, {2, 4, 0.9}});
  Rng rng(1);
  TagmeInit z = tagme_init(doc, {}, mrows, hp, sim, rng);
  CHECK(z.z_mention[0] == 2);
}

TEST_CASE("tau filters low-probability candidates even when well connected") {
  Document doc;
  doc.id = "d";
  doc.mentions = {"amb", "anchor"};
  Hyperparams hp = make_hp(6, 0.0, 0.5);  // epsilon 0: relatedness never filters

  RowMap mrows;
  // candidate 2 is strongly connected but carries 1% of the row mass
  mrows["amb"] = {{1, 9.9}, {2, 0.1}};
  mrows["anchor"] = {{4, 1.0}};
  SimilarityCache sim = SimilarityCache::from_edges({{2, 4, 0.9}});
  Rng rng(1);
  TagmeInit z = tagme_init(doc, {}, mrows, hp, sim, rng);
  // only candidate 1 survives tau
  CHECK(z.z_mention[0] == 1);

  // with tau above every candidate's probability the keep set empties and the
  // unfiltered argmax wins
  Hyperparams all_filtered = make_hp(6, 0.0, 1.0);
  Rng rng2(1);
  TagmeInit z2 = tagme_init(doc, {}, mrows, all_filtered, sim, rng2);
  CHECK(z2.z_mention[0] == 1);
}

TEST_CASE("symbols without rows draw uniformly but deterministically") {
  Document doc;
  doc.id = "d";
  doc.words = {"unknown_w", "unknown_w"};
  doc.mentions = {"unknown_m"};
  Hyperparams hp = make_hp(50);
  SimilarityCache sim = SimilarityCache::from_edges({});

  Rng r1(9), r2(9);
  TagmeInit a = tagme_init(doc, {}, {}, hp, sim, r1);
  TagmeInit b = tagme_init(doc, {}, {}, hp, sim, r2);
  CHECK(a.z_word == b.z_word);
  CHECK(a.z_mention == b.z_mention);
  for (uint32_t z : a.z_word) CHECK(z < 50);
  for (uint32_t z : a.z_mention) CHECK(z < 50);

  // spread over many draws
  Document big;
  big.id = "b";
  for (int i = 0; i < 300; ++i) big.words.push_back("unknown_w");
  Rng r3(11);
  TagmeInit c = tagme_init(big, {}, {}, hp, sim, r3);
  std::set<uint32_t> seen(c.z_word.begin(), c.z_word.end());
  CHECK(seen.size() > 30);
}

TEST_CASE("words always take their row argmax regardless of mentions") {
  Document doc;
  doc.id = "d";
  doc.words = {"w1", "w2"};
  doc.mentions = {"m"};
  Hyperparams hp = make_hp(8);
  RowMap wrows, mrows;
  wrows["w1"] = {{0, 0.1}, {5, 3.0}};
  wrows["w2"] = {{7, 0.4}};
  mrows["m"] = {{2, 1.0}};
  SimilarityCache sim = SimilarityCache::from_edges({{2, 5, 1.0}});
  Rng rng(1);
  TagmeInit z = tagme_init(doc, wrows, mrows, hp, sim, rng);
  CHECK(z.z_word[0] == 5);
  CHECK(z.z_word[1] == 7);
  CHECK(z.z_mention[0] == 2);
}
