#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "elda/common.hpp"
#include "elda/corpus_gen.hpp"
#include "elda/digamma.hpp"
#include "elda/document.hpp"
#include "elda/eval.hpp"
#include "elda/kb.hpp"
#include "elda/model.hpp"
#include "elda/pipeline.hpp"
#include "elda/rng.hpp"
#include "elda/tagme.hpp"

namespace {

using elda::Hyperparams;
using nlohmann::json;

void write_manifest(const std::string& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw elda::DataError("cannot write manifest \"" + path + "\"");
  f << j.dump(2) << "\n";
}

json hp_json(const Hyperparams& hp) {
  return json{{"alpha", hp.alpha},
              {"beta_word", hp.beta_word},
              {"beta_mention", hp.beta_mention},
              {"num_topics", hp.num_topics},
              {"vocab_words", hp.vocab_words},
              {"vocab_mentions", hp.vocab_mentions},
              {"sweeps", hp.sweeps},
              {"burnin", hp.burnin},
              {"iterations", hp.iterations},
              {"top_topics_per_word", hp.top_topics_per_word},
              {"rho_local", hp.rho_local},
              {"rho_global", hp.rho_global},
              {"epsilon", hp.epsilon},
              {"tau", hp.tau},
              {"use_coherence", hp.use_coherence},
              {"coherence_words", hp.coherence_words}};
}

// Hyperparameter flags shared by init/train/annotate. Explicitly passed flags
// override the base (the model's stored values for train/annotate); --burnin
// defaults to ceil(sweeps / 5) when only --sweeps is given.
struct HpFlags {
  Hyperparams v;
  uint32_t burnin = 0;
  bool use_coherence = false;
  bool coherence_words = false;
  CLI::Option* o_alpha = nullptr;
  CLI::Option* o_beta_word = nullptr;
  CLI::Option* o_beta_mention = nullptr;
  CLI::Option* o_sweeps = nullptr;
  CLI::Option* o_burnin = nullptr;
  CLI::Option* o_iterations = nullptr;
  CLI::Option* o_top = nullptr;
  CLI::Option* o_rho_local = nullptr;
  CLI::Option* o_rho_global = nullptr;
  CLI::Option* o_epsilon = nullptr;
  CLI::Option* o_tau = nullptr;
  CLI::Option* o_use_coherence = nullptr;
  CLI::Option* o_coherence_words = nullptr;

  void attach(CLI::App* cmd) {
    o_alpha = cmd->add_option("--alpha", v.alpha, "Dirichlet topic prior")
                  ->capture_default_str();
    o_beta_word = cmd->add_option("--beta-word", v.beta_word, "Dirichlet word prior")
                      ->capture_default_str();
    o_beta_mention =
        cmd->add_option("--beta-mention", v.beta_mention, "Dirichlet mention prior")
            ->capture_default_str();
    o_sweeps = cmd->add_option("--sweeps", v.sweeps, "Gibbs sweeps per document")
                   ->capture_default_str();
    o_burnin =
        cmd->add_option("--burnin", burnin, "sweeps discarded before averaging [ceil(sweeps/5)]");
    o_iterations = cmd->add_option("--iterations", v.iterations, "passes over the corpus")
                       ->capture_default_str();
    o_top = cmd->add_option("--top-topics-per-word", v.top_topics_per_word,
                            "stored topics per word row")
                ->capture_default_str();
    o_rho_local = cmd->add_option("--rho-local", v.rho_local, "per-document interpolation weight")
                      ->capture_default_str();
    o_rho_global = cmd->add_option("--rho-global", v.rho_global, "per-iteration interpolation weight")
                       ->capture_default_str();
    o_epsilon = cmd->add_option("--epsilon", v.epsilon, "vote filter: fraction of max relatedness")
                    ->capture_default_str();
    o_tau = cmd->add_option("--tau", v.tau, "vote filter: minimum within-row probability")
                ->capture_default_str();
    o_use_coherence =
        cmd->add_flag("--use-coherence", use_coherence, "weight sampling by assignment coherence");
    o_coherence_words =
        cmd->add_flag("--coherence-words", coherence_words, "apply coherence to content words too");
  }

  Hyperparams resolve(Hyperparams base) const {
    if (o_alpha->count()) base.alpha = v.alpha;
    if (o_beta_word->count()) base.beta_word = v.beta_word;
    if (o_beta_mention->count()) base.beta_mention = v.beta_mention;
    if (o_sweeps->count()) base.sweeps = v.sweeps;
    if (o_burnin->count())
      base.burnin = burnin;
    else if (o_sweeps->count())
      base.burnin = (base.sweeps + 4) / 5;
    if (o_iterations->count()) base.iterations = v.iterations;
    if (o_top->count()) base.top_topics_per_word = v.top_topics_per_word;
    if (o_rho_local->count()) base.rho_local = v.rho_local;
    if (o_rho_global->count()) base.rho_global = v.rho_global;
    if (o_epsilon->count()) base.epsilon = v.epsilon;
    if (o_tau->count()) base.tau = v.tau;
    if (o_use_coherence->count()) base.use_coherence = use_coherence;
    if (o_coherence_words->count()) base.coherence_words = coherence_words;
    return base;
  }
};

double corpus_ll(const std::vector<elda::Document>& docs, const elda::SparseModel& model,
                 uint32_t particles, uint64_t seed) {
  double total = 0;
  for (const auto& d : docs) total += elda::left_to_right_ll(d, model, particles, seed);
  return total;
}

std::vector<elda::Annotation> annotate_init_only(const std::vector<elda::Document>& docs,
                                                 const elda::SparseModel& model,
                                                 const elda::KnowledgeBase& kb,
                                                 const Hyperparams& hp, uint64_t seed) {
  std::vector<elda::Annotation> out;
  for (const auto& doc : docs) {
    std::set<uint32_t> cand;
    for (const auto& m : doc.mentions) {
      auto it = model.mentions.find(m);
      if (it == model.mentions.end()) continue;
      for (const auto& [t, x] : it->second) cand.insert(t);
    }
    std::vector<uint32_t> topics(cand.begin(), cand.end());
    elda::SimilarityCache sim = elda::SimilarityCache::over_topics(kb, topics);
    elda::Rng rng(elda::derive_seed(seed, doc.id, 0, elda::kSaltInit));
    elda::TagmeInit z0 = elda::tagme_init(doc, model.words, model.mentions, hp, sim, rng);
    for (size_t i = 0; i < doc.mentions.size(); ++i)
      out.push_back(elda::Annotation{doc.id, static_cast<uint32_t>(i), doc.mentions[i],
                                     static_cast<int64_t>(z0.z_mention[i])});
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse entity-topic modeling toolkit"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a synthetic knowledge base, corpus and gold labels");
  elda::SyntheticKbOptions kb_opts;
  elda::GenOptions gen_opts;
  std::string gen_kb_out, gen_corpus_out, gen_gold_out;
  std::string gen_manifest = "elda-gen.manifest.json";
  uint64_t gen_seed = 1;
  gen->add_option("--topics", kb_opts.num_topics, "number of topics")->capture_default_str();
  gen->add_option("--vocab-words", kb_opts.vocab_words, "word vocabulary size")
      ->capture_default_str();
  gen->add_option("--vocab-mentions", kb_opts.vocab_mentions, "mention vocabulary size")
      ->capture_default_str();
  gen->add_option("--ambiguity", kb_opts.ambiguity, "mean candidate topics per mention")
      ->capture_default_str();
  gen->add_option("--word-ambiguity", kb_opts.word_ambiguity, "mean topics per word")
      ->capture_default_str();
  gen->add_option("--groups", kb_opts.groups, "topic groups (0: one per ~10 topics)")
      ->capture_default_str();
  gen->add_option("--in-group-bias", kb_opts.in_group_bias, "share of in-links within the group")
      ->capture_default_str();
  gen->add_option("--docs", gen_opts.num_docs, "number of documents")->capture_default_str();
  gen->add_option("--mean-words", gen_opts.mean_words, "mean words per document")
      ->capture_default_str();
  gen->add_option("--mean-mentions", gen_opts.mean_mentions, "mean mentions per document")
      ->capture_default_str();
  gen->add_option("--alpha", gen_opts.alpha, "Dirichlet weight over each document's topics")
      ->capture_default_str();
  gen->add_option("--support", gen_opts.support, "max topics per document")->capture_default_str();
  gen->add_option("--seed", gen_seed, "random seed")->capture_default_str();
  gen->add_option("--kb-out", gen_kb_out, "knowledge base output path")->required();
  gen->add_option("--corpus-out", gen_corpus_out, "corpus output path")->required();
  gen->add_option("--gold-out", gen_gold_out, "gold labels output path")->required();
  gen->add_option("--manifest", gen_manifest, "manifest output path")->capture_default_str();
  gen->callback([&]() {
    kb_opts.seed = gen_seed;
    gen_opts.seed = gen_seed;
    elda::KnowledgeBase kb = elda::generate_synthetic_kb(kb_opts);
    kb.save(gen_kb_out);
    elda::GeneratedCorpus corpus = elda::generate_corpus(kb, gen_opts);
    elda::write_corpus(gen_corpus_out, corpus.docs);
    elda::write_gold(gen_gold_out, corpus.gold);
    write_manifest(gen_manifest,
                   json{{"command", "gen"},
                        {"seed", gen_seed},
                        {"topics", kb_opts.num_topics},
                        {"vocab_words", kb_opts.vocab_words},
                        {"vocab_mentions", kb_opts.vocab_mentions},
                        {"ambiguity", kb_opts.ambiguity},
                        {"word_ambiguity", kb_opts.word_ambiguity},
                        {"groups", kb_opts.groups},
                        {"in_group_bias", kb_opts.in_group_bias},
                        {"docs", gen_opts.num_docs},
                        {"mean_words", gen_opts.mean_words},
                        {"mean_mentions", gen_opts.mean_mentions},
                        {"alpha", gen_opts.alpha},
                        {"support", gen_opts.support},
                        {"kb_out", gen_kb_out},
                        {"corpus_out", gen_corpus_out},
                        {"gold_out", gen_gold_out}});
    std::printf("kb: %u topics -> %s\ncorpus: %zu docs -> %s\ngold: %zu mentions -> %s\n",
                kb.num_topics(), gen_kb_out.c_str(), corpus.docs.size(), gen_corpus_out.c_str(),
                corpus.gold.size(), gen_gold_out.c_str());
  });

  // ---- init ----
  auto* init = app.add_subcommand("init", "initialize a model from knowledge-base counts");
  HpFlags init_hp;
  std::string init_kb, init_model_out;
  std::string init_manifest = "elda-init.manifest.json";
  init->add_option("--kb", init_kb, "knowledge base path")->required();
  init->add_option("--model-out", init_model_out, "model output path")->required();
  init->add_option("--manifest", init_manifest, "manifest output path")->capture_default_str();
  init_hp.attach(init);
  init->callback([&]() {
    elda::KnowledgeBase kb = elda::KnowledgeBase::load(init_kb);
    Hyperparams hp = init_hp.resolve(Hyperparams{});
    elda::SparseModel model = elda::init_from_kb(kb, hp);
    model.save(init_model_out);
    write_manifest(init_manifest, json{{"command", "init"},
                                       {"kb", init_kb},
                                       {"model_out", init_model_out},
                                       {"hyperparams", hp_json(model.hp)}});
    std::printf("model: %zu word rows, %zu mention rows -> %s\n", model.words.size(),
                model.mentions.size(), init_model_out.c_str());
  });

  // ---- train ----
  auto* train = app.add_subcommand("train", "run training iterations over a corpus");
  HpFlags train_hp;
  std::string train_kb, train_model, train_corpus, train_model_out, train_dev;
  std::string train_workdir, train_manifest = "elda-train.manifest.json";
  uint32_t train_shards = 1, train_workers = 0, train_particles = 20;
  uint64_t train_seed = 1;
  train->add_option("--kb", train_kb, "knowledge base path")->required();
  train->add_option("--model", train_model, "input model path")->required();
  train->add_option("--corpus", train_corpus, "training corpus path")->required();
  train->add_option("--model-out", train_model_out, "model output path")->required();
  train->add_option("--dev-corpus", train_dev,
                    "held-out corpus; prints its log likelihood per iteration");
  train->add_option("--particles", train_particles, "particles for held-out likelihood")
      ->capture_default_str();
  train->add_option("--shards", train_shards, "number of map shards")->capture_default_str();
  train->add_option("--workers", train_workers, "concurrent shard workers [shards]");
  train->add_option("--seed", train_seed, "random seed")->capture_default_str();
  train->add_option("--workdir", train_workdir, "intermediate table directory [<model-out>.work]");
  train->add_option("--manifest", train_manifest, "manifest output path")->capture_default_str();
  train_hp.attach(train);
  train->callback([&]() {
    elda::KnowledgeBase kb = elda::KnowledgeBase::load(train_kb);
    elda::SparseModel model = elda::SparseModel::load(train_model);
    Hyperparams run_hp = train_hp.resolve(model.hp);
    run_hp.validate();
    // zero iterations is a no-op: the input model is written back unchanged
    if (run_hp.iterations > 0) model.hp = run_hp;
    std::vector<elda::Document> dev;
    if (!train_dev.empty()) dev = elda::read_corpus(train_dev);
    std::filesystem::path workdir =
        train_workdir.empty() ? std::filesystem::path(train_model_out + ".work")
                              : std::filesystem::path(train_workdir);

    for (uint32_t t = 0; t < run_hp.iterations; ++t) {
      elda::IterationResult res = elda::run_iteration(train_corpus, model, kb, train_shards,
                                                      train_workers, train_seed, t, workdir);
      model = std::move(res.model);
      double cells_per_draw =
          res.stats.draws ? static_cast<double>(res.stats.cells) / res.stats.draws : 0.0;
      if (!dev.empty()) {
        double ll = corpus_ll(dev, model, train_particles, train_seed);
        std::printf("iteration %u: cells_per_draw=%.2f heldout_ll=%.6f\n", t, cells_per_draw, ll);
      } else {
        std::printf("iteration %u: cells_per_draw=%.2f\n", t, cells_per_draw);
      }
      std::fflush(stdout);
    }
    std::error_code ec;
    std::filesystem::remove(workdir, ec);
    model.save(train_model_out);
    write_manifest(train_manifest, json{{"command", "train"},
                                        {"kb", train_kb},
                                        {"model", train_model},
                                        {"corpus", train_corpus},
                                        {"model_out", train_model_out},
                                        {"dev_corpus", train_dev},
                                        {"shards", train_shards},
                                        {"workers", train_workers},
                                        {"particles", train_particles},
                                        {"seed", train_seed},
                                        {"hyperparams", hp_json(run_hp)}});
    std::printf("model -> %s\n", train_model_out.c_str());
  });

  // ---- annotate ----
  auto* annotate = app.add_subcommand("annotate", "predict a topic for every mention");
  HpFlags ann_hp;
  std::string ann_kb, ann_model, ann_corpus, ann_out;
  std::string ann_workdir, ann_manifest = "elda-annotate.manifest.json";
  uint32_t ann_shards = 1, ann_workers = 0;
  uint64_t ann_seed = 1;
  bool ann_init_only = false;
  annotate->add_option("--kb", ann_kb, "knowledge base path")->required();
  annotate->add_option("--model", ann_model, "model path")->required();
  annotate->add_option("--corpus", ann_corpus, "corpus path")->required();
  annotate->add_option("--out", ann_out, "annotations output path")->required();
  annotate->add_flag("--init-only", ann_init_only,
                     "emit the vote-based initial assignment without sampling");
  annotate->add_option("--shards", ann_shards, "number of map shards")->capture_default_str();
  annotate->add_option("--workers", ann_workers, "concurrent shard workers [shards]");
  annotate->add_option("--seed", ann_seed, "random seed")->capture_default_str();
  annotate->add_option("--workdir", ann_workdir, "intermediate table directory [<out>.work]");
  annotate->add_option("--manifest", ann_manifest, "manifest output path")->capture_default_str();
  ann_hp.attach(annotate);
  annotate->callback([&]() {
    elda::KnowledgeBase kb = elda::KnowledgeBase::load(ann_kb);
    elda::SparseModel model = elda::SparseModel::load(ann_model);
    model.hp = ann_hp.resolve(model.hp);
    model.hp.validate();
    std::vector<elda::Annotation> anns;
    if (ann_init_only) {
      std::vector<elda::Document> docs = elda::read_corpus(ann_corpus);
      anns = annotate_init_only(docs, model, kb, model.hp, ann_seed);
    } else {
      std::filesystem::path workdir = ann_workdir.empty()
                                          ? std::filesystem::path(ann_out + ".work")
                                          : std::filesystem::path(ann_workdir);
      elda::IterationResult res = elda::run_iteration(ann_corpus, model, kb, ann_shards,
                                                      ann_workers, ann_seed, 0, workdir);
      anns = std::move(res.annotations);
      std::error_code ec;
      std::filesystem::remove(workdir, ec);
    }
    elda::write_annotations(ann_out, anns, &kb.titles);
    write_manifest(ann_manifest, json{{"command", "annotate"},
                                      {"kb", ann_kb},
                                      {"model", ann_model},
                                      {"corpus", ann_corpus},
                                      {"out", ann_out},
                                      {"init_only", ann_init_only},
                                      {"shards", ann_shards},
                                      {"workers", ann_workers},
                                      {"seed", ann_seed},
                                      {"hyperparams", hp_json(model.hp)}});
    std::printf("annotations: %zu mentions -> %s\n", anns.size(), ann_out.c_str());
  });

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "score annotations against gold labels");
  std::string eval_ann, eval_gold, eval_report_out;
  std::string eval_manifest = "elda-eval.manifest.json";
  uint64_t eval_seed = 1;
  uint32_t eval_resamples = 1000;
  eval->add_option("--annotations", eval_ann, "annotations path")->required();
  eval->add_option("--gold", eval_gold, "gold labels path")->required();
  eval->add_option("--bootstrap-seed", eval_seed, "bootstrap random seed")->capture_default_str();
  eval->add_option("--resamples", eval_resamples, "bootstrap resamples")->capture_default_str();
  eval->add_option("--report-out", eval_report_out, "also write the report to this path");
  eval->add_option("--manifest", eval_manifest, "manifest output path")->capture_default_str();
  eval->callback([&]() {
    std::vector<elda::Annotation> anns = elda::read_annotations(eval_ann);
    std::vector<elda::GoldRecord> gold = elda::read_gold(eval_gold);
    elda::EvalReport rep = elda::score(anns, gold, eval_seed, eval_resamples);
    std::string text = rep.text();
    std::fputs(text.c_str(), stdout);
    if (!eval_report_out.empty()) {
      std::ofstream f(eval_report_out, std::ios::binary);
      if (!f) throw elda::DataError("cannot write report \"" + eval_report_out + "\"");
      f << text;
    }
    write_manifest(eval_manifest, json{{"command", "eval"},
                                       {"annotations", eval_ann},
                                       {"gold", eval_gold},
                                       {"bootstrap_seed", eval_seed},
                                       {"resamples", eval_resamples},
                                       {"report_out", eval_report_out}});
  });

  // ---- likelihood ----
  auto* like = app.add_subcommand("likelihood", "left-to-right held-out log likelihood");
  std::string like_model, like_corpus;
  std::string like_manifest = "elda-likelihood.manifest.json";
  uint32_t like_particles = 20;
  uint64_t like_seed = 1;
  like->add_option("--model", like_model, "model path")->required();
  like->add_option("--corpus", like_corpus, "corpus path")->required();
  like->add_option("--particles", like_particles, "particles per document")->capture_default_str();
  like->add_option("--seed", like_seed, "random seed")->capture_default_str();
  like->add_option("--manifest", like_manifest, "manifest output path")->capture_default_str();
  like->callback([&]() {
    elda::SparseModel model = elda::SparseModel::load(like_model);
    std::vector<elda::Document> docs = elda::read_corpus(like_corpus);
    double total = corpus_ll(docs, model, like_particles, like_seed);
    std::printf("documents=%zu\nll_total=%.6f\nll_mean=%.6f\n", docs.size(), total,
                docs.empty() ? 0.0 : total / static_cast<double>(docs.size()));
    write_manifest(like_manifest, json{{"command", "likelihood"},
                                       {"model", like_model},
                                       {"corpus", like_corpus},
                                       {"particles", like_particles},
                                       {"seed", like_seed}});
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const elda::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const elda::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
