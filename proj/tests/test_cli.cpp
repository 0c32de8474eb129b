#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "elda/document.hpp"
#include "elda/model.hpp"
#include "support/oracles.hpp"

using namespace elda;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path cli_dir(const std::string& leaf) {
  fs::path d = fs::temp_directory_path() / "elda_cli_tests" / leaf;
  fs::create_directories(d);
  return d;
}

// runs the binary from inside `dir` so relative outputs land there
CliResult run_cli(const fs::path& dir, const std::string& args) {
  std::string cmd = "cd '" + dir.string() + "' && '" + ELDA_CLI_PATH + "' " + args +
                    " >cli_stdout.txt 2>cli_stderr.txt";
  int rc = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.out = slurp(dir / "cli_stdout.txt");
  r.err = slurp(dir / "cli_stderr.txt");
  return r;
}

const std::string kGenSmall =
    "gen --topics 20 --vocab-words 200 --vocab-mentions 80 --ambiguity 2 --docs 25 "
    "--mean-words 10 --mean-mentions 5 --seed 5 "
    "--kb-out kb.stbl --corpus-out corpus.stbl --gold-out gold.tsv";

}  // namespace

TEST_CASE("cli help exits 0 and usage errors exit 2") {
  fs::path dir = cli_dir("help");
  CliResult help = run_cli(dir, "--help");
  CHECK(help.code == 0);
  for (const char* sub : {"gen", "init", "train", "annotate", "eval", "likelihood"})
    CHECK(help.out.find(sub) != std::string::npos);

  CliResult sub_help = run_cli(dir, "train --help");
  CHECK(sub_help.code == 0);
  CHECK(sub_help.out.find("--rho-local") != std::string::npos);
  CHECK(sub_help.out.find("--sweeps") != std::string::npos);

  CHECK(run_cli(dir, "not-a-command").code == 2);
  CHECK(run_cli(dir, "train").code == 2);
  CHECK(run_cli(dir, "gen --no-such-flag").code == 2);
  CHECK(run_cli(dir, "").code == 2);  // a subcommand is required
}

TEST_CASE("cli reports missing input files as data errors") {
  fs::path dir = cli_dir("missing");
  CliResult r = run_cli(dir, "init --kb nope.stbl --model-out m.stbl");
  CHECK(r.code == 3);
  CHECK(r.err.find("data error") != std::string::npos);
  CHECK(run_cli(dir, "eval --annotations nope.txt --gold nope.tsv").code == 3);
}

TEST_CASE("gen is seed-deterministic at the byte level") {
  fs::path dir = cli_dir("gen");
  REQUIRE(run_cli(dir, kGenSmall).code == 0);
  std::string again = kGenSmall;
  auto replace = [&](const std::string& from, const std::string& to) {
    again.replace(again.find(from), from.size(), to);
  };
  replace("kb.stbl", "kb2.stbl");
  replace("corpus.stbl", "corpus2.stbl");
  replace("gold.tsv", "gold2.tsv");
  REQUIRE(run_cli(dir, again).code == 0);
  CHECK(oracle::files_equal((dir / "kb.stbl").string(), (dir / "kb2.stbl").string()));
  CHECK(oracle::files_equal((dir / "corpus.stbl").string(), (dir / "corpus2.stbl").string()));
  CHECK(oracle::files_equal((dir / "gold.tsv").string(), (dir / "gold2.tsv").string()));

  std::string manifest = slurp(dir / "elda-gen.manifest.json");
  CHECK(manifest.find("\"command\": \"gen\"") != std::string::npos);
  CHECK(manifest.find("\"seed\": 5") != std::string::npos);
}

TEST_CASE("init builds a consistent model and honors the row cap") {
  fs::path dir = cli_dir("init");
  REQUIRE(run_cli(dir, kGenSmall).code == 0);
  CliResult r = run_cli(dir, "init --kb kb.stbl --model-out model.stbl --top-topics-per-word 1");
  REQUIRE(r.code == 0);
  SparseModel model = SparseModel::load((dir / "model.stbl").string());
  model.check_consistency(1e-9);
  CHECK(model.hp.top_topics_per_word == 1);
  CHECK(model.hp.num_topics == 20);
  for (const auto& [w, row] : model.words) CHECK(row.size() == 1);
  CHECK(!model.mentions.empty());
}

TEST_CASE("train with zero iterations copies the model byte for byte") {
  fs::path dir = cli_dir("train0");
  REQUIRE(run_cli(dir, kGenSmall).code == 0);
  REQUIRE(run_cli(dir, "init --kb kb.stbl --model-out model.stbl").code == 0);
  CliResult r = run_cli(dir,
                        "train --kb kb.stbl --model model.stbl --corpus corpus.stbl "
                        "--model-out same.stbl --iterations 0");
  REQUIRE(r.code == 0);
  CHECK(oracle::files_equal((dir / "model.stbl").string(), (dir / "same.stbl").string()));
}

TEST_CASE("training is reproducible and reports per-iteration progress") {
  fs::path dir = cli_dir("train");
  REQUIRE(run_cli(dir, kGenSmall).code == 0);
  REQUIRE(run_cli(dir, "init --kb kb.stbl --model-out model.stbl").code == 0);
  const std::string train =
      "train --kb kb.stbl --model model.stbl --corpus corpus.stbl --dev-corpus corpus.stbl "
      "--iterations 2 --sweeps 20 --burnin 4 --shards 2 --seed 3 --model-out ";
  CliResult a = run_cli(dir, train + "t1.stbl");
  REQUIRE(a.code == 0);
  CHECK(a.out.find("iteration 0: cells_per_draw=") != std::string::npos);
  CHECK(a.out.find("iteration 1: cells_per_draw=") != std::string::npos);
  CHECK(a.out.find("heldout_ll=") != std::string::npos);

  CliResult b = run_cli(dir, train + "t2.stbl");
  REQUIRE(b.code == 0);
  CHECK(oracle::files_equal((dir / "t1.stbl").string(), (dir / "t2.stbl").string()));

  SparseModel trained = SparseModel::load((dir / "t1.stbl").string());
  trained.check_consistency(1e-6);
  CHECK(trained.hp.iterations == 2);

  std::string manifest = slurp(dir / "elda-train.manifest.json");
  CHECK(manifest.find("\"command\": \"train\"") != std::string::npos);
  CHECK(manifest.find("\"iterations\": 2") != std::string::npos);

  // intermediates are cleaned up: the work directory holds nothing
  size_t leftovers = 0;
  if (fs::exists(dir / "t2.stbl.work"))
    for (const auto& e : fs::directory_iterator(dir / "t2.stbl.work")) {
      (void)e;
      ++leftovers;
    }
  CHECK(leftovers == 0);
}

TEST_CASE("unambiguous mentions give a perfect end-to-end score") {
  fs::path dir = cli_dir("perfect");
  REQUIRE(run_cli(dir,
                  "gen --topics 15 --vocab-words 150 --vocab-mentions 60 --ambiguity 1 "
                  "--docs 30 --mean-words 8 --mean-mentions 5 --seed 8 "
                  "--kb-out kb.stbl --corpus-out corpus.stbl --gold-out gold.tsv")
              .code == 0);
  REQUIRE(run_cli(dir, "init --kb kb.stbl --model-out model.stbl").code == 0);
  CliResult ann = run_cli(dir,
                          "annotate --kb kb.stbl --model model.stbl --corpus corpus.stbl "
                          "--init-only --out ann.txt");
  REQUIRE(ann.code == 0);
  CliResult ev = run_cli(dir, "eval --annotations ann.txt --gold gold.tsv --report-out rep.txt");
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("micro=1.000000") != std::string::npos);
  CHECK(ev.out.find("macro=1.000000") != std::string::npos);
  CHECK(slurp(dir / "rep.txt") == ev.out);
}

TEST_CASE("annotations cover every mention in sorted order") {
  fs::path dir = cli_dir("annotate");
  REQUIRE(run_cli(dir, kGenSmall).code == 0);
  REQUIRE(run_cli(dir, "init --kb kb.stbl --model-out model.stbl").code == 0);
  CliResult r = run_cli(dir,
                        "annotate --kb kb.stbl --model model.stbl --corpus corpus.stbl "
                        "--sweeps 10 --burnin 2 --seed 6 --shards 3 --out ann.txt");
  REQUIRE(r.code == 0);

  std::vector<Document> docs = read_corpus(dir / "corpus.stbl");
  size_t mentions = 0;
  for (const Document& d : docs) mentions += d.mentions.size();
  std::vector<Annotation> anns = read_annotations(dir / "ann.txt");
  REQUIRE(anns.size() == mentions);
  for (size_t i = 1; i < anns.size(); ++i) {
    bool ordered = anns[i - 1].doc_id < anns[i].doc_id ||
                   (anns[i - 1].doc_id == anns[i].doc_id &&
                    anns[i - 1].mention_index < anns[i].mention_index);
    CHECK(ordered);
  }
  for (const Annotation& a : anns) {
    CHECK(a.topic >= 0);
    CHECK(a.topic < 20);
  }
}

TEST_CASE("numeric failures surface as exit code 4") {
  fs::path dir = cli_dir("numeric");
  SparseModel model;
  model.hp.num_topics = 2;
  model.hp.vocab_words = 4;
  model.hp.vocab_mentions = 2;
  model.hp.beta_word = 0.1;
  model.hp.beta_mention = 0.1;
  model.words["w"] = {{0, -50.0}};  // legal on disk, poisonous to evaluate
  model.recompute_sums();
  model.save(dir / "bad.stbl");

  Document doc;
  doc.id = "d";
  doc.words = {"w"};
  write_corpus(dir / "corpus.stbl", {doc});

  CliResult r = run_cli(dir, "likelihood --model bad.stbl --corpus corpus.stbl");
  CHECK(r.code == 4);
  CHECK(r.err.find("numeric error") != std::string::npos);
}

TEST_CASE("likelihood prints corpus totals") {
  fs::path dir = cli_dir("likelihood");
  REQUIRE(run_cli(dir, kGenSmall).code == 0);
  REQUIRE(run_cli(dir, "init --kb kb.stbl --model-out model.stbl").code == 0);
  CliResult r = run_cli(dir, "likelihood --model model.stbl --corpus corpus.stbl --particles 5");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("documents=25") != std::string::npos);
  CHECK(r.out.find("ll_total=-") != std::string::npos);
  CHECK(r.out.find("ll_mean=-") != std::string::npos);
}
