#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dg/cli.hpp"
#include "dg/parser.hpp"

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run dg_run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dg::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const std::string corpus = DG_CORPUS_DIR;

}  // namespace

TEST_CASE("validate") {
  CHECK(dg_run({"validate", corpus + "/decay.dg"}).out == "ok: 1 rule, 1 type\n");
  CHECK(dg_run({"validate", corpus + "/abc.dg"}).out == "ok: 2 rules, 3 types\n");
}

TEST_CASE("inputs resolve against the corpus") {
  CHECK(dg_run({"validate", "decay.dg"}).code == 0);
  CHECK(dg_run({"validate", "examples/decay.dg"}).code == 0);
}

TEST_CASE("exact decay distribution") {
  const Run r = dg_run({"exact", corpus + "/decay.dg", "--t", "1", "--cap", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("{}\t0.6321205588") != std::string::npos);
}

TEST_CASE("fixpoint and commutator") {
  CHECK(dg_run({"fixpoint", corpus + "/pqr.lp"}).out == "{p, q, r}\n");
  const Run c = dg_run({"commutator", "1"});
  CHECK(c.code == 0);
  CHECK(c.out.find("q0\t-2") != std::string::npos);
}

TEST_CASE("translate outputs parse back") {
  for (const auto& [kind, file] : std::vector<std::pair<std::string, std::string>>{
           {"crn", "abc.crn"}, {"logic", "pqr.lp"}, {"string", "fibonacci.lsys"}, {"graph", "fibonacci_graph.dg"}}) {
    const Run r = dg_run({"translate", kind, corpus + "/" + file});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(dg::parse_grammar(r.out, "<out>").ok());
  }
}

TEST_CASE("simulate writes stats and trace files") {
  const auto tmp = std::filesystem::temp_directory_path() / "dg-cli-test.jsonl";
  const Run r = dg_run({"simulate", corpus + "/abc.dg", "--t-end", "1", "--replicates", "20", "--seed", "2",
                        "--observable", "c=C", "--traces", tmp.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("time\tobservable\tmean\tvariance\treplicates\n", 0) == 0);
  CHECK(r.out.find("\tc\t") != std::string::npos);
  CHECK(std::filesystem::file_size(tmp) > 0);
  std::filesystem::remove(tmp);
}

TEST_CASE("user errors exit with 1 and name the file") {
  const Run missing = dg_run({"validate", "no-such-file.dg"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("no-such-file.dg") != std::string::npos);
  CHECK(dg_run({"frobnicate"}).code == 1);
  CHECK(dg_run({"simulate", corpus + "/decay.dg", "--bogus"}).code == 1);
  CHECK(dg_run({"exact", corpus + "/decay.dg"}).code == 1);
  const Run unbounded = dg_run({"exact", corpus + "/birth_death.dg", "--t", "1"});
  CHECK(unbounded.code == 1);
  CHECK(unbounded.err.find("birth_death.dg") != std::string::npos);
}

TEST_CASE("syntax errors carry a location") {
  const auto tmp = std::filesystem::temp_directory_path() / "dg-cli-bad.dg";
  {
    std::ofstream f(tmp);
    f << "type A;\nrule r: A -> B with 1;\n";
  }
  const Run r = dg_run({"validate", tmp.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find(":2:") != std::string::npos);
  std::filesystem::remove(tmp);
}
