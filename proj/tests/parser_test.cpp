#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "lrsx/calculus.hpp"

using namespace lrsx;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int errorCount(const std::vector<Diagnostic>& ds) {
  int n = 0;
  for (const auto& d : ds) {
    if (d.level == Diagnostic::Error) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("full boolean-calculus fixture parses") {
  auto desc = parseCalculus(slurp(FIXTURE_DIR "/simple.inp"));
  CHECK(desc.srRules.size() == 4);
  CHECK(desc.answers.size() == 1);
  CHECK(desc.transformations.size() == 1);
  CHECK(desc.classes.size() == 2);
  CHECK(desc.prefix.size() == 4);
  size_t forks = 0;
  for (const auto& [k, v] : desc.fork) forks += v.size();
  CHECK(forks == 4);
  CHECK(desc.commands.size() == 2);

  CHECK(desc.srRules[0].label() == "SR,bot");
  CHECK(desc.srRules[2].label() == "SR,neg,1");
  CHECK(render(desc.srRules[0].lhs) == "A[(cap bot S)]");
  CHECK(render(desc.srRules[0].rhs) == "A[bot]");
  CHECK(render(desc.answers[0].expr) == "top");
  CHECK(desc.transformations[0].kind == RuleKind::T);
  CHECK(desc.transformations[0].label() == "top");

  CHECK(desc.commands[0].outFile == "forking_diagrams");
  CHECK(desc.commands[0].left);
  CHECK(desc.commands[1].outFile == "commuting_diagrams");
  CHECK_FALSE(desc.commands[1].left);

  CHECK(desc.prefix.at({"C", "A"}) == std::make_pair(std::string("A"), std::string("A")));
  const auto& fAC = desc.fork.at({"A", "C"});
  REQUIRE(fAC.size() == 1);
  CHECK(fAC[0].k3 == "A");
  CHECK(fAC[0].k5 == "C");
  CHECK(render(fAC[0].shape) == "(cap [.1] [.2])");

  CHECK(errorCount(validate(desc)) == 0);
}

TEST_CASE("garbage collection rule constraints") {
  auto desc = parseCalculus(
      "define T ::= [.]\n"
      "{gcT,2} T[letrec E in S] ==> T[S] where E /= {}, (S,letrec E in [.])\n");
  REQUIRE(desc.transformations.size() == 1);
  const Rule& r = desc.transformations[0];
  CHECK(r.label() == "gcT,2");
  CHECK(r.variant == 2);
  REQUIRE(r.delta.neEnv.size() == 1);
  CHECK(r.delta.neEnv[0] == std::vector<std::string>{"E"});
  REQUIRE(r.delta.nccs.size() == 1);
  CHECK(render(r.delta.nccs[0].first) == "S");
  CHECK(render(r.delta.nccs[0].second) == "letrec E in [.]");
  CHECK(r.delta.atoms ==
        std::set<AtomicNcc>{{{Atom::MetaExprS, "S"}, {Atom::MetaEnvE, "E"}}});
}

TEST_CASE("empty input gives an empty description") {
  auto desc = parseCalculus("");
  CHECK(desc.srRules.empty());
  CHECK(desc.transformations.empty());
  CHECK(desc.classes.empty());
  CHECK(errorCount(validate(desc)) == 0);
}

TEST_CASE("context class grammar with letrec productions") {
  auto desc = parseCalculus(
      "define A ::= [.] | (app A S)\n"
      "define T ::= [.] | (app T S) | (app S T)\n"
      "          | letrec X=T;E in S\n"
      "          | letrec E in T where E /= {}\n");
  const auto* t = desc.classOf("T");
  REQUIRE(t);
  REQUIRE(t->productions.size() == 5);
  CHECK(render(t->productions[3].shape) == "letrec X=T[[.]];E in S");
  CHECK(render(t->productions[4].shape) == "letrec E in T[[.]]");
  REQUIRE(t->productions[4].guard.neEnv.size() == 1);
  CHECK(t->productions[4].guard.neEnv[0] == std::vector<std::string>{"E"});
}

TEST_CASE("chain segments and lambda binders in rules") {
  auto desc = parseCalculus(
      "define A ::= [.] | (app A S)\n"
      "{SR,lbeta,1} A[app (\\X.S1) S2] ==> A[letrec X=S2 in S1] where (S2,\\X.[.])\n"
      "{SR,lbeta,3} letrec E; Ch^A[X1,app (\\X.S1) S2] in A1[var X1]\n"
      "             ==> letrec E; Ch^A[X1,letrec X=S2 in S1] in A1[var X1] where (S2,\\X.[.])\n");
  REQUIRE(desc.srRules.size() == 2);
  CHECK(render(desc.srRules[0].lhs) == "A[(app (\\X.S1) S2)]");
  CHECK(render(desc.srRules[0].rhs) == "A[letrec X=S2 in S1]");
  CHECK(render(desc.srRules[1].lhs) ==
        "letrec E;Ch^A[X1,(app (\\X.S1) S2)] in A1[(var X1)]");
  // The env-NCC sugar [env,d].
  auto d2 = parseCalculus(
      "define T ::= [.]\n"
      "{gcT,1} T[letrec E1;E2 in S] ==> T[letrec E1 in S]\n"
      "        where E1 /= {}, E2 /= {}, [E1,letrec E2 in [.]], (S,letrec E2 in [.])\n");
  REQUIRE(d2.transformations.size() == 1);
  CHECK(d2.transformations[0].delta.nccs.size() == 2);
  CHECK(d2.transformations[0].delta.neEnv.size() == 2);
}

TEST_CASE("validate flags occurrence violations") {
  auto desc = parseCalculus(
      "define C ::= [.]\n"
      "{t} C[cap (cap S S) S] ==> C[S]\n");
  bool found = false;
  for (const auto& d : validate(desc)) {
    if (d.level == Diagnostic::Error &&
        d.message.find("occurs more than twice") != std::string::npos)
      found = true;
  }
  CHECK(found);
}

TEST_CASE("validate flags constraints over unknown meta-variables") {
  auto desc = parseCalculus(
      "define C ::= [.]\n"
      "{t} C[S] ==> C[S] where E /= {}\n");
  bool found = false;
  for (const auto& d : validate(desc)) {
    if (d.level == Diagnostic::Error &&
        d.message.find("neither side") != std::string::npos)
      found = true;
  }
  CHECK(found);
}

TEST_CASE("validate flags chain variables in transformations") {
  auto desc = parseCalculus(
      "define A ::= [.]\n"
      "{t} letrec Ch^A[X,S] in S1 ==> letrec Ch^A[X,S] in S1\n");
  bool found = false;
  for (const auto& d : validate(desc)) {
    if (d.message.find("not overlapable") != std::string::npos) found = true;
  }
  CHECK(found);
}

TEST_CASE("rule reversal is an involution on transformations") {
  auto desc = parseCalculus(
      "define C ::= [.]\n"
      "{top} C[cap top S] ==> C[S]\n");
  const Rule& r = desc.transformations[0];
  Rule rev = reverseRule(r);
  CHECK(rev.reversed);
  CHECK(render(rev.lhs) == "C[S]");
  CHECK(render(rev.rhs) == "C[(cap top S)]");
  Rule back = reverseRule(rev);
  CHECK_FALSE(back.reversed);
  CHECK(render(back.lhs) == render(r.lhs));
  CHECK(render(back.rhs) == render(r.rhs));
  auto descSr = parseCalculus(
      "define A ::= [.]\n"
      "{SR,x} A[cap bot S] ==> A[bot]\n");
  CHECK_THROWS_AS(reverseRule(descSr.srRules[0]), std::invalid_argument);
}

TEST_CASE("directives") {
  auto desc = parseCalculus(
      "define A ::= [.]\n"
      "union lll = lapp | llet\n"
      "closure lll,+ of lll\n"
      "subclass A C\n"
      "deterministic\n"
      "ignore gc\n"
      "restrict cpx 2\n");
  CHECK(desc.unions.at("lll") == std::vector<std::string>{"lapp", "llet"});
  CHECK(desc.closures.at("lll") == "lll");
  CHECK(desc.isSubclassOf("A", "C"));
  CHECK(desc.isSubclassOf("A", "A"));
  CHECK_FALSE(desc.isSubclassOf("C", "A"));
  CHECK(desc.deterministic);
  CHECK(desc.ignored == std::vector<std::string>{"gc"});
  CHECK(desc.useBudgets.at("cpx") == 2);
  CHECK(desc.unionNameOf("lapp") == "lll");
  CHECK(desc.unionNameOf("bot") == "bot");
}

TEST_CASE("closure rule header") {
  auto desc = parseCalculus(
      "define A ::= [.] | (app A S)\n"
      "{SR,lll,+} A[app (letrec E in S1) S2] ==> letrec E in A[app S1 S2]\n"
      "           where E /= {}, (S2, letrec E in [.]), (A, letrec E in [.])\n");
  REQUIRE(desc.srRules.size() == 1);
  const Rule& r = desc.srRules[0];
  CHECK(r.closure);
  CHECK(r.label() == "SR,lll,+");
  CHECK(r.delta.nccs.size() == 2);
}

TEST_CASE("parse after render is a fixpoint") {
  for (const std::string src :
       {slurp(FIXTURE_DIR "/simple.inp"),
        std::string("define T ::= [.] | letrec E in T where E /= {}\n"
                    "{gcT,2} T[letrec E in S] ==> T[S] where E /= {}, (S,letrec E in [.])\n"
                    "ANSWER \\X.S\n"
                    "ANSWER letrec E in \\X.S where E /= {}\n")}) {
    std::string r1 = render(parseCalculus(src));
    std::string r2 = render(parseCalculus(r1));
    CHECK(r1 == r2);
  }
}

TEST_CASE("syntax errors carry positions") {
  CHECK_THROWS_AS(parseCalculus("define A ::= \n{oops"), ParseError);
  try {
    parseCalculus("define A ::= [.]\n{t} A[S] ==\n");
  } catch (const ParseError& e) {
    CHECK(e.line >= 2);
  }
}
