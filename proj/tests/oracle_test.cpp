#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "lrsx/oracle.hpp"

using namespace lrsx;

namespace {

CalculusDescription loadSimple() {
  std::ifstream is(std::string(FIXTURE_DIR) + "/simple.inp");
  std::stringstream ss;
  ss << is.rdbuf();
  return parseCalculus(ss.str());
}

ExprPtr bot() { return mkFun("bot"); }
ExprPtr top() { return mkFun("top"); }
ExprPtr neg(ExprPtr a) { return mkFun("neg", {std::move(a)}); }
ExprPtr cap(ExprPtr a, ExprPtr b) {
  return mkFun("cap", {std::move(a), std::move(b)});
}

std::vector<Diagram> parseAll(const std::vector<std::string>& lines) {
  std::vector<Diagram> out;
  for (const std::string& l : lines) out.push_back(parseDiagramLine(l));
  return out;
}

// The frozen diagram sets of the test calculus (forking and commuting
// direction of the top-elimination transformation).
const std::vector<std::string> kForking = {
    "<-SR,bot- . -top-> ~~> <-SR,bot-",
    "<-SR,bot- . -top-> ~~> -top-> . <-SR,bot-",
    "<-SR,neg- . -top-> ~~> -top-> . <-SR,neg-",
    "<-SR,top- . -top-> ~~> -top-> . <-SR,top-",
    "<-SR,top- . -top-> ~~>",
};
const std::vector<std::string> kCommuting = {
    "<-ANSWER- . -top-> ~~> <-ANSWER- . <-SR,top-",
    "<-SR,bot- . -top-> ~~> <-SR,bot-",
    "<-SR,bot- . -top-> ~~> <-SR,bot- . <-SR,top-",
    "<-SR,bot- . -top-> ~~> -top-> . <-SR,bot-",
    "<-SR,neg- . -top-> ~~> <-SR,neg- . <-SR,top-",
    "<-SR,neg- . -top-> ~~> -top-> . <-SR,neg-",
    "<-SR,top- . -top-> ~~> <-SR,top- . <-SR,top-",
    "<-SR,top- . -top-> ~~> -top-> . <-SR,top-",
};

}  // namespace

TEST_CASE("ground enumeration is exhaustive up to alpha") {
  CalculusDescription calc = loadSimple();
  // [DERIVED] the calculus has constants bot/top, unary neg, binary cap;
  // counts follow from the Motzkin-like recursion over exact sizes.
  CHECK(enumerateGround(calc, 1).size() == 2);
  CHECK(enumerateGround(calc, 2).size() == 4);
  CHECK(enumerateGround(calc, 3).size() == 10);
  CHECK(enumerateGround(calc, 7).size() == 570);
  // [TRIVIAL] the size-2 slice is exactly the negated constants.
  auto es = enumerateGround(calc, 2);
  std::set<std::string> names;
  for (auto& e : es) names.insert(render(e));
  CHECK(names ==
        std::set<std::string>{"bot", "top", "(neg bot)", "(neg top)"});
}

TEST_CASE("standard reduction replays the worked example") {
  CalculusDescription calc = loadSimple();
  // [PAPER] ((not bot) and top) and (not (top and bot)) reduces to top in
  // exactly five standard-reduction steps.
  ExprPtr start = cap(cap(neg(bot()), top()), neg(cap(top(), bot())));
  auto first = srSuccessors(calc, start);
  REQUIRE(first.size() == 1);
  CHECK(first[0].label == "SR,neg,2");
  CHECK(eqModLet(first[0].target,
                 cap(cap(top(), top()), neg(cap(top(), bot())))));
  ConvergenceResult r = converges(calc, start, defaultFuel(start));
  REQUIRE(r.verdict == ConvergenceResult::Converges);
  REQUIRE(r.witness.size() == 5);
  std::vector<std::string> labels;
  for (auto& s : r.witness) labels.push_back(s.label);
  CHECK(labels == std::vector<std::string>{"SR,neg,2", "SR,top", "SR,top",
                                           "SR,top", "SR,neg,2"});
  CHECK(eqModLet(r.witness.back().target, top()));
}

TEST_CASE("answers and divergence") {
  CalculusDescription calc = loadSimple();
  // [PAPER] top is the only answer; convergence means reducing to it.
  CHECK(isGroundAnswer(calc, top()));
  CHECK(!isGroundAnswer(calc, bot()));
  CHECK(srSuccessors(calc, top()).empty());
  ConvergenceResult t = converges(calc, top(), 20);
  CHECK(t.verdict == ConvergenceResult::Converges);
  CHECK(t.witness.empty());
  CHECK(converges(calc, bot(), 20).verdict == ConvergenceResult::Diverges);
  // [TRIVIAL] irreducible non-answers diverge immediately.
  CHECK(converges(calc, neg(neg(bot())), 20).verdict ==
        ConvergenceResult::Diverges);
}

TEST_CASE("standard reduction is deterministic on the test calculus") {
  CalculusDescription calc = loadSimple();
  // [PAPER] evaluation contexts fix a unique redex.
  DeterminismReport rep = checkDeterminism(calc, 7);
  CHECK(rep.expressions == 570);
  CHECK(rep.deterministic());
}

TEST_CASE("a nondeterministic calculus yields a counterexample") {
  // [DERIVED] two rules fire on the same constant.
  CalculusDescription calc = parseCalculus(
      "define A ::= [.] | (g A)\n"
      "{SR,a} A[f] ==> A[bot]\n"
      "{SR,b} A[f] ==> A[top]\n"
      "ANSWER top\n");
  DeterminismReport rep = checkDeterminism(calc, 2);
  CHECK(!rep.deterministic());
  CHECK(srSuccessors(calc, mkFun("f")).size() == 2);
}

TEST_CASE("the forking diagram set covers every ground fork") {
  CalculusDescription calc = loadSimple();
  // [DERIVED] 266 forks at peak size <= 7, all closed concretely.
  CoverageReport rep =
      validateDiagrams(calc, parseAll(kForking), "top", true, 7, 28);
  CHECK(rep.forks == 266);
  CHECK(rep.covered == 266);
  CHECK(rep.complete());
  CHECK(rep.uncovered.empty());
}

TEST_CASE("the commuting diagram set covers every ground overlap") {
  CalculusDescription calc = loadSimple();
  // [DERIVED] 265 overlaps at source size <= 7, including answer overlaps.
  CoverageReport rep =
      validateDiagrams(calc, parseAll(kCommuting), "top", false, 7, 28);
  CHECK(rep.forks == 265);
  CHECK(rep.complete());
  bool sawAnswer = false;
  for (const std::string& r : rep.records)
    if (r.find("| answer ") != std::string::npos) sawAnswer = true;
  CHECK(sawAnswer);
}

TEST_CASE("every forking diagram is necessary") {
  CalculusDescription calc = loadSimple();
  // [DERIVED] dropping any single diagram leaves ground forks unclosed.
  const std::vector<int> expectUncovered = {34, 4, 20, 18, 138};
  for (size_t drop = 0; drop < kForking.size(); ++drop) {
    std::vector<Diagram> ds = parseAll(kForking);
    ds.erase(ds.begin() + drop);
    CoverageReport rep = validateDiagrams(calc, ds, "top", true, 7, 28);
    CHECK(!rep.complete());
    CHECK(static_cast<int>(rep.uncovered.size()) == expectUncovered[drop]);
  }
}

TEST_CASE("induction replay on a one-step instance") {
  CalculusDescription calc = loadSimple();
  const Rule* topRule = calc.transformationsNamed("top")[0];
  // [TRIVIAL] top and top -top-> top; the source converges in one step and
  // the transform is already an answer, so the witness is empty.
  ExprPtr s = cap(top(), top());
  ConvergenceResult c = converges(calc, s, 20);
  REQUIRE(c.verdict == ConvergenceResult::Converges);
  REQUIRE(c.witness.size() == 1);
  auto tSteps = groundApply(calc, *topRule, s);
  REQUIRE(!tSteps.empty());
  ReplayResult r =
      replayInduction(calc, c.witness, tSteps[0], parseAll(kForking), 10);
  REQUIRE(r.ok);
  CHECK(r.witness.empty());
  CHECK(r.applications == 1);

  SUBCASE("a zero budget fails with a budget error") {
    ReplayResult r0 =
        replayInduction(calc, c.witness, tSteps[0], parseAll(kForking), 0);
    CHECK(!r0.ok);
    CHECK(r0.error.find("budget") != std::string::npos);
  }
  SUBCASE("an empty diagram set fails with a missing-diagram error") {
    ReplayResult re = replayInduction(calc, c.witness, tSteps[0], {}, 10);
    CHECK(!re.ok);
    CHECK(re.error.find("no applicable diagram") != std::string::npos);
  }
}

TEST_CASE("induction replay succeeds on every converging instance") {
  CalculusDescription calc = loadSimple();
  const Rule* topRule = calc.transformationsNamed("top")[0];
  std::vector<Diagram> forking = parseAll(kForking);
  // [DERIVED] every transformation step out of a converging source yields a
  // concrete converging sequence for the transform, within a budget of ten
  // diagram applications per original step.
  int instances = 0;
  for (const ExprPtr& e : enumerateGround(calc, 7)) {
    ConvergenceResult c = converges(calc, e, defaultFuel(e));
    if (c.verdict != ConvergenceResult::Converges) continue;
    for (GroundStep& t : groundApply(calc, *topRule, e)) {
      ++instances;
      int budget = 10 * (static_cast<int>(c.witness.size()) + 1);
      ReplayResult r = replayInduction(calc, c.witness, t, forking, budget);
      REQUIRE_MESSAGE(r.ok, render(e), ": ", r.error);
      // The witness really is a reduction of the transform to an answer.
      ExprPtr cur = t.target;
      for (const GroundStep& s : r.witness) {
        CHECK(alphaLetEquiv(cur, s.source));
        cur = s.target;
      }
      CHECK(isGroundAnswer(calc, r.witness.empty() ? cur
                                                   : r.witness.back().target));
    }
  }
  CHECK(instances == 98);
}

TEST_CASE("transformation steps preserve and reflect convergence") {
  CalculusDescription calc = loadSimple();
  const Rule* topRule = calc.transformationsNamed("top")[0];
  // [DERIVED] s converges iff t converges, for every s -top-> t at size <= 6.
  int pairs = 0;
  for (const ExprPtr& e : enumerateGround(calc, 6)) {
    for (GroundStep& t : groundApply(calc, *topRule, e)) {
      ++pairs;
      auto a = converges(calc, e, 40).verdict;
      auto b = converges(calc, t.target, 40).verdict;
      CHECK(a != ConvergenceResult::FuelExhausted);
      CHECK(a == b);
    }
  }
  CHECK(pairs == 80);
}
