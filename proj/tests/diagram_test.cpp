#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "lrsx/diagram.hpp"

using namespace lrsx;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const CalculusDescription& boolDesc() {
  static CalculusDescription desc = parseCalculus(slurp(FIXTURE_DIR "/simple.inp"));
  return desc;
}

std::set<std::string> renderedSet(const std::vector<Diagram>& ds) {
  std::set<std::string> out;
  for (const auto& d : ds) out.insert(render(d));
  return out;
}

DiagramRun runCommand(size_t idx, SearchConfig cfg) {
  const auto& desc = boolDesc();
  REQUIRE(desc.commands.size() == 2);
  return computeDiagrams(desc, desc.commands[idx], cfg);
}

}  // namespace

// [PAPER] The published forking-diagram set for the boolean calculus: one
// triangle, commuting squares for every reduction (variants collapsed), and
// the equality case where transformation and reduction coincide.
TEST_CASE("forking diagrams of the boolean calculus") {
  auto run = runCommand(0, SearchConfig::fromCalculus(boolDesc()));
  CHECK(run.unjoined.empty());
  CHECK(run.diagnostics.empty());
  CHECK(renderedSet(run.diagrams) ==
        std::set<std::string>{
            "<-SR,bot- . -top-> ~~> <-SR,bot-",
            "<-SR,bot- . -top-> ~~> -top-> . <-SR,bot-",
            "<-SR,top- . -top-> ~~> -top-> . <-SR,top-",
            "<-SR,neg- . -top-> ~~> -top-> . <-SR,neg-",
            "<-SR,top- . -top-> ~~>",
        });
  // [DERIVED] Overlap census, solver-validated against the ground
  // enumeration: 2 with bot, 3 with top, 1 with each neg variant, 0 answers.
  CHECK(run.overlaps.size() == 7);
  int trivials = 0, answers = 0;
  for (const auto& o : run.overlaps) {
    if (o.trivial) ++trivials;
    if (o.kind == Overlap::Answer) ++answers;
    CHECK_FALSE(o.commuting);
  }
  CHECK(trivials == 4);  // one parallel-position overlap per reduction rule
  CHECK(answers == 0);   // no left-hand side unifies with the answer
}

// [PAPER] The published commuting-diagram set: triangle for bot, the
// two-reduction chains for every rule, squares, and the answer diagram.
TEST_CASE("commuting diagrams of the boolean calculus") {
  auto run = runCommand(1, SearchConfig::fromCalculus(boolDesc()));
  CHECK(run.unjoined.empty());
  CHECK(run.diagnostics.empty());
  CHECK(renderedSet(run.diagrams) ==
        std::set<std::string>{
            "<-SR,bot- . -top-> ~~> <-SR,bot-",
            "<-SR,bot- . -top-> ~~> <-SR,bot- . <-SR,top-",
            "<-SR,top- . -top-> ~~> <-SR,top- . <-SR,top-",
            "<-SR,neg- . -top-> ~~> <-SR,neg- . <-SR,top-",
            "<-SR,bot- . -top-> ~~> -top-> . <-SR,bot-",
            "<-SR,top- . -top-> ~~> -top-> . <-SR,top-",
            "<-SR,neg- . -top-> ~~> -top-> . <-SR,neg-",
            "<-ANSWER- . -top-> ~~> <-ANSWER- . <-SR,top-",
        });
  CHECK(run.overlaps.size() == 19);  // [DERIVED]
}

// [PAPER] Reversed transformation against the answer: exactly one overlap,
// the context collapsed and the argument instantiated to the answer.
TEST_CASE("answer overlap of the reversed transformation") {
  Solver solver(boolDesc());
  const Rule& top = boolDesc().transformations[0];
  std::vector<std::string> diags;
  auto ovs = computeOverlaps(solver, top, /*leftSide=*/false, &diags);
  CHECK(diags.empty());
  std::vector<const Overlap*> ans;
  for (const auto& o : ovs)
    if (o.kind == Overlap::Answer) ans.push_back(&o);
  REQUIRE(ans.size() == 1);
  CHECK(render(ans[0]->peak.expr) == "top");
  CHECK(ans[0]->commuting);
  // The source of the transformation step reduces to the answer in one step.
  CHECK(render(ans[0]->right.expr) == "(cap top top)");
}

TEST_CASE("meta-level rule application") {
  Solver solver(boolDesc());
  const Rule& srTop = boolDesc().srRules[1];
  REQUIRE(srTop.label() == "SR,top");

  ConstrainedExpr ce{mkCtxApp("A1", mkFun("cap", {mkFun("top"), mkSVar("S1")})),
                     {}};
  auto steps = applyRuleMeta(solver, srTop, ce);
  REQUIRE(steps.size() == 1);
  CHECK(render(steps[0].after.expr) == "A1[S1]");
  CHECK(eqModLet(steps[0].matcher.apply(steps[0].rule.lhs), ce.expr));

  // An arbitrary context blocks the reduction position: no application.
  ConstrainedExpr blocked{
      mkCtxApp("C1", mkFun("cap", {mkFun("top"), mkSVar("S1")})), {}};
  CHECK(applyRuleMeta(solver, srTop, blocked).empty());
}

TEST_CASE("witness replay accepts the found join and rejects corruptions") {
  Solver solver(boolDesc());
  auto cfg = SearchConfig::fromCalculus(boolDesc());
  auto run = runCommand(1, cfg);
  bool sawTwoStep = false;
  for (const auto& o : run.overlaps) {
    auto res = searchJoin(solver, o, cfg);
    REQUIRE(res.kind == JoinOutcome::Joined);
    CHECK(replayWitness(solver, o, res.witness));
    if (res.witness.rightSteps.size() == 2) {
      sawTwoStep = true;
      JoinWitness bad = res.witness;
      bad.rightSteps[0].after = bad.rightSteps[0].before;
      CHECK_FALSE(replayWitness(solver, o, bad));
      JoinWitness dropped = res.witness;
      dropped.rightSteps.pop_back();
      CHECK_FALSE(replayWitness(solver, o, dropped));
    }
  }
  CHECK(sawTwoStep);
}

TEST_CASE("parallel-position overlaps join by one step on each side") {
  Solver solver(boolDesc());
  auto cfg = SearchConfig::fromCalculus(boolDesc());
  auto run = runCommand(0, cfg);
  int checked = 0;
  for (const auto& o : run.overlaps) {
    if (!o.trivial) continue;
    auto res = searchJoin(solver, o, cfg);
    REQUIRE(res.kind == JoinOutcome::Joined);
    CHECK(res.witness.leftSteps.size() == 1);
    CHECK(res.witness.rightSteps.size() == 1);
    CHECK(res.witness.leftSteps[0].rule.kind == RuleKind::T);
    CHECK(res.witness.rightSteps[0].rule.kind == RuleKind::SR);
    ++checked;
  }
  CHECK(checked == 4);
}

// With the depth budget zeroed only provably-disjoint overlaps still join
// (by their direct square); everything else fails instead of guessing.
TEST_CASE("zero budgets join only disjoint overlaps") {
  Solver solver(boolDesc());
  auto cfg = SearchConfig::fromCalculus(boolDesc());
  cfg.maxDepth = 0;
  cfg.caseSplitBudget = 0;
  for (size_t cmd = 0; cmd < 2; ++cmd) {
    auto run = runCommand(cmd, SearchConfig::fromCalculus(boolDesc()));
    for (const auto& o : run.overlaps) {
      auto res = searchJoin(solver, o, cfg);
      if (o.trivial) {
        CHECK(res.kind == JoinOutcome::Joined);
      } else {
        CHECK(res.kind == JoinOutcome::Failed);
      }
    }
  }
}

// Ignoring the transformation makes the squares unjoinable; the search then
// splits the peak's leading context into empty and non-empty parts before
// giving up, and the failures surface in the report.
TEST_CASE("case splitting and the unjoined report") {
  auto cfg = SearchConfig::fromCalculus(boolDesc());
  cfg.ignored.push_back("top");

  Solver solver(boolDesc());
  const Rule& top = boolDesc().transformations[0];
  auto ovs = computeOverlaps(solver, top, true, nullptr);
  const Overlap* triv = nullptr;
  for (const auto& o : ovs)
    if (o.trivial) {
      triv = &o;
      break;
    }
  REQUIRE(triv);
  auto res = searchJoin(solver, *triv, cfg);
  REQUIRE(res.kind == JoinOutcome::Split);
  REQUIRE(res.parts.size() == 2);
  // The empty branch substitutes the context away; the other pins it
  // non-empty so the next attempt cannot re-split on the same variable.
  std::string peak0 = render(res.parts[0].peak.expr);
  CHECK(peak0.find(render(triv->peak.expr).substr(0, 2)) == std::string::npos);
  bool pinned = false;
  for (const auto& g : res.parts[1].peak.cons.neCtx)
    if (g.size() == 1) pinned = true;
  CHECK(pinned);

  auto run = computeDiagrams(boolDesc(), boolDesc().commands[0], cfg);
  CHECK_FALSE(run.unjoined.empty());
  for (const auto& u : run.unjoined) CHECK(u.find("peak ") != std::string::npos);
  // Joins not needing the transformation still close.
  CHECK(renderedSet(run.diagrams).count("<-SR,bot- . -top-> ~~> <-SR,bot-") == 1);
  CHECK(renderedSet(run.diagrams).count("<-SR,top- . -top-> ~~>") == 1);
}

TEST_CASE("diagram text round-trips through parse and render") {
  auto cfg = SearchConfig::fromCalculus(boolDesc());
  for (size_t cmd = 0; cmd < 2; ++cmd) {
    auto run = runCommand(cmd, cfg);
    for (const auto& d : run.diagrams) {
      Diagram back = parseDiagramLine(render(d));
      CHECK(back == d);
      CHECK(render(back) == render(d));
    }
  }
  // Closure steps keep their marker through the round trip.
  std::string closureLine =
      "<-SR,lbeta- . -gcT-> ~~> -gcT-> . <-SR,lbeta- . <-SR,lll,+-";
  Diagram d = parseDiagramLine(closureLine);
  CHECK(render(d) == closureLine);
  REQUIRE(d.join.size() == 3);
  CHECK(d.join[2].label == "SR,lll,+");

  CHECK(parseDiagramLine("<-ANSWER- . -gcT-> ~~> <-ANSWER-").src.kind ==
        DiagToken::AnswerMark);
  CHECK(parseDiagramLine("<-SR,top- . -top-> ~~>").join.empty());
  CHECK_THROWS_AS(parseDiagramLine("top ~~>"), std::invalid_argument);
  CHECK_THROWS_AS(parseDiagramLine("-top-> . <-SR,a- ~~>"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parseDiagramLine("<-SR,a- . <-SR,b- ~~>"),
                  std::invalid_argument);
}

TEST_CASE("diagram computation is deterministic") {
  auto cfg = SearchConfig::fromCalculus(boolDesc());
  for (size_t cmd = 0; cmd < 2; ++cmd) {
    auto r1 = runCommand(cmd, cfg);
    auto r2 = runCommand(cmd, cfg);
    REQUIRE(r1.diagrams.size() == r2.diagrams.size());
    for (size_t i = 0; i < r1.diagrams.size(); ++i)
      CHECK(render(r1.diagrams[i]) == render(r2.diagrams[i]));
    CHECK(r1.unjoined == r2.unjoined);
    std::vector<std::string> p1, p2;
    for (const auto& o : r1.overlaps) p1.push_back(o.provenance);
    for (const auto& o : r2.overlaps) p2.push_back(o.provenance);
    CHECK(p1 == p2);
  }
}

// Enabling the determinism flag may only add joins, never change the
// diagram sets of a calculus that already joins without it.
TEST_CASE("extra reduction steps on the reduct chain are gated") {
  auto cfg = SearchConfig::fromCalculus(boolDesc());
  CHECK_FALSE(cfg.deterministic);
  auto base = renderedSet(runCommand(0, cfg).diagrams);
  cfg.deterministic = true;
  CHECK(renderedSet(runCommand(0, cfg).diagrams) == base);
}
