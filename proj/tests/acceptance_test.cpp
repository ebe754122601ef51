// Acceptance gate: one pass/fail line per top-level criterion, exit 0 only
// when every criterion holds within its time budget.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "lrsx/oracle.hpp"
#include "lrsx/termination.hpp"

using namespace lrsx;

namespace {

int failures = 0;

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

CalculusDescription load(const std::string& fixture) {
  return parseCalculus(slurp(std::string(FIXTURE_DIR) + "/" + fixture));
}

void criterion(int n, const std::string& what, double limitSecs,
               const std::function<void()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  std::string error;
  try {
    body();
  } catch (const std::exception& e) {
    error = e.what();
  }
  double secs = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  if (error.empty() && secs > limitSecs)
    error = "exceeded the " + std::to_string(limitSecs) + "s budget";
  std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n",
              error.empty() ? "PASS" : "FAIL", n, what.c_str(), secs,
              error.empty() ? "" : " - ", error.c_str());
  if (!error.empty()) ++failures;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

std::set<std::string> renderedSet(const std::vector<Diagram>& ds) {
  std::set<std::string> out;
  for (const Diagram& d : ds) out.insert(render(d));
  return out;
}

std::vector<Diagram> parseAll(const std::vector<std::string>& lines) {
  std::vector<Diagram> out;
  for (const std::string& l : lines) out.push_back(parseDiagramLine(l));
  return out;
}

DiagramRun runCommand(const CalculusDescription& calc,
                      const std::string& file) {
  SearchConfig cfg = SearchConfig::fromCalculus(calc);
  for (const OverlapCommand& cmd : calc.commands)
    if (cmd.outFile == file) return computeDiagrams(calc, cmd, cfg);
  throw std::runtime_error("no command writes " + file);
}

// The published diagram sets of the boolean calculus.
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

// The published five-diagram garbage-collection forking set.
const std::vector<std::string> kGcForking = {
    "<-SR,lbeta- . -gcT-> ~~> -gcT-> . <-SR,lbeta-",
    "<-SR,cp- . -gcT-> ~~> -gcT-> . <-SR,cp-",
    "<-SR,lll- . -gcT-> ~~> -gcT-> . <-SR,lll-",
    "<-SR,lll- . -gcT-> ~~> -gcT->",
    "<-ANSWER- . -gcT-> ~~> <-ANSWER-",
};

// ---------------------------------------------------------------------------
// A minimal independent parser for the emitted termination-problem format:
// written against the textual grammar only, sharing nothing with emitTpdb.
// ---------------------------------------------------------------------------
struct TpdbParser {
  std::string text;
  size_t pos = 0;

  void ws() {
    while (pos < text.size() && std::isspace((unsigned char)text[pos])) ++pos;
  }
  bool eat(char c) {
    ws();
    if (pos < text.size() && text[pos] == c) return ++pos, true;
    return false;
  }
  void expect(char c) {
    if (!eat(c))
      throw std::runtime_error(std::string("expected '") + c + "' at offset " +
                               std::to_string(pos));
  }
  std::string ident() {
    ws();
    size_t s = pos;
    while (pos < text.size() &&
           (std::isalnum((unsigned char)text[pos]) || text[pos] == '_'))
      ++pos;
    if (pos == s) throw std::runtime_error("expected an identifier");
    return text.substr(s, pos - s);
  }

  struct Node {
    std::string head;
    std::vector<Node> args;
  };
  Node term() {
    Node n{ident(), {}};
    if (eat('(')) {
      if (!eat(')')) {
        n.args.push_back(term());
        while (eat(',')) n.args.push_back(term());
        expect(')');
      }
    }
    return n;
  }

  std::set<std::string> vars;
  int rules = 0;

  void checkVars(const Node& n, std::map<std::string, int>& arity) {
    if (n.args.empty() && vars.count(n.head)) return;
    auto [it, fresh] = arity.emplace(n.head, (int)n.args.size());
    if (!fresh && it->second != (int)n.args.size())
      throw std::runtime_error("inconsistent arity of " + n.head);
    for (const Node& a : n.args) checkVars(a, arity);
  }

  void parse() {
    std::map<std::string, int> arity;
    expect('(');
    require(ident() == "VAR", "VAR section first");
    ws();
    while (pos < text.size() && text[pos] != ')') vars.insert(ident()), ws();
    expect(')');
    expect('(');
    require(ident() == "STRATEGY", "STRATEGY section");
    require(ident() == "INNERMOST", "innermost strategy");
    expect(')');
    expect('(');
    require(ident() == "RULES", "RULES section");
    ws();
    while (pos < text.size() && text[pos] != ')') {
      Node l = term();
      expect('-');
      expect('>');
      Node r = term();
      checkVars(l, arity);
      checkVars(r, arity);
      ++rules;
      ws();
    }
    expect(')');
    ws();
    require(pos == text.size(), "trailing input");
  }
};

bool proved(const TermRewriteSystem& trs) {
  TerminationVerdict v = proveInnermostTermination(trs);
  return v.kind == TerminationVerdict::Proved &&
         replayCertificate(trs, v.cert);
}

}  // namespace

int main() {
  criterion(1, "the boolean calculus joins completely with the published diagram sets", 10, [] {
    CalculusDescription calc = load("simple.inp");
    DiagramRun f = runCommand(calc, "forking_diagrams");
    require(f.complete(), "forking join search incomplete");
    require(renderedSet(f.diagrams) == renderedSet(parseAll(kForking)),
            "forking set differs from the published one");
    DiagramRun c = runCommand(calc, "commuting_diagrams");
    require(c.complete(), "commuting join search incomplete");
    require(renderedSet(c.diagrams) == renderedSet(parseAll(kCommuting)),
            "commuting set differs from the published one");
  });

  criterion(2, "both boolean diagram systems are proved terminating and emit a well-formed problem", 5, [] {
    for (const auto& set : {kForking, kCommuting}) {
      TermRewriteSystem trs = encodeTrs(parseAll(set));
      require(wellFormedness(trs).empty(), "ill-formed encoding");
      require(proved(trs), "not proved innermost terminating");
      TpdbParser p{emitTpdb(trs)};
      p.parse();
      require(p.rules == (int)trs.rules.size(), "emitted rule count differs");
    }
  });

  criterion(3, "the garbage-collection diagrams encode to the published rewrite rules", 5, [] {
    TermRewriteSystem gc = encodeTrs(parseAll(kGcForking));
    require(renderRules(gc) ==
                "gcT(SRlbeta(x)) -> SRlbeta(gcT(x))\n"
                "gcT(SRcp(x)) -> SRcp(gcT(x))\n"
                "gcT(SRlll(x)) -> SRlll(gcT(x))\n"
                "gcT(SRlll(x)) -> gcT(x)\n"
                "gcT(Answer) -> Answer\n",
            "rules differ from the published five");
    // The closure diagram becomes the three-rule counter scheme, up to the
    // W-symbol name: peel, exit, and an entry with a free counter variable.
    TermRewriteSystem cl = encodeTrs(parseAll(
        {"<-SR,lbeta- . -gcT-> ~~> -gcT-> . <-SR,lbeta- . <-SR,lll,+-"}));
    require(cl.rules.size() == 3, "closure scheme is not three rules");
    Term x = mkVar("x"), k = mkVar("k");
    std::string w;
    for (const auto& [sym, label] : cl.labelOfSym)
      if (label == "SR,lll,+") w = sym;
    require(!w.empty() && cl.signature.at(w) == 2, "no binary closure symbol");
    Term wk = mkTerm(w, {k, x});
    Term wsk = mkTerm(w, {mkTerm("s", {k}), x});
    require(cl.rules[0] == TrsRule{wsk, mkTerm("SRlll", {wk}), {}},
            "peel rule differs");
    require(cl.rules[1] ==
                TrsRule{wsk,
                        mkTerm("SRlll", {mkTerm("SRlbeta",
                                                {mkTerm("gcT", {x})})}),
                        {}},
            "exit rule differs");
    require(cl.rules[2] ==
                TrsRule{mkTerm("gcT", {mkTerm("SRlbeta", {x})}), wk, {"k"}},
            "entry rule differs");
    require(proved(gc) && proved(cl), "not proved innermost terminating");
  });

  criterion(4, "the self-duplicating copy system is refuted by a replayable loop", 5, [] {
    std::vector<Diagram> ds;
    std::istringstream is(slurp(std::string(FIXTURE_DIR) + "/cp_diagrams.txt"));
    std::string line;
    while (std::getline(is, line))
      if (!line.empty() && line.rfind("--", 0) != 0)
        ds.push_back(parseDiagramLine(line));
    TermRewriteSystem trs = encodeTrs(ds);
    require(proveInnermostTermination(trs).kind != TerminationVerdict::Proved,
            "wrongly proved terminating");
    auto loop = detectNontermination(trs, 5);
    require(loop.has_value(), "no loop found within depth 5");
    require(loop->innermost, "loop is not an innermost derivation");
    require(replayLoop(trs, *loop), "loop witness does not replay");
  });

  criterion(5, "the ground oracle exhaustively confirms the boolean calculus at size 7", 300, [] {
    CalculusDescription calc = load("simple.inp");
    DeterminismReport det = checkDeterminism(calc, 7);
    require(det.deterministic(), "reduction is not deterministic");
    CoverageReport f =
        validateDiagrams(calc, parseAll(kForking), "top", true, 7, 28);
    require(f.forks > 0 && f.complete(), "uncovered ground fork");
    CoverageReport c =
        validateDiagrams(calc, parseAll(kCommuting), "top", false, 7, 28);
    require(c.forks > 0 && c.complete(), "uncovered ground commuting overlap");
    const Rule* topRule = calc.transformationsNamed("top")[0];
    std::vector<Diagram> forking = parseAll(kForking);
    int steps = 0, converging = 0;
    for (const ExprPtr& e : enumerateGround(calc, 7)) {
      ConvergenceResult src = converges(calc, e, defaultFuel(e));
      require(src.verdict != ConvergenceResult::FuelExhausted, "fuel ran out");
      for (GroundStep& t : groundApply(calc, *topRule, e)) {
        ++steps;
        ConvergenceResult tgt = converges(calc, t.target, defaultFuel(e));
        require(src.verdict == tgt.verdict, "convergence not preserved");
        if (src.verdict != ConvergenceResult::Converges) continue;
        ++converging;
        int budget = 10 * ((int)src.witness.size() + 1);
        ReplayResult r =
            replayInduction(calc, src.witness, t, forking, budget);
        require(r.ok, "induction replay failed: " + r.error);
        require(r.witness.empty() ||
                    isGroundAnswer(calc, r.witness.back().target),
                "replayed witness does not end in an answer");
      }
    }
    require(steps > 0 && converging > 0, "no transformation steps found");
  });

  criterion(6, "the letrec calculus joins with closure steps and the oracle covers it at size 6", 600, [] {
    CalculusDescription calc = load("mini_letrec.inp");
    DiagramRun f = runCommand(calc, "forking_diagrams");
    DiagramRun c = runCommand(calc, "commuting_diagrams");
    require(f.complete() && c.complete(), "join search incomplete");
    bool usedClosure = false;
    for (const DiagramRun* r : {&f, &c})
      for (const Diagram& d : r->diagrams) {
        for (const DiagToken& t : d.join)
          if (t.label == "SR,lll,+") usedClosure = true;
        // Every diagram is a square, a stacked square, a reduction-absorbing
        // triangle, or an answer diagram.
        int fwd = 0, bwd = 0, answers = 0;
        for (const DiagToken& t : d.join) {
          fwd += t.kind == DiagToken::Fwd;
          bwd += t.kind == DiagToken::Bwd;
          answers += t.kind == DiagToken::AnswerMark;
        }
        bool answerShape = d.src.kind == DiagToken::AnswerMark &&
                           answers == 1 && fwd == 0 && bwd <= 1;
        bool squareShape = answers == 0 && fwd == 1 && bwd <= 2;
        bool triangleShape = answers == 0 && fwd == 1 && bwd == 0;
        require(answerShape || squareShape || triangleShape,
                "unexpected diagram shape: " + render(d));
      }
    require(usedClosure, "no join used the declared closure rule");
    CoverageReport cf =
        validateDiagrams(calc, f.diagrams, "gcT", true, 6, 24);
    require(cf.forks > 0 && cf.complete(), "uncovered ground fork");
    CoverageReport cc =
        validateDiagrams(calc, c.diagrams, "gcT", false, 6, 24);
    require(cc.forks > 0 && cc.complete(), "uncovered commuting overlap");
  });

  criterion(7, "every boolean forking diagram is necessary for ground coverage", 300, [] {
    CalculusDescription calc = load("simple.inp");
    for (size_t drop = 0; drop < kForking.size(); ++drop) {
      std::vector<Diagram> ds = parseAll(kForking);
      ds.erase(ds.begin() + drop);
      CoverageReport rep = validateDiagrams(calc, ds, "top", true, 7, 28);
      require(!rep.complete() && !rep.uncovered.empty(),
              "dropping " + kForking[drop] + " left coverage complete");
    }
  });

  criterion(8, "whole-calculus benchmark statistics are documented as out of scope", 5, [] {
    // Chain-variable unification and symbolic alpha-renaming of opaque
    // meta-variables are unsupported, and the README says so; reproducing
    // published whole-calculus statistics would require both.
    std::string readme = slurp(std::string(FIXTURE_DIR) + "/../../README.md");
    require(readme.find("not reproduced") != std::string::npos &&
                readme.find("chain") != std::string::npos &&
                readme.find("alpha-renaming") != std::string::npos,
            "the scope exclusion is not documented");
    CalculusDescription chain = parseCalculus(
        "define A ::= [.] | (app A S)\n"
        "declare prefix A A = (A,A)\n"
        "{SR,x} letrec E; Ch^A[X1,S1] in S2 ==> letrec E; Ch^A[X1,S1] in S2\n"
        "{t} letrec E; Ch^A[X1,S1] in A1[var X1] ==> S1\n"
        "\"out\" <- overlap (t).l all\n");
    Solver solver(chain);
    bool rejected = false;
    try {
      solver.unify(chain.srRules[0].lhs, {}, mkFun("bot"), {});
    } catch (const ChainUnsupported&) {
      rejected = true;
    }
    require(rejected, "chain unification was not rejected");
    DiagramRun r = computeDiagrams(chain, chain.commands[0],
                                   SearchConfig::fromCalculus(chain));
    require(!r.diagnostics.empty(),
            "chain overlaps were not reported as unsupported");
  });

  std::printf("%s\n", failures == 0 ? "ACCEPTED" : "REJECTED");
  return failures == 0 ? 0 : 1;
}
