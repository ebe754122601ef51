#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "lrsx/solver.hpp"

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
  static CalculusDescription d = parseCalculus(slurp(FIXTURE_DIR "/simple.inp"));
  return d;
}

ExprPtr firstLhs(const std::string& src) {
  auto d = parseCalculus(src);
  if (!d.transformations.empty()) return d.transformations[0].lhs;
  REQUIRE(!d.srRules.empty());
  return d.srRules[0].lhs;
}

// Every unifier must make both sides equal modulo ~let.
void checkInstances(const ExprPtr& l1, const ExprPtr& l2,
                    const std::vector<UnifSolution>& sols) {
  for (const auto& sol : sols) {
    CHECK(eqModLet(sol.subst.apply(l1), sol.subst.apply(l2)));
  }
}

// ---------------------------------------------------------------------------
// Independent ground oracle for the boolean calculus: enumerate all ground
// expressions up to a size bound together with every pair of class-valid
// redex positions, and compare against the instances the unifiers generate.
// ---------------------------------------------------------------------------

constexpr int kSizeBound = 7;

bool stepOk(const std::string& cls, const std::string& sym, int idx) {
  if (cls == "A") return idx == 0 && (sym == "cap" || sym == "neg");
  // C admits both cap positions.
  return sym == "cap" || (sym == "neg" && idx == 0);
}

struct GroundWorld {
  std::vector<std::vector<ExprPtr>> expr;                      // by size, 1..
  std::map<std::string, std::vector<std::vector<ExprPtr>>> ctx;  // by size, 0..
};

const GroundWorld& world() {
  static GroundWorld w = [] {
    GroundWorld g;
    g.expr.assign(kSizeBound + 1, {});
    g.expr[1] = {mkFun("bot"), mkFun("top")};
    for (int n = 2; n <= kSizeBound; ++n) {
      for (const auto& e : g.expr[n - 1]) g.expr[n].push_back(mkFun("neg", {e}));
      for (int i = 1; i <= n - 2; ++i) {
        for (const auto& a : g.expr[i]) {
          for (const auto& b : g.expr[n - 1 - i]) {
            g.expr[n].push_back(mkFun("cap", {a, b}));
          }
        }
      }
    }
    for (const std::string cls : {"A", "C"}) {
      auto& out = g.ctx[cls];
      out.assign(kSizeBound, {});
      out[0] = {mkHole()};
      for (int n = 1; n < kSizeBound; ++n) {
        if (stepOk(cls, "neg", 0)) {
          for (const auto& c : out[n - 1]) out[n].push_back(mkFun("neg", {c}));
        }
        for (int i = 0; i <= n - 2; ++i) {
          for (const auto& c : out[i]) {
            for (const auto& e : g.expr[n - 1 - i]) {
              if (stepOk(cls, "cap", 0)) out[n].push_back(mkFun("cap", {c, e}));
              if (stepOk(cls, "cap", 1)) out[n].push_back(mkFun("cap", {e, c}));
            }
          }
        }
      }
    }
    return g;
  }();
  return w;
}

bool isPair(const ExprPtr& e, const std::string& head) {
  auto* f = std::get_if<FunApp>(&e->node);
  if (!f || f->sym != "cap" || f->args.size() != 2) return false;
  auto* g = std::get_if<FunApp>(&std::get<ExprPtr>(f->args[0])->node);
  return g && g->sym == head && g->args.empty();
}

bool isNegOf(const ExprPtr& e, const std::string& head) {
  auto* f = std::get_if<FunApp>(&e->node);
  if (!f || f->sym != "neg" || f->args.size() != 1) return false;
  auto* g = std::get_if<FunApp>(&std::get<ExprPtr>(f->args[0])->node);
  return g && g->sym == head && g->args.empty();
}

// 0: cap bot _, 1: cap top _, 2: neg top, 3: neg bot (fixture rule order).
bool srRedex(int idx, const ExprPtr& e) {
  switch (idx) {
    case 0: return isPair(e, "bot");
    case 1: return isPair(e, "top");
    case 2: return isNegOf(e, "top");
    default: return isNegOf(e, "bot");
  }
}

struct PosInfo {
  std::string path;
  ExprPtr sub;
  bool aOk, cOk;
};

void collectPositions(const ExprPtr& e, const std::string& path, bool aOk,
                      bool cOk, std::vector<PosInfo>& out) {
  out.push_back({path, e, aOk, cOk});
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    for (size_t i = 0; i < f->args.size(); ++i) {
      const auto& sub = std::get<ExprPtr>(f->args[i]);
      std::string p = path + "." + std::to_string(i);
      collectPositions(sub, p, aOk && stepOk("A", f->sym, (int)i),
                       cOk && stepOk("C", f->sym, (int)i), out);
    }
  }
}

std::set<std::string> directOverlaps(bool tReversed, int srIdx) {
  std::set<std::string> out;
  for (int n = 1; n <= kSizeBound; ++n) {
    for (const auto& e : world().expr[n]) {
      std::vector<PosInfo> pos;
      collectPositions(e, "", true, true, pos);
      for (const auto& p1 : pos) {
        if (!p1.cOk) continue;
        if (!tReversed && !isPair(p1.sub, "top")) continue;
        for (const auto& p2 : pos) {
          if (!p2.aOk || !srRedex(srIdx, p2.sub)) continue;
          out.insert(render(e) + "|" + p1.path + "|" + p2.path);
        }
      }
    }
  }
  return out;
}

std::optional<std::string> holePath(const ExprPtr& e) {
  if (std::holds_alternative<Hole>(e->node)) return std::string{};
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    for (size_t i = 0; i < f->args.size(); ++i) {
      if (auto* sub = std::get_if<ExprPtr>(&f->args[i])) {
        if (auto p = holePath(*sub)) return "." + std::to_string(i) + *p;
      }
    }
  }
  return std::nullopt;
}

// Size if every context meta collapses to the empty context.
int minSize(const ExprPtr& e) {
  if (std::holds_alternative<SVar>(e->node)) return 1;
  if (auto* c = std::get_if<CtxApp>(&e->node)) return minSize(c->body);
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    int n = 1;
    for (const auto& a : f->args) {
      if (auto* x = std::get_if<ExprPtr>(&a)) n += minSize(*x);
    }
    return n;
  }
  return 0;  // Hole
}

std::string rootCtxName(const ExprPtr& e) {
  return std::get<CtxApp>(e->node).name;
}

ExprPtr ctxImage(const Subst& s, const std::string& name) {
  auto it = s.ctxs.find(name);
  return it != s.ctxs.end() ? it->second : mkCtxApp(name, mkHole());
}

void enumInstances(const ExprPtr& common, const ExprPtr& c1, const ExprPtr& c2,
                   std::set<std::string>& out) {
  std::set<std::string> metaSet = metaVarNames(common);
  for (const auto& m : metaVarNames(c1)) metaSet.insert(m);
  for (const auto& m : metaVarNames(c2)) metaSet.insert(m);
  std::vector<std::string> metas(metaSet.begin(), metaSet.end());
  int extra = kSizeBound - minSize(common);
  if (extra < 0) return;
  Subst tau;
  std::function<void(size_t, int)> rec = [&](size_t k, int rem) {
    if (k == metas.size()) {
      ExprPtr e = tau.apply(common);
      if (exprSize(e) > kSizeBound) return;
      auto p1 = holePath(tau.apply(c1));
      auto p2 = holePath(tau.apply(c2));
      REQUIRE(p1);
      REQUIRE(p2);
      out.insert(render(e) + "|" + *p1 + "|" + *p2);
      return;
    }
    const std::string& m = metas[k];
    if (kindOfName(m) == MvKind::Expression) {
      for (int sz = 1; sz <= 1 + rem && sz <= kSizeBound; ++sz) {
        for (const auto& cand : world().expr[sz]) {
          tau.exprs[m] = cand;
          rec(k + 1, rem - (sz - 1));
        }
      }
      tau.exprs.erase(m);
    } else {
      REQUIRE(kindOfName(m) == MvKind::Context);
      const auto& pool = world().ctx.at(classOfContextName(m));
      for (int sz = 0; sz <= rem && sz < (int)pool.size(); ++sz) {
        for (const auto& cand : pool[sz]) {
          tau.ctxs[m] = cand;
          rec(k + 1, rem - sz);
        }
      }
      tau.ctxs.erase(m);
    }
  };
  rec(0, extra);
}

std::set<std::string> solverOverlaps(Solver& solver, const Rule& tRule,
                                     int srIdx, size_t* solCount = nullptr) {
  std::set<std::string> used = metaVarNames(tRule.lhs);
  Rule sr = renameApart(boolDesc().srRules[srIdx], used);
  auto sols = solver.unify(tRule.lhs, tRule.delta, sr.lhs, sr.delta);
  if (solCount) *solCount = sols.size();
  checkInstances(tRule.lhs, sr.lhs, sols);
  std::set<std::string> out;
  for (const auto& sol : sols) {
    enumInstances(sol.subst.apply(tRule.lhs),
                  ctxImage(sol.subst, rootCtxName(tRule.lhs)),
                  ctxImage(sol.subst, rootCtxName(sr.lhs)), out);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Basic unification behaviour.
// ---------------------------------------------------------------------------

TEST_CASE("transformation against a different redex: nesting and parallel") {
  Solver solver(boolDesc());
  // C[cap top S] vs A[cap bot S'] has exactly two unifiers: the standard
  // reduction inside S's position, and independent positions below a fork.
  std::set<std::string> used = metaVarNames(boolDesc().transformations[0].lhs);
  Rule sr = renameApart(boolDesc().srRules[0], used);
  const ExprPtr& l1 = boolDesc().transformations[0].lhs;
  auto sols = solver.unify(l1, {}, sr.lhs, sr.delta);
  REQUIRE(sols.size() == 2);
  checkInstances(l1, sr.lhs, sols);

  // The renamed reduction's expression variable.
  std::string srS;
  for (const auto& m : metaVarNames(sr.lhs)) {
    if (kindOfName(m) == MvKind::Expression) srS = m;
  }
  REQUIRE_FALSE(srS.empty());

  size_t nest = 0, par = 0;
  for (const auto& sol : sols) {
    CHECK(sol.residual.empty());
    CHECK(render(sol.subst.ctxs.at("C")).find("(cap bot ") != std::string::npos);
    auto it = sol.subst.exprs.find(srS);
    if (it == sol.subst.exprs.end()) {
      ++par;  // independent positions leave both redex arguments untouched
    } else {
      ++nest;  // the whole transformation redex sits inside the argument
      CHECK(std::holds_alternative<CtxApp>(it->second->node));
      CHECK(render(it->second).find("(cap top S)") != std::string::npos);
    }
  }
  CHECK(nest == 1);
  CHECK(par == 1);
}

TEST_CASE("expression variable against a constant") {
  Solver solver(boolDesc());
  auto sols = solver.unify(mkSVar("S"), {}, mkFun("top"), {});
  REQUIRE(sols.size() == 1);
  CHECK(render(sols[0].subst.exprs.at("S")) == "top");
}

TEST_CASE("no unifier when the redex cannot fit") {
  Solver solver(boolDesc());
  auto sols = solver.unify(boolDesc().transformations[0].lhs, {}, mkFun("top"), {});
  CHECK(sols.empty());
}

TEST_CASE("unifier counts for the transformation against all reductions") {
  Solver solver(boolDesc());
  // Frozen from the ground-overlap oracle below: the same-redex pair adds an
  // equal-position unifier on top of nesting and parallel; the neg rules only
  // overlap at independent positions.
  const size_t expected[4] = {2, 3, 1, 1};
  for (int i = 0; i < 4; ++i) {
    size_t n = 0;
    solverOverlaps(solver, boolDesc().transformations[0], i, &n);
    CHECK(n == expected[i]);
  }
}

// ---------------------------------------------------------------------------
// Ground completeness and soundness at desk scale: the set of (expression,
// transformation position, reduction position) triples generated by the
// unifiers equals the directly enumerated set.
// ---------------------------------------------------------------------------

TEST_CASE("ground overlap sets match the direct enumeration") {
  Solver solver(boolDesc());
  const Rule& t = boolDesc().transformations[0];
  Rule rev = reverseRule(t);
  for (int sr = 0; sr < 4; ++sr) {
    CAPTURE(sr);
    CHECK(solverOverlaps(solver, t, sr) == directOverlaps(false, sr));
    CHECK(solverOverlaps(solver, rev, sr) == directOverlaps(true, sr));
  }
}

// ---------------------------------------------------------------------------
// Environment equations.
// ---------------------------------------------------------------------------

TEST_CASE("letrec environments unify as multisets") {
  Solver solver(boolDesc());
  ExprPtr a = firstLhs("{t1} letrec E1;X1=S1 in S2 ==> S2\n");
  ExprPtr b = firstLhs("{t2} letrec E2;Y1=S3 in S4 ==> S4\n");
  auto sols = solver.unify(a, {}, b, {});
  // Either the two bindings are identified or each moves into the other
  // side's environment variable.
  CHECK(sols.size() == 2);
  checkInstances(a, b, sols);

  ExprPtr c = firstLhs("{t3} letrec X1=S1 in S2 ==> S2\n");
  ExprPtr d = firstLhs("{t4} letrec E2 in S4 ==> S4\n");
  auto sols2 = solver.unify(c, {}, d, {});
  REQUIRE(sols2.size() == 1);
  checkInstances(c, d, sols2);
  CHECK(render(sols2[0].subst.envs.at("E2")) == "X1=S1");

  // No environment variable can absorb the second binding.
  ExprPtr e = firstLhs("{t5} letrec Y1=S3;Y2=S5 in S4 ==> S4\n");
  CHECK(solver.unify(c, {}, e, {}).empty());
}

TEST_CASE("context descent through letrec productions honours guards") {
  auto desc = parseCalculus(
      "define T ::= [.] | letrec E in T where E /= {}\n"
      "{t1} T[bot] ==> T[bot]\n");
  Solver solver(desc);
  const ExprPtr lhs = desc.transformations[0].lhs;  // T[bot]
  ExprPtr wrapped = firstLhs("{t2} letrec Y1=S3 in bot ==> bot\n");
  auto sols = solver.unify(lhs, {}, wrapped, {});
  REQUIRE(sols.size() == 1);
  CHECK(render(sols[0].subst.ctxs.at("T")) == "letrec Y1=S3 in [.]");
  CHECK(sols[0].residual.neEnv.empty());  // guard discharged by the binding

  // A guard violation prunes the only candidate branch.
  ExprPtr empty = firstLhs("{t3} letrec {} in bot ==> bot\n");
  CHECK(solver.unify(lhs, {}, empty, {}).empty());

  // The empty-context branch survives when no production applies.
  auto sols2 = solver.unify(lhs, {}, mkFun("bot"), {});
  REQUIRE(sols2.size() == 1);
  CHECK(render(sols2[0].subst.ctxs.at("T")) == "[.]");
}

TEST_CASE("non-empty context constraints prune the empty branch") {
  Solver solver(boolDesc());
  const ExprPtr l1 = boolDesc().transformations[0].lhs;  // C[cap top S]
  ConstraintTuple ne;
  ne.neCtx.push_back({"C"});
  ExprPtr redex = firstLhs("{t9} cap top S9 ==> S9\n");
  // Unconstrained: the empty context, or a second redex nested inside S9.
  CHECK(solver.unify(l1, {}, redex, {}).size() == 2);
  auto sols = solver.unify(l1, ne, redex, {});
  REQUIRE(sols.size() == 1);
  CHECK(render(sols[0].subst.ctxs.at("C")) != "[.]");
}

// ---------------------------------------------------------------------------
// Matching.
// ---------------------------------------------------------------------------

TEST_CASE("matching against a rigid constrained expression") {
  Solver solver(boolDesc());
  const ExprPtr pattern = boolDesc().transformations[0].lhs;  // C[cap top S]
  ExprPtr target = mkCtxApp("A1", mkFun("cap", {mkFun("top"), mkSVar("S9")}));
  auto ms = solver.match(pattern, {}, target, {});
  REQUIRE(ms.size() == 1);
  CHECK(render(ms[0].subst.ctxs.at("C")) == "A1[[.]]");
  CHECK(render(ms[0].subst.exprs.at("S")) == "S9");
  CHECK(eqModLet(ms[0].subst.apply(pattern), target));
  // The target's variables stay untouched.
  CHECK_FALSE(ms[0].subst.ctxs.count("A1"));
  CHECK_FALSE(ms[0].subst.exprs.count("S9"));
}

TEST_CASE("matching discharges needed constraints against given ones") {
  Solver solver(boolDesc());
  const ExprPtr pattern = boolDesc().transformations[0].lhs;
  ExprPtr target = mkCtxApp("A1", mkFun("cap", {mkFun("top"), mkSVar("S9")}));
  ConstraintTuple needed;
  needed.neCtx.push_back({"C"});

  CHECK(solver.match(pattern, needed, target, {}).empty());
  ConstraintTuple given;
  given.neCtx.push_back({"A1"});
  auto ms = solver.match(pattern, needed, target, given);
  REQUIRE(ms.size() == 1);
  CHECK(ms[0].discharged.neCtx == std::vector<std::vector<std::string>>{{"A1"}});

  // Needed non-capture atoms instantiate and must appear among the given.
  ConstraintTuple needAtom;
  needAtom.atoms.insert(
      AtomicNcc{Atom{Atom::MetaExprS, "S"}, Atom{Atom::MetaCtxD, "C"}});
  CHECK(solver.match(pattern, needAtom, target, given).empty());
  ConstraintTuple given2 = given;
  given2.atoms.insert(
      AtomicNcc{Atom{Atom::MetaExprS, "S9"}, Atom{Atom::MetaCtxD, "A1"}});
  CHECK(solver.match(pattern, needAtom, target, given2).size() == 1);
}

TEST_CASE("matching a bare redex forces the empty context") {
  Solver solver(boolDesc());
  const ExprPtr pattern = boolDesc().transformations[0].lhs;
  ExprPtr target = firstLhs("{t9} cap top S9 ==> S9\n");
  auto ms = solver.match(pattern, {}, target, {});
  REQUIRE(ms.size() == 1);
  CHECK(render(ms[0].subst.ctxs.at("C")) == "[.]");
}

// ---------------------------------------------------------------------------
// Entailment and constrained equivalence.
// ---------------------------------------------------------------------------

TEST_CASE("entailment rules") {
  Solver solver(boolDesc());
  ConstraintTuple given, needed;
  given.neCtx.push_back({"A1"});
  needed.neCtx.push_back({"A1", "C2"});  // weaker disjunction
  CHECK(solver.entails(given, needed));
  CHECK_FALSE(solver.entails(needed, given));

  ConstraintTuple atoms;
  atoms.atoms.insert(
      AtomicNcc{Atom{Atom::ConcreteVar, "x"}, Atom{Atom::ConcreteVar, "y"}});
  CHECK(solver.entails({}, atoms));  // distinct concrete variables

  ConstraintTuple same;
  same.atoms.insert(
      AtomicNcc{Atom{Atom::ConcreteVar, "x"}, Atom{Atom::ConcreteVar, "x"}});
  CHECK_FALSE(solver.entails({}, same));  // unsatisfiable

  ConstraintTuple freshNeed;
  freshNeed.atoms.insert(
      AtomicNcc{Atom{Atom::MetaVar, "X7"}, Atom{Atom::MetaEnvE, "E1"}});
  freshNeed.freshVars.insert("X7");
  CHECK(solver.entails({}, freshNeed));  // freshened binders capture nothing

  ConstraintTuple unknown;
  unknown.atoms.insert(
      AtomicNcc{Atom{Atom::MetaExprS, "S1"}, Atom{Atom::MetaEnvE, "E1"}});
  CHECK_FALSE(solver.entails({}, unknown));
  CHECK(solver.entails(unknown, unknown));
}

TEST_CASE("constrained equivalence is modulo renaming and dead variables") {
  Solver solver(boolDesc());
  ExprPtr e1 = mkCtxApp("A1", mkFun("cap", {mkFun("top"), mkSVar("S1")}));
  ExprPtr e2 = mkCtxApp("A2", mkFun("cap", {mkFun("top"), mkSVar("S2")}));
  ConstraintTuple d1, d2;
  d1.neCtx.push_back({"A1"});
  d2.neCtx.push_back({"A2"});
  CHECK(solver.equivalentConstrained(e1, d1, e2, d2));
  CHECK_FALSE(solver.equivalentConstrained(e1, d1, e2, {}));
  CHECK_FALSE(solver.equivalentConstrained(e1, {}, e2, d2));
  CHECK(solver.equivalentConstrained(e1, {}, e2, {}));

  // Constraints on variables outside either expression are ignored.
  ConstraintTuple d1x = d1;
  d1x.neEnv.push_back({"E9"});
  d1x.atoms.insert(
      AtomicNcc{Atom{Atom::MetaExprS, "S8"}, Atom{Atom::MetaEnvE, "E9"}});
  CHECK(solver.equivalentConstrained(e1, d1x, e2, d2));

  ExprPtr e3 = mkCtxApp("A2", mkFun("cap", {mkFun("bot"), mkSVar("S2")}));
  CHECK_FALSE(solver.equivalentConstrained(e1, d1, e3, d2));
}

// ---------------------------------------------------------------------------
// Renaming apart, error conditions, determinism.
// ---------------------------------------------------------------------------

TEST_CASE("renaming apart preserves structure and refreshes constraints") {
  auto d = parseCalculus(
      "define T ::= [.]\n"
      "{gcT,2} T[letrec E in S] ==> T[S] where E /= {}, (S,letrec E in [.])\n");
  std::set<std::string> used = {"T1", "S1"};
  Rule r = renameApart(d.transformations[0], used);
  std::map<std::string, std::string> bij;
  CHECK(eqModLetBij(d.transformations[0].lhs, r.lhs, bij));
  CHECK(eqModLetBij(d.transformations[0].rhs, r.rhs, bij));
  for (const auto& m : metaVarNames(r.lhs)) {
    CHECK(m != "T1");
    CHECK(m != "S1");
    CHECK_FALSE(metaVarNames(d.transformations[0].lhs).count(m));
  }
  REQUIRE(r.delta.neEnv.size() == 1);
  CHECK(r.delta.neEnv[0] == std::vector<std::string>{bij.at("E")});
  CHECK(r.delta.atoms == std::set<AtomicNcc>{AtomicNcc{
            Atom{Atom::MetaExprS, bij.at("S")}, Atom{Atom::MetaEnvE, bij.at("E")}}});
}

TEST_CASE("chain variables are rejected by the solver") {
  auto d = parseCalculus(
      "define A ::= [.] | (app A S)\n"
      "{SR,x} letrec E; Ch^A[X1,S1] in S2 ==> letrec E; Ch^A[X1,S1] in S2\n");
  Solver solver(d);
  CHECK_THROWS_AS(solver.unify(d.srRules[0].lhs, {}, mkFun("bot"), {}),
                  ChainUnsupported);
}

TEST_CASE("an undeclared class pair is reported") {
  auto d = parseCalculus("define A ::= [.]\ndefine B ::= [.]\n");
  Solver solver(d);
  CHECK_THROWS_AS(solver.unify(mkCtxApp("A1", mkSVar("S1")), {},
                               mkCtxApp("B1", mkSVar("S2")), {}),
                  ClassTableMissing);
}

TEST_CASE("unification output is deterministic") {
  Solver solver(boolDesc());
  std::set<std::string> used = metaVarNames(boolDesc().transformations[0].lhs);
  Rule sr = renameApart(boolDesc().srRules[1], used);
  auto renderAll = [&] {
    std::string out;
    for (const auto& sol :
         solver.unify(boolDesc().transformations[0].lhs, {}, sr.lhs, {})) {
      out += render(sol.subst.apply(boolDesc().transformations[0].lhs));
      out += ";";
      out += render(sol.residual);
      out += "\n";
    }
    return out;
  };
  std::string a = renderAll();
  CHECK(a == renderAll());
  CHECK_FALSE(a.empty());
}
