#include "lrsx/diagram.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

namespace lrsx {

namespace {

bool containsChain(const ExprPtr& e);

bool containsChain(const Env& env) {
  for (const auto& seg : env) {
    if (std::holds_alternative<ChainSeg>(seg)) return true;
    if (const auto* b = std::get_if<Binding>(&seg)) {
      if (containsChain(b->body)) return true;
    }
  }
  return false;
}

bool containsChain(const ExprPtr& e) {
  if (!e) return false;
  if (const auto* c = std::get_if<CtxApp>(&e->node)) return containsChain(c->body);
  if (const auto* l = std::get_if<Letrec>(&e->node))
    return containsChain(l->env) || containsChain(l->body);
  if (const auto* f = std::get_if<FunApp>(&e->node)) {
    for (const auto& a : f->args) {
      if (const auto* x = std::get_if<ExprPtr>(&a)) {
        if (containsChain(*x)) return true;
      } else if (const auto* b = std::get_if<Binder>(&a)) {
        if (containsChain(b->body)) return true;
      }
    }
  }
  return false;
}

std::set<std::string> tupleNames(const ConstraintTuple& d) {
  std::set<std::string> out;
  for (const auto& g : d.neCtx) out.insert(g.begin(), g.end());
  for (const auto& g : d.neEnv) out.insert(g.begin(), g.end());
  for (const auto& [s, c] : d.nccs) {
    auto ms = metaVarNames(s);
    out.insert(ms.begin(), ms.end());
    auto mc = metaVarNames(c);
    out.insert(mc.begin(), mc.end());
  }
  for (const auto& a : d.atoms) {
    if (isMetaName(a.lhs.name)) out.insert(a.lhs.name);
    if (isMetaName(a.rhs.name)) out.insert(a.rhs.name);
  }
  out.insert(d.freshVars.begin(), d.freshVars.end());
  return out;
}

std::set<std::string> namesOf(const ConstrainedExpr& ce) {
  std::set<std::string> out = metaVarNames(ce.expr);
  auto t = tupleNames(ce.cons);
  out.insert(t.begin(), t.end());
  return out;
}

bool hasEmptyGroup(const ConstraintTuple& d) {
  for (const auto& g : d.neCtx)
    if (g.empty()) return true;
  for (const auto& g : d.neEnv)
    if (g.empty()) return true;
  return false;
}

ConstrainedExpr substCe(const Subst& s, const ConstrainedExpr& ce) {
  return {s.apply(ce.expr), s.apply(ce.cons)};
}

// Diagram label of a full rule label: variant index dropped, the rule name
// collapsed to its union name. "SR,neg,1" -> "SR,neg".
std::string collapseLabel(const CalculusDescription& calc, const Rule& r) {
  std::string lbl = calc.unionNameOf(r.name);
  if (r.kind == RuleKind::SR) lbl = "SR," + lbl;
  if (r.closure) lbl += ",+";
  return lbl;
}

std::string collapseSrLabel(const CalculusDescription& calc,
                            const std::string& label) {
  std::string name = label;
  if (name.rfind("SR,", 0) == 0) name = name.substr(3);
  auto comma = name.find(',');
  if (comma != std::string::npos) name = name.substr(0, comma);
  return "SR," + calc.unionNameOf(name);
}

}  // namespace

// ---------------------------------------------------------------------------
// Meta-level rule application.
// ---------------------------------------------------------------------------

std::vector<MetaStep> applyRuleMeta(Solver& solver, const Rule& rule,
                                    const ConstrainedExpr& ce) {
  std::set<std::string> used = namesOf(ce);
  Rule inst = renameApart(rule, used);
  std::vector<MetaStep> out;
  std::vector<MatchResult> ms;
  try {
    ms = solver.match(inst.lhs, inst.delta, ce.expr, ce.cons);
  } catch (const ChainUnsupported&) {
    return out;  // rules with chain segments never fire at the meta level
  }
  for (const auto& m : ms) {
    ConstrainedExpr after{m.subst.apply(inst.rhs), ce.cons};
    // Freshened target binders stay globally fresh for the rest of the chain.
    after.cons.freshVars.insert(m.freshened.begin(), m.freshened.end());
    out.push_back(MetaStep{inst, m.subst, m.discharged, ce, after});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Overlap computation.
// ---------------------------------------------------------------------------

std::vector<Overlap> computeOverlaps(Solver& solver, const Rule& trans,
                                     bool leftSide,
                                     std::vector<std::string>* diagnostics) {
  const CalculusDescription& calc = solver.calculus();
  Rule tr = leftSide ? trans : reverseRule(trans);
  std::string side = trans.label() + (leftSide ? ".l" : ".r");
  std::vector<Overlap> out;
  if (containsChain(tr.lhs) || containsChain(tr.rhs)) {
    if (diagnostics)
      diagnostics->push_back("transformation " + side +
                             " has chain variables; overlaps not computed");
    return out;
  }

  // Standard-reduction overlaps (closure rules are join lemmas, not peaks).
  for (const Rule& sr : calc.srRules) {
    if (sr.closure) continue;
    std::set<std::string> used;
    Rule t2 = renameApart(tr, used);
    Rule s2 = renameApart(sr, used);
    std::vector<UnifSolution> sols;
    try {
      sols = solver.unify(t2.lhs, t2.delta, s2.lhs, s2.delta);
    } catch (const ChainUnsupported&) {
      if (diagnostics)
        diagnostics->push_back("overlap " + side + " vs " + sr.label() +
                               " skipped: chain variables unsupported");
      continue;
    }
    int k = 0;
    for (const auto& sol : sols) {
      Overlap o;
      o.kind = Overlap::Forking;
      o.commuting = !leftSide;
      o.peak = {sol.subst.apply(t2.lhs), sol.residual};
      o.srLabel = sr.label();
      o.left = {sol.subst.apply(s2.rhs), sol.residual};
      o.tLabel = trans.name;
      o.right = {sol.subst.apply(t2.rhs), sol.residual};
      o.trivial = sol.parallel;
      o.provenance = side + " x " + sr.label() + ", unifier " + std::to_string(k++);
      out.push_back(std::move(o));
    }
  }

  // Answer overlaps: the peak itself is an answer instance.
  int ai = 0;
  for (const Answer& ans : calc.answers) {
    std::set<std::string> used;
    Rule t2 = renameApart(tr, used);
    Rule peer;
    peer.lhs = ans.expr;
    peer.rhs = ans.expr;
    peer.delta = ans.delta;
    Rule a2 = renameApart(peer, used);
    std::vector<UnifSolution> sols;
    try {
      sols = solver.unify(t2.lhs, t2.delta, a2.lhs, a2.delta);
    } catch (const ChainUnsupported&) {
      if (diagnostics)
        diagnostics->push_back("overlap " + side + " vs answer " +
                               std::to_string(ai) +
                               " skipped: chain variables unsupported");
      ++ai;
      continue;
    }
    int k = 0;
    for (const auto& sol : sols) {
      Overlap o;
      o.kind = Overlap::Answer;
      o.commuting = !leftSide;
      o.peak = {sol.subst.apply(t2.lhs), sol.residual};
      o.tLabel = trans.name;
      o.right = {sol.subst.apply(t2.rhs), sol.residual};
      o.provenance = side + " x answer " + std::to_string(ai) + ", unifier " +
                     std::to_string(k++);
      out.push_back(std::move(o));
    }
    ++ai;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Join search.
// ---------------------------------------------------------------------------

namespace {

struct JoinChain {
  ConstrainedExpr end;
  std::vector<MetaStep> steps;
  bool tPhase = false;  // once a transformation step is taken, SR is over
  std::map<std::string, int> uses;
};

struct JoinSearch {
  Solver& solver;
  const SearchConfig& cfg;
  const CalculusDescription& calc;
  std::vector<const Rule*> srRules;  // join-usable, declared order
  std::vector<const Rule*> tRules;
  long budget;

  JoinSearch(Solver& s, const SearchConfig& c, const std::string& tName)
      : solver(s), cfg(c), calc(s.calculus()), budget(c.maxIterations) {
    auto ignoredName = [&](const std::string& n) {
      return std::find(cfg.ignored.begin(), cfg.ignored.end(), n) !=
             cfg.ignored.end();
    };
    for (const Rule& r : calc.srRules) {
      if (r.closure && !cfg.useClosures) continue;
      if (ignoredName(r.name)) continue;
      srRules.push_back(&r);
    }
    for (const Rule* r : calc.transformationsNamed(tName)) {
      if (!ignoredName(r->name)) tRules.push_back(r);
    }
  }

  bool budgetOk(const JoinChain& c, const Rule& r) const {
    auto it = cfg.useBudgets.find(r.name);
    if (it == cfg.useBudgets.end()) return true;
    auto u = c.uses.find(r.name);
    return (u == c.uses.end() ? 0 : u->second) < it->second;
  }

  std::vector<JoinChain> expand(const JoinChain& c, bool allowSR, bool allowT) {
    std::vector<JoinChain> out;
    auto push = [&](const Rule* r, bool asT) {
      if (!budgetOk(c, *r)) return;
      if (budget <= 0) return;
      --budget;
      for (auto& st : applyRuleMeta(solver, *r, c.end)) {
        JoinChain n = c;
        n.end = st.after;
        n.steps.push_back(std::move(st));
        n.tPhase = c.tPhase || asT;
        ++n.uses[r->name];
        out.push_back(std::move(n));
      }
    };
    if (allowSR && !c.tPhase)
      for (const Rule* r : srRules) push(r, false);
    if (allowT)
      for (const Rule* r : tRules) push(r, true);
    return out;
  }
};

// Layered chain fronts: layers[n] holds all chains of length n.
void growLayers(std::vector<std::vector<JoinChain>>& layers, JoinSearch& js,
                size_t upTo, bool allowSR, bool allowT) {
  while (layers.size() <= upTo) {
    std::vector<JoinChain> next;
    for (const JoinChain& c : layers.back())
      for (auto& n : js.expand(c, allowSR, allowT)) next.push_back(std::move(n));
    layers.push_back(std::move(next));
  }
}

bool meet(Solver& solver, const ConstrainedExpr& a, const ConstrainedExpr& b) {
  return solver.equivalentConstrained(a.expr, a.cons, b.expr, b.cons);
}

JoinOutcome joined(Solver& solver, const Overlap& o, JoinWitness w) {
  JoinOutcome out;
  if (!replayWitness(solver, o, w)) {
    out.kind = JoinOutcome::Failed;
    out.reason = "witness replay failed";
    return out;
  }
  out.kind = JoinOutcome::Joined;
  out.witness = std::move(w);
  return out;
}

// The commuting square for redexes at provably disjoint positions. Works at
// any budget; both steps are recorded and replayed like any other join.
std::optional<JoinWitness> tryTrivialSquare(Solver& solver, JoinSearch& js,
                                            const Overlap& o) {
  if (!o.commuting) {
    for (const Rule* t : js.tRules)
      for (auto& ts : applyRuleMeta(solver, *t, o.left))
        for (const Rule* s : js.srRules) {
          if (s->closure) continue;
          for (auto& ss : applyRuleMeta(solver, *s, o.right))
            if (meet(solver, ts.after, ss.after)) {
              JoinWitness w;
              w.leftSteps.push_back(ts);
              w.rightSteps.push_back(ss);
              return w;
            }
        }
  } else {
    for (const Rule* s : js.srRules) {
      if (s->closure) continue;
      for (auto& ss : applyRuleMeta(solver, *s, o.right))
        for (const Rule* t : js.tRules)
          for (auto& ts : applyRuleMeta(solver, *t, ss.after))
            if (meet(solver, o.left, ts.after)) {
              JoinWitness w;
              w.rightSteps.push_back(ss);
              w.rightSteps.push_back(ts);
              return w;
            }
    }
  }
  return std::nullopt;
}

// Case split: first context meta of the peak (in occurrence order) into
// empty/non-empty, else first environment meta into empty/non-empty. The two
// parts' concretization sets partition the parent's.
void splitCandidates(const ExprPtr& e, std::vector<std::string>& ctxs,
                     std::vector<std::string>& envs) {
  if (!e) return;
  if (const auto* c = std::get_if<CtxApp>(&e->node)) {
    if (std::find(ctxs.begin(), ctxs.end(), c->name) == ctxs.end())
      ctxs.push_back(c->name);
    splitCandidates(c->body, ctxs, envs);
  } else if (const auto* l = std::get_if<Letrec>(&e->node)) {
    for (const auto& seg : l->env) {
      if (const auto* ev = std::get_if<EnvVar>(&seg)) {
        if (std::find(envs.begin(), envs.end(), ev->name) == envs.end())
          envs.push_back(ev->name);
      } else if (const auto* b = std::get_if<Binding>(&seg)) {
        splitCandidates(b->body, ctxs, envs);
      }
    }
    splitCandidates(l->body, ctxs, envs);
  } else if (const auto* f = std::get_if<FunApp>(&e->node)) {
    for (const auto& a : f->args) {
      if (const auto* x = std::get_if<ExprPtr>(&a)) splitCandidates(*x, ctxs, envs);
      else if (const auto* b = std::get_if<Binder>(&a))
        splitCandidates(b->body, ctxs, envs);
    }
  }
}

// True when the constraints already force the variable non-empty, so the
// empty branch of a split would be vacuous and the split pointless.
bool pinnedNonEmpty(const ConstraintTuple& d, const std::string& name) {
  for (const auto& g : d.neCtx)
    if (g.size() == 1 && g[0] == name) return true;
  for (const auto& g : d.neEnv)
    if (g.size() == 1 && g[0] == name) return true;
  return false;
}

JoinOutcome trySplit(const Overlap& o) {
  std::vector<std::string> ctxs, envs;
  splitCandidates(o.peak.expr, ctxs, envs);
  auto make = [&](const std::string& name, bool isCtx) {
    JoinOutcome out;
    out.kind = JoinOutcome::Split;
    Subst empty;
    if (isCtx) empty.ctxs[name] = mkHole();
    else empty.envs[name] = Env{};
    Overlap a = o;
    a.peak = substCe(empty, o.peak);
    a.left = substCe(empty, o.left);
    a.right = substCe(empty, o.right);
    a.provenance = o.provenance + " | " + name + " empty";
    if (!hasEmptyGroup(a.peak.cons)) out.parts.push_back(std::move(a));
    Overlap b = o;
    std::vector<std::string> group{name};
    auto addNe = [&](ConstrainedExpr& ce) {
      if (isCtx) ce.cons.neCtx.push_back(group);
      else ce.cons.neEnv.push_back(group);
    };
    addNe(b.peak);
    addNe(b.left);
    addNe(b.right);
    b.provenance = o.provenance + " | " + name + " non-empty";
    out.parts.push_back(std::move(b));
    return out;
  };
  for (const auto& d : ctxs)
    if (!pinnedNonEmpty(o.peak.cons, d)) return make(d, true);
  for (const auto& e : envs)
    if (!pinnedNonEmpty(o.peak.cons, e)) return make(e, false);
  JoinOutcome out;
  out.kind = JoinOutcome::Failed;
  out.reason = "no join found and no variable left to split";
  return out;
}

}  // namespace

SearchConfig SearchConfig::fromCalculus(const CalculusDescription& calc) {
  SearchConfig cfg;
  cfg.deterministic = calc.deterministic;
  cfg.ignored = calc.ignored;
  cfg.useBudgets = calc.useBudgets;
  return cfg;
}

JoinOutcome searchJoin(Solver& solver, const Overlap& o,
                       const SearchConfig& cfg) {
  JoinSearch js(solver, cfg, o.tLabel);

  // Disjoint redexes commute by one step on each side, at any budget.
  if (o.trivial) {
    if (auto w = tryTrivialSquare(solver, js, o)) return joined(solver, o, *w);
  }
  if (cfg.maxDepth <= 0) {
    JoinOutcome out;
    out.kind = JoinOutcome::Failed;
    out.reason = "depth budget exhausted";
    return out;
  }

  if (o.kind == Overlap::Answer) {
    // Standard reduction from the transformation's end must hit an answer.
    std::vector<std::vector<JoinChain>> layers{{JoinChain{o.right, {}, false, {}}}};
    for (int d = 0; d <= cfg.maxDepth; ++d) {
      growLayers(layers, js, d, true, false);
      for (const JoinChain& c : layers[d]) {
        int ai = 0;
        for (const Answer& ans : solver.calculus().answers) {
          std::set<std::string> used = namesOf(c.end);
          Rule peer;
          peer.lhs = ans.expr;
          peer.rhs = ans.expr;
          peer.delta = ans.delta;
          Rule a2 = renameApart(peer, used);
          std::vector<MatchResult> ms;
          try {
            ms = solver.match(a2.lhs, a2.delta, c.end.expr, c.end.cons);
          } catch (const ChainUnsupported&) {
            ms.clear();
          }
          if (!ms.empty()) {
            JoinWitness w;
            w.rightSteps = c.steps;
            w.answerIndex = ai;
            w.answerMatch =
                MetaStep{a2, ms[0].subst, ms[0].discharged, c.end, c.end};
            return joined(solver, o, std::move(w));
          }
          ++ai;
        }
      }
    }
  } else {
    // Forking: left chain = SR* (deterministic only) then T*; right = SR*.
    // Commuting: right chain = SR* then T*; left stays put.
    std::vector<std::vector<JoinChain>> left{{JoinChain{o.left, {}, false, {}}}};
    std::vector<std::vector<JoinChain>> right{{JoinChain{o.right, {}, false, {}}}};
    bool leftSR = !o.commuting && cfg.deterministic;
    bool leftT = !o.commuting;
    bool rightT = o.commuting;
    for (int d = 0; d <= cfg.maxDepth; ++d) {
      for (int l = 0; l <= d; ++l) {
        int r = d - l;
        if (l > 0 && !(leftSR || leftT)) continue;
        growLayers(left, js, l, leftSR, leftT);
        growLayers(right, js, r, true, rightT);
        for (const JoinChain& lc : left[l])
          for (const JoinChain& rc : right[r])
            if (meet(solver, lc.end, rc.end)) {
              JoinWitness w;
              w.leftSteps = lc.steps;
              w.rightSteps = rc.steps;
              return joined(solver, o, std::move(w));
            }
      }
    }
  }

  if (cfg.caseSplitBudget > 0) return trySplit(o);
  JoinOutcome out;
  out.kind = JoinOutcome::Failed;
  out.reason = js.budget <= 0 ? "iteration budget exhausted"
                              : "no join within the depth bound";
  return out;
}

// ---------------------------------------------------------------------------
// Witness replay.
// ---------------------------------------------------------------------------

namespace {

bool replayStep(Solver& solver, const MetaStep& st) {
  if (!st.rule.lhs || !st.before.expr || !st.after.expr) return false;
  if (!eqModLet(st.matcher.apply(st.rule.lhs), st.before.expr)) return false;
  if (!eqModLet(st.matcher.apply(st.rule.rhs), st.after.expr)) return false;
  return solver.entails(st.before.cons, st.discharged);
}

bool replayChain(Solver& solver, const ConstrainedExpr& start,
                 const std::vector<MetaStep>& steps) {
  const ConstrainedExpr* cur = &start;
  for (const MetaStep& st : steps) {
    if (!eqModLet(st.before.expr, cur->expr)) return false;
    if (!replayStep(solver, st)) return false;
    cur = &st.after;
  }
  return true;
}

const ConstrainedExpr& chainEnd(const ConstrainedExpr& start,
                                const std::vector<MetaStep>& steps) {
  return steps.empty() ? start : steps.back().after;
}

}  // namespace

bool replayWitness(Solver& solver, const Overlap& o, const JoinWitness& w) {
  if (o.kind == Overlap::Answer) {
    if (!w.leftSteps.empty()) return false;
    if (!replayChain(solver, o.right, w.rightSteps)) return false;
    if (w.answerIndex < 0) return false;
    const ConstrainedExpr& end = chainEnd(o.right, w.rightSteps);
    if (!eqModLet(w.answerMatch.before.expr, end.expr)) return false;
    return replayStep(solver, w.answerMatch);
  }
  if (!replayChain(solver, o.left, w.leftSteps)) return false;
  if (!replayChain(solver, o.right, w.rightSteps)) return false;
  const ConstrainedExpr& le = chainEnd(o.left, w.leftSteps);
  const ConstrainedExpr& re = chainEnd(o.right, w.rightSteps);
  return solver.equivalentConstrained(le.expr, le.cons, re.expr, re.cons);
}

// ---------------------------------------------------------------------------
// Abstraction and the textual format.
// ---------------------------------------------------------------------------

Diagram abstractDiagram(const CalculusDescription& calc, const Overlap& o,
                        const JoinWitness& w) {
  Diagram d;
  if (o.kind == Overlap::Answer) d.src = {DiagToken::AnswerMark, ""};
  else d.src = {DiagToken::Bwd, collapseSrLabel(calc, o.srLabel)};
  d.tLabel = calc.unionNameOf(o.tLabel);
  auto stepToken = [&](const MetaStep& st, bool forward) {
    return DiagToken{forward ? DiagToken::Fwd : DiagToken::Bwd,
                     collapseLabel(calc, st.rule)};
  };
  // The join line is the path from the left chain's end to the right chain's
  // end; right-chain steps therefore appear in reverse application order,
  // transformation steps pointing right, SR steps pointing left.
  for (const MetaStep& st : w.leftSteps) d.join.push_back(stepToken(st, true));
  if (o.kind == Overlap::Answer) d.join.push_back({DiagToken::AnswerMark, ""});
  for (auto it = w.rightSteps.rbegin(); it != w.rightSteps.rend(); ++it)
    d.join.push_back(stepToken(*it, it->rule.kind == RuleKind::T));
  return d;
}

namespace {

std::string tokenText(const DiagToken& t) {
  switch (t.kind) {
    case DiagToken::AnswerMark:
      return "<-ANSWER-";
    case DiagToken::Fwd:
      return "-" + t.label + "->";
    case DiagToken::Bwd:
      return "<-" + t.label + "-";
  }
  return "";
}

DiagToken parseToken(const std::string& s) {
  if (s == "<-ANSWER-") return {DiagToken::AnswerMark, ""};
  if (s.size() > 3 && s.rfind("<-", 0) == 0 && s.back() == '-')
    return {DiagToken::Bwd, s.substr(2, s.size() - 3)};
  if (s.size() > 3 && s.front() == '-' && s.compare(s.size() - 2, 2, "->") == 0)
    return {DiagToken::Fwd, s.substr(1, s.size() - 3)};
  throw std::invalid_argument("malformed diagram arrow: " + s);
}

}  // namespace

std::string render(const Diagram& d) {
  std::string out = tokenText(d.src) + " . -" + d.tLabel + "-> ~~>";
  for (const DiagToken& t : d.join) {
    out += (&t == &d.join.front()) ? " " : " . ";
    out += tokenText(t);
  }
  return out;
}

Diagram parseDiagramLine(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> toks;
  for (std::string t; in >> t;)
    if (t != ".") toks.push_back(t);
  auto arrow = std::find(toks.begin(), toks.end(), "~~>");
  if (arrow == toks.end() || arrow - toks.begin() != 2)
    throw std::invalid_argument("malformed diagram line: " + line);
  Diagram d;
  d.src = parseToken(toks[0]);
  if (d.src.kind == DiagToken::Fwd)
    throw std::invalid_argument("malformed diagram line: " + line);
  DiagToken t = parseToken(toks[1]);
  if (t.kind != DiagToken::Fwd)
    throw std::invalid_argument("malformed diagram line: " + line);
  d.tLabel = t.label;
  for (auto it = arrow + 1; it != toks.end(); ++it)
    d.join.push_back(parseToken(*it));
  return d;
}

// ---------------------------------------------------------------------------
// Full pipeline for one overlap command.
// ---------------------------------------------------------------------------

DiagramRun computeDiagrams(const CalculusDescription& calc,
                           const OverlapCommand& cmd, const SearchConfig& cfg) {
  Solver solver(calc);
  DiagramRun run;
  for (const Rule* r : calc.transformationsNamed(cmd.ruleName, cmd.variant)) {
    auto ovs = computeOverlaps(solver, *r, cmd.left, &run.diagnostics);
    run.overlaps.insert(run.overlaps.end(), ovs.begin(), ovs.end());
  }
  std::set<Diagram> dset;
  std::deque<std::pair<Overlap, int>> work;
  for (const Overlap& o : run.overlaps) work.emplace_back(o, cfg.caseSplitBudget);
  while (!work.empty()) {
    auto [o, splits] = std::move(work.front());
    work.pop_front();
    SearchConfig c = cfg;
    c.caseSplitBudget = splits;
    JoinOutcome res = searchJoin(solver, o, c);
    switch (res.kind) {
      case JoinOutcome::Joined:
        dset.insert(abstractDiagram(calc, o, res.witness));
        break;
      case JoinOutcome::Split:
        for (Overlap& p : res.parts) work.emplace_back(std::move(p), splits - 1);
        break;
      case JoinOutcome::Failed:
        run.unjoined.push_back(o.provenance + ": peak " + render(o.peak.expr) +
                               " (" + res.reason + ")");
        break;
    }
  }
  run.diagrams.assign(dset.begin(), dset.end());
  return run;
}

}  // namespace lrsx
