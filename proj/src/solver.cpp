#include "lrsx/solver.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <optional>

namespace lrsx {

namespace {

// ---------------------------------------------------------------------------
// Helpers.
// ---------------------------------------------------------------------------

bool containsChain(const ExprPtr& e);

bool containsChain(const Env& env) {
  for (const auto& seg : env) {
    if (std::holds_alternative<ChainSeg>(seg)) return true;
    if (auto* b = std::get_if<Binding>(&seg)) {
      if (containsChain(b->body)) return true;
    }
  }
  return false;
}

bool containsChain(const ExprPtr& e) {
  if (auto* c = std::get_if<CtxApp>(&e->node)) return containsChain(c->body);
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    return containsChain(l->env) || containsChain(l->body);
  }
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    for (const auto& a : f->args) {
      if (auto* x = std::get_if<ExprPtr>(&a)) {
        if (containsChain(*x)) return true;
      } else if (auto* b = std::get_if<Binder>(&a)) {
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
  for (const auto& a : d.atoms) {
    if (a.lhs.kind != Atom::ConcreteVar) out.insert(a.lhs.name);
    if (a.rhs.kind != Atom::ConcreteVar) out.insert(a.rhs.name);
  }
  for (const auto& [s, c] : d.nccs) {
    auto ms = metaVarNames(s);
    out.insert(ms.begin(), ms.end());
    auto mc = metaVarNames(c);
    out.insert(mc.begin(), mc.end());
  }
  out.insert(d.freshVars.begin(), d.freshVars.end());
  return out;
}

// A constraint tuple that can no longer be satisfied by any instance.
bool unsatTuple(const ConstraintTuple& d) {
  for (const auto& g : d.neCtx) {
    if (g.empty()) return true;
  }
  for (const auto& g : d.neEnv) {
    if (g.empty()) return true;
  }
  for (const auto& a : d.atoms) {
    if (a.lhs == a.rhs &&
        (a.lhs.kind == Atom::ConcreteVar || a.lhs.kind == Atom::MetaVar)) {
      return true;
    }
  }
  return false;
}

// Identity-shaped image for an unbound meta-variable, used to build canonical
// duplicate-detection keys.
ExprPtr identityImage(const Subst& s, const std::string& name) {
  switch (kindOfName(name)) {
    case MvKind::Expression: {
      auto it = s.exprs.find(name);
      return it != s.exprs.end() ? it->second : mkSVar(name);
    }
    case MvKind::Variable:
      return mkVarE(s.apply(Var{name}));
    case MvKind::Context: {
      auto it = s.ctxs.find(name);
      return it != s.ctxs.end() ? it->second : mkCtxApp(name, mkHole());
    }
    case MvKind::Environment: {
      auto it = s.envs.find(name);
      Env env = it != s.envs.end() ? it->second : Env{EnvVar{name}};
      return mkLetrec(std::move(env), mkFun("_end"));
    }
    case MvKind::Chain:
      return mkSVar(name);  // unreachable: chain inputs are rejected upfront
  }
  return mkSVar(name);
}

std::vector<std::vector<std::string>> canonGroups(
    const std::vector<std::vector<std::string>>& groups) {
  std::vector<std::vector<std::string>> out = groups;
  for (auto& g : out) std::sort(g.begin(), g.end());
  std::sort(out.begin(), out.end());
  return out;
}

void occVar(const Var& v, std::map<std::string, int>& occ) {
  if (v.isMeta()) ++occ[v.name];
}

void occExpr(const ExprPtr& e, std::map<std::string, int>& occ) {
  if (!e) return;
  if (auto* c = std::get_if<CtxApp>(&e->node)) {
    occExpr(c->body, occ);
  } else if (auto* l = std::get_if<Letrec>(&e->node)) {
    for (const auto& seg : l->env) {
      if (auto* b = std::get_if<Binding>(&seg)) {
        occVar(b->var, occ);
        occExpr(b->body, occ);
      } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
        occVar(ch->var, occ);
        occExpr(ch->arg, occ);
      }
    }
    occExpr(l->body, occ);
  } else if (auto* f = std::get_if<FunApp>(&e->node)) {
    for (const auto& a : f->args) {
      if (auto* v = std::get_if<Var>(&a)) {
        occVar(*v, occ);
      } else if (auto* x = std::get_if<ExprPtr>(&a)) {
        occExpr(*x, occ);
      } else {
        const auto& b = std::get<Binder>(a);
        for (const auto& v2 : b.binders) occVar(v2, occ);
        occExpr(b.body, occ);
      }
    }
  }
}

// Binder sites: (variable name, occurrence count inside the binder's scope).
// A lambda's scope is the abstraction, a letrec binding's the whole letrec.
void collectSites(const ExprPtr& e,
                  std::vector<std::pair<std::string, int>>& sites) {
  if (!e) return;
  if (auto* c = std::get_if<CtxApp>(&e->node)) {
    collectSites(c->body, sites);
  } else if (auto* l = std::get_if<Letrec>(&e->node)) {
    std::map<std::string, int> scope;
    occExpr(e, scope);
    for (const auto& seg : l->env) {
      if (auto* b = std::get_if<Binding>(&seg)) {
        if (b->var.isMeta()) sites.push_back({b->var.name, scope[b->var.name]});
        collectSites(b->body, sites);
      } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
        collectSites(ch->arg, sites);
      }
    }
    collectSites(l->body, sites);
  } else if (auto* f = std::get_if<FunApp>(&e->node)) {
    for (const auto& a : f->args) {
      if (auto* x = std::get_if<ExprPtr>(&a)) {
        collectSites(*x, sites);
      } else if (auto* b = std::get_if<Binder>(&a)) {
        std::map<std::string, int> scope;
        for (const auto& v : b->binders) occVar(v, scope);
        occExpr(b->body, scope);
        for (const auto& v : b->binders)
          if (v.isMeta()) sites.push_back({v.name, scope[v.name]});
        collectSites(b->body, sites);
      }
    }
  }
}

// Binder meta-variables whose every occurrence sits inside their own scope,
// so renaming the instance to a globally fresh name is an alpha-step.
std::set<std::string> freshenableBinders(const ExprPtr& target) {
  std::map<std::string, int> total;
  occExpr(target, total);
  std::vector<std::pair<std::string, int>> sites;
  collectSites(target, sites);
  std::map<std::string, int> nSites, inScope;
  for (const auto& [n, c] : sites) {
    ++nSites[n];
    inScope[n] = c;
  }
  std::set<std::string> out;
  for (const auto& [n, c] : inScope)
    if (nSites[n] == 1 && c == total[n]) out.insert(n);
  return out;
}

Subst renameSubst(const std::map<std::string, std::string>& nameMap) {
  Subst s;
  for (const auto& [from, to] : nameMap) {
    switch (kindOfName(from)) {
      case MvKind::Expression: s.exprs[from] = mkSVar(to); break;
      case MvKind::Variable: s.vars[from] = Var{to}; break;
      case MvKind::Context: s.ctxs[from] = mkCtxApp(to, mkHole()); break;
      case MvKind::Environment: s.envs[from] = {EnvVar{to}}; break;
      case MvKind::Chain: break;  // chain names cannot be renamed
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// The equation engine. Unification and matching share one DFS over equation
// stacks; matching marks the target's meta-variables rigid.
// ---------------------------------------------------------------------------

struct EqExpr {
  ExprPtr a, b;
};
struct EqEnv {
  Env a, b;
};
struct EqVar {
  Var a, b;
};
using Eq = std::variant<EqExpr, EqEnv, EqVar>;

struct State {
  std::vector<Eq> todo;  // processed from the back
  Subst subst;
  ConstraintTuple cons;
  bool parallel = false;  // a fork-table branch was taken
};

struct Engine {
  const CalculusDescription& calc;
  std::set<std::string> rigid;
  std::set<std::string> used;
  std::set<std::string> freshenable;       // target binders open to renaming
  const ConstraintTuple* given = nullptr;  // non-null: matching mode
  const Solver* solver = nullptr;
  std::vector<UnifSolution> sols;
  long steps = 0;
  std::map<std::string, int> nextIdx;
  static constexpr long kMaxSteps = 2'000'000;

  bool isRigid(const std::string& name) const { return rigid.count(name) != 0; }

  std::string fresh(const std::string& prefix) {
    int& i = nextIdx[prefix];
    for (;;) {
      std::string n = prefix + std::to_string(++i);
      if (!used.count(n)) {
        used.insert(n);
        return n;
      }
    }
  }

  void applyTo(const Subst& s, Eq& eq) {
    if (auto* e = std::get_if<EqExpr>(&eq)) {
      e->a = s.apply(e->a);
      e->b = s.apply(e->b);
    } else if (auto* v = std::get_if<EqEnv>(&eq)) {
      v->a = s.apply(v->a);
      v->b = s.apply(v->b);
    } else {
      auto& x = std::get<EqVar>(eq);
      x.a = s.apply(x.a);
      x.b = s.apply(x.b);
    }
  }

  // Applies the binding everywhere; false when the constraints collapse.
  bool bindAndCheck(State& st, const Subst& b) {
    for (auto& eq : st.todo) applyTo(b, eq);
    st.subst.composeWith(b);
    st.cons = b.apply(st.cons);
    return !unsatTuple(st.cons);
  }

  void emit(State& st) {
    if (unsatTuple(st.cons)) return;
    if (given && !solver->entails(*given, st.cons)) {
      // Binder freshening: a blocked freshness atom whose capture side is an
      // explicit binder meta-variable of the target is discharged by renaming
      // that binder's instance globally fresh (an alpha-step on the target).
      std::set<std::string> fs = freshenCandidates(st.cons);
      if (fs.empty()) return;
      ConstraintTuple g2 = *given;
      g2.freshVars.insert(fs.begin(), fs.end());
      if (!solver->entails(g2, st.cons)) return;
      sols.push_back({st.subst, st.cons, st.parallel, std::move(fs)});
      return;
    }
    sols.push_back({st.subst, st.cons, st.parallel});
  }

  std::set<std::string> freshenCandidates(const ConstraintTuple& needed) const {
    std::set<std::string> fresh = given->freshVars;
    fresh.insert(needed.freshVars.begin(), needed.freshVars.end());
    std::set<std::string> out;
    for (const auto& a : needed.atoms) {
      if (given->atoms.count(a)) continue;
      if (fresh.count(a.lhs.name) || fresh.count(a.rhs.name)) continue;
      if (a.lhs.kind == Atom::ConcreteVar && a.rhs.kind == Atom::ConcreteVar &&
          a.lhs.name != a.rhs.name) {
        continue;
      }
      if (a.rhs.kind == Atom::MetaVar && freshenable.count(a.rhs.name)) {
        out.insert(a.rhs.name);
        continue;
      }
      return {};
    }
    return out;
  }

  void step(State st);
  void exprCase(State st, const ExprPtr& a, const ExprPtr& b);
  void svarCase(State st, const ExprPtr& a, const ExprPtr& b);
  void ctxCtx(State st, const ExprPtr& a, const ExprPtr& b);
  void ctxOther(State st, const ExprPtr& c, const ExprPtr& b);
  void funFun(State st, const FunApp& fa, const FunApp& fb);
  void varCase(State st, const Var& a, const Var& b);
  void envCase(State st, Env a, Env b);

  ExprPtr freshenProduction(const CtxProduction& p, ConstraintTuple& guardOut);
};

void Engine::step(State st) {
  if (++steps > kMaxSteps) {
    throw std::runtime_error("solver: step budget exhausted");
  }
  if (st.todo.empty()) {
    emit(st);
    return;
  }
  Eq eq = std::move(st.todo.back());
  st.todo.pop_back();
  if (auto* e = std::get_if<EqExpr>(&eq)) {
    exprCase(std::move(st), e->a, e->b);
  } else if (auto* v = std::get_if<EqEnv>(&eq)) {
    envCase(std::move(st), v->a, v->b);
  } else {
    const auto& x = std::get<EqVar>(eq);
    varCase(std::move(st), x.a, x.b);
  }
}

void Engine::exprCase(State st, const ExprPtr& a, const ExprPtr& b) {
  if (std::holds_alternative<SVar>(a->node) ||
      std::holds_alternative<SVar>(b->node)) {
    svarCase(std::move(st), a, b);
    return;
  }
  bool ca = std::holds_alternative<CtxApp>(a->node);
  bool cb = std::holds_alternative<CtxApp>(b->node);
  if (ca && cb) {
    ctxCtx(std::move(st), a, b);
    return;
  }
  if (ca) {
    ctxOther(std::move(st), a, b);
    return;
  }
  if (cb) {
    ctxOther(std::move(st), b, a);
    return;
  }
  if (a->node.index() != b->node.index()) return;
  if (auto* la = std::get_if<Letrec>(&a->node)) {
    const auto& lb = std::get<Letrec>(b->node);
    st.todo.push_back(EqExpr{la->body, lb.body});
    st.todo.push_back(EqEnv{la->env, lb.env});
    step(std::move(st));
    return;
  }
  if (auto* fa = std::get_if<FunApp>(&a->node)) {
    funFun(std::move(st), *fa, std::get<FunApp>(b->node));
    return;
  }
  if (auto* ha = std::get_if<Hole>(&a->node)) {
    if (ha->index == std::get<Hole>(b->node).index) step(std::move(st));
    return;
  }
}

void Engine::svarCase(State st, const ExprPtr& a, const ExprPtr& b) {
  const SVar* sa = std::get_if<SVar>(&a->node);
  const SVar* sb = std::get_if<SVar>(&b->node);
  if (sa && sb && sa->name == sb->name) {
    step(std::move(st));
    return;
  }
  if (sa && !isRigid(sa->name) && !metaVarNames(b).count(sa->name)) {
    Subst bnd;
    bnd.exprs[sa->name] = b;
    if (bindAndCheck(st, bnd)) step(std::move(st));
    return;
  }
  if (sb && !isRigid(sb->name) && !metaVarNames(a).count(sb->name)) {
    Subst bnd;
    bnd.exprs[sb->name] = a;
    if (bindAndCheck(st, bnd)) step(std::move(st));
    return;
  }
  // The S variable is rigid or occurs on the other side. A flexible context
  // wrapper there can still collapse to the empty context (S = C[S] has the
  // solutions with C empty).
  const ExprPtr& svarSide = sa ? a : b;
  const ExprPtr& other = sa ? b : a;
  if (auto* c = std::get_if<CtxApp>(&other->node)) {
    if (!isRigid(c->name)) {
      State s2 = std::move(st);
      s2.todo.push_back(EqExpr{c->body, svarSide});
      Subst bnd;
      bnd.ctxs[c->name] = mkHole();
      if (bindAndCheck(s2, bnd)) step(std::move(s2));
    }
  }
}

void Engine::ctxCtx(State st, const ExprPtr& a, const ExprPtr& b) {
  const auto& ca = std::get<CtxApp>(a->node);
  const auto& cb = std::get<CtxApp>(b->node);
  if (ca.name == cb.name) {
    // The hole occurs exactly once, so equal contexts force equal fillings.
    st.todo.push_back(EqExpr{ca.body, cb.body});
    step(std::move(st));
    return;
  }
  bool r1 = isRigid(ca.name);
  bool r2 = isRigid(cb.name);
  if (r1 && r2) return;
  if (r1 || r2) {
    // Matching: the flexible context is empty, or extends the rigid one.
    const CtxApp& rig = r1 ? ca : cb;
    const CtxApp& flex = r1 ? cb : ca;
    const ExprPtr& rigWhole = r1 ? a : b;
    {
      State s2 = st;
      s2.todo.push_back(EqExpr{flex.body, rigWhole});
      Subst bnd;
      bnd.ctxs[flex.name] = mkHole();
      if (bindAndCheck(s2, bnd)) step(std::move(s2));
    }
    auto it = calc.prefix.find({rig.cls, flex.cls});
    if (it != calc.prefix.end() && calc.isSubclassOf(rig.cls, it->second.first)) {
      std::string d4 = fresh(it->second.second);
      State s2 = std::move(st);
      s2.todo.push_back(EqExpr{mkCtxApp(d4, flex.body), rig.body});
      Subst bnd;
      bnd.ctxs[flex.name] = mkCtxApp(rig.name, mkCtxApp(d4, mkHole()));
      if (bindAndCheck(s2, bnd)) step(std::move(s2));
    }
    return;
  }
  bool covered = false;
  // a's context is a prefix of b's.
  if (auto it = calc.prefix.find({ca.cls, cb.cls}); it != calc.prefix.end()) {
    covered = true;
    std::string d3 = fresh(it->second.first);
    std::string d4 = fresh(it->second.second);
    State s2 = st;
    s2.todo.push_back(EqExpr{ca.body, mkCtxApp(d4, cb.body)});
    Subst bnd;
    bnd.ctxs[ca.name] = mkCtxApp(d3, mkHole());
    bnd.ctxs[cb.name] = mkCtxApp(d3, mkCtxApp(d4, mkHole()));
    if (bindAndCheck(s2, bnd)) step(std::move(s2));
  }
  // b's context is a prefix of a's.
  if (auto it = calc.prefix.find({cb.cls, ca.cls}); it != calc.prefix.end()) {
    covered = true;
    std::string d3 = fresh(it->second.first);
    std::string d4 = fresh(it->second.second);
    State s2 = st;
    s2.todo.push_back(EqExpr{mkCtxApp(d4, ca.body), cb.body});
    Subst bnd;
    bnd.ctxs[cb.name] = mkCtxApp(d3, mkHole());
    bnd.ctxs[ca.name] = mkCtxApp(d3, mkCtxApp(d4, mkHole()));
    if (bindAndCheck(s2, bnd)) step(std::move(s2));
  }
  // The hole paths fork below a common prefix.
  if (auto it = calc.fork.find({ca.cls, cb.cls}); it != calc.fork.end()) {
    covered = true;
    for (const auto& entry : it->second) {
      std::string d3 = fresh(entry.k3);
      std::string d4 = fresh(entry.k4);
      std::string d5 = fresh(entry.k5);
      // Sibling meta-variables of the fork shape are fresh per use.
      ConstraintTuple shapeGuard;
      ExprPtr shape = freshenProduction({entry.shape, {}}, shapeGuard);
      ExprPtr shape1 = plugHole(shape, mkCtxApp(d4, mkHole()), 1);
      shape1 = plugHole(shape1, mkCtxApp(d5, cb.body), 2);
      ExprPtr shape2 = plugHole(shape, mkCtxApp(d4, ca.body), 1);
      shape2 = plugHole(shape2, mkCtxApp(d5, mkHole()), 2);
      State s2 = st;
      s2.parallel = true;
      Subst bnd;
      bnd.ctxs[ca.name] = mkCtxApp(d3, shape1);
      bnd.ctxs[cb.name] = mkCtxApp(d3, shape2);
      if (bindAndCheck(s2, bnd)) step(std::move(s2));
    }
  }
  if (calc.fork.count({cb.cls, ca.cls})) covered = true;
  if (!covered) throw ClassTableMissing(ca.cls, cb.cls);
}

ExprPtr Engine::freshenProduction(const CtxProduction& p,
                                  ConstraintTuple& guardOut) {
  Subst ren;
  for (const auto& name : metaVarNames(p.shape)) {
    switch (kindOfName(name)) {
      case MvKind::Expression:
        ren.exprs[name] = mkSVar(fresh("S"));
        break;
      case MvKind::Variable:
        ren.vars[name] = Var{fresh(std::string(1, name[0]))};
        break;
      case MvKind::Context:
        ren.ctxs[name] = mkCtxApp(fresh(classOfContextName(name)), mkHole());
        break;
      case MvKind::Environment:
        ren.envs[name] = {EnvVar{fresh("E")}};
        break;
      case MvKind::Chain:
        throw ChainVariableUnsupported(
            "chain variable in a context-class production");
    }
  }
  guardOut = ren.apply(p.guard);
  return ren.apply(p.shape);
}

namespace {
bool topCompatible(const ExprPtr& shape, const ExprPtr& b) {
  if (std::holds_alternative<CtxApp>(shape->node)) return true;  // alias
  if (auto* fs = std::get_if<FunApp>(&shape->node)) {
    auto* fb = std::get_if<FunApp>(&b->node);
    return fb && fb->sym == fs->sym && fb->args.size() == fs->args.size();
  }
  if (std::holds_alternative<Letrec>(shape->node)) {
    return std::holds_alternative<Letrec>(b->node);
  }
  return false;
}
}  // namespace

void Engine::ctxOther(State st, const ExprPtr& c, const ExprPtr& b) {
  const auto& ctx = std::get<CtxApp>(c->node);
  if (isRigid(ctx.name)) return;
  {
    State s2 = st;
    s2.todo.push_back(EqExpr{ctx.body, b});
    Subst bnd;
    bnd.ctxs[ctx.name] = mkHole();
    if (bindAndCheck(s2, bnd)) step(std::move(s2));
  }
  const ContextClassDef* def = calc.classOf(ctx.cls);
  if (!def) return;
  for (const auto& p : def->productions) {
    if (std::holds_alternative<Hole>(p.shape->node)) continue;
    if (!topCompatible(p.shape, b)) continue;
    ConstraintTuple guard;
    ExprPtr image = freshenProduction(p, guard);
    State s2 = st;
    s2.cons.mergeFrom(guard);
    s2.todo.push_back(EqExpr{plugHole(image, ctx.body), b});
    Subst bnd;
    bnd.ctxs[ctx.name] = image;
    if (bindAndCheck(s2, bnd)) step(std::move(s2));
  }
}

void Engine::funFun(State st, const FunApp& fa, const FunApp& fb) {
  if (fa.sym != fb.sym || fa.args.size() != fb.args.size()) return;
  for (size_t i = 0; i < fa.args.size(); ++i) {
    const Arg& aa = fa.args[i];
    const Arg& ab = fb.args[i];
    if (aa.index() != ab.index()) return;
    if (auto* va = std::get_if<Var>(&aa)) {
      st.todo.push_back(EqVar{*va, std::get<Var>(ab)});
    } else if (auto* xa = std::get_if<ExprPtr>(&aa)) {
      st.todo.push_back(EqExpr{*xa, std::get<ExprPtr>(ab)});
    } else {
      const auto& ba = std::get<Binder>(aa);
      const auto& bb = std::get<Binder>(ab);
      if (ba.binders.size() != bb.binders.size()) return;
      st.todo.push_back(EqExpr{ba.body, bb.body});
      for (size_t k = 0; k < ba.binders.size(); ++k) {
        st.todo.push_back(EqVar{ba.binders[k], bb.binders[k]});
      }
    }
  }
  step(std::move(st));
}

void Engine::varCase(State st, const Var& a, const Var& b) {
  if (a.name == b.name) {
    step(std::move(st));
    return;
  }
  Subst bnd;
  if (a.isMeta() && !isRigid(a.name)) {
    bnd.vars[a.name] = b;
  } else if (b.isMeta() && !isRigid(b.name)) {
    bnd.vars[b.name] = a;
  } else {
    return;
  }
  if (bindAndCheck(st, bnd)) step(std::move(st));
}

void Engine::envCase(State st, Env a, Env b) {
  if (containsChain(a) || containsChain(b)) {
    throw ChainVariableUnsupported("chain segment in an environment equation");
  }
  // Cancel one-for-one environment variables common to both sides (multiset
  // cancellation is sound and complete here).
  for (size_t i = 0; i < a.size();) {
    auto* ea = std::get_if<EnvVar>(&a[i]);
    bool cancelled = false;
    if (ea) {
      for (size_t j = 0; j < b.size(); ++j) {
        auto* eb = std::get_if<EnvVar>(&b[j]);
        if (eb && eb->name == ea->name) {
          a.erase(a.begin() + i);
          b.erase(b.begin() + j);
          cancelled = true;
          break;
        }
      }
    }
    if (!cancelled) ++i;
  }
  std::vector<Binding> bindsA, bindsB;
  std::vector<std::string> flexA, flexB;
  std::vector<EnvSeg> fixedA, fixedB;  // rigid environment variables
  for (const auto& seg : a) {
    if (auto* ev = std::get_if<EnvVar>(&seg)) {
      (isRigid(ev->name) ? fixedA.push_back(seg) : flexA.push_back(ev->name));
    } else {
      bindsA.push_back(std::get<Binding>(seg));
    }
  }
  for (const auto& seg : b) {
    if (auto* ev = std::get_if<EnvVar>(&seg)) {
      (isRigid(ev->name) ? fixedB.push_back(seg) : flexB.push_back(ev->name));
    } else {
      bindsB.push_back(std::get<Binding>(seg));
    }
  }

  // Enumerate injective partial matchings of explicit bindings, then
  // distribute the leftovers over the flexible environment variables of the
  // opposite side, with fresh shared parts between flexible pairs.
  std::vector<int> pairTo(bindsA.size(), -1);
  std::vector<bool> takenB(bindsB.size(), false);

  std::function<void(size_t)> rec = [&](size_t i) {
    if (i == bindsA.size()) {
      std::vector<EnvSeg> leftA = fixedA;
      for (size_t k = 0; k < bindsA.size(); ++k) {
        if (pairTo[k] < 0) leftA.push_back(bindsA[k]);
      }
      std::vector<EnvSeg> leftB = fixedB;
      for (size_t k = 0; k < bindsB.size(); ++k) {
        if (!takenB[k]) leftB.push_back(bindsB[k]);
      }
      if ((flexB.empty() && !leftA.empty()) ||
          (flexA.empty() && !leftB.empty())) {
        return;
      }
      // Assignment of each leftover segment to one flexible variable of the
      // opposite side.
      std::vector<int> asgA(leftA.size(), 0), asgB(leftB.size(), 0);
      std::function<void(size_t, bool)> assign = [&](size_t k, bool onA) {
        if (onA && k == leftA.size()) {
          assign(0, false);
          return;
        }
        if (!onA && k == leftB.size()) {
          Subst bnd;
          std::map<std::pair<size_t, size_t>, std::string> shared;
          for (size_t x = 0; x < flexA.size(); ++x) {
            for (size_t y = 0; y < flexB.size(); ++y) {
              shared[{x, y}] = fresh("E");
            }
          }
          for (size_t x = 0; x < flexA.size(); ++x) {
            Env img;
            for (size_t k2 = 0; k2 < leftB.size(); ++k2) {
              if (asgB[k2] == static_cast<int>(x)) img.push_back(leftB[k2]);
            }
            for (size_t y = 0; y < flexB.size(); ++y) {
              img.push_back(EnvVar{shared[{x, y}]});
            }
            bnd.envs[flexA[x]] = std::move(img);
          }
          for (size_t y = 0; y < flexB.size(); ++y) {
            Env img;
            for (size_t k2 = 0; k2 < leftA.size(); ++k2) {
              if (asgA[k2] == static_cast<int>(y)) img.push_back(leftA[k2]);
            }
            for (size_t x = 0; x < flexA.size(); ++x) {
              img.push_back(EnvVar{shared[{x, y}]});
            }
            bnd.envs[flexB[y]] = std::move(img);
          }
          State s2 = st;
          for (size_t k2 = 0; k2 < bindsA.size(); ++k2) {
            if (pairTo[k2] >= 0) {
              const Binding& p = bindsA[k2];
              const Binding& q = bindsB[pairTo[k2]];
              s2.todo.push_back(EqExpr{p.body, q.body});
              s2.todo.push_back(EqVar{p.var, q.var});
            }
          }
          if (bindAndCheck(s2, bnd)) step(std::move(s2));
          return;
        }
        size_t n = onA ? flexB.size() : flexA.size();
        for (size_t c = 0; c < n; ++c) {
          (onA ? asgA : asgB)[k] = static_cast<int>(c);
          assign(k + 1, onA);
        }
      };
      assign(0, true);
      return;
    }
    rec(i + 1);  // leave bindsA[i] unmatched
    for (size_t j = 0; j < bindsB.size(); ++j) {
      if (takenB[j]) continue;
      takenB[j] = true;
      pairTo[i] = static_cast<int>(j);
      rec(i + 1);
      pairTo[i] = -1;
      takenB[j] = false;
    }
  };
  rec(0);
}

// ---------------------------------------------------------------------------
// Duplicate suppression: identical solutions up to a renaming of the fresh
// meta-variables (original problem variables are pinned to themselves).
// ---------------------------------------------------------------------------

void dedupSolutions(std::vector<UnifSolution>& sols, const ExprPtr& lhs,
                    const std::set<std::string>& problemMetas,
                    const std::set<std::string>& pinned) {
  std::vector<ExprPtr> keys;
  keys.reserve(sols.size());
  for (const auto& sol : sols) {
    std::vector<Arg> args;
    args.emplace_back(sol.subst.apply(lhs));
    for (const auto& m : problemMetas) {
      args.emplace_back(identityImage(sol.subst, m));
    }
    keys.push_back(mkFun("_sol", std::move(args)));
  }
  std::vector<UnifSolution> out;
  std::vector<ExprPtr> outKeys;
  for (size_t j = 0; j < sols.size(); ++j) {
    bool dup = false;
    for (size_t i = 0; i < out.size() && !dup; ++i) {
      std::map<std::string, std::string> bij;
      for (const auto& m : pinned) bij[m] = m;
      if (!eqModLetBij(outKeys[i], keys[j], bij)) continue;
      ConstraintTuple ri = renameSubst(bij).apply(out[i].residual);
      const ConstraintTuple& rj = sols[j].residual;
      dup = canonGroups(ri.neCtx) == canonGroups(rj.neCtx) &&
            canonGroups(ri.neEnv) == canonGroups(rj.neEnv) &&
            ri.atoms == rj.atoms && ri.freshVars == rj.freshVars;
    }
    if (!dup) {
      out.push_back(sols[j]);
      outKeys.push_back(keys[j]);
    }
  }
  sols = std::move(out);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points.
// ---------------------------------------------------------------------------

std::vector<UnifSolution> Solver::unify(const ExprPtr& lhs,
                                        const ConstraintTuple& dl,
                                        const ExprPtr& rhs,
                                        const ConstraintTuple& dr) {
  if (containsChain(lhs) || containsChain(rhs)) {
    throw ChainVariableUnsupported("chain variable in unification input");
  }
  Engine eng{calc_};
  eng.solver = this;
  std::set<std::string> problemMetas = metaVarNames(lhs);
  for (const auto& m : metaVarNames(rhs)) problemMetas.insert(m);
  eng.used = problemMetas;
  for (const auto& n : tupleNames(dl)) eng.used.insert(n);
  for (const auto& n : tupleNames(dr)) eng.used.insert(n);

  State st;
  st.cons = dl;
  st.cons.mergeFrom(dr);
  st.todo.push_back(EqExpr{lhs, rhs});
  eng.step(std::move(st));
  // Duplicates count as equal up to renaming any variable of the solution.
  dedupSolutions(eng.sols, lhs, problemMetas, {});
  return eng.sols;
}

std::vector<MatchResult> Solver::match(const ExprPtr& pattern,
                                       const ConstraintTuple& needed,
                                       const ExprPtr& target,
                                       const ConstraintTuple& given) {
  if (containsChain(pattern) || containsChain(target)) {
    throw ChainVariableUnsupported("chain variable in matching input");
  }
  Engine eng{calc_};
  eng.solver = this;
  eng.given = &given;
  eng.freshenable = freshenableBinders(target);
  eng.rigid = metaVarNames(target);
  for (const auto& n : tupleNames(given)) eng.rigid.insert(n);
  eng.used = eng.rigid;
  std::set<std::string> patternMetas = metaVarNames(pattern);
  for (const auto& m : patternMetas) eng.used.insert(m);
  for (const auto& n : tupleNames(needed)) eng.used.insert(n);

  State st;
  st.cons = needed;
  st.todo.push_back(EqExpr{pattern, target});
  eng.step(std::move(st));

  std::set<std::string> problemMetas = eng.rigid;
  problemMetas.insert(patternMetas.begin(), patternMetas.end());
  // The target's variables are fixed; only pattern-side names may be renamed
  // when recognising duplicate matches.
  dedupSolutions(eng.sols, pattern, problemMetas, eng.rigid);

  std::vector<MatchResult> out;
  out.reserve(eng.sols.size());
  for (auto& sol : eng.sols) {
    MatchResult mr{std::move(sol.subst), std::move(sol.residual),
                   std::move(sol.freshened)};
    mr.discharged.freshVars.insert(mr.freshened.begin(), mr.freshened.end());
    out.push_back(std::move(mr));
  }
  return out;
}

bool Solver::entails(const ConstraintTuple& given,
                     const ConstraintTuple& needed) const {
  if (unsatTuple(needed)) return false;
  std::set<std::string> fresh = given.freshVars;
  fresh.insert(needed.freshVars.begin(), needed.freshVars.end());
  auto groupEntailed = [](const std::vector<std::vector<std::string>>& have,
                          const std::vector<std::string>& want) {
    std::set<std::string> wantSet(want.begin(), want.end());
    for (const auto& h : have) {
      bool sub = !h.empty();
      for (const auto& n : h) {
        if (!wantSet.count(n)) {
          sub = false;
          break;
        }
      }
      if (sub) return true;
    }
    return false;
  };
  for (const auto& g : needed.neCtx) {
    if (!groupEntailed(given.neCtx, g)) return false;
  }
  for (const auto& g : needed.neEnv) {
    if (!groupEntailed(given.neEnv, g)) return false;
  }
  for (const auto& a : needed.atoms) {
    if (given.atoms.count(a)) continue;
    if (fresh.count(a.lhs.name) || fresh.count(a.rhs.name)) continue;
    if (a.lhs.kind == Atom::ConcreteVar && a.rhs.kind == Atom::ConcreteVar &&
        a.lhs.name != a.rhs.name) {
      continue;
    }
    return false;
  }
  return true;
}

bool Solver::equivalentConstrained(const ExprPtr& e1, const ConstraintTuple& d1,
                                   const ExprPtr& e2,
                                   const ConstraintTuple& d2) const {
  std::map<std::string, std::string> bij;
  if (!eqModLetBij(e1, e2, bij)) return false;
  // Map e1's names onto e2's before comparing. Subst::apply leaves freshVars
  // untouched, so rename those by hand.
  ConstraintTuple r1 = renameSubst(bij).apply(restrictConstraints(d1, e1));
  std::set<std::string> f1;
  for (const auto& f : r1.freshVars) {
    auto it = bij.find(f);
    f1.insert(it != bij.end() ? it->second : f);
  }
  r1.freshVars = std::move(f1);
  ConstraintTuple r2 = restrictConstraints(d2, e2);
  return entails(r1, r2) && entails(r2, r1);
}

ConstraintTuple restrictConstraints(const ConstraintTuple& d,
                                    const ExprPtr& e) {
  std::set<std::string> live = metaVarNames(e);
  ConstraintTuple out;
  auto liveName = [&](const Atom& a) {
    return a.kind == Atom::ConcreteVar || live.count(a.name) ||
           d.freshVars.count(a.name);
  };
  for (const auto& g : d.neCtx) {
    bool keep = true;
    for (const auto& n : g) {
      if (!live.count(n)) keep = false;
    }
    if (keep) out.neCtx.push_back(g);
  }
  for (const auto& g : d.neEnv) {
    bool keep = true;
    for (const auto& n : g) {
      if (!live.count(n)) keep = false;
    }
    if (keep) out.neEnv.push_back(g);
  }
  for (const auto& a : d.atoms) {
    if (liveName(a.lhs) && liveName(a.rhs)) out.atoms.insert(a);
  }
  for (const auto& [s, c] : d.nccs) {
    bool keep = true;
    for (const auto& n : metaVarNames(s)) {
      if (!live.count(n) && !d.freshVars.count(n)) keep = false;
    }
    for (const auto& n : metaVarNames(c)) {
      if (!live.count(n) && !d.freshVars.count(n)) keep = false;
    }
    if (keep) out.nccs.emplace_back(s, c);
  }
  out.freshVars = d.freshVars;
  return out;
}

Rule renameApart(const Rule& rule, std::set<std::string>& used) {
  std::set<std::string> names = metaVarNames(rule.lhs);
  for (const auto& n : metaVarNames(rule.rhs)) names.insert(n);
  for (const auto& n : tupleNames(rule.delta)) names.insert(n);
  std::set<std::string> avoid = used;
  avoid.insert(names.begin(), names.end());
  std::map<std::string, std::string> nameMap;
  for (const auto& name : names) {
    std::string prefix;
    switch (kindOfName(name)) {
      case MvKind::Expression: prefix = "S"; break;
      case MvKind::Variable: prefix = std::string(1, name[0]); break;
      case MvKind::Environment: prefix = "E"; break;
      case MvKind::Context: prefix = classOfContextName(name); break;
      case MvKind::Chain:
        throw ChainVariableUnsupported("cannot rename a chain variable");
    }
    for (int i = 1;; ++i) {
      std::string n = prefix + std::to_string(i);
      if (!avoid.count(n)) {
        avoid.insert(n);
        used.insert(n);
        nameMap[name] = n;
        break;
      }
    }
  }
  Subst ren = renameSubst(nameMap);
  Rule out = rule;
  out.lhs = ren.apply(rule.lhs);
  out.rhs = ren.apply(rule.rhs);
  out.delta = ren.apply(rule.delta);
  std::set<std::string> freshened;
  for (const auto& f : rule.delta.freshVars) {
    auto it = nameMap.find(f);
    freshened.insert(it != nameMap.end() ? it->second : f);
  }
  out.delta.freshVars = std::move(freshened);
  return out;
}

}  // namespace lrsx
