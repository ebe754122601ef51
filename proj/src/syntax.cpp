#include "lrsx/syntax.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <sstream>

namespace lrsx {

bool isMetaName(const std::string& name) {
  return !name.empty() && name[0] >= 'A' && name[0] <= 'Z';
}

MvKind kindOfName(const std::string& name) {
  assert(isMetaName(name));
  if (name.rfind("Ch", 0) == 0) return MvKind::Chain;
  switch (name[0]) {
    case 'S': return MvKind::Expression;
    case 'E': return MvKind::Environment;
    case 'X':
    case 'Y':
    case 'Z': return MvKind::Variable;
    default: return MvKind::Context;
  }
}

std::string classOfContextName(const std::string& name) {
  auto end = name.find_last_not_of("0123456789");
  return name.substr(0, end + 1);
}

Atom atomOfName(const std::string& name) {
  if (!isMetaName(name)) return {Atom::ConcreteVar, name};
  switch (kindOfName(name)) {
    case MvKind::Expression: return {Atom::MetaExprS, name};
    case MvKind::Variable: return {Atom::MetaVar, name};
    case MvKind::Environment: return {Atom::MetaEnvE, name};
    case MvKind::Chain: return {Atom::MetaChain, name};
    case MvKind::Context: return {Atom::MetaCtxD, name};
  }
  return {Atom::ConcreteVar, name};
}

ExprPtr mkSVar(std::string name) {
  return std::make_shared<Expr>(Expr{SVar{std::move(name)}});
}
ExprPtr mkCtxApp(std::string name, ExprPtr body) {
  std::string cls = classOfContextName(name);
  return std::make_shared<Expr>(Expr{CtxApp{std::move(name), std::move(cls), std::move(body)}});
}
ExprPtr mkLetrec(Env env, ExprPtr body) {
  return std::make_shared<Expr>(Expr{Letrec{std::move(env), std::move(body)}});
}
ExprPtr mkFun(std::string sym, std::vector<Arg> args) {
  return std::make_shared<Expr>(Expr{FunApp{std::move(sym), std::move(args)}});
}
ExprPtr mkHole(int index) { return std::make_shared<Expr>(Expr{Hole{index}}); }
ExprPtr mkVarE(Var v) { return mkFun(kVarSym, {Arg{v}}); }

void ConstraintTuple::mergeFrom(const ConstraintTuple& o) {
  neCtx.insert(neCtx.end(), o.neCtx.begin(), o.neCtx.end());
  neEnv.insert(neEnv.end(), o.neEnv.begin(), o.neEnv.end());
  nccs.insert(nccs.end(), o.nccs.begin(), o.nccs.end());
  atoms.insert(o.atoms.begin(), o.atoms.end());
  freshVars.insert(o.freshVars.begin(), o.freshVars.end());
}

// ---------------------------------------------------------------------------
// Substitution application.
// ---------------------------------------------------------------------------

Var Subst::apply(const Var& v) const {
  if (v.isMeta()) {
    auto it = vars.find(v.name);
    if (it != vars.end()) return it->second;
  }
  return v;
}

Arg Subst::apply(const Arg& a) const {
  if (auto* v = std::get_if<Var>(&a)) return Arg{apply(*v)};
  if (auto* e = std::get_if<ExprPtr>(&a)) return Arg{apply(*e)};
  const auto& b = std::get<Binder>(a);
  Binder out;
  out.binders.reserve(b.binders.size());
  for (const auto& v : b.binders) out.binders.push_back(apply(v));
  out.body = apply(b.body);
  return Arg{out};
}

Env Subst::apply(const Env& env) const {
  Env out;
  for (const auto& seg : env) {
    if (auto* ev = std::get_if<EnvVar>(&seg)) {
      auto it = envs.find(ev->name);
      if (it != envs.end()) {
        out.insert(out.end(), it->second.begin(), it->second.end());
      } else {
        out.push_back(seg);
      }
    } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
      out.push_back(ChainSeg{ch->name, ch->cls, apply(ch->var), apply(ch->arg)});
    } else {
      const auto& b = std::get<Binding>(seg);
      out.push_back(Binding{apply(b.var), apply(b.body)});
    }
  }
  return out;
}

ExprPtr Subst::apply(const ExprPtr& e) const {
  if (auto* s = std::get_if<SVar>(&e->node)) {
    auto it = exprs.find(s->name);
    return it != exprs.end() ? it->second : e;
  }
  if (auto* c = std::get_if<CtxApp>(&e->node)) {
    ExprPtr body = apply(c->body);
    auto it = ctxs.find(c->name);
    if (it != ctxs.end()) return plugHole(it->second, body);
    if (body == c->body) return e;
    return std::make_shared<Expr>(Expr{CtxApp{c->name, c->cls, body}});
  }
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    return mkLetrec(apply(l->env), apply(l->body));
  }
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    std::vector<Arg> args;
    args.reserve(f->args.size());
    for (const auto& a : f->args) args.push_back(apply(a));
    return mkFun(f->sym, std::move(args));
  }
  return e;  // Hole
}

namespace {

// Context variables along the hole-path spine of a context image. Returns
// nullopt if the image contains a concrete layer on the hole path (i.e. the
// instantiated context is definitely non-empty).
std::optional<std::vector<std::string>> ctxSpineVars(const ExprPtr& ctx) {
  std::vector<std::string> spine;
  ExprPtr cur = ctx;
  for (;;) {
    if (std::holds_alternative<Hole>(cur->node)) return spine;
    if (auto* c = std::get_if<CtxApp>(&cur->node)) {
      spine.push_back(c->name);
      cur = c->body;
      continue;
    }
    return std::nullopt;  // concrete layer
  }
}

// Atoms whose instances can contribute variables to Var(.).
std::set<Atom> varSideAtoms(const ExprPtr& e) {
  VarSets vs = variableSets(e);
  std::set<Atom> out = vs.metas;
  for (const auto& x : vs.all) out.insert({Atom::ConcreteVar, x});
  return out;
}

std::set<Atom> captureSideAtoms(const ExprPtr& d) {
  CapturedVars cv = capturedVars(d);
  std::set<Atom> out = cv.metas;
  for (const auto& x : cv.concrete) out.insert({Atom::ConcreteVar, x});
  return out;
}

// Expands an atom after substitution into the atoms of its image.
std::set<Atom> applyAtomVarSide(const Subst& s, const Atom& a) {
  switch (a.kind) {
    case Atom::ConcreteVar: return {a};
    case Atom::MetaVar: {
      Var v = s.apply(Var{a.name});
      return {atomOfName(v.name)};
    }
    case Atom::MetaExprS: {
      auto it = s.exprs.find(a.name);
      if (it == s.exprs.end()) return {a};
      return varSideAtoms(it->second);
    }
    case Atom::MetaCtxD: {
      auto it = s.ctxs.find(a.name);
      if (it == s.ctxs.end()) return {a};
      return varSideAtoms(it->second);
    }
    case Atom::MetaEnvE: {
      auto it = s.envs.find(a.name);
      if (it == s.envs.end()) return {a};
      VarSets vs = variableSets(it->second);
      std::set<Atom> out = vs.metas;
      for (const auto& x : vs.all) out.insert({Atom::ConcreteVar, x});
      return out;
    }
    case Atom::MetaChain: return {a};
  }
  return {a};
}

std::set<Atom> applyAtomCaptureSide(const Subst& s, const Atom& a) {
  switch (a.kind) {
    case Atom::ConcreteVar: return {a};
    case Atom::MetaVar: {
      Var v = s.apply(Var{a.name});
      return {atomOfName(v.name)};
    }
    case Atom::MetaCtxD: {
      auto it = s.ctxs.find(a.name);
      if (it == s.ctxs.end()) return {a};
      return captureSideAtoms(it->second);
    }
    case Atom::MetaEnvE: {
      auto it = s.envs.find(a.name);
      if (it == s.envs.end()) return {a};
      std::set<Atom> out;
      for (const auto& seg : it->second) {
        if (auto* ev = std::get_if<EnvVar>(&seg)) {
          out.insert({Atom::MetaEnvE, ev->name});
        } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
          out.insert({Atom::MetaChain, ch->name});
          out.insert(atomOfName(ch->var.name));
        } else {
          out.insert(atomOfName(std::get<Binding>(seg).var.name));
        }
      }
      return out;
    }
    case Atom::MetaExprS: {
      // CV of a plain expression is empty; the atom dissolves if mapped.
      auto it = s.exprs.find(a.name);
      if (it == s.exprs.end()) return {a};
      return {};
    }
    case Atom::MetaChain: return {a};
  }
  return {a};
}

}  // namespace

ConstraintTuple Subst::apply(const ConstraintTuple& d) const {
  ConstraintTuple out;
  out.freshVars = d.freshVars;
  for (const auto& group : d.neCtx) {
    std::vector<std::string> mapped;
    bool satisfied = false;
    for (const auto& name : group) {
      auto it = ctxs.find(name);
      if (it == ctxs.end()) {
        mapped.push_back(name);
        continue;
      }
      auto spine = ctxSpineVars(it->second);
      if (!spine) {
        satisfied = true;
        break;
      }
      mapped.insert(mapped.end(), spine->begin(), spine->end());
    }
    if (satisfied) continue;
    // An empty group is unsatisfiable; keep it so satisfiability checks see
    // the contradiction.
    out.neCtx.push_back(std::move(mapped));
  }
  for (const auto& group : d.neEnv) {
    std::vector<std::string> mapped;
    bool satisfied = false;
    for (const auto& name : group) {
      auto it = envs.find(name);
      if (it == envs.end()) {
        mapped.push_back(name);
        continue;
      }
      for (const auto& seg : it->second) {
        if (std::holds_alternative<EnvVar>(seg)) {
          mapped.push_back(std::get<EnvVar>(seg).name);
        } else {
          satisfied = true;  // explicit binding or chain: non-empty
          break;
        }
      }
      if (satisfied) break;
    }
    if (satisfied) continue;
    out.neEnv.push_back(std::move(mapped));
  }
  for (const auto& [s, ctx] : d.nccs) out.nccs.emplace_back(apply(s), apply(ctx));
  for (const auto& a : d.atoms) {
    for (const auto& u : applyAtomVarSide(*this, a.lhs)) {
      for (const auto& v : applyAtomCaptureSide(*this, a.rhs)) {
        out.atoms.insert({u, v});
      }
    }
  }
  return out;
}

void Subst::composeWith(const Subst& other) {
  for (auto& [k, v] : exprs) v = other.apply(v);
  for (auto& [k, v] : vars) v = other.apply(v);
  for (auto& [k, v] : ctxs) v = other.apply(v);
  for (auto& [k, v] : envs) v = other.apply(v);
  for (const auto& [k, v] : other.exprs) exprs.try_emplace(k, v);
  for (const auto& [k, v] : other.vars) vars.try_emplace(k, v);
  for (const auto& [k, v] : other.ctxs) ctxs.try_emplace(k, v);
  for (const auto& [k, v] : other.envs) envs.try_emplace(k, v);
}

// ---------------------------------------------------------------------------
// Holes.
// ---------------------------------------------------------------------------

ExprPtr plugHole(const ExprPtr& ctx, const ExprPtr& filling, int index) {
  if (auto* h = std::get_if<Hole>(&ctx->node)) {
    return h->index == index ? filling : ctx;
  }
  if (auto* c = std::get_if<CtxApp>(&ctx->node)) {
    ExprPtr body = plugHole(c->body, filling, index);
    if (body == c->body) return ctx;
    return std::make_shared<Expr>(Expr{CtxApp{c->name, c->cls, body}});
  }
  if (auto* l = std::get_if<Letrec>(&ctx->node)) {
    Env env = l->env;
    bool changed = false;
    for (auto& seg : env) {
      if (auto* b = std::get_if<Binding>(&seg)) {
        ExprPtr nb = plugHole(b->body, filling, index);
        if (nb != b->body) {
          b->body = nb;
          changed = true;
        }
      } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
        ExprPtr na = plugHole(ch->arg, filling, index);
        if (na != ch->arg) {
          ch->arg = na;
          changed = true;
        }
      }
    }
    ExprPtr body = plugHole(l->body, filling, index);
    if (!changed && body == l->body) return ctx;
    return mkLetrec(std::move(env), body);
  }
  if (auto* f = std::get_if<FunApp>(&ctx->node)) {
    std::vector<Arg> args = f->args;
    bool changed = false;
    for (auto& a : args) {
      if (auto* e = std::get_if<ExprPtr>(&a)) {
        ExprPtr ne = plugHole(*e, filling, index);
        if (ne != *e) {
          a = Arg{ne};
          changed = true;
        }
      } else if (auto* b = std::get_if<Binder>(&a)) {
        ExprPtr nb = plugHole(b->body, filling, index);
        if (nb != b->body) {
          a = Arg{Binder{b->binders, nb}};
          changed = true;
        }
      }
    }
    if (!changed) return ctx;
    return mkFun(f->sym, std::move(args));
  }
  return ctx;
}

int countHoles(const ExprPtr& e) {
  if (std::holds_alternative<Hole>(e->node)) return 1;
  if (auto* c = std::get_if<CtxApp>(&e->node)) return countHoles(c->body);
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    int n = countHoles(l->body);
    for (const auto& seg : l->env) {
      if (auto* b = std::get_if<Binding>(&seg)) n += countHoles(b->body);
      if (auto* ch = std::get_if<ChainSeg>(&seg)) n += countHoles(ch->arg);
    }
    return n;
  }
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    int n = 0;
    for (const auto& a : f->args) {
      if (auto* x = std::get_if<ExprPtr>(&a)) n += countHoles(*x);
      if (auto* b = std::get_if<Binder>(&a)) n += countHoles(b->body);
    }
    return n;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Variable sets.
// ---------------------------------------------------------------------------

namespace {

void visitVars(const ExprPtr& e, std::set<std::string> scope, VarSets& out);

void visitVarOcc(const Var& v, const std::set<std::string>& scope, VarSets& out) {
  if (v.isMeta()) {
    out.metas.insert(atomOfName(v.name));
  } else if (!scope.count(v.name)) {
    out.free.insert(v.name);
  } else {
    out.bound.insert(v.name);
  }
}

void visitEnvVars(const Env& env, std::set<std::string> scope, VarSets& out,
                  const ExprPtr& body) {
  // Recursive scope: all binders visible in every binding body and the body.
  std::vector<Var> binders;
  for (const auto& seg : env) {
    if (auto* b = std::get_if<Binding>(&seg)) binders.push_back(b->var);
    if (auto* ch = std::get_if<ChainSeg>(&seg)) binders.push_back(ch->var);
  }
  for (const auto& v : binders) {
    if (v.isMeta()) {
      out.metas.insert(atomOfName(v.name));
    } else {
      scope.insert(v.name);
      out.bound.insert(v.name);
      out.letBound.insert(v.name);
    }
  }
  for (const auto& seg : env) {
    if (auto* ev = std::get_if<EnvVar>(&seg)) {
      out.metas.insert({Atom::MetaEnvE, ev->name});
    } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
      out.metas.insert({Atom::MetaChain, ch->name});
      visitVars(ch->arg, scope, out);
    } else {
      visitVars(std::get<Binding>(seg).body, scope, out);
    }
  }
  if (body) visitVars(body, scope, out);
}

void visitVars(const ExprPtr& e, std::set<std::string> scope, VarSets& out) {
  if (auto* s = std::get_if<SVar>(&e->node)) {
    out.metas.insert({Atom::MetaExprS, s->name});
    return;
  }
  if (auto* c = std::get_if<CtxApp>(&e->node)) {
    out.metas.insert({Atom::MetaCtxD, c->name});
    visitVars(c->body, scope, out);
    return;
  }
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    visitEnvVars(l->env, std::move(scope), out, l->body);
    return;
  }
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    for (const auto& a : f->args) {
      if (auto* v = std::get_if<Var>(&a)) {
        visitVarOcc(*v, scope, out);
      } else if (auto* x = std::get_if<ExprPtr>(&a)) {
        visitVars(*x, scope, out);
      } else {
        const auto& b = std::get<Binder>(a);
        std::set<std::string> inner = scope;
        for (const auto& v : b.binders) {
          if (v.isMeta()) {
            out.metas.insert(atomOfName(v.name));
          } else {
            inner.insert(v.name);
            out.bound.insert(v.name);
          }
        }
        visitVars(b.body, inner, out);
      }
    }
    return;
  }
  // Hole: nothing.
}

}  // namespace

VarSets variableSets(const ExprPtr& e) {
  VarSets out;
  visitVars(e, {}, out);
  out.all = out.free;
  out.all.insert(out.bound.begin(), out.bound.end());
  return out;
}

VarSets variableSets(const Env& env) {
  VarSets out;
  visitEnvVars(env, {}, out, nullptr);
  out.all = out.free;
  out.all.insert(out.bound.begin(), out.bound.end());
  return out;
}

bool isGround(const ExprPtr& e) { return variableSets(e).metas.empty(); }

std::set<std::string> metaVarNames(const ExprPtr& e) {
  std::set<std::string> out;
  for (const auto& a : variableSets(e).metas) out.insert(a.name);
  return out;
}

// ---------------------------------------------------------------------------
// LVC / DVC.
// ---------------------------------------------------------------------------

namespace {

bool lvcWalk(const ExprPtr& e) {
  if (auto* c = std::get_if<CtxApp>(&e->node)) return lvcWalk(c->body);
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    std::set<std::string> seen;
    for (const auto& seg : l->env) {
      const Var* v = nullptr;
      const ExprPtr* sub = nullptr;
      if (auto* b = std::get_if<Binding>(&seg)) {
        v = &b->var;
        sub = &b->body;
      } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
        v = &ch->var;
        sub = &ch->arg;
      }
      if (v && !v->isMeta() && !seen.insert(v->name).second) return false;
      if (sub && !lvcWalk(*sub)) return false;
    }
    return lvcWalk(l->body);
  }
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    for (const auto& a : f->args) {
      if (auto* x = std::get_if<ExprPtr>(&a)) {
        if (!lvcWalk(*x)) return false;
      } else if (auto* b = std::get_if<Binder>(&a)) {
        if (!lvcWalk(b->body)) return false;
      }
    }
  }
  return true;
}

void collectBinderOccs(const ExprPtr& e, std::vector<std::string>& out) {
  if (auto* c = std::get_if<CtxApp>(&e->node)) {
    collectBinderOccs(c->body, out);
  } else if (auto* l = std::get_if<Letrec>(&e->node)) {
    for (const auto& seg : l->env) {
      if (auto* b = std::get_if<Binding>(&seg)) {
        if (!b->var.isMeta()) out.push_back(b->var.name);
        collectBinderOccs(b->body, out);
      } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
        if (!ch->var.isMeta()) out.push_back(ch->var.name);
        collectBinderOccs(ch->arg, out);
      }
    }
    collectBinderOccs(l->body, out);
  } else if (auto* f = std::get_if<FunApp>(&e->node)) {
    for (const auto& a : f->args) {
      if (auto* x = std::get_if<ExprPtr>(&a)) {
        collectBinderOccs(*x, out);
      } else if (auto* b = std::get_if<Binder>(&a)) {
        for (const auto& v : b->binders) {
          if (!v.isMeta()) out.push_back(v.name);
        }
        collectBinderOccs(b->body, out);
      }
    }
  }
}

}  // namespace

bool checkLvc(const ExprPtr& e) { return lvcWalk(e); }

bool checkDvc(const ExprPtr& e) {
  std::vector<std::string> binders;
  collectBinderOccs(e, binders);
  std::set<std::string> uniq(binders.begin(), binders.end());
  if (uniq.size() != binders.size()) return false;
  VarSets vs = variableSets(e);
  for (const auto& x : vs.free) {
    if (uniq.count(x)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Captured variables.
// ---------------------------------------------------------------------------

namespace {

bool containsHole(const ExprPtr& e, int index) {
  if (auto* h = std::get_if<Hole>(&e->node)) return h->index == index;
  if (auto* c = std::get_if<CtxApp>(&e->node)) return containsHole(c->body, index);
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    if (containsHole(l->body, index)) return true;
    for (const auto& seg : l->env) {
      if (auto* b = std::get_if<Binding>(&seg)) {
        if (containsHole(b->body, index)) return true;
      } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
        if (containsHole(ch->arg, index)) return true;
      }
    }
    return false;
  }
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    for (const auto& a : f->args) {
      if (auto* x = std::get_if<ExprPtr>(&a)) {
        if (containsHole(*x, index)) return true;
      } else if (auto* b = std::get_if<Binder>(&a)) {
        if (containsHole(b->body, index)) return true;
      }
    }
  }
  return false;
}

bool cvWalk(const ExprPtr& e, int index, CapturedVars& out) {
  if (auto* h = std::get_if<Hole>(&e->node)) return h->index == index;
  if (auto* c = std::get_if<CtxApp>(&e->node)) {
    if (!containsHole(c->body, index)) return false;
    out.metas.insert({Atom::MetaCtxD, c->name});
    return cvWalk(c->body, index, out);
  }
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    if (!containsHole(e, index)) return false;
    // Recursive scope: all env binders capture, wherever the hole sits.
    for (const auto& seg : l->env) {
      if (auto* ev = std::get_if<EnvVar>(&seg)) {
        out.metas.insert({Atom::MetaEnvE, ev->name});
      } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
        out.metas.insert({Atom::MetaChain, ch->name});
        if (ch->var.isMeta()) {
          out.metas.insert(atomOfName(ch->var.name));
        } else {
          out.concrete.insert(ch->var.name);
        }
      } else {
        const auto& b = std::get<Binding>(seg);
        if (b.var.isMeta()) {
          out.metas.insert(atomOfName(b.var.name));
        } else {
          out.concrete.insert(b.var.name);
        }
      }
    }
    if (cvWalk(l->body, index, out)) return true;
    for (const auto& seg : l->env) {
      if (auto* b = std::get_if<Binding>(&seg)) {
        if (cvWalk(b->body, index, out)) return true;
      } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
        if (cvWalk(ch->arg, index, out)) return true;
      }
    }
    return false;
  }
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    for (const auto& a : f->args) {
      if (auto* x = std::get_if<ExprPtr>(&a)) {
        if (containsHole(*x, index)) return cvWalk(*x, index, out);
      } else if (auto* b = std::get_if<Binder>(&a)) {
        if (containsHole(b->body, index)) {
          for (const auto& v : b->binders) {
            if (v.isMeta()) {
              out.metas.insert(atomOfName(v.name));
            } else {
              out.concrete.insert(v.name);
            }
          }
          return cvWalk(b->body, index, out);
        }
      }
    }
  }
  return false;
}

}  // namespace

CapturedVars capturedVars(const ExprPtr& ctx, int index) {
  CapturedVars out;
  cvWalk(ctx, index, out);
  return out;
}

std::set<AtomicNcc> splitNcc(const ExprPtr& s, const ExprPtr& d) {
  std::set<Atom> us = varSideAtoms(s);
  std::set<Atom> vs = captureSideAtoms(d);
  std::set<AtomicNcc> out;
  for (const auto& u : us) {
    for (const auto& v : vs) out.insert({u, v});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alpha / let equivalence (ground).
// ---------------------------------------------------------------------------

namespace {

using NameMap = std::map<std::string, std::string>;

bool alphaEq(const ExprPtr& a, const ExprPtr& b, NameMap fwd, NameMap bwd);

bool alphaVarEq(const Var& va, const Var& vb, const NameMap& fwd, const NameMap& bwd) {
  if (va.isMeta() || vb.isMeta())
    throw std::invalid_argument("alphaLetEquiv on non-ground expression");
  auto it = fwd.find(va.name);
  if (it != fwd.end()) return it->second == vb.name;
  if (bwd.count(vb.name)) return false;
  return va.name == vb.name;
}

void bindPair(NameMap& fwd, NameMap& bwd, const std::string& x, const std::string& y) {
  fwd[x] = y;
  bwd[y] = x;
}

bool envPermEq(const std::vector<Binding>& ea, const std::vector<Binding>& eb,
               const ExprPtr& ba, const ExprPtr& bb, NameMap fwd, NameMap bwd,
               std::vector<int>& perm, std::vector<bool>& used, size_t i) {
  if (i == ea.size()) {
    NameMap f = fwd, w = bwd;
    for (size_t k = 0; k < ea.size(); ++k) {
      bindPair(f, w, ea[k].var.name, eb[perm[k]].var.name);
    }
    for (size_t k = 0; k < ea.size(); ++k) {
      if (!alphaEq(ea[k].body, eb[perm[k]].body, f, w)) return false;
    }
    return alphaEq(ba, bb, f, w);
  }
  for (size_t j = 0; j < eb.size(); ++j) {
    if (used[j]) continue;
    used[j] = true;
    perm[i] = static_cast<int>(j);
    if (envPermEq(ea, eb, ba, bb, fwd, bwd, perm, used, i + 1)) {
      used[j] = false;
      return true;
    }
    used[j] = false;
  }
  return false;
}

std::vector<Binding> plainBindings(const Env& env) {
  std::vector<Binding> out;
  for (const auto& seg : env) {
    if (auto* b = std::get_if<Binding>(&seg)) {
      out.push_back(*b);
    } else if (std::holds_alternative<ChainSeg>(seg)) {
      throw ChainUnsupported("alpha-equivalence with chain segments is not defined");
    } else {
      throw std::invalid_argument("alphaLetEquiv on non-ground environment");
    }
  }
  return out;
}

bool alphaEq(const ExprPtr& a, const ExprPtr& b, NameMap fwd, NameMap bwd) {
  if (a->node.index() != b->node.index()) return false;
  if (auto* fa = std::get_if<FunApp>(&a->node)) {
    const auto& fb = std::get<FunApp>(b->node);
    if (fa->sym != fb.sym || fa->args.size() != fb.args.size()) return false;
    for (size_t i = 0; i < fa->args.size(); ++i) {
      const Arg& aa = fa->args[i];
      const Arg& ab = fb.args[i];
      if (aa.index() != ab.index()) return false;
      if (auto* va = std::get_if<Var>(&aa)) {
        if (!alphaVarEq(*va, std::get<Var>(ab), fwd, bwd)) return false;
      } else if (auto* xa = std::get_if<ExprPtr>(&aa)) {
        if (!alphaEq(*xa, std::get<ExprPtr>(ab), fwd, bwd)) return false;
      } else {
        const auto& ba = std::get<Binder>(aa);
        const auto& bb = std::get<Binder>(ab);
        if (ba.binders.size() != bb.binders.size()) return false;
        NameMap f = fwd, w = bwd;
        for (size_t k = 0; k < ba.binders.size(); ++k) {
          if (ba.binders[k].isMeta() || bb.binders[k].isMeta())
            throw std::invalid_argument("alphaLetEquiv on non-ground expression");
          bindPair(f, w, ba.binders[k].name, bb.binders[k].name);
        }
        if (!alphaEq(ba.body, bb.body, f, w)) return false;
      }
    }
    return true;
  }
  if (auto* la = std::get_if<Letrec>(&a->node)) {
    const auto& lb = std::get<Letrec>(b->node);
    std::vector<Binding> ea = plainBindings(la->env);
    std::vector<Binding> eb = plainBindings(lb.env);
    if (ea.size() != eb.size()) return false;
    std::vector<int> perm(ea.size());
    std::vector<bool> used(eb.size(), false);
    return envPermEq(ea, eb, la->body, lb.body, fwd, bwd, perm, used, 0);
  }
  if (std::holds_alternative<Hole>(a->node)) {
    return std::get<Hole>(a->node).index == std::get<Hole>(b->node).index;
  }
  throw std::invalid_argument("alphaLetEquiv on non-ground expression");
}

}  // namespace

bool alphaLetEquiv(const ExprPtr& a, const ExprPtr& b) {
  return alphaEq(a, b, {}, {});
}

// ---------------------------------------------------------------------------
// Meta-level equality modulo ~let (optionally with a meta-variable bijection).
// ---------------------------------------------------------------------------

namespace {

struct Bij {
  std::map<std::string, std::string>* map = nullptr;  // null: names must match

  bool match(const std::string& a, const std::string& b) {
    if (!map) return a == b;
    auto it = map->find(a);
    if (it != map->end()) return it->second == b;
    for (const auto& [k, v] : *map) {
      if (v == b) return false;
    }
    if (kindOfName(a) != kindOfName(b)) return false;
    (*map)[a] = b;
    return true;
  }
};

bool modLetEq(const ExprPtr& a, const ExprPtr& b, Bij& bij);

bool modLetVarEq(const Var& a, const Var& b, Bij& bij) {
  if (a.isMeta() != b.isMeta()) return false;
  if (a.isMeta()) return bij.match(a.name, b.name);
  return a.name == b.name;
}

bool modLetSegEq(const EnvSeg& a, const EnvSeg& b, Bij& bij) {
  if (a.index() != b.index()) return false;
  if (auto* ea = std::get_if<EnvVar>(&a)) {
    return bij.match(ea->name, std::get<EnvVar>(b).name);
  }
  if (auto* ca = std::get_if<ChainSeg>(&a)) {
    const auto& cb = std::get<ChainSeg>(b);
    return ca->cls == cb.cls && bij.match(ca->name, cb.name) &&
           modLetVarEq(ca->var, cb.var, bij) && modLetEq(ca->arg, cb.arg, bij);
  }
  const auto& ba = std::get<Binding>(a);
  const auto& bb = std::get<Binding>(b);
  return modLetVarEq(ba.var, bb.var, bij) && modLetEq(ba.body, bb.body, bij);
}

bool modLetEnvEq(const Env& a, const Env& b, Bij& bij, size_t i,
                 std::vector<bool>& used) {
  if (i == a.size()) return true;
  for (size_t j = 0; j < b.size(); ++j) {
    if (used[j]) continue;
    // Bijection extensions made on a failing branch must not leak; copy.
    std::map<std::string, std::string> saved;
    if (bij.map) saved = *bij.map;
    used[j] = true;
    if (modLetSegEq(a[i], b[j], bij) && modLetEnvEq(a, b, bij, i + 1, used)) {
      used[j] = false;
      return true;
    }
    used[j] = false;
    if (bij.map) *bij.map = saved;
  }
  return false;
}

bool modLetEq(const ExprPtr& a, const ExprPtr& b, Bij& bij) {
  if (a->node.index() != b->node.index()) return false;
  if (auto* sa = std::get_if<SVar>(&a->node)) {
    return bij.match(sa->name, std::get<SVar>(b->node).name);
  }
  if (auto* ca = std::get_if<CtxApp>(&a->node)) {
    const auto& cb = std::get<CtxApp>(b->node);
    return ca->cls == cb.cls && bij.match(ca->name, cb.name) &&
           modLetEq(ca->body, cb.body, bij);
  }
  if (auto* la = std::get_if<Letrec>(&a->node)) {
    const auto& lb = std::get<Letrec>(b->node);
    if (la->env.size() != lb.env.size()) return false;
    std::vector<bool> used(lb.env.size(), false);
    return modLetEnvEq(la->env, lb.env, bij, 0, used) &&
           modLetEq(la->body, lb.body, bij);
  }
  if (auto* fa = std::get_if<FunApp>(&a->node)) {
    const auto& fb = std::get<FunApp>(b->node);
    if (fa->sym != fb.sym || fa->args.size() != fb.args.size()) return false;
    for (size_t i = 0; i < fa->args.size(); ++i) {
      const Arg& aa = fa->args[i];
      const Arg& ab = fb.args[i];
      if (aa.index() != ab.index()) return false;
      if (auto* va = std::get_if<Var>(&aa)) {
        if (!modLetVarEq(*va, std::get<Var>(ab), bij)) return false;
      } else if (auto* xa = std::get_if<ExprPtr>(&aa)) {
        if (!modLetEq(*xa, std::get<ExprPtr>(ab), bij)) return false;
      } else {
        const auto& ba = std::get<Binder>(aa);
        const auto& bb = std::get<Binder>(ab);
        if (ba.binders.size() != bb.binders.size()) return false;
        for (size_t k = 0; k < ba.binders.size(); ++k) {
          if (!modLetVarEq(ba.binders[k], bb.binders[k], bij)) return false;
        }
        if (!modLetEq(ba.body, bb.body, bij)) return false;
      }
    }
    return true;
  }
  return std::get<Hole>(a->node).index == std::get<Hole>(b->node).index;
}

}  // namespace

bool eqModLet(const ExprPtr& a, const ExprPtr& b) {
  Bij bij;
  return modLetEq(a, b, bij);
}

bool eqModLetBij(const ExprPtr& a, const ExprPtr& b,
                 std::map<std::string, std::string>& bijMap) {
  Bij bij{&bijMap};
  return modLetEq(a, b, bij);
}

// ---------------------------------------------------------------------------
// Rendering.
// ---------------------------------------------------------------------------

namespace {

void renderTo(const ExprPtr& e, std::ostringstream& os);

void renderAtomTo(const ExprPtr& e, std::ostringstream& os) {
  bool wrap = false;
  if (std::holds_alternative<Letrec>(e->node)) wrap = true;
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    if (f->sym == kLambdaSym) wrap = true;
  }
  if (wrap) os << '(';
  renderTo(e, os);
  if (wrap) os << ')';
}

void renderEnvTo(const Env& env, std::ostringstream& os) {
  if (env.empty()) {
    os << "{}";
    return;
  }
  bool first = true;
  for (const auto& seg : env) {
    if (!first) os << ";";
    first = false;
    if (auto* ev = std::get_if<EnvVar>(&seg)) {
      os << ev->name;
    } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
      os << ch->name << '^' << ch->cls << '[' << ch->var.name << ',';
      renderTo(ch->arg, os);
      os << ']';
    } else {
      const auto& b = std::get<Binding>(seg);
      os << b.var.name << '=';
      renderAtomTo(b.body, os);
    }
  }
}

void renderTo(const ExprPtr& e, std::ostringstream& os) {
  if (auto* s = std::get_if<SVar>(&e->node)) {
    os << s->name;
  } else if (auto* c = std::get_if<CtxApp>(&e->node)) {
    os << c->name << '[';
    renderTo(c->body, os);
    os << ']';
  } else if (auto* l = std::get_if<Letrec>(&e->node)) {
    os << "letrec ";
    renderEnvTo(l->env, os);
    os << " in ";
    renderTo(l->body, os);
  } else if (auto* f = std::get_if<FunApp>(&e->node)) {
    if (f->sym == kLambdaSym && f->args.size() == 1 &&
        std::holds_alternative<Binder>(f->args[0])) {
      const auto& b = std::get<Binder>(f->args[0]);
      os << '\\';
      for (const auto& v : b.binders) os << v.name << '.';
      renderAtomTo(b.body, os);
      return;
    }
    if (f->args.empty()) {
      os << f->sym;
      return;
    }
    os << '(' << f->sym;
    for (const auto& a : f->args) {
      os << ' ';
      if (auto* v = std::get_if<Var>(&a)) {
        os << v->name;
      } else if (auto* x = std::get_if<ExprPtr>(&a)) {
        renderAtomTo(*x, os);
      } else {
        const auto& b = std::get<Binder>(a);
        for (const auto& v : b.binders) os << v.name << '.';
        renderAtomTo(b.body, os);
      }
    }
    os << ')';
  } else {
    const auto& h = std::get<Hole>(e->node);
    if (h.index == 0) {
      os << "[.]";
    } else {
      os << "[." << h.index << ']';
    }
  }
}

}  // namespace

std::string render(const ExprPtr& e) {
  std::ostringstream os;
  renderTo(e, os);
  return os.str();
}

std::string render(const Env& env) {
  std::ostringstream os;
  renderEnvTo(env, os);
  return os.str();
}

std::string render(const ConstraintTuple& d) {
  std::ostringstream os;
  bool first = true;
  auto sep = [&] {
    if (!first) os << ", ";
    first = false;
  };
  for (const auto& g : d.neCtx) {
    sep();
    for (size_t i = 0; i < g.size(); ++i) os << (i ? "|" : "") << g[i];
    os << " /= [.]";
  }
  for (const auto& g : d.neEnv) {
    sep();
    for (size_t i = 0; i < g.size(); ++i) os << (i ? "|" : "") << g[i];
    os << " /= {}";
  }
  for (const auto& [s, ctx] : d.nccs) {
    sep();
    os << '(' << render(s) << ", " << render(ctx) << ')';
  }
  for (const auto& a : d.atoms) {
    sep();
    os << "ncc(" << a.lhs.name << ", " << a.rhs.name << ')';
  }
  for (const auto& f : d.freshVars) {
    sep();
    os << "fresh " << f;
  }
  return os.str();
}

int exprSize(const ExprPtr& e) {
  if (std::holds_alternative<SVar>(e->node)) return 1;
  if (auto* c = std::get_if<CtxApp>(&e->node)) return 1 + exprSize(c->body);
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    int n = 1 + exprSize(l->body);
    for (const auto& seg : l->env) {
      if (auto* b = std::get_if<Binding>(&seg)) {
        n += 1 + exprSize(b->body);
      } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
        n += 1 + exprSize(ch->arg);
      } else {
        n += 1;
      }
    }
    return n;
  }
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    int n = 1;
    for (const auto& a : f->args) {
      if (auto* x = std::get_if<ExprPtr>(&a)) {
        n += exprSize(*x);
      } else if (auto* b = std::get_if<Binder>(&a)) {
        n += exprSize(b->body);
      }
    }
    return n;
  }
  return 0;  // Hole
}

}  // namespace lrsx
