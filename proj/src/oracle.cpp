#include "lrsx/oracle.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace lrsx {

namespace {

// ---------------------------------------------------------------------------
// Alpha-invariant bucketing and alpha-deduplication.
// ---------------------------------------------------------------------------

// Lossy but alpha- and letrec-permutation-invariant key: binder names and
// bound occurrences collapse to '?', environment segments are sorted.
void alphaKeyRec(const ExprPtr& e, std::vector<std::string>& scope,
                 std::string& out) {
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    out += f->sym;
    out += '(';
    for (const Arg& a : f->args) {
      if (auto* v = std::get_if<Var>(&a)) {
        bool bound = std::find(scope.begin(), scope.end(), v->name) !=
                     scope.end();
        out += bound ? "?" : v->name;
      } else if (auto* x = std::get_if<ExprPtr>(&a)) {
        alphaKeyRec(*x, scope, out);
      } else {
        const Binder& b = std::get<Binder>(a);
        out += "\\?.";
        size_t mark = scope.size();
        for (const Var& v : b.binders) scope.push_back(v.name);
        alphaKeyRec(b.body, scope, out);
        scope.resize(mark);
      }
      out += ',';
    }
    out += ')';
    return;
  }
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    size_t mark = scope.size();
    for (const EnvSeg& seg : l->env)
      if (auto* b = std::get_if<Binding>(&seg)) scope.push_back(b->var.name);
    std::vector<std::string> segs;
    for (const EnvSeg& seg : l->env) {
      if (auto* b = std::get_if<Binding>(&seg)) {
        std::string s = "?=";
        alphaKeyRec(b->body, scope, s);
        segs.push_back(std::move(s));
      } else {
        segs.push_back("<seg>");
      }
    }
    std::sort(segs.begin(), segs.end());
    out += "letrec{";
    for (const std::string& s : segs) {
      out += s;
      out += ';';
    }
    out += "}in ";
    alphaKeyRec(l->body, scope, out);
    scope.resize(mark);
    return;
  }
  out += render(e);  // SVar / CtxApp / Hole: not ground, render verbatim
}

std::string alphaKey(const ExprPtr& e) {
  std::vector<std::string> scope;
  std::string out;
  alphaKeyRec(e, scope, out);
  return out;
}

// Keeps the first representative of every alpha-class.
struct AlphaSet {
  std::map<std::string, std::vector<ExprPtr>> buckets;
  bool insert(const ExprPtr& e) {
    auto& b = buckets[alphaKey(e)];
    for (const ExprPtr& o : b)
      if (alphaLetEquiv(o, e)) return false;
    b.push_back(e);
    return true;
  }
};

// ---------------------------------------------------------------------------
// Renaming to the distinct variable convention.
// ---------------------------------------------------------------------------

ExprPtr renameScoped(const ExprPtr& e,
                     std::map<std::string, std::string>& scope,
                     std::set<std::string>& used, int& next);

Var renameOcc(const Var& v, const std::map<std::string, std::string>& scope) {
  auto it = scope.find(v.name);
  return it == scope.end() ? v : Var{it->second};
}

std::string freshName(std::set<std::string>& used, int& next) {
  std::string n;
  do {
    n = "d" + std::to_string(++next);
  } while (!used.insert(n).second);
  return n;
}

ExprPtr renameScoped(const ExprPtr& e,
                     std::map<std::string, std::string>& scope,
                     std::set<std::string>& used, int& next) {
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    std::vector<Arg> args;
    for (const Arg& a : f->args) {
      if (auto* v = std::get_if<Var>(&a)) {
        args.push_back(renameOcc(*v, scope));
      } else if (auto* x = std::get_if<ExprPtr>(&a)) {
        args.push_back(renameScoped(*x, scope, used, next));
      } else {
        const Binder& b = std::get<Binder>(a);
        Binder nb;
        std::map<std::string, std::string> inner = scope;
        for (const Var& v : b.binders) {
          std::string fresh = freshName(used, next);
          inner[v.name] = fresh;
          nb.binders.push_back(Var{fresh});
        }
        nb.body = renameScoped(b.body, inner, used, next);
        args.push_back(std::move(nb));
      }
    }
    return mkFun(f->sym, std::move(args));
  }
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    std::map<std::string, std::string> inner = scope;
    for (const EnvSeg& seg : l->env)
      if (auto* b = std::get_if<Binding>(&seg))
        inner[b->var.name] = freshName(used, next);
    Env env;
    for (const EnvSeg& seg : l->env) {
      if (auto* b = std::get_if<Binding>(&seg)) {
        env.push_back(Binding{Var{inner.at(b->var.name)},
                              renameScoped(b->body, inner, used, next)});
      } else {
        throw ChainUnsupported("ground environment with a meta segment");
      }
    }
    return mkLetrec(std::move(env), renameScoped(l->body, inner, used, next));
  }
  return e;
}

ExprPtr dvcAdjust(const ExprPtr& e) {
  if (checkDvc(e)) return e;
  VarSets vs = variableSets(e);
  std::set<std::string> used = vs.all;
  std::map<std::string, std::string> scope;
  int next = 0;
  return renameScoped(e, scope, used, next);
}

// ---------------------------------------------------------------------------
// Ground matching against rule and answer patterns. Independent of the
// meta-solver: context meta-variables are instantiated by enumerating the
// decompositions licensed by the class grammars.
// ---------------------------------------------------------------------------

bool isHoleExpr(const ExprPtr& e) {
  return std::holds_alternative<Hole>(e->node);
}

bool envEqModLet(const Env& a, const Env& b);

bool bindingEq(const EnvSeg& a, const EnvSeg& b) {
  auto* x = std::get_if<Binding>(&a);
  auto* y = std::get_if<Binding>(&b);
  return x && y && x->var == y->var && eqModLet(x->body, y->body);
}

bool envEqModLet(const Env& a, const Env& b) {
  if (a.size() != b.size()) return false;
  std::vector<bool> taken(b.size(), false);
  for (const EnvSeg& sa : a) {
    bool found = false;
    for (size_t j = 0; j < b.size() && !found; ++j)
      if (!taken[j] && bindingEq(sa, b[j])) {
        taken[j] = true;
        found = true;
      }
    if (!found) return false;
  }
  return true;
}

struct Decomp {
  ExprPtr ctx;    // ground context with one hole
  ExprPtr inner;  // e == ctx[inner]
};

class GroundMatcher {
 public:
  explicit GroundMatcher(const CalculusDescription& calc) : calc_(calc) {}

  std::vector<Subst> match(const ExprPtr& pat, const ExprPtr& g,
                           const ConstraintTuple& delta) {
    std::vector<Subst> out;
    for (Subst& rho : matchE(pat, g, Subst{}))
      if (holdsDelta(delta, rho)) out.push_back(std::move(rho));
    return out;
  }

  std::vector<Decomp> decompose(const std::string& cls, const ExprPtr& e) {
    std::vector<Decomp> out;
    const ContextClassDef* def = calc_.classOf(cls);
    if (!def) return out;
    for (const CtxProduction& p : def->productions)
      decomposeShape(p.shape, p.guard, e, out);
    return out;
  }

 private:
  const CalculusDescription& calc_;

  // ---- expression matching ----

  std::vector<Subst> matchE(const ExprPtr& pat, const ExprPtr& g, Subst rho) {
    if (auto* s = std::get_if<SVar>(&pat->node)) {
      auto it = rho.exprs.find(s->name);
      if (it != rho.exprs.end())
        return eqModLet(it->second, g) ? std::vector<Subst>{rho}
                                       : std::vector<Subst>{};
      rho.exprs[s->name] = g;
      return {rho};
    }
    if (auto* c = std::get_if<CtxApp>(&pat->node)) {
      std::vector<Subst> out;
      for (const Decomp& d : decompose(c->cls, g)) {
        Subst r2 = rho;
        auto it = r2.ctxs.find(c->name);
        if (it != r2.ctxs.end()) {
          if (!eqModLet(it->second, d.ctx)) continue;
        } else {
          r2.ctxs[c->name] = d.ctx;
        }
        for (Subst& r3 : matchE(c->body, d.inner, std::move(r2)))
          out.push_back(std::move(r3));
      }
      return out;
    }
    if (auto* pl = std::get_if<Letrec>(&pat->node)) {
      auto* gl = std::get_if<Letrec>(&g->node);
      if (!gl) return {};
      std::vector<Subst> out;
      for (Subst& r2 : matchEnv(pl->env, gl->env, rho))
        for (Subst& r3 : matchE(pl->body, gl->body, std::move(r2)))
          out.push_back(std::move(r3));
      return out;
    }
    if (auto* pf = std::get_if<FunApp>(&pat->node)) {
      auto* gf = std::get_if<FunApp>(&g->node);
      if (!gf || pf->sym != gf->sym || pf->args.size() != gf->args.size())
        return {};
      std::vector<Subst> cur{std::move(rho)};
      for (size_t i = 0; i < pf->args.size() && !cur.empty(); ++i) {
        std::vector<Subst> next;
        for (Subst& r : cur)
          for (Subst& r2 : matchArg(pf->args[i], gf->args[i], std::move(r)))
            next.push_back(std::move(r2));
        cur = std::move(next);
      }
      return cur;
    }
    if (isHoleExpr(pat)) return isHoleExpr(g) ? std::vector<Subst>{rho}
                                              : std::vector<Subst>{};
    return {};
  }

  std::vector<Subst> matchVar(const Var& pat, const Var& g, Subst rho) {
    if (!pat.isMeta())
      return pat == g ? std::vector<Subst>{rho} : std::vector<Subst>{};
    auto it = rho.vars.find(pat.name);
    if (it != rho.vars.end())
      return it->second == g ? std::vector<Subst>{rho} : std::vector<Subst>{};
    rho.vars[pat.name] = g;
    return {rho};
  }

  std::vector<Subst> matchArg(const Arg& pat, const Arg& g, Subst rho) {
    if (auto* pv = std::get_if<Var>(&pat)) {
      auto* gv = std::get_if<Var>(&g);
      if (!gv) return {};
      return matchVar(*pv, *gv, std::move(rho));
    }
    if (auto* px = std::get_if<ExprPtr>(&pat)) {
      auto* gx = std::get_if<ExprPtr>(&g);
      if (!gx) return {};
      return matchE(*px, *gx, std::move(rho));
    }
    const Binder& pb = std::get<Binder>(pat);
    auto* gb = std::get_if<Binder>(&g);
    if (!gb || pb.binders.size() != gb->binders.size()) return {};
    std::vector<Subst> cur{std::move(rho)};
    for (size_t i = 0; i < pb.binders.size() && !cur.empty(); ++i) {
      std::vector<Subst> next;
      for (Subst& r : cur)
        for (Subst& r2 :
             matchVar(pb.binders[i], gb->binders[i], std::move(r)))
          next.push_back(std::move(r2));
      cur = std::move(next);
    }
    std::vector<Subst> out;
    for (Subst& r : cur)
      for (Subst& r2 : matchE(pb.body, gb->body, std::move(r)))
        out.push_back(std::move(r2));
    return out;
  }

  // ---- environment matching (multiset semantics) ----

  std::vector<Subst> matchEnv(const Env& pat, const Env& g, Subst rho) {
    std::vector<const Binding*> patBinds;
    std::vector<std::string> envVars;
    for (const EnvSeg& seg : pat) {
      if (auto* b = std::get_if<Binding>(&seg)) patBinds.push_back(b);
      else if (auto* ev = std::get_if<EnvVar>(&seg))
        envVars.push_back(ev->name);
      else
        throw ChainUnsupported("chain variable in a matched environment");
    }
    std::vector<const Binding*> gBinds;
    for (const EnvSeg& seg : g) {
      auto* b = std::get_if<Binding>(&seg);
      if (!b) throw ChainUnsupported("ground environment with meta segment");
      gBinds.push_back(b);
    }
    std::vector<Subst> out;
    std::vector<bool> taken(gBinds.size(), false);
    matchBindings(patBinds, 0, gBinds, taken, envVars, std::move(rho), out);
    return out;
  }

  void matchBindings(const std::vector<const Binding*>& pat, size_t i,
                     const std::vector<const Binding*>& g,
                     std::vector<bool>& taken,
                     const std::vector<std::string>& envVars, Subst rho,
                     std::vector<Subst>& out) {
    if (i == pat.size()) {
      std::vector<const Binding*> rest;
      for (size_t j = 0; j < g.size(); ++j)
        if (!taken[j]) rest.push_back(g[j]);
      distribute(rest, 0, envVars, std::vector<Env>(envVars.size()),
                 std::move(rho), out);
      return;
    }
    for (size_t j = 0; j < g.size(); ++j) {
      if (taken[j]) continue;
      for (Subst& r : matchVar(pat[i]->var, g[j]->var, rho)) {
        taken[j] = true;
        for (Subst& r2 : matchE(pat[i]->body, g[j]->body, std::move(r))) {
          matchBindings(pat, i + 1, g, taken, envVars, std::move(r2), out);
        }
        taken[j] = false;
      }
    }
  }

  void distribute(const std::vector<const Binding*>& rest, size_t i,
                  const std::vector<std::string>& envVars,
                  std::vector<Env> parts, Subst rho,
                  std::vector<Subst>& out) {
    if (envVars.empty()) {
      if (rest.empty()) out.push_back(std::move(rho));
      return;
    }
    if (i == rest.size()) {
      Subst r = std::move(rho);
      for (size_t k = 0; k < envVars.size(); ++k) {
        auto it = r.envs.find(envVars[k]);
        if (it != r.envs.end()) {
          if (!envEqModLet(it->second, parts[k])) return;
        } else {
          r.envs[envVars[k]] = parts[k];
        }
      }
      out.push_back(std::move(r));
      return;
    }
    for (size_t k = 0; k < envVars.size(); ++k) {
      parts[k].push_back(*rest[i]);
      distribute(rest, i + 1, envVars, parts, rho, out);
      parts[k].pop_back();
    }
  }

  // ---- context decomposition along the class grammars ----

  void decomposeShape(const ExprPtr& shape, const ConstraintTuple& guard,
                      const ExprPtr& e, std::vector<Decomp>& out) {
    if (isHoleExpr(shape)) {
      if (guardOk(guard, Subst{})) out.push_back({mkHole(), e});
      return;
    }
    if (auto* c = std::get_if<CtxApp>(&shape->node)) {
      // Bare sub-class occurrence as the whole production.
      if (!isHoleExpr(c->body))
        throw std::runtime_error("unsupported grammar production shape");
      for (Decomp& d : decompose(c->cls, e))
        if (guardOk(guard, Subst{})) out.push_back(std::move(d));
      return;
    }
    if (auto* sf = std::get_if<FunApp>(&shape->node)) {
      auto* gf = std::get_if<FunApp>(&e->node);
      if (!gf || sf->sym != gf->sym || sf->args.size() != gf->args.size())
        return;
      int ctxArg = contextArgIndex(sf->args);
      if (ctxArg < 0)
        throw std::runtime_error("grammar production without a hole: " +
                                 render(shape));
      // Match the sibling arguments, then recurse into the context one.
      std::vector<Subst> rhos{Subst{}};
      for (size_t i = 0; i < sf->args.size() && !rhos.empty(); ++i) {
        if (static_cast<int>(i) == ctxArg) continue;
        std::vector<Subst> next;
        for (Subst& r : rhos)
          for (Subst& r2 : matchArg(sf->args[i], gf->args[i], std::move(r)))
            next.push_back(std::move(r2));
        rhos = std::move(next);
      }
      const ExprPtr& sub = std::get<ExprPtr>(gf->args[ctxArg]);
      for (const Subst& rho : rhos) {
        if (!guardOk(guard, rho)) continue;
        for (const Decomp& d : innerDecomps(
                 std::get<ExprPtr>(sf->args[ctxArg]), sub)) {
          std::vector<Arg> args = gf->args;
          args[ctxArg] = d.ctx;
          out.push_back({mkFun(gf->sym, std::move(args)), d.inner});
        }
      }
      return;
    }
    if (auto* sl = std::get_if<Letrec>(&shape->node)) {
      auto* gl = std::get_if<Letrec>(&e->node);
      if (!gl) return;
      int ctxBind = contextBindingIndex(sl->env);
      if (ctxBind < 0) {
        for (const Subst& rho : matchEnvShape(sl->env, gl->env)) {
          if (!guardOk(guard, rho)) continue;
          for (const Decomp& d : innerDecomps(sl->body, gl->body))
            out.push_back({mkLetrec(gl->env, d.ctx), d.inner});
        }
        return;
      }
      // The hole sits inside one binding body; try every ground binding.
      const Binding& sb = std::get<Binding>(sl->env[ctxBind]);
      Env restPat = sl->env;
      restPat.erase(restPat.begin() + ctxBind);
      for (size_t j = 0; j < gl->env.size(); ++j) {
        const Binding* gb = std::get_if<Binding>(&gl->env[j]);
        if (!gb) continue;
        Env restG = gl->env;
        restG.erase(restG.begin() + j);
        for (Subst& r0 : matchVar(sb.var, gb->var, Subst{}))
          for (Subst& r1 : matchEnv(restPat, restG, std::move(r0)))
            for (const Subst& rho : matchE(sl->body, gl->body, std::move(r1))) {
              if (!guardOk(guard, rho)) continue;
              for (const Decomp& d : innerDecomps(sb.body, gb->body)) {
                Env env = gl->env;
                std::get<Binding>(env[j]).body = d.ctx;
                out.push_back({mkLetrec(std::move(env), gl->body), d.inner});
              }
            }
      }
      return;
    }
  }

  static int contextBindingIndex(const Env& env) {
    for (size_t i = 0; i < env.size(); ++i) {
      auto* b = std::get_if<Binding>(&env[i]);
      if (!b) continue;
      if (isHoleExpr(b->body)) return static_cast<int>(i);
      if (auto* c = std::get_if<CtxApp>(&b->body->node))
        if (isHoleExpr(c->body)) return static_cast<int>(i);
    }
    return -1;
  }

  std::vector<Subst> matchEnvShape(const Env& pat, const Env& g) {
    return matchEnv(pat, g, Subst{});
  }

  // The hole position of a production is either the bare hole or a sub-class
  // occurrence, directly below the production's root.
  std::vector<Decomp> innerDecomps(const ExprPtr& shapeSub,
                                   const ExprPtr& groundSub) {
    if (isHoleExpr(shapeSub)) return {{mkHole(), groundSub}};
    if (auto* c = std::get_if<CtxApp>(&shapeSub->node)) {
      if (!isHoleExpr(c->body))
        throw std::runtime_error("unsupported grammar production shape");
      return decompose(c->cls, groundSub);
    }
    throw std::runtime_error("unsupported grammar production shape");
  }

  static int contextArgIndex(const std::vector<Arg>& args) {
    for (size_t i = 0; i < args.size(); ++i) {
      auto* x = std::get_if<ExprPtr>(&args[i]);
      if (!x) continue;
      if (isHoleExpr(*x)) return static_cast<int>(i);
      if (auto* c = std::get_if<CtxApp>(&(*x)->node))
        if (isHoleExpr(c->body)) return static_cast<int>(i);
    }
    return -1;
  }

  // ---- concrete constraint checks ----

  bool guardOk(const ConstraintTuple& d, const Subst& rho) {
    return holdsDelta(d, rho);
  }

  bool holdsDelta(const ConstraintTuple& d, const Subst& rho) {
    for (const auto& group : d.neCtx) {
      bool ok = false;
      for (const std::string& n : group) {
        auto it = rho.ctxs.find(n);
        if (it != rho.ctxs.end() && !isHoleExpr(it->second)) ok = true;
      }
      if (!ok) return false;
    }
    for (const auto& group : d.neEnv) {
      bool ok = false;
      for (const std::string& n : group) {
        auto it = rho.envs.find(n);
        if (it != rho.envs.end() && !it->second.empty()) ok = true;
      }
      if (!ok) return false;
    }
    for (const auto& [s, ctx] : d.nccs) {
      ExprPtr sInst = rho.apply(s);
      ExprPtr dInst = rho.apply(ctx);
      std::set<std::string> captured = capturedVars(dInst).concrete;
      VarSets vs = variableSets(sInst);
      for (const std::string& v : vs.all)
        if (captured.count(v)) return false;
    }
    for (const std::string& x : d.freshVars) {
      auto it = rho.vars.find(x);
      if (it == rho.vars.end()) continue;
      const std::string& v = it->second.name;
      for (const auto& [n, img] : rho.exprs)
        if (variableSets(img).all.count(v)) return false;
      for (const auto& [n, img] : rho.ctxs)
        if (variableSets(img).all.count(v)) return false;
      for (const auto& [n, img] : rho.envs)
        if (variableSets(img).all.count(v)) return false;
    }
    return true;
  }
};

// ---------------------------------------------------------------------------
// Label collapsing (diagram vocabulary).
// ---------------------------------------------------------------------------

std::string collapsedLabel(const CalculusDescription& calc, const Rule& r) {
  std::string u = calc.unionNameOf(r.name);
  return r.kind == RuleKind::SR ? "SR," + u : u;
}

std::string collapsedSrName(const CalculusDescription& calc,
                            const std::string& ruleName) {
  return "SR," + calc.unionNameOf(ruleName);
}

bool usesLetrecSyntax(const CalculusDescription& calc) {
  std::function<bool(const ExprPtr&)> scan = [&](const ExprPtr& e) -> bool {
    if (std::holds_alternative<Letrec>(e->node)) return true;
    if (auto* c = std::get_if<CtxApp>(&e->node)) return scan(c->body);
    if (auto* f = std::get_if<FunApp>(&e->node)) {
      for (const Arg& a : f->args) {
        if (auto* x = std::get_if<ExprPtr>(&a)) {
          if (scan(*x)) return true;
        } else if (auto* b = std::get_if<Binder>(&a)) {
          if (scan(b->body)) return true;
        }
      }
    }
    return false;
  };
  for (const auto& [name, def] : calc.classes)
    for (const auto& p : def.productions)
      if (scan(p.shape)) return true;
  for (const Rule& r : calc.srRules)
    if (scan(r.lhs) || scan(r.rhs)) return true;
  for (const Rule& r : calc.transformations)
    if (scan(r.lhs) || scan(r.rhs)) return true;
  for (const Answer& a : calc.answers)
    if (scan(a.expr)) return true;
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Enumeration.
// ---------------------------------------------------------------------------

namespace {

struct Enumerator {
  const CalculusDescription& calc;
  bool letrec;
  std::vector<std::pair<std::string, SynType>> syms;

  explicit Enumerator(const CalculusDescription& c)
      : calc(c), letrec(usesLetrecSyntax(c)) {
    // Built-ins are always declared; enumerate only over the symbols the
    // calculus actually mentions so its ground universe stays exact.
    std::set<std::string> used;
    std::function<void(const ExprPtr&)> scan = [&](const ExprPtr& e) {
      if (auto* c2 = std::get_if<CtxApp>(&e->node)) return scan(c2->body);
      if (auto* l = std::get_if<Letrec>(&e->node)) {
        for (const EnvSeg& seg : l->env)
          if (auto* b = std::get_if<Binding>(&seg)) scan(b->body);
        return scan(l->body);
      }
      if (auto* f = std::get_if<FunApp>(&e->node)) {
        used.insert(f->sym);
        for (const Arg& a : f->args) {
          if (auto* x = std::get_if<ExprPtr>(&a)) scan(*x);
          else if (auto* b = std::get_if<Binder>(&a)) scan(b->body);
        }
      }
    };
    for (const Rule& r : c.srRules) {
      scan(r.lhs);
      scan(r.rhs);
    }
    for (const Rule& r : c.transformations) {
      scan(r.lhs);
      scan(r.rhs);
    }
    for (const Answer& a : c.answers) scan(a.expr);
    for (const auto& [name, def] : c.classes)
      for (const auto& p : def.productions) scan(p.shape);
    // Variable uses are intrinsic to binding syntax even when the calculus
    // omits the lookup rules that would mention them.
    if (letrec) used.insert(kVarSym);
    for (const auto& [name, type] : c.symbols)
      if (used.count(name)) syms.emplace_back(name, type);
  }

  static std::string boundName(size_t depth) {
    return "v" + std::to_string(depth + 1);
  }
  static std::string freeName(int i) { return "x" + std::to_string(i + 1); }

  using Out = std::vector<std::pair<ExprPtr, int>>;  // (expr, freeUsed after)

  // All expressions of size exactly n; free variables are introduced in
  // first-use order so alpha-symmetric copies never arise.
  Out gen(int n, std::vector<std::string>& scope, int freeUsed) {
    Out out;
    if (n < 1) return out;
    for (const auto& [sym, type] : syms) {
      genSym(sym, type, n, scope, freeUsed, out);
    }
    if (letrec && n >= 3) genLetrec(n, scope, freeUsed, out);
    return out;
  }

  void genSym(const std::string& sym, const SynType& type, int n,
              std::vector<std::string>& scope, int freeUsed, Out& out) {
    // Cost: 1 for the node plus the sizes of expression/binder arguments.
    struct Partial {
      std::vector<Arg> args;
      int freeUsed;
    };
    std::vector<std::pair<Partial, int>> fronts{{{{}, freeUsed}, n - 1}};
    for (const ArgKind& k : type.args) {
      std::vector<std::pair<Partial, int>> next;
      for (auto& [p, rem] : fronts) {
        if (k.isVariable) {
          for (const std::string& v : varChoices(scope, p.freeUsed)) {
            Partial p2 = p;
            p2.args.push_back(Var{v});
            if (!inScope(v, scope) && v == freeName(p.freeUsed))
              ++p2.freeUsed;
            next.emplace_back(std::move(p2), rem);
          }
        } else if (k.binders > 0) {
          size_t mark = scope.size();
          std::vector<Var> bs;
          for (int i = 0; i < k.binders; ++i) {
            bs.push_back(Var{boundName(scope.size())});
            scope.push_back(bs.back().name);
          }
          for (int m = 1; m <= rem; ++m)
            for (auto& [body, fu] : gen(m, scope, p.freeUsed)) {
              Partial p2 = p;
              p2.args.push_back(Binder{bs, body});
              p2.freeUsed = fu;
              next.emplace_back(std::move(p2), rem - m);
            }
          scope.resize(mark);
        } else {
          for (int m = 1; m <= rem; ++m)
            for (auto& [sub, fu] : gen(m, scope, p.freeUsed)) {
              Partial p2 = p;
              p2.args.push_back(sub);
              p2.freeUsed = fu;
              next.emplace_back(std::move(p2), rem - m);
            }
        }
      }
      fronts = std::move(next);
    }
    for (auto& [p, rem] : fronts)
      if (rem == 0)
        out.emplace_back(mkFun(sym, std::move(p.args)), p.freeUsed);
  }

  void genLetrec(int n, std::vector<std::string>& scope, int freeUsed,
                 Out& out) {
    // Cost 1 + sum over bindings (1 + |body|) + |in-body|.
    int maxBinds = (n - 2) / 2;
    for (int m = 1; m <= maxBinds; ++m) {
      size_t mark = scope.size();
      std::vector<Var> binders;
      for (int i = 0; i < m; ++i) {
        binders.push_back(Var{boundName(scope.size())});
        scope.push_back(binders.back().name);
      }
      int rem = n - 1 - m;  // to split among m binding bodies and the body
      struct Partial {
        Env env;
        int freeUsed;
      };
      std::vector<std::pair<Partial, int>> fronts{{{{}, freeUsed}, rem}};
      for (int i = 0; i < m; ++i) {
        std::vector<std::pair<Partial, int>> next;
        for (auto& [p, r] : fronts)
          for (int sz = 1; sz <= r - (m - i - 1) - 1; ++sz)
            for (auto& [body, fu] : gen(sz, scope, p.freeUsed)) {
              Partial p2 = p;
              p2.env.push_back(Binding{binders[i], body});
              p2.freeUsed = fu;
              next.emplace_back(std::move(p2), r - sz);
            }
        fronts = std::move(next);
      }
      for (auto& [p, r] : fronts)
        for (auto& [body, fu] : gen(r, scope, p.freeUsed))
          out.emplace_back(mkLetrec(p.env, body), fu);
      scope.resize(mark);
    }
  }

  std::vector<std::string> varChoices(const std::vector<std::string>& scope,
                                      int freeUsed) {
    std::vector<std::string> out(scope.begin(), scope.end());
    for (int i = 0; i < freeUsed; ++i) out.push_back(freeName(i));
    out.push_back(freeName(freeUsed));
    return out;
  }

  static bool inScope(const std::string& v,
                      const std::vector<std::string>& scope) {
    return std::find(scope.begin(), scope.end(), v) != scope.end();
  }
};

}  // namespace

std::vector<ExprPtr> enumerateGround(const CalculusDescription& calc,
                                     int maxSize) {
  std::vector<ExprPtr> out;
  if (maxSize < 1) return out;
  Enumerator en(calc);
  AlphaSet seen;
  std::vector<std::string> scope;
  for (int n = 1; n <= maxSize; ++n)
    for (auto& [e, fu] : en.gen(n, scope, 0))
      if (seen.insert(e)) out.push_back(e);
  return out;
}

// ---------------------------------------------------------------------------
// Ground application, answers, convergence, determinism.
// ---------------------------------------------------------------------------

std::vector<GroundStep> groundApply(const CalculusDescription& calc,
                                    const Rule& rule, const ExprPtr& e) {
  std::vector<GroundStep> out;
  ExprPtr src = dvcAdjust(e);
  GroundMatcher m(calc);
  for (const Subst& rho : m.match(rule.lhs, src, rule.delta)) {
    ExprPtr target = rho.apply(rule.rhs);
    if (!metaVarNames(target).empty()) continue;  // underdetermined instance
    out.push_back({src, rule.label(), rule.name, rule.variant, target, rho});
  }
  return out;
}

bool isGroundAnswer(const CalculusDescription& calc, const ExprPtr& e) {
  GroundMatcher m(calc);
  for (const Answer& a : calc.answers)
    if (!m.match(a.expr, e, a.delta).empty()) return true;
  return false;
}

std::vector<GroundStep> srSuccessors(const CalculusDescription& calc,
                                     const ExprPtr& e) {
  std::vector<GroundStep> out;
  AlphaSet targets;
  for (const Rule& r : calc.srRules) {
    if (r.closure) continue;
    for (GroundStep& s : groundApply(calc, r, e))
      if (targets.insert(s.target)) out.push_back(std::move(s));
  }
  return out;
}

int defaultFuel(const ExprPtr& e) { return 4 * exprSize(e); }

ConvergenceResult converges(const CalculusDescription& calc, const ExprPtr& e,
                            int fuel) {
  struct Node {
    ExprPtr expr;
    std::vector<GroundStep> trail;
  };
  AlphaSet visited;
  visited.insert(e);
  std::vector<Node> front{{e, {}}};
  for (int d = 0; d <= fuel; ++d) {
    for (const Node& n : front)
      if (isGroundAnswer(calc, n.expr)) return {ConvergenceResult::Converges,
                                                n.trail};
    if (d == fuel) break;
    std::vector<Node> next;
    for (const Node& n : front)
      for (GroundStep& s : srSuccessors(calc, n.expr)) {
        if (!visited.insert(s.target)) continue;
        Node n2{s.target, n.trail};
        n2.trail.push_back(std::move(s));
        next.push_back(std::move(n2));
      }
    if (next.empty()) return {ConvergenceResult::Diverges, {}};
    front = std::move(next);
  }
  return {ConvergenceResult::FuelExhausted, {}};
}

DeterminismReport checkDeterminism(const CalculusDescription& calc,
                                   int maxSize) {
  DeterminismReport rep;
  for (const ExprPtr& e : enumerateGround(calc, maxSize)) {
    ++rep.expressions;
    std::vector<GroundStep> succ = srSuccessors(calc, e);
    if (succ.size() > 1) {
      std::string msg = render(e) + " ->";
      for (const GroundStep& s : succ)
        msg += " [" + s.label + "] " + render(s.target);
      rep.counterexamples.push_back(std::move(msg));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Concrete diagram application.
// ---------------------------------------------------------------------------

namespace {

struct CEdge {
  enum Kind { SRBack, SRFwd, T, Alpha } kind;
  GroundStep step;  // unused for Alpha
};

struct ConcretePath {
  std::vector<ExprPtr> nodes;  // left end .. right end
  std::vector<CEdge> edges;    // edges[i] between nodes[i] and nodes[i+1]
};

struct Candidate {
  ExprPtr node;
  std::vector<ExprPtr> nodes;
  std::vector<CEdge> edges;
};

std::vector<const Rule*> rulesForLabel(const CalculusDescription& calc,
                                       const std::string& label) {
  std::string want = label;
  bool closure = false;
  if (want.size() > 2 && want.compare(want.size() - 2, 2, ",+") == 0) {
    closure = true;
    want.resize(want.size() - 2);
  }
  std::vector<const Rule*> out;
  if (want.rfind("SR,", 0) == 0) {
    std::string u = want.substr(3);
    for (const Rule& r : calc.srRules)
      if (!r.closure && calc.unionNameOf(r.name) == u) out.push_back(&r);
  } else {
    for (const Rule& r : calc.transformations)
      if (calc.unionNameOf(r.name) == want) out.push_back(&r);
  }
  (void)closure;
  return out;
}

bool isClosureTok(const DiagToken& t) {
  return t.label.size() > 2 &&
         t.label.compare(t.label.size() - 2, 2, ",+") == 0;
}

// One application of the token's base label to every candidate, deduplicated
// on the resulting node up to alpha.
std::vector<Candidate> expandLayer(const CalculusDescription& calc,
                                   const std::vector<Candidate>& cands,
                                   const DiagToken& tok, bool towardLeft) {
  std::vector<Candidate> out;
  AlphaSet seen;
  for (const Candidate& cur : cands)
    for (const Rule* rule : rulesForLabel(calc, tok.label))
      for (GroundStep& s : groundApply(calc, *rule, cur.node)) {
        if (!seen.insert(s.target)) continue;
        Candidate c2 = cur;
        c2.node = s.target;
        CEdge::Kind k = rule->kind == RuleKind::SR
                            ? (towardLeft ? CEdge::SRBack : CEdge::SRFwd)
                            : CEdge::T;
        if (towardLeft) {
          // Traversing from the right end: the new node sits to the left of
          // the previous one.
          c2.nodes.insert(c2.nodes.begin(), s.target);
          c2.edges.insert(c2.edges.begin(), {k, std::move(s)});
        } else {
          c2.nodes.push_back(s.target);
          c2.edges.push_back({k, std::move(s)});
        }
        out.push_back(std::move(c2));
      }
  return out;
}

std::vector<Candidate> expandToken(const CalculusDescription& calc,
                                   std::vector<Candidate> cands,
                                   const DiagToken& tok, bool towardLeft,
                                   int fuel) {
  if (!isClosureTok(tok)) return expandLayer(calc, cands, tok, towardLeft);
  // Transitive closure: 1..fuel repetitions of the base step.
  std::vector<Candidate> all;
  AlphaSet seen;
  std::vector<Candidate> layer = std::move(cands);
  for (int r = 0; r < std::max(fuel, 1); ++r) {
    layer = expandLayer(calc, layer, tok, towardLeft);
    std::vector<Candidate> fresh;
    for (Candidate& c : layer)
      if (seen.insert(c.node)) {
        all.push_back(c);
        fresh.push_back(std::move(c));
      }
    layer = std::move(fresh);
    if (layer.empty()) break;
  }
  return all;
}

// Applies a diagram to a concrete overlap. For answer overlaps `left` is
// empty and the meet must be an answer.
//
// Forking reading: Fwd tokens extend from the left end, Bwd tokens from the
// right end, and the two chains must meet. Commuting reading: every step of
// the join runs toward the left end, so the whole path is replayed from the
// right end (the transformation source) and must land on the left end.
std::optional<ConcretePath> applyDiagramConcrete(
    const CalculusDescription& calc, const Diagram& d,
    const std::optional<ExprPtr>& left, const ExprPtr& right,
    const std::string& srLabel, const std::string& tUnion, int fuel,
    bool commuting = false) {
  if (d.tLabel != tUnion) return std::nullopt;
  bool answerOverlap = !left.has_value();
  if (answerOverlap) {
    if (d.src.kind != DiagToken::AnswerMark) return std::nullopt;
  } else {
    if (d.src.kind != DiagToken::Bwd || d.src.label != srLabel)
      return std::nullopt;
  }
  // Shape: forward tokens, optionally one answer mark, then backward tokens.
  size_t split = 0;
  while (split < d.join.size() && d.join[split].kind == DiagToken::Fwd)
    ++split;
  bool answerAtMeet = false;
  size_t suffixStart = split;
  if (split < d.join.size() && d.join[split].kind == DiagToken::AnswerMark) {
    answerAtMeet = true;
    suffixStart = split + 1;
  }
  for (size_t i = suffixStart; i < d.join.size(); ++i) {
    if (d.join[i].kind != DiagToken::Bwd) return std::nullopt;
    if (d.join[i].label.rfind("SR,", 0) != 0) return std::nullopt;
  }
  if (answerOverlap && !answerAtMeet) return std::nullopt;

  if (commuting) {
    if (answerOverlap && split != 0) return std::nullopt;
    std::vector<Candidate> rs{{right, {right}, {}}};
    for (size_t i = d.join.size(); i > suffixStart && !rs.empty(); --i)
      rs = expandToken(calc, std::move(rs), d.join[i - 1], true, fuel);
    if (answerAtMeet) {
      std::vector<Candidate> keep;
      for (Candidate& c : rs)
        if (isGroundAnswer(calc, c.node)) keep.push_back(std::move(c));
      rs = std::move(keep);
    }
    for (size_t i = split; i > 0 && !rs.empty(); --i)
      rs = expandToken(calc, std::move(rs), d.join[i - 1], true, fuel);
    for (const Candidate& c : rs) {
      if (!answerOverlap && !alphaLetEquiv(c.node, *left)) continue;
      ConcretePath p;
      p.nodes = c.nodes;
      p.edges = c.edges;
      return p;
    }
    return std::nullopt;
  }

  std::vector<Candidate> ls;
  if (!answerOverlap) ls.push_back({*left, {*left}, {}});
  for (size_t i = 0; i < split && (!ls.empty() || answerOverlap); ++i) {
    if (answerOverlap) return std::nullopt;  // no forward leg to start from
    ls = expandToken(calc, std::move(ls), d.join[i], false, fuel);
  }
  std::vector<Candidate> rs{{right, {right}, {}}};
  for (size_t i = d.join.size(); i > suffixStart && !rs.empty(); --i)
    rs = expandToken(calc, std::move(rs), d.join[i - 1], true, fuel);

  for (const Candidate& r : rs) {
    if (answerAtMeet && !isGroundAnswer(calc, r.node)) continue;
    if (answerOverlap) {
      ConcretePath p;
      p.nodes = r.nodes;
      p.edges = r.edges;
      return p;
    }
    for (const Candidate& l : ls) {
      if (!alphaLetEquiv(l.node, r.node)) continue;
      ConcretePath p;
      p.nodes = l.nodes;
      p.edges = l.edges;
      p.nodes.insert(p.nodes.end(), r.nodes.begin() + 1, r.nodes.end());
      p.edges.insert(p.edges.end(), r.edges.begin(), r.edges.end());
      return p;
    }
  }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Coverage validation.
// ---------------------------------------------------------------------------

CoverageReport validateDiagrams(const CalculusDescription& calc,
                                const std::vector<Diagram>& diagrams,
                                const std::string& tName, bool left,
                                int maxSize, int fuel) {
  CoverageReport rep;
  std::string tUnion = calc.unionNameOf(tName);
  // Enumerate the transformation source. For the forking direction the
  // source is the peak; for the commuting direction the source sits on the
  // right of the overlap and the step's target is the peak.
  std::vector<Rule> tRules;
  for (const Rule* r : calc.transformationsNamed(tName)) tRules.push_back(*r);
  for (const ExprPtr& e : enumerateGround(calc, maxSize)) {
    std::vector<GroundStep> tSteps;
    AlphaSet tSeen;
    for (const Rule& r : tRules)
      for (GroundStep& s : groundApply(calc, r, e))
        if (tSeen.insert(s.target)) tSteps.push_back(std::move(s));
    if (tSteps.empty()) continue;
    auto tryCover = [&](const std::optional<ExprPtr>& l, const ExprPtr& r,
                        const std::string& srLabel) {
      for (const Diagram& d : diagrams)
        if (applyDiagramConcrete(calc, d, l, r, srLabel, tUnion, fuel, !left))
          return true;
      return false;
    };
    for (const GroundStep& t : tSteps) {
      ExprPtr peak = left ? t.source : t.target;
      ExprPtr right = left ? t.target : t.source;
      for (const GroundStep& sr : srSuccessors(calc, peak)) {
        ++rep.forks;
        std::string srLabel = collapsedSrName(calc, sr.ruleName);
        bool ok = tryCover(sr.target, right, srLabel);
        std::string rec = std::string(ok ? "covered" : "uncovered") +
                          " | peak " + render(peak) + " | <-" + srLabel +
                          "- " + render(sr.target) + " | -" + tUnion + "-> " +
                          render(right);
        if (ok) ++rep.covered;
        else rep.uncovered.push_back(rec);
        rep.records.push_back(std::move(rec));
      }
      if (isGroundAnswer(calc, peak)) {
        ++rep.forks;
        bool ok = tryCover(std::nullopt, right, "");
        std::string rec = std::string(ok ? "covered" : "uncovered") +
                          " | answer " + render(peak) + " | -" + tUnion +
                          "-> " + render(right);
        if (ok) ++rep.covered;
        else rep.uncovered.push_back(rec);
        rep.records.push_back(std::move(rec));
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// The induction replay.
// ---------------------------------------------------------------------------

ReplayResult replayInduction(const CalculusDescription& calc,
                             const std::vector<GroundStep>& seq,
                             const GroundStep& tStep,
                             const std::vector<Diagram>& diagrams,
                             int budget) {
  ReplayResult res;
  std::string tUnion = calc.unionNameOf(tStep.ruleName);
  // Sequence nodes left to right: answer .. s, t.
  std::vector<ExprPtr> nodes;
  std::vector<CEdge> edges;
  for (auto it = seq.rbegin(); it != seq.rend(); ++it) {
    nodes.push_back(it->target);
    edges.push_back({CEdge::SRBack, *it});
  }
  nodes.push_back(tStep.source);
  nodes.push_back(tStep.target);
  edges.push_back({CEdge::T, tStep});
  if (!isGroundAnswer(calc, nodes.front())) {
    res.error = "sequence does not start at an answer";
    return res;
  }
  int fuel = defaultFuel(tStep.source) + budget;
  long iterations = 20L * (static_cast<long>(nodes.size()) + budget) + 100;
  while (true) {
    if (--iterations < 0) {
      res.error = "budget exhausted (iteration cap)";
      return res;
    }
    // Leftmost edge that is not a right-to-left standard reduction.
    size_t i = 0;
    while (i < edges.size() && edges[i].kind == CEdge::SRBack) ++i;
    if (i == edges.size()) break;
    CEdge& e = edges[i];
    if (e.kind == CEdge::Alpha) {
      // Modification: compress alpha links by fusing the two nodes.
      if (!alphaLetEquiv(nodes[i], nodes[i + 1])) {
        res.error = "alpha link does not hold";
        return res;
      }
      nodes.erase(nodes.begin() + i);
      edges.erase(edges.begin() + i);
      continue;
    }
    if (e.kind == CEdge::SRFwd) {
      if (i == 0) {
        // Answer-prefix trimming: a forward step out of an answer stays in
        // the answers for deterministic calculi; verified concretely.
        if (!isGroundAnswer(calc, nodes[0]) ||
            !isGroundAnswer(calc, nodes[1])) {
          res.error = "forward step out of a non-answer prefix";
          return res;
        }
        nodes.erase(nodes.begin());
        edges.erase(edges.begin());
        continue;
      }
      // Peak elimination: .. <-SR- peak -SR-> .. collapses by determinism.
      if (!alphaLetEquiv(nodes[i - 1], nodes[i + 1])) {
        res.error = "standard reduction is not deterministic at " +
                    render(nodes[i]);
        return res;
      }
      nodes.erase(nodes.begin() + i);
      edges.erase(edges.begin() + i - 1, edges.begin() + i + 1);
      edges.insert(edges.begin() + i - 1, {CEdge::Alpha, {}});
      continue;
    }
    // Transformation edge. First rewrite subsumed names into overlapable
    // ones, then close the answer overlap or the fork with a diagram.
    auto sub = calc.subsume.find(e.step.ruleName);
    if (sub != calc.subsume.end()) {
      e.step.ruleName = sub->second;
      e.step.label = sub->second;
      tUnion = calc.unionNameOf(sub->second);
      continue;
    }
    if (res.applications >= budget) {
      res.error = "budget exhausted after " +
                  std::to_string(res.applications) + " diagram applications";
      return res;
    }
    std::optional<ConcretePath> path;
    if (i == 0) {
      if (!isGroundAnswer(calc, nodes[0])) {
        res.error = "transformation step out of a non-answer prefix";
        return res;
      }
      for (const Diagram& d : diagrams) {
        path = applyDiagramConcrete(calc, d, std::nullopt, nodes[1], "",
                                    tUnion, fuel);
        if (path) break;
      }
      if (!path) {
        res.error = "no applicable answer diagram at " + render(nodes[0]);
        return res;
      }
      ++res.applications;
      std::vector<ExprPtr> nn(path->nodes.begin(), path->nodes.end());
      nn.insert(nn.end(), nodes.begin() + 2, nodes.end());
      std::vector<CEdge> ne(path->edges.begin(), path->edges.end());
      ne.insert(ne.end(), edges.begin() + 1, edges.end());
      nodes = std::move(nn);
      edges = std::move(ne);
      continue;
    }
    if (edges[i - 1].kind != CEdge::SRBack) {
      res.error = "unreduced edge to the left of a transformation step";
      return res;
    }
    std::string srLabel = collapsedSrName(calc, edges[i - 1].step.ruleName);
    for (const Diagram& d : diagrams) {
      path = applyDiagramConcrete(calc, d, nodes[i - 1], nodes[i + 1],
                                  srLabel, tUnion, fuel);
      if (path) break;
    }
    if (!path) {
      res.error = "no applicable diagram for <-" + srLabel + "- " +
                  render(nodes[i]) + " -" + tUnion + "->";
      return res;
    }
    ++res.applications;
    std::vector<ExprPtr> nn(nodes.begin(), nodes.begin() + i - 1);
    nn.insert(nn.end(), path->nodes.begin(), path->nodes.end());
    nn.insert(nn.end(), nodes.begin() + i + 2, nodes.end());
    std::vector<CEdge> ne(edges.begin(), edges.begin() + i - 1);
    ne.insert(ne.end(), path->edges.begin(), path->edges.end());
    ne.insert(ne.end(), edges.begin() + i + 1, edges.end());
    nodes = std::move(nn);
    edges = std::move(ne);
  }
  if (!isGroundAnswer(calc, nodes.front())) {
    res.error = "final sequence does not start at an answer";
    return res;
  }
  // The final shape is answer <-SR- .. <-SR- t; read it as a converging
  // sequence for t and verify the step chaining up to alpha.
  for (auto it = edges.rbegin(); it != edges.rend(); ++it)
    res.witness.push_back(it->step);
  ExprPtr cur = nodes.back();
  for (const GroundStep& s : res.witness) {
    if (!alphaLetEquiv(cur, s.source)) {
      res.error = "witness steps do not chain";
      res.witness.clear();
      return res;
    }
    cur = s.target;
  }
  res.ok = true;
  return res;
}

}  // namespace lrsx
