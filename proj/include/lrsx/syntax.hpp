// Core representation of LRSX meta-expressions: contexts, letrec
// environments, constraint tuples, and the syntactic conventions
// (LVC, DVC, ~let, alpha-equivalence on ground terms).
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace lrsx {

// ---------------------------------------------------------------------------
// Meta-variable kinds. A name decides its kind: names are meta iff they start
// with an upper-case letter; S.. are expression variables, E.. environment
// variables, X/Y/Z.. variable variables, Ch.. chain variables, anything else
// upper-case is a context variable whose class is the name minus a trailing
// numeric suffix (A1 has class A).
// ---------------------------------------------------------------------------
enum class MvKind { Expression, Variable, Context, Environment, Chain };

bool isMetaName(const std::string& name);
MvKind kindOfName(const std::string& name);
// Class of a context or chain variable name ("A1" -> "A", "Ch" names keep
// their explicitly attached class instead).
std::string classOfContextName(const std::string& name);

// A variable position: either a concrete term variable (lower-case) or a
// meta-variable of kind Variable.
struct Var {
  std::string name;
  bool isMeta() const { return isMetaName(name); }
  bool operator==(const Var& o) const { return name == o.name; }
  auto operator<=>(const Var& o) const { return name <=> o.name; }
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Higher-order argument x1...xk.body of a function symbol.
struct Binder {
  std::vector<Var> binders;
  ExprPtr body;
};

// An argument of a function symbol: Variable, Expression, or HExpression^k.
using Arg = std::variant<Var, ExprPtr, Binder>;

// Environment segments.
struct EnvVar {
  std::string name;  // E-kind
};
struct ChainSeg {
  std::string name;  // Ch-kind, written Ch^K[x,s]
  std::string cls;
  Var var;
  ExprPtr arg;
};
struct Binding {
  Var var;
  ExprPtr body;
};
using EnvSeg = std::variant<EnvVar, ChainSeg, Binding>;

// Letrec environment; the segment order is semantically irrelevant and all
// comparisons go through multiset matching.
using Env = std::vector<EnvSeg>;

// Expression node alternatives.
struct SVar {
  std::string name;  // S-kind meta-variable
};
struct CtxApp {
  std::string name;  // D-kind meta-variable
  std::string cls;   // its context class
  ExprPtr body;      // filling of the hole
};
struct Letrec {
  Env env;
  ExprPtr body;
};
struct FunApp {
  std::string sym;
  std::vector<Arg> args;
};
// Hole of a context term. Index 0 is the anonymous hole [.]; multi-contexts
// number their holes [.1]..[.k].
struct Hole {
  int index = 0;
};

struct Expr {
  std::variant<SVar, CtxApp, Letrec, FunApp, Hole> node;
};

// Builders.
ExprPtr mkSVar(std::string name);
ExprPtr mkCtxApp(std::string name, ExprPtr body);
ExprPtr mkLetrec(Env env, ExprPtr body);
ExprPtr mkFun(std::string sym, std::vector<Arg> args = {});
ExprPtr mkHole(int index = 0);
ExprPtr mkVarE(Var v);  // shorthand for (var v)

// Built-in symbols; {var, lambda} are always in scope.
inline const std::string kVarSym = "var";
inline const std::string kLambdaSym = "\\";

// ---------------------------------------------------------------------------
// Syntactic types f : tau_1 -> ... -> tau_ar(f) -> Expression.
// ---------------------------------------------------------------------------
struct ArgKind {
  bool isVariable = false;  // else HExpression^binders
  int binders = 0;
  bool operator==(const ArgKind&) const = default;
};
struct SynType {
  std::vector<ArgKind> args;
  bool operator==(const SynType&) const = default;
};

// ---------------------------------------------------------------------------
// Atoms and constraint tuples.
// ---------------------------------------------------------------------------
struct Atom {
  enum Kind { ConcreteVar, MetaVar, MetaExprS, MetaEnvE, MetaCtxD, MetaChain } kind;
  std::string name;
  bool operator==(const Atom&) const = default;
  auto operator<=>(const Atom&) const = default;
};
Atom atomOfName(const std::string& name);  // classifies by naming convention

struct AtomicNcc {
  Atom lhs, rhs;  // Var(lhs-instance) disjoint from CV_A(rhs-instance)
  bool operator==(const AtomicNcc&) const = default;
  auto operator<=>(const AtomicNcc&) const = default;
};

// Delta = (non-empty contexts, non-empty environments, non-capture
// constraints). Non-emptiness entries are disjunctions: at least one listed
// variable must be non-empty. Parsed constraints are singletons; composite
// entries arise when unification maps a constrained variable to a composition
// of fresh variables.
struct ConstraintTuple {
  std::vector<std::vector<std::string>> neCtx;             // Delta_1
  std::vector<std::vector<std::string>> neEnv;             // Delta_2
  std::vector<std::pair<ExprPtr, ExprPtr>> nccs;           // Delta_3 (s, d)
  std::set<AtomicNcc> atoms;                               // split NCCs
  std::set<std::string> freshVars;  // binder-freshened variable meta-vars

  bool empty() const {
    return neCtx.empty() && neEnv.empty() && nccs.empty() && atoms.empty() &&
           freshVars.empty();
  }
  void mergeFrom(const ConstraintTuple& o);
};

// ---------------------------------------------------------------------------
// Substitutions.
// ---------------------------------------------------------------------------
struct Subst {
  std::map<std::string, ExprPtr> exprs;  // S -> expression
  std::map<std::string, Var> vars;       // X -> variable
  std::map<std::string, ExprPtr> ctxs;   // D -> context term (contains a hole)
  std::map<std::string, Env> envs;       // E -> environment

  bool bindsAnything() const {
    return !exprs.empty() || !vars.empty() || !ctxs.empty() || !envs.empty();
  }
  ExprPtr apply(const ExprPtr& e) const;
  Env apply(const Env& env) const;
  Var apply(const Var& v) const;
  Arg apply(const Arg& a) const;
  ConstraintTuple apply(const ConstraintTuple& d) const;

  // this := other . this (apply other to all images, then add other's
  // bindings for variables this does not bind).
  void composeWith(const Subst& other);
};

// Plug `filling` into hole #index of the context term `ctx`.
ExprPtr plugHole(const ExprPtr& ctx, const ExprPtr& filling, int index = 0);
int countHoles(const ExprPtr& e);

// ---------------------------------------------------------------------------
// Variable sets.
// ---------------------------------------------------------------------------
struct VarSets {
  std::set<std::string> free;
  std::set<std::string> bound;
  std::set<std::string> all;       // free + bound
  std::set<std::string> letBound;  // binders of letrec environments
  std::set<Atom> metas;            // opaque meta-variable occurrences
};
VarSets variableSets(const ExprPtr& e);
VarSets variableSets(const Env& env);

bool isGround(const ExprPtr& e);
std::set<std::string> metaVarNames(const ExprPtr& e);

// Let variable convention: no letrec environment binds the same concrete
// variable twice. Conservative on meta segments.
bool checkLvc(const ExprPtr& e);
// Distinct variable convention (ground only): BV and FV disjoint and all
// binders pairwise distinct.
bool checkDvc(const ExprPtr& e);

// Binders on the path from the root to hole #index. Concrete binders in
// `concrete`, meta atoms whose scope covers the hole in `metas`.
struct CapturedVars {
  std::set<std::string> concrete;
  std::set<Atom> metas;
};
CapturedVars capturedVars(const ExprPtr& ctx, int index = 0);

// Split an NCC (s, d) into atomic NCCs: atoms of s paired with the
// capture-relevant atoms on d's hole path.
std::set<AtomicNcc> splitNcc(const ExprPtr& s, const ExprPtr& d);

// Ground alpha-equivalence combined with ~let (binder renaming plus letrec
// binding permutation). Throws on chain segments.
bool alphaLetEquiv(const ExprPtr& a, const ExprPtr& b);

// Syntactic equality modulo letrec-binding permutation only (meta
// expressions allowed; meta-variables must match by name).
bool eqModLet(const ExprPtr& a, const ExprPtr& b);

// Like eqModLet but meta-variables may match under a consistent bijection;
// `bij` is extended in place. Kind and context class must agree.
bool eqModLetBij(const ExprPtr& a, const ExprPtr& b,
                 std::map<std::string, std::string>& bij);

// ---------------------------------------------------------------------------
// Rendering in the tool's input notation.
// ---------------------------------------------------------------------------
std::string render(const ExprPtr& e);
std::string render(const Env& env);
std::string render(const ConstraintTuple& d);

// Structural node count (used by the oracle's size bounds).
int exprSize(const ExprPtr& e);

struct ChainUnsupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lrsx
