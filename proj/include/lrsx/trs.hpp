// First-order term rewrite systems encoding abstract diagram sets: one unary
// symbol per collapsed rule label, the Answer constant, and counter-driven
// W-symbols for transitive-closure join steps.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lrsx/diagram.hpp"

namespace lrsx {

struct Term {
  std::string head;  // symbol, or variable name when var is set
  bool var = false;
  std::vector<Term> args;
  bool operator==(const Term&) const = default;
};

Term mkVar(std::string name);
Term mkTerm(std::string sym, std::vector<Term> args = {});

std::string renderTerm(const Term& t);
std::set<std::string> termVars(const Term& t);
int termSize(const Term& t);

struct TrsRule {
  Term lhs, rhs;
  // Right-hand-side variables standing for arbitrary counter terms; they may
  // only occur at counter positions (first argument of a W-symbol).
  std::set<std::string> freeRhs;
  bool operator==(const TrsRule&) const = default;
};

struct TermRewriteSystem {
  std::map<std::string, int> signature;  // symbol -> arity
  // Symbol -> diagram label it encodes ("SRlbeta" -> "SR,lbeta"; W-symbols
  // map to the closure label they expand).
  std::map<std::string, std::string> labelOfSym;
  std::vector<TrsRule> rules;
  bool innermost = true;
};

// Empty when the rule set is well formed: no lone-variable left-hand side,
// every right-hand-side variable bound on the left or a declared counter
// variable confined to counter positions.
std::vector<std::string> wellFormedness(const TermRewriteSystem& trs);

// Each plain diagram becomes T(Src(x)) -> join-term(x); every closure step
// on the join side becomes a fresh W-symbol with the counter entry/peel/exit
// rule scheme, the entry carrying a free counter variable.
TermRewriteSystem encodeTrs(const std::vector<Diagram>& diagrams);

// Inverse of encodeTrs on label sequences: recovers the diagram of every
// encoded rule (W-symbol rule groups fold back into one closure diagram).
std::vector<Diagram> decodeTrs(const TermRewriteSystem& trs);

// Human-readable rule listing, one rule per line.
std::string renderRules(const TermRewriteSystem& trs);

// Standard textual termination-problem format with (STRATEGY INNERMOST).
// Free counter variables are replaced by fresh constants so the emitted
// problem is a plain TRS; genuine variables go under (VAR ...).
std::string emitTpdb(const TermRewriteSystem& trs);

// ---------------------------------------------------------------------------
// First-order term utilities shared with the termination prover.
// ---------------------------------------------------------------------------

using TermSubst = std::map<std::string, Term>;

Term applySubst(const TermSubst& s, const Term& t);
// Most general unifier; nullopt when none exists.
std::optional<TermSubst> unifyTerms(const Term& a, const Term& b);
// Matcher s with s(pattern) == t.
std::optional<TermSubst> matchTerm(const Term& pattern, const Term& t);
// Subterm at a position path (argument indices); nullptr when out of range.
const Term* subtermAt(const Term& t, const std::vector<int>& pos);
Term replaceAt(const Term& t, const std::vector<int>& pos, const Term& sub);
// True when some subterm of t is an instance of pattern.
bool containsInstance(const Term& t, const Term& pattern);
// Rename every variable with a suffix, keeping distinctness.
Term renameVars(const Term& t, const std::string& suffix);

}  // namespace lrsx
