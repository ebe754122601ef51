// Unification and matching of constrained meta-expressions, restricted to the
// chain-variable-free fragment. Context equations are decomposed through the
// calculus's prefix and fork tables and the context-class grammars.
#pragma once

#include "lrsx/calculus.hpp"

namespace lrsx {

struct UnifSolution {
  Subst subst;
  ConstraintTuple residual;
  // The two top-level hole paths separated through a fork-table entry, so the
  // unified redexes sit at disjoint positions.
  bool parallel = false;
  // Binder meta-variables renamed globally fresh to discharge the residual
  // (matching mode only).
  std::set<std::string> freshened;
};

struct MatchResult {
  Subst subst;
  // Instantiated needed constraints that were entailed by the given ones.
  ConstraintTuple discharged;
  // Binder meta-variables freshened to complete the match (empty normally).
  std::set<std::string> freshened;
};

struct ChainVariableUnsupported : ChainUnsupported {
  using ChainUnsupported::ChainUnsupported;
};

struct ClassTableMissing : std::runtime_error {
  ClassTableMissing(const std::string& k1, const std::string& k2)
      : std::runtime_error("no prefix or fork table entry covers the class pair (" +
                           k1 + ", " + k2 + ")") {}
};

class Solver {
 public:
  explicit Solver(const CalculusDescription& calc) : calc_(calc) {}

  // Complete set of unifiers of two constrained expressions whose
  // meta-variable names are disjoint (the caller renames apart).
  std::vector<UnifSolution> unify(const ExprPtr& lhs, const ConstraintTuple& dl,
                                  const ExprPtr& rhs, const ConstraintTuple& dr);

  // Matchers sigma with sigma(pattern) ~let target and the instantiated
  // needed constraints entailed by the given ones. Sound, incomplete.
  std::vector<MatchResult> match(const ExprPtr& pattern,
                                 const ConstraintTuple& needed,
                                 const ExprPtr& target,
                                 const ConstraintTuple& given);

  // True only if every ground substitution satisfying `given` satisfies
  // `needed` (both already in split/atomic form). Sound, incomplete.
  bool entails(const ConstraintTuple& given, const ConstraintTuple& needed) const;

  // ~let equality modulo a meta-variable bijection plus mutual entailment of
  // the constraints restricted to live meta-variables. Sound, incomplete.
  bool equivalentConstrained(const ExprPtr& e1, const ConstraintTuple& d1,
                             const ExprPtr& e2, const ConstraintTuple& d2) const;

  const CalculusDescription& calculus() const { return calc_; }

 private:
  const CalculusDescription& calc_;
};

// Constraints restricted to the meta-variables of e (dead-variable facts
// dropped). Disjunctive non-emptiness groups survive only if fully live.
ConstraintTuple restrictConstraints(const ConstraintTuple& d, const ExprPtr& e);

// Rename every meta-variable of the rule apart from `used`, extending `used`.
Rule renameApart(const Rule& rule, std::set<std::string>& used);

}  // namespace lrsx
