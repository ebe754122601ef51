// Calculus descriptions: context-class grammars, prefix/fork tables, rewrite
// rules, answers, and the textual input language that defines them.
#pragma once

#include <iosfwd>

#include "lrsx/syntax.hpp"

namespace lrsx {

// One production of a context-class grammar. The recursive sub-context
// position is a CtxApp node named by a class with an empty hole body (or the
// bare hole for the base case). Sibling meta-variables are fresh per use.
struct CtxProduction {
  ExprPtr shape;
  ConstraintTuple guard;  // e.g. letrec E in T where E /= {}
};

struct ContextClassDef {
  std::string name;
  std::vector<CtxProduction> productions;
};

// (K1, K2) -> (K3, K4): for D1[s] = D2[t] with D1 a prefix of D2, substitute
// D1 -> D3, D2 -> D3[D4] and continue with s = D4[t].
using PrefixTable = std::map<std::pair<std::string, std::string>,
                             std::pair<std::string, std::string>>;

// (K1, K2) -> entries (K3, K4, K5, d[.1,.2]): for forked hole paths,
// substitute D1 -> D3[d[D4[.], D5[t]]], D2 -> D3[d[D4[s], D5[.]]].
struct ForkEntry {
  std::string k3, k4, k5;
  ExprPtr shape;  // two holes [.1] and [.2]
};
using ForkTable =
    std::map<std::pair<std::string, std::string>, std::vector<ForkEntry>>;

enum class RuleKind { SR, T };

struct Rule {
  RuleKind kind = RuleKind::T;
  std::string name;
  int variant = 0;  // 0: no variant index in the header
  bool closure = false;   // a declared transitive-closure rule {SR,n,+}
  bool reversed = false;  // right-to-left application of a T rule
  ExprPtr lhs, rhs;
  ConstraintTuple delta;

  // "SR,bot", "SR,neg,1", "top", "SR,lll,+".
  std::string label() const;
  // Label with the variant index dropped: "SR,neg".
  std::string baseLabel() const;
};

struct Answer {
  ExprPtr expr;
  ConstraintTuple delta;
};

struct OverlapCommand {
  std::string outFile;
  std::string ruleName;
  int variant = 0;      // 0: all variants of the name
  bool left = true;     // (name).l vs (name).r
};

struct Diagnostic {
  enum Level { Error, Warning, Note } level;
  std::string message;
};

struct CalculusDescription {
  std::map<std::string, SynType> symbols;  // inferred from first use
  std::map<std::string, ContextClassDef> classes;
  PrefixTable prefix;
  ForkTable fork;
  std::vector<Rule> srRules;  // includes closure rules (closure flag set)
  std::vector<Answer> answers;
  std::vector<Rule> transformations;
  // Union name -> member rule names (variants of members union implicitly).
  std::map<std::string, std::vector<std::string>> unions;
  // Closure rule name -> base rule/union name whose transitive closure it is.
  std::map<std::string, std::string> closures;
  // sub -> set of super classes (every sub-context is a super-context).
  std::map<std::string, std::set<std::string>> subclasses;
  bool deterministic = false;
  std::vector<std::string> ignored;            // join-search: never use
  std::map<std::string, int> useBudgets;       // join-search: restrict n N
  std::map<std::string, std::string> subsume;  // T-name -> subsuming T-name
  std::vector<OverlapCommand> commands;

  const ContextClassDef* classOf(const std::string& name) const;
  // Reflexive-transitive subclass test.
  bool isSubclassOf(const std::string& sub, const std::string& super) const;
  std::vector<const Rule*> transformationsNamed(const std::string& name,
                                                int variant = 0) const;
  // The diagram label a rule name maps to after union collapsing.
  std::string unionNameOf(const std::string& ruleName) const;
};

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_, const std::string& what)
      : std::runtime_error("line " + std::to_string(line_) + ": " + what),
        line(line_) {}
};

CalculusDescription parseCalculus(const std::string& text);

std::vector<Diagnostic> validate(const CalculusDescription& desc);

// Swap sides of a T rule; reversing twice restores the original.
Rule reverseRule(const Rule& rule);

// Canonical textual rendering of the whole description (parse . render is a
// fixpoint).
std::string render(const CalculusDescription& desc);
std::string render(const Rule& rule);

}  // namespace lrsx
