// Overlap computation between a transformation and the standard reduction,
// join search producing replayable witnesses, and the abstract diagrams the
// induction backend consumes.
#pragma once

#include "lrsx/solver.hpp"

namespace lrsx {

struct ConstrainedExpr {
  ExprPtr expr;
  ConstraintTuple cons;
};

// A critical situation between one transformation instance and one standard
// reduction (or answer) instance, both applied to the shared peak expression.
//
// Forking (left side of the transformation):
//   left <-SR- peak -T-> right
// Commuting (right side, the transformation rule reversed):
//   left <-SR- peak <-T- right    (right is the source of the T step)
// Answer overlaps have no SR leg; the peak itself is an answer instance.
struct Overlap {
  enum Kind { Forking, Answer } kind = Forking;
  bool commuting = false;  // built from the reversed transformation
  ConstrainedExpr peak;
  std::string srLabel;  // full rule label, e.g. "SR,neg,1" (empty for Answer)
  ConstrainedExpr left;  // SR-reduct of the peak (unused for Answer)
  std::string tLabel;    // transformation name, e.g. "top"
  ConstrainedExpr right;
  // Redexes at provably disjoint positions; the commuting square always joins.
  bool trivial = false;
  std::string provenance;  // rule pair and unifier index
};

// One meta-level rewrite step, replayable: matcher applied to the rule's
// left-hand side reproduces `before`, to its right-hand side `after`, and
// `before`'s constraints entail the discharged instantiated rule constraints.
struct MetaStep {
  Rule rule;  // renamed-apart instance that was applied
  Subst matcher;
  ConstraintTuple discharged;
  ConstrainedExpr before, after;
};

// Successor states of applying `rule` somewhere in `ce` (one per matcher).
std::vector<MetaStep> applyRuleMeta(Solver& solver, const Rule& rule,
                                    const ConstrainedExpr& ce);

struct JoinWitness {
  // Steps on the SR-reduct chain (forking: optional extra SR steps, then T
  // steps). Empty for commuting and answer joins.
  std::vector<MetaStep> leftSteps;
  // Steps on the other chain, in application order (commuting: SR steps then
  // T steps; forking: SR steps only; answer: SR steps reaching an answer).
  std::vector<MetaStep> rightSteps;
  // Answer joins: which declared answer the final expression matched; the
  // step's rule holds the renamed answer expression on both sides.
  int answerIndex = -1;
  MetaStep answerMatch;
};

// Re-checks every recorded step and the final meet; false on any mismatch.
bool replayWitness(Solver& solver, const Overlap& o, const JoinWitness& w);

struct SearchConfig {
  int maxDepth = 4;          // iterative deepening bound on total step count
  long maxIterations = 100000;  // rule-application budget per overlap
  int caseSplitBudget = 2;
  bool useClosures = true;
  bool deterministic = false;  // allow extra SR steps on the SR-reduct chain
  std::vector<std::string> ignored;      // rule names never used in joins
  std::map<std::string, int> useBudgets;  // per-rule-name use caps per chain

  static SearchConfig fromCalculus(const CalculusDescription& calc);
};

struct JoinOutcome {
  enum Kind { Joined, Split, Failed } kind = Failed;
  JoinWitness witness;          // Joined (already replay-checked)
  std::vector<Overlap> parts;   // Split: concretizations partition the parent
  std::string reason;           // Failed
};

JoinOutcome searchJoin(Solver& solver, const Overlap& o,
                       const SearchConfig& cfg);

// Abstract diagrams: the concrete expressions removed, labels collapsed to
// their union names and variant indices dropped. A diagram line reads as a
// path from the end of the SR leg to the end of the other leg; Fwd tokens are
// steps toward the right, Bwd tokens steps toward the left, AnswerMark the
// answer predicate on the adjacent object.
struct DiagToken {
  enum Kind { Fwd, Bwd, AnswerMark } kind = Bwd;
  std::string label;
  bool operator==(const DiagToken&) const = default;
  auto operator<=>(const DiagToken&) const = default;
};

struct Diagram {
  DiagToken src;  // universal SR arrow (Bwd) or AnswerMark
  std::string tLabel;
  std::vector<DiagToken> join;
  bool operator==(const Diagram&) const = default;
  auto operator<=>(const Diagram&) const = default;
};

Diagram abstractDiagram(const CalculusDescription& calc, const Overlap& o,
                        const JoinWitness& w);

// Textual form, e.g. "<-SR,lll- . -gcT-> ~~> -gcT->".
std::string render(const Diagram& d);
Diagram parseDiagramLine(const std::string& line);

// Full pipeline for one overlap command: compute the overlaps, join each
// (splitting within the budget), abstract and de-duplicate the diagrams.
struct DiagramRun {
  std::vector<Overlap> overlaps;         // before any splitting
  std::vector<Diagram> diagrams;         // sorted, unique
  std::vector<std::string> unjoined;     // peak + failure reason per failure
  std::vector<std::string> diagnostics;  // e.g. skipped chain-variable rules
  bool complete() const { return unjoined.empty() && diagnostics.empty(); }
};

std::vector<Overlap> computeOverlaps(Solver& solver, const Rule& trans,
                                     bool leftSide,
                                     std::vector<std::string>* diagnostics);

DiagramRun computeDiagrams(const CalculusDescription& calc,
                           const OverlapCommand& cmd, const SearchConfig& cfg);

}  // namespace lrsx
