// Brute-force ground semantics, independent of the meta-level solver: ground
// enumeration, ground rule application, convergence testing, concrete
// validation of diagram sets, and the induction that turns a converging
// sequence for a source program into one for its transform.
#pragma once

#include "lrsx/calculus.hpp"
#include "lrsx/diagram.hpp"

namespace lrsx {

struct GroundStep {
  ExprPtr source;  // alpha-adjusted when the original violated the DVC
  std::string label;  // "SR,top", "top", or "ANSWER"
  std::string ruleName;
  int variant = 0;
  ExprPtr target;
  Subst matcher;
};

struct ConvergenceResult {
  enum Verdict { Converges, Diverges, FuelExhausted } verdict = Diverges;
  // Converging runs carry the step sequence from the expression to the
  // answer; an already-answer expression converges with no steps.
  std::vector<GroundStep> witness;
};

// Exhaustive up to alpha-equivalence-with-letrec-permutation. Binders draw
// from a fixed pool sized to maxSize; free variables are canonicalized to
// their first-use order so renamed copies of open expressions collapse.
std::vector<ExprPtr> enumerateGround(const CalculusDescription& calc,
                                     int maxSize);

// All ground instances of the rule applicable to e (after alpha-renaming e
// to the distinct variable convention when needed), with the constraint
// tuple checked concretely.
std::vector<GroundStep> groundApply(const CalculusDescription& calc,
                                    const Rule& rule, const ExprPtr& e);

bool isGroundAnswer(const CalculusDescription& calc, const ExprPtr& e);

// Standard-reduction successors, deduplicated up to alpha.
std::vector<GroundStep> srSuccessors(const CalculusDescription& calc,
                                     const ExprPtr& e);

int defaultFuel(const ExprPtr& e);  // 4 x size

ConvergenceResult converges(const CalculusDescription& calc, const ExprPtr& e,
                            int fuel);

struct DeterminismReport {
  int expressions = 0;
  std::vector<std::string> counterexamples;
  bool deterministic() const { return counterexamples.empty(); }
};
DeterminismReport checkDeterminism(const CalculusDescription& calc,
                                   int maxSize);

// One record per ground fork or answer overlap; `uncovered` repeats the
// failing records verbatim.
struct CoverageReport {
  int forks = 0;
  int covered = 0;
  std::vector<std::string> records;
  std::vector<std::string> uncovered;
  bool complete() const { return covered == forks; }
};

// Every ground fork left <-SR- peak -T-> right (and answer overlap) with
// |peak| <= maxSize must be closed by some diagram whose join steps all
// exist concretely. `left` selects the transformation direction, matching
// the overlap commands.
CoverageReport validateDiagrams(const CalculusDescription& calc,
                                const std::vector<Diagram>& diagrams,
                                const std::string& tName, bool left,
                                int maxSize, int fuel);

struct ReplayResult {
  bool ok = false;
  std::vector<GroundStep> witness;  // converging sequence for the transform
  std::string error;
  int applications = 0;  // diagram applications consumed from the budget
};

// The inductive argument, executed concretely: given a converging sequence
// for s and a transformation step s -T-> t, rewrite the combined sequence
// with the diagram set (plus peak elimination, answer-prefix trimming,
// alpha compression, subsumption renaming, and DVC restoration) until it
// witnesses the convergence of t.
ReplayResult replayInduction(const CalculusDescription& calc,
                             const std::vector<GroundStep>& seq,
                             const GroundStep& tStep,
                             const std::vector<Diagram>& diagrams, int budget);

}  // namespace lrsx
