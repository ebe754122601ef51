// Innermost termination of encoded diagram systems: a small portfolio of
// syntactic techniques with replayable certificates, forward-narrowing loop
// detection, and delegation to an external prover.
#pragma once

#include "lrsx/trs.hpp"

namespace lrsx {

// A non-termination witness: applying the recorded rules at the recorded
// positions to `start` yields a term containing an instance of `start`.
struct LoopWitness {
  Term start;
  struct Step {
    size_t rule;
    std::vector<int> pos;
    // Fully instantiated redex and contractum: lhsInst/rhsInst are the same
    // instance of the rule (free counter variables included), so the step is
    // checkable without re-running unification.
    Term lhsInst, rhsInst;
  };
  std::vector<Step> steps;
  bool innermost = false;  // every recorded step was an innermost step
};

// Linear polynomial interpretation over the naturals: per symbol the
// constant followed by one coefficient per argument.
struct PolyInterp {
  std::map<std::string, std::vector<int>> coeff;
};

struct PolyStep {
  PolyInterp interp;
  std::vector<size_t> removed;  // indices into the rules left at this stage
};

// One dependency-pair removal step: projections (and optional head ranks)
// under which `considered` pairs weakly decrease and `removed` strictly.
struct PairStep {
  std::map<std::string, int> proj;  // defined symbol -> argument index
  std::map<std::string, int> rank;  // empty for pure subterm steps
  std::vector<size_t> considered;   // indices into the pair list
  std::vector<size_t> removed;
};

struct Certificate {
  std::vector<std::string> trace;
  std::vector<PolyStep> polySteps;
  std::vector<TrsRule> pairs;  // dependency pairs of the rules left after
                               // the polynomial phase
  std::vector<PairStep> pairSteps;
  bool external = false;
};

struct TerminationVerdict {
  enum Kind { Proved, Disproved, Unknown } kind = Unknown;
  Certificate cert;   // Proved
  LoopWitness loop;   // Disproved (empty for external answers)
  std::string reason;
  bool externallyCertified = false;
};

// Portfolio: loop pre-check, linear polynomial rule removal, dependency
// pairs with the subterm criterion, then the counter-lexicographic template.
// Proved always carries a certificate that replayCertificate accepts.
TerminationVerdict proveInnermostTermination(const TermRewriteSystem& trs);

// Forward narrowing from every left-hand side up to `depth` steps, looking
// for a derived term embedding an instance of its start.
std::optional<LoopWitness> detectNontermination(const TermRewriteSystem& trs,
                                                int depth);

bool replayLoop(const TermRewriteSystem& trs, const LoopWitness& w);
// Re-verifies every recorded decrease. Externally certified proofs are not
// locally replayable and are rejected.
bool replayCertificate(const TermRewriteSystem& trs, const Certificate& c);

// Writes the TPDB emission to a temporary file, substitutes it for "{file}"
// in the template, and parses the first YES/NO/MAYBE of the output.
TerminationVerdict runExternalProver(const TermRewriteSystem& trs,
                                     const std::string& commandTemplate,
                                     int timeoutSeconds);

}  // namespace lrsx
