#include "lrsx/termination.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace lrsx {

namespace {

// ---------------------------------------------------------------------------
// Loop search by forward narrowing.
// ---------------------------------------------------------------------------

void positionsOf(const Term& t, std::vector<int>& cur,
                 std::vector<std::vector<int>>& out) {
  if (t.var) return;
  out.push_back(cur);
  for (size_t i = 0; i < t.args.size(); ++i) {
    cur.push_back(static_cast<int>(i));
    positionsOf(t.args[i], cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<int>> positionsOf(const Term& t) {
  std::vector<int> cur;
  std::vector<std::vector<int>> out;
  positionsOf(t, cur, out);
  return out;
}

bool anyRuleMatchesBelow(const TermRewriteSystem& trs, const Term& redex) {
  for (const Term& a : redex.args)
    for (const auto& p : positionsOf(a))
      for (const TrsRule& r : trs.rules)
        if (matchTerm(r.lhs, *subtermAt(a, p))) return true;
  return false;
}

bool innermostValid(const TermRewriteSystem& trs, const LoopWitness& w) {
  return std::none_of(w.steps.begin(), w.steps.end(),
                      [&](const LoopWitness::Step& s) {
                        return anyRuleMatchesBelow(trs, s.lhsInst);
                      });
}

}  // namespace

std::optional<LoopWitness> detectNontermination(const TermRewriteSystem& trs,
                                                int depth) {
  if (depth < 1) return std::nullopt;
  std::set<std::string> defined;
  for (const TrsRule& r : trs.rules)
    if (!r.lhs.var) defined.insert(r.lhs.head);
  using Path = std::vector<std::pair<size_t, std::vector<int>>>;
  struct State {
    Term start;
    Term cur;
    Path path;
  };
  // Re-derives the concrete steps of a candidate path with the accumulated
  // narrowing substitution applied, then validates the innermost condition.
  auto witnessAlong = [&](const Term& seed,
                          const Path& path) -> std::optional<LoopWitness> {
    Term start = seed;
    Term cur = seed;
    TermSubst theta;
    std::vector<LoopWitness::Step> steps;
    int n = 0;
    for (const auto& [j, pos] : path) {
      std::string sfx = "_w" + std::to_string(n++);
      Term lhs = renameVars(trs.rules[j].lhs, sfx);
      Term rhs = renameVars(trs.rules[j].rhs, sfx);
      auto mgu = unifyTerms(lhs, *subtermAt(cur, pos));
      if (!mgu) return std::nullopt;
      start = applySubst(*mgu, start);
      cur = applySubst(*mgu, replaceAt(cur, pos, rhs));
      for (auto& [v, t] : theta) t = applySubst(*mgu, t);
      for (const auto& [v, t] : *mgu)
        if (!theta.count(v)) theta[v] = t;
      steps.push_back({j, pos, lhs, rhs});
    }
    for (LoopWitness::Step& s : steps) {
      s.lhsInst = applySubst(theta, s.lhsInst);
      s.rhsInst = applySubst(theta, s.rhsInst);
    }
    LoopWitness w{start, steps, false};
    if (!containsInstance(cur, start) || !innermostValid(trs, w))
      return std::nullopt;
    w.innermost = true;
    return w;
  };
  long budget = 2'000'000;
  int fresh = 0;
  auto dfs = [&](auto&& self, const Term& seed, const State& st,
                 int rem) -> std::optional<LoopWitness> {
    if (rem == 0 || budget <= 0) return std::nullopt;
    for (const auto& pos : positionsOf(st.cur)) {
      const Term& sub = *subtermAt(st.cur, pos);
      if (!defined.count(sub.head)) continue;
      for (size_t j = 0; j < trs.rules.size(); ++j) {
        if (trs.rules[j].lhs.head != sub.head) continue;
        if (--budget <= 0) return std::nullopt;
        std::string sfx = "_" + std::to_string(fresh);
        Term lhs = renameVars(trs.rules[j].lhs, sfx);
        auto mgu = unifyTerms(lhs, sub);
        if (!mgu) continue;
        ++fresh;
        Term rhs = renameVars(trs.rules[j].rhs, sfx);
        State ns;
        ns.start = applySubst(*mgu, st.start);
        ns.cur = applySubst(*mgu, replaceAt(st.cur, pos, rhs));
        ns.path = st.path;
        ns.path.emplace_back(j, pos);
        if (containsInstance(ns.cur, ns.start))
          if (auto w = witnessAlong(seed, ns.path)) return w;
        if (auto found = self(self, seed, ns, rem - 1)) return found;
      }
    }
    return std::nullopt;
  };
  for (size_t r0 = 0; r0 < trs.rules.size(); ++r0) {
    if (trs.rules[r0].lhs.var) continue;
    Term seed = renameVars(trs.rules[r0].lhs, "_" + std::to_string(fresh++));
    if (auto found = dfs(dfs, seed, State{seed, seed, {}}, depth))
      return found;
  }
  return std::nullopt;
}

bool replayLoop(const TermRewriteSystem& trs, const LoopWitness& w) {
  if (w.steps.empty()) return false;
  Term cur = w.start;
  for (const LoopWitness::Step& s : w.steps) {
    if (s.rule >= trs.rules.size()) return false;
    const TrsRule& r = trs.rules[s.rule];
    // lhsInst/rhsInst must be one common instance of the rule.
    auto m = matchTerm(r.lhs, s.lhsInst);
    if (!m) return false;
    TermSubst both = *m;
    {
      // Extend the matcher over the free right-hand-side variables.
      struct Ext {
        static bool go(const Term& pat, const Term& t, TermSubst& s) {
          if (pat.var) {
            auto it = s.find(pat.head);
            if (it != s.end()) return it->second == t;
            s[pat.head] = t;
            return true;
          }
          if (t.var || pat.head != t.head || pat.args.size() != t.args.size())
            return false;
          for (size_t i = 0; i < pat.args.size(); ++i)
            if (!go(pat.args[i], t.args[i], s)) return false;
          return true;
        }
      };
      if (!Ext::go(r.rhs, s.rhsInst, both)) return false;
    }
    const Term* sub = subtermAt(cur, s.pos);
    if (!sub || !(*sub == s.lhsInst)) return false;
    if (w.innermost && anyRuleMatchesBelow(trs, s.lhsInst)) return false;
    cur = replaceAt(cur, s.pos, s.rhsInst);
  }
  return containsInstance(cur, w.start);
}

// ---------------------------------------------------------------------------
// Linear polynomial rule removal.
// ---------------------------------------------------------------------------

namespace {

struct LinForm {
  std::map<std::string, long> coeff;
  long c = 0;
};

LinForm evalPoly(const PolyInterp& ip, const Term& t) {
  if (t.var) return {{{t.head, 1}}, 0};
  const std::vector<int>& cs = ip.coeff.at(t.head);
  LinForm out;
  out.c = cs[0];
  for (size_t i = 0; i < t.args.size(); ++i) {
    LinForm a = evalPoly(ip, t.args[i]);
    out.c += cs[i + 1] * a.c;
    for (const auto& [v, k] : a.coeff) out.coeff[v] += cs[i + 1] * k;
  }
  return out;
}

bool weakGe(const LinForm& a, const LinForm& b) {
  if (a.c < b.c) return false;
  for (const auto& [v, k] : b.coeff) {
    auto it = a.coeff.find(v);
    if ((it == a.coeff.end() ? 0 : it->second) < k) return false;
  }
  return true;
}

bool strictGt(const LinForm& a, const LinForm& b) {
  return weakGe(a, b) && a.c > b.c;
}

void collectSyms(const Term& t, std::map<std::string, int>& arity) {
  if (t.var) return;
  arity[t.head] = static_cast<int>(t.args.size());
  for (const Term& a : t.args) collectSyms(a, arity);
}

bool interpCovers(const PolyInterp& ip, const std::vector<TrsRule>& rules) {
  std::map<std::string, int> arity;
  for (const TrsRule& r : rules) {
    collectSyms(r.lhs, arity);
    collectSyms(r.rhs, arity);
  }
  for (const auto& [sym, n] : arity) {
    auto it = ip.coeff.find(sym);
    if (it == ip.coeff.end() ||
        it->second.size() != static_cast<size_t>(n) + 1)
      return false;
    if (it->second[0] < 0) return false;
    for (size_t i = 1; i < it->second.size(); ++i)
      if (it->second[i] < 1) return false;  // monotone in every argument
  }
  return true;
}

std::vector<size_t> strictlyRemoved(const PolyInterp& ip,
                                    const std::vector<TrsRule>& rules) {
  // Empty result also signals "some rule fails the weak decrease".
  std::vector<size_t> strict;
  for (size_t i = 0; i < rules.size(); ++i) {
    LinForm l = evalPoly(ip, rules[i].lhs);
    LinForm r = evalPoly(ip, rules[i].rhs);
    if (!weakGe(l, r)) return {};
    if (strictGt(l, r)) strict.push_back(i);
  }
  return strict;
}

std::optional<PolyStep> findPolyRemoval(const std::vector<TrsRule>& rules) {
  std::map<std::string, int> arity;
  for (const TrsRule& r : rules) {
    collectSyms(r.lhs, arity);
    collectSyms(r.rhs, arity);
  }
  std::vector<std::pair<std::string, int>> syms(arity.begin(), arity.end());
  // Candidate coefficients: constants in {0,1,2}, argument factors in {1,2}.
  std::vector<std::vector<std::vector<int>>> options;
  long combos = 1;
  for (const auto& [sym, n] : syms) {
    std::vector<std::vector<int>> opt;
    for (int c0 : {0, 1, 2}) {
      std::vector<int> base{c0};
      std::vector<std::vector<int>> rows{base};
      for (int i = 0; i < n; ++i) {
        std::vector<std::vector<int>> grown;
        for (const auto& row : rows)
          for (int ci : {1, 2}) {
            auto r2 = row;
            r2.push_back(ci);
            grown.push_back(std::move(r2));
          }
        rows = std::move(grown);
      }
      opt.insert(opt.end(), rows.begin(), rows.end());
    }
    combos *= static_cast<long>(opt.size());
    if (combos > 3'000'000) return std::nullopt;
    options.push_back(std::move(opt));
  }
  PolyInterp ip;
  std::vector<size_t> idx(syms.size(), 0);
  while (true) {
    for (size_t i = 0; i < syms.size(); ++i)
      ip.coeff[syms[i].first] = options[i][idx[i]];
    std::vector<size_t> strict = strictlyRemoved(ip, rules);
    if (!strict.empty()) return PolyStep{ip, strict};
    size_t i = 0;
    for (; i < syms.size(); ++i) {
      if (++idx[i] < options[i].size()) break;
      idx[i] = 0;
    }
    if (i == syms.size()) return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Dependency pairs, cycle analysis, and projection-based pair removal.
// ---------------------------------------------------------------------------

Term sharp(const Term& t) {
  Term out = t;
  out.head += "#";
  return out;
}

void defRhsSubterms(const std::set<std::string>& defined, const Term& t,
                    std::vector<Term>& out) {
  if (t.var) return;
  if (defined.count(t.head)) out.push_back(t);
  for (const Term& a : t.args) defRhsSubterms(defined, a, out);
}

std::vector<TrsRule> computePairs(const std::vector<TrsRule>& rules) {
  std::set<std::string> defined;
  for (const TrsRule& r : rules)
    if (!r.lhs.var) defined.insert(r.lhs.head);
  std::vector<TrsRule> pairs;
  for (const TrsRule& r : rules) {
    std::vector<Term> subs;
    defRhsSubterms(defined, r.rhs, subs);
    for (const Term& s : subs) pairs.push_back({sharp(r.lhs), sharp(s), {}});
  }
  return pairs;
}

// Strongly connected components of the estimated chain graph that actually
// contain a cycle, each sorted, in a deterministic order.
std::vector<std::vector<size_t>> cyclicSccs(const std::vector<TrsRule>& pairs,
                                            const std::set<size_t>& alive) {
  std::vector<size_t> nodes(alive.begin(), alive.end());
  std::map<size_t, std::vector<size_t>> adj;
  for (size_t i : nodes)
    for (size_t j : nodes)
      if (pairs[i].rhs.head == pairs[j].lhs.head) adj[i].push_back(j);
  // Tarjan, iterative.
  std::map<size_t, int> index, low;
  std::map<size_t, bool> onStack;
  std::vector<size_t> stack;
  std::vector<std::vector<size_t>> sccs;
  int counter = 0;
  struct Frame {
    size_t v;
    size_t next = 0;
  };
  for (size_t root : nodes) {
    if (index.count(root)) continue;
    std::vector<Frame> call{{root}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    onStack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.next < adj[f.v].size()) {
        size_t w = adj[f.v][f.next++];
        if (!index.count(w)) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          onStack[w] = true;
          call.push_back({w});
        } else if (onStack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        if (low[f.v] == index[f.v]) {
          std::vector<size_t> scc;
          while (true) {
            size_t w = stack.back();
            stack.pop_back();
            onStack[w] = false;
            scc.push_back(w);
            if (w == f.v) break;
          }
          bool cyclic = scc.size() > 1;
          for (size_t w : scc)
            if (pairs[w].rhs.head == pairs[w].lhs.head) cyclic = true;
          if (cyclic) {
            std::sort(scc.begin(), scc.end());
            sccs.push_back(std::move(scc));
          }
        }
        size_t v = f.v;
        call.pop_back();
        if (!call.empty())
          low[call.back().v] = std::min(low[call.back().v], low[v]);
      }
    }
  }
  std::sort(sccs.begin(), sccs.end());
  return sccs;
}

bool isSubtermOf(const Term& needle, const Term& hay) {
  if (hay == needle) return true;
  return std::any_of(hay.args.begin(), hay.args.end(), [&](const Term& a) {
    return isSubtermOf(needle, a);
  });
}

int rankOf(const std::map<std::string, int>& rank, const std::string& sym) {
  auto it = rank.find(sym);
  return it == rank.end() ? 0 : it->second;
}

// Pair comparison: head rank first, then the projected arguments under the
// subterm relation.
bool pairDecreases(const TrsRule& p, const std::map<std::string, int>& rank,
                   const std::map<std::string, int>& proj, bool strict) {
  int rl = rankOf(rank, p.lhs.head);
  int rr = rankOf(rank, p.rhs.head);
  if (rl > rr) return true;
  if (rl < rr) return false;
  auto il = proj.find(p.lhs.head);
  auto ir = proj.find(p.rhs.head);
  if (il == proj.end() || ir == proj.end()) return false;
  if (static_cast<size_t>(il->second) >= p.lhs.args.size() ||
      static_cast<size_t>(ir->second) >= p.rhs.args.size())
    return false;
  const Term& a = p.lhs.args[il->second];
  const Term& b = p.rhs.args[ir->second];
  return strict ? (isSubtermOf(b, a) && !(a == b)) : isSubtermOf(b, a);
}

std::optional<PairStep> checkCombo(const std::vector<TrsRule>& pairs,
                                   const std::vector<size_t>& scc,
                                   const std::map<std::string, int>& rank,
                                   const std::map<std::string, int>& proj) {
  std::vector<size_t> removed;
  for (size_t i : scc) {
    if (!pairDecreases(pairs[i], rank, proj, false)) return std::nullopt;
    if (pairDecreases(pairs[i], rank, proj, true)) removed.push_back(i);
  }
  if (removed.empty()) return std::nullopt;
  return PairStep{proj, rank, scc, removed};
}

std::optional<PairStep> findPairRemoval(const std::vector<TrsRule>& pairs,
                                        const std::vector<size_t>& scc) {
  std::map<std::string, int> arity;
  for (size_t i : scc) {
    arity[pairs[i].lhs.head] = static_cast<int>(pairs[i].lhs.args.size());
    arity[pairs[i].rhs.head] = static_cast<int>(pairs[i].rhs.args.size());
  }
  std::vector<std::pair<std::string, int>> syms(arity.begin(), arity.end());
  size_t m = syms.size();
  if (m > 6) return std::nullopt;
  long projCombos = 1;
  for (const auto& [sym, n] : syms) {
    if (n == 0) return std::nullopt;  // nothing to project
    projCombos *= n;
    if (projCombos > 100'000) return std::nullopt;
  }
  // Rank maps: the all-equal map first (pure subterm criterion), then every
  // assignment into {0..m-1} as the counter-lexicographic fallback.
  long rankCombos = 1;
  for (size_t i = 0; i < m; ++i) rankCombos *= static_cast<long>(m);
  for (long rsel = -1; rsel < rankCombos; ++rsel) {
    std::map<std::string, int> rank;
    if (rsel >= 0) {
      long v = rsel;
      bool allZero = true;
      for (const auto& [sym, n] : syms) {
        rank[sym] = static_cast<int>(v % m);
        if (rank[sym]) allZero = false;
        v /= static_cast<long>(m);
      }
      if (allZero) continue;  // already tried as the pure subterm round
    }
    for (long psel = 0; psel < projCombos; ++psel) {
      std::map<std::string, int> proj;
      long v = psel;
      for (const auto& [sym, n] : syms) {
        proj[sym] = static_cast<int>(v % n);
        v /= n;
      }
      if (auto step = checkCombo(pairs, scc, rank, proj)) {
        if (rsel < 0) step->rank.clear();
        return step;
      }
    }
  }
  return std::nullopt;
}

std::string describeStep(const PairStep& s) {
  std::ostringstream os;
  os << (s.rank.empty() ? "subterm projection" : "rank+projection") << " {";
  bool first = true;
  for (const auto& [sym, i] : s.proj) {
    if (!first) os << ", ";
    first = false;
    os << sym << "->" << i + 1;
  }
  os << "} removed " << s.removed.size() << " pair(s)";
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Portfolio driver and certificate replay.
// ---------------------------------------------------------------------------

TerminationVerdict proveInnermostTermination(const TermRewriteSystem& trs) {
  TerminationVerdict out;
  std::vector<std::string> problems = wellFormedness(trs);
  if (!problems.empty()) {
    out.kind = TerminationVerdict::Unknown;
    out.reason = "ill-formed system: " + problems.front();
    return out;
  }
  if (auto w = detectNontermination(trs, 3)) {
    out.kind = TerminationVerdict::Disproved;
    out.loop = *w;
    out.reason = "replayable innermost loop found";
    return out;
  }
  Certificate cert;
  std::vector<TrsRule> rules = trs.rules;
  while (!rules.empty()) {
    auto ps = findPolyRemoval(rules);
    if (!ps) break;
    cert.polySteps.push_back(*ps);
    cert.trace.push_back("linear polynomial interpretation removed " +
                         std::to_string(ps->removed.size()) + " rule(s)");
    for (auto it = ps->removed.rbegin(); it != ps->removed.rend(); ++it)
      rules.erase(rules.begin() + static_cast<long>(*it));
  }
  if (!rules.empty()) {
    cert.pairs = computePairs(rules);
    std::set<size_t> alive;
    for (size_t i = 0; i < cert.pairs.size(); ++i) alive.insert(i);
    while (true) {
      auto sccs = cyclicSccs(cert.pairs, alive);
      if (sccs.empty()) break;
      bool progressed = false;
      for (const auto& scc : sccs) {
        if (auto step = findPairRemoval(cert.pairs, scc)) {
          cert.pairSteps.push_back(*step);
          cert.trace.push_back(describeStep(*step));
          for (size_t i : step->removed) alive.erase(i);
          progressed = true;
          break;
        }
      }
      if (!progressed) {
        out.kind = TerminationVerdict::Unknown;
        out.reason = "portfolio exhausted on a dependency-pair cycle";
        return out;
      }
    }
  } else {
    cert.trace.push_back("all rules removed by polynomial interpretations");
  }
  out.kind = TerminationVerdict::Proved;
  out.cert = cert;
  if (!replayCertificate(trs, cert)) {
    out = {};
    out.kind = TerminationVerdict::Unknown;
    out.reason = "internal certificate failed replay";
  }
  return out;
}

bool replayCertificate(const TermRewriteSystem& trs, const Certificate& c) {
  if (c.external) return false;
  std::vector<TrsRule> rules = trs.rules;
  for (const PolyStep& ps : c.polySteps) {
    if (!interpCovers(ps.interp, rules)) return false;
    if (ps.removed.empty()) return false;
    std::set<size_t> removed;
    for (size_t i : ps.removed) {
      if (i >= rules.size() || !removed.insert(i).second) return false;
    }
    for (size_t i = 0; i < rules.size(); ++i) {
      LinForm l = evalPoly(ps.interp, rules[i].lhs);
      LinForm r = evalPoly(ps.interp, rules[i].rhs);
      if (!weakGe(l, r)) return false;
      if (removed.count(i) && !strictGt(l, r)) return false;
    }
    std::vector<TrsRule> rest;
    for (size_t i = 0; i < rules.size(); ++i)
      if (!removed.count(i)) rest.push_back(rules[i]);
    rules = std::move(rest);
  }
  if (rules.empty()) return c.pairs.empty() && c.pairSteps.empty();
  if (computePairs(rules) != c.pairs) return false;
  std::set<size_t> alive;
  for (size_t i = 0; i < c.pairs.size(); ++i) alive.insert(i);
  for (const PairStep& s : c.pairSteps) {
    auto sccs = cyclicSccs(c.pairs, alive);
    if (std::find(sccs.begin(), sccs.end(), s.considered) == sccs.end())
      return false;
    if (s.removed.empty()) return false;
    for (size_t i : s.considered)
      if (!pairDecreases(c.pairs[i], s.rank, s.proj, false)) return false;
    for (size_t i : s.removed) {
      if (std::find(s.considered.begin(), s.considered.end(), i) ==
          s.considered.end())
        return false;
      if (!pairDecreases(c.pairs[i], s.rank, s.proj, true)) return false;
      alive.erase(i);
    }
  }
  return cyclicSccs(c.pairs, alive).empty();
}

// ---------------------------------------------------------------------------
// External prover invocation.
// ---------------------------------------------------------------------------

TerminationVerdict runExternalProver(const TermRewriteSystem& trs,
                                     const std::string& commandTemplate,
                                     int timeoutSeconds) {
  namespace fs = std::filesystem;
  static int counter = 0;
  TerminationVerdict out;
  fs::path file = fs::temp_directory_path() /
                  ("problem_" + std::to_string(getpid()) + "_" +
                   std::to_string(counter++) + ".trs");
  {
    std::ofstream os(file);
    os << emitTpdb(trs);
  }
  std::string cmd = commandTemplate;
  const std::string marker = "{file}";
  for (size_t p; (p = cmd.find(marker)) != std::string::npos;)
    cmd.replace(p, marker.size(), file.string());
  if (cmd == commandTemplate) cmd += " " + file.string();
  std::string full = "timeout " + std::to_string(timeoutSeconds) + " " + cmd +
                     " 2>/dev/null";
  std::string output;
  FILE* pipe = popen(full.c_str(), "r");
  int status = -1;
  if (pipe) {
    char buf[4096];
    while (size_t n = fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
    status = pclose(pipe);
  }
  std::error_code ec;
  fs::remove(file, ec);
  bool timedOut = status != -1 && WIFEXITED(status) &&
                  WEXITSTATUS(status) == 124;
  if (pipe == nullptr || timedOut) {
    out.kind = TerminationVerdict::Unknown;
    out.reason = timedOut ? "external prover timed out"
                          : "external prover could not be started";
    return out;
  }
  std::istringstream is(output);
  std::string line, answer;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line == "YES" || line == "NO" || line == "MAYBE") {
      answer = line;
      break;
    }
  }
  if (answer == "YES") {
    out.kind = TerminationVerdict::Proved;
    out.externallyCertified = true;
    out.cert.external = true;
    out.cert.trace.push_back("external prover answered YES");
  } else if (answer == "NO") {
    out.kind = TerminationVerdict::Disproved;
    out.externallyCertified = true;
    out.reason = "external prover answered NO (no local witness)";
  } else if (answer == "MAYBE") {
    out.kind = TerminationVerdict::Unknown;
    out.reason = "external prover answered MAYBE";
  } else {
    out.kind = TerminationVerdict::Unknown;
    out.reason = "unrecognized external prover output";
  }
  return out;
}

}  // namespace lrsx
