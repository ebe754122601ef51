#include "lrsx/trs.hpp"

#include <algorithm>
#include <sstream>

namespace lrsx {

Term mkVar(std::string name) { return Term{std::move(name), true, {}}; }
Term mkTerm(std::string sym, std::vector<Term> args) {
  return Term{std::move(sym), false, std::move(args)};
}

std::string renderTerm(const Term& t) {
  if (t.var || t.args.empty()) return t.head;
  std::string out = t.head + "(";
  for (size_t i = 0; i < t.args.size(); ++i) {
    if (i) out += ",";
    out += renderTerm(t.args[i]);
  }
  return out + ")";
}

std::set<std::string> termVars(const Term& t) {
  std::set<std::string> out;
  if (t.var) {
    out.insert(t.head);
    return out;
  }
  for (const Term& a : t.args) {
    auto s = termVars(a);
    out.insert(s.begin(), s.end());
  }
  return out;
}

int termSize(const Term& t) {
  int n = 1;
  for (const Term& a : t.args) n += termSize(a);
  return n;
}

// ---------------------------------------------------------------------------
// Encoding.
// ---------------------------------------------------------------------------

namespace {

// "SR,lbeta" -> "SRlbeta"; "SR,lll,+" -> base "SRlll" (the peeled step).
std::string symOfLabel(std::string label) {
  if (label.size() > 2 && label.compare(label.size() - 2, 2, ",+") == 0)
    label.resize(label.size() - 2);
  std::string out;
  for (char c : label)
    if (c != ',') out += c;
  return out;
}

bool isClosureLabel(const std::string& label) {
  return label.size() > 2 && label.compare(label.size() - 2, 2, ",+") == 0;
}

void declare(TermRewriteSystem& trs, const std::string& sym, int arity,
             const std::string& label) {
  trs.signature[sym] = arity;
  if (!label.empty()) trs.labelOfSym[sym] = label;
}

}  // namespace

TermRewriteSystem encodeTrs(const std::vector<Diagram>& diagrams) {
  TermRewriteSystem trs;
  int wCount = 0;
  for (const Diagram& d : diagrams) {
    Term x = mkVar("x");
    std::string tSym = symOfLabel(d.tLabel);
    declare(trs, tSym, 1, d.tLabel);
    Term inner;
    if (d.src.kind == DiagToken::AnswerMark) {
      inner = mkTerm("Answer");
      declare(trs, "Answer", 0, "ANSWER");
    } else if (d.src.kind == DiagToken::Bwd) {
      std::string s = symOfLabel(d.src.label);
      declare(trs, s, 1, d.src.label);
      inner = mkTerm(s, {x});
    } else {
      throw std::invalid_argument("diagram source must point left: " +
                                  render(d));
    }
    Term lhs = mkTerm(tSym, {inner});

    Term cur = x;
    std::set<std::string> freeRhs;
    for (const DiagToken& tok : d.join) {
      if (tok.kind == DiagToken::AnswerMark) {
        declare(trs, "Answer", 0, "ANSWER");
        cur = mkTerm("Answer");
        continue;
      }
      std::string s = symOfLabel(tok.label);
      if (isClosureLabel(tok.label)) {
        // W(s(k),x) peels one base step or exits into the term built so far.
        std::string w = "W" + std::to_string(++wCount);
        std::string k = wCount == 1 ? "k" : "k" + std::to_string(wCount);
        declare(trs, s, 1, tok.label.substr(0, tok.label.size() - 2));
        declare(trs, w, 2, tok.label);
        declare(trs, "s", 1, "");
        Term peeled = mkTerm(w, {mkVar(k), x});
        Term lhsW = mkTerm(w, {mkTerm("s", {mkVar(k)}), x});
        trs.rules.push_back({lhsW, mkTerm(s, {peeled}), {}});
        trs.rules.push_back({lhsW, mkTerm(s, {cur}), freeRhs});
        cur = peeled;
        freeRhs.insert(k);
      } else {
        declare(trs, s, 1, tok.label);
        cur = mkTerm(s, {cur});
      }
    }
    trs.rules.push_back({lhs, cur, freeRhs});
  }
  return trs;
}

// ---------------------------------------------------------------------------
// Decoding (label-faithfulness round trip).
// ---------------------------------------------------------------------------

namespace {

DiagToken tokenOfSym(const TermRewriteSystem& trs, const std::string& sym) {
  auto it = trs.labelOfSym.find(sym);
  if (it == trs.labelOfSym.end())
    throw std::invalid_argument("symbol without a label: " + sym);
  const std::string& label = it->second;
  if (label == "ANSWER") return {DiagToken::AnswerMark, ""};
  bool sr = label.rfind("SR,", 0) == 0;
  return {sr ? DiagToken::Bwd : DiagToken::Fwd, label};
}

bool isWSym(const TermRewriteSystem& trs, const std::string& sym) {
  auto it = trs.signature.find(sym);
  return it != trs.signature.end() && it->second == 2 &&
         sym.rfind("W", 0) == 0;
}

// Join tokens of a right-hand side, innermost first. W-subterms fold back
// into the pre-closure tokens of their exit rule plus one closure token.
void rhsTokens(const TermRewriteSystem& trs, const Term& t,
               std::vector<DiagToken>& out) {
  if (t.var) return;
  if (t.head == "Answer") {
    out.push_back({DiagToken::AnswerMark, ""});
    return;
  }
  if (isWSym(trs, t.head)) {
    // Exit rule: W(s(k),x) -> Base(pre) where pre's head is not W itself.
    for (const TrsRule& r : trs.rules) {
      if (r.lhs.head != t.head || r.rhs.args.empty()) continue;
      const Term& under = r.rhs.args[0];
      if (!under.var && under.head == t.head) continue;  // the peel rule
      rhsTokens(trs, under, out);
      out.push_back({DiagToken::Bwd, trs.labelOfSym.at(t.head)});
      return;
    }
    throw std::invalid_argument("counter symbol without an exit rule: " +
                                t.head);
  }
  if (!t.args.empty()) rhsTokens(trs, t.args[0], out);
  out.push_back(tokenOfSym(trs, t.head));
}

}  // namespace

std::vector<Diagram> decodeTrs(const TermRewriteSystem& trs) {
  std::vector<Diagram> out;
  for (const TrsRule& r : trs.rules) {
    if (isWSym(trs, r.lhs.head)) continue;  // folded into their entry rule
    if (r.lhs.args.size() != 1)
      throw std::invalid_argument("not an encoded diagram rule: " +
                                  renderTerm(r.lhs));
    Diagram d;
    DiagToken top = tokenOfSym(trs, r.lhs.head);
    if (top.kind != DiagToken::Fwd)
      throw std::invalid_argument("encoded rule must start with a "
                                  "transformation symbol: " +
                                  renderTerm(r.lhs));
    d.tLabel = top.label;
    const Term& inner = r.lhs.args[0];
    d.src = inner.var ? DiagToken{DiagToken::Bwd, ""} : tokenOfSym(trs, inner.head);
    if (inner.var || (d.src.kind == DiagToken::Fwd))
      throw std::invalid_argument("encoded rule source must be a reduction "
                                  "or the answer: " +
                                  renderTerm(r.lhs));
    rhsTokens(trs, r.rhs, d.join);
    // The innermost token of an encoded answer rule is the answer constant
    // itself, which renders at the front of the join.
    out.push_back(std::move(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Well-formedness, rendering, emission.
// ---------------------------------------------------------------------------

namespace {

void freeVarPositions(const TermRewriteSystem& trs, const Term& t,
                      const std::set<std::string>& bound,
                      const std::set<std::string>& declared,
                      std::vector<std::string>& problems) {
  if (t.var) {
    if (!bound.count(t.head) && !declared.count(t.head))
      problems.push_back("undeclared free right-hand-side variable " + t.head);
    return;
  }
  for (size_t i = 0; i < t.args.size(); ++i) {
    const Term& a = t.args[i];
    if (a.var && !bound.count(a.head) && declared.count(a.head)) {
      bool counterPos = isWSym(trs, t.head) && i == 0;
      if (!counterPos)
        problems.push_back("free counter variable " + a.head +
                           " outside a counter position in " + renderTerm(t));
      continue;
    }
    freeVarPositions(trs, a, bound, declared, problems);
  }
}

}  // namespace

std::vector<std::string> wellFormedness(const TermRewriteSystem& trs) {
  std::vector<std::string> problems;
  for (const TrsRule& r : trs.rules) {
    if (r.lhs.var) {
      problems.push_back("left-hand side is a lone variable: " + r.lhs.head);
      continue;
    }
    std::set<std::string> bound = termVars(r.lhs);
    if (r.rhs.var && !bound.count(r.rhs.head) && r.freeRhs.count(r.rhs.head))
      problems.push_back("free counter variable " + r.rhs.head +
                         " is the whole right-hand side");
    else
      freeVarPositions(trs, r.rhs, bound, r.freeRhs, problems);
  }
  return problems;
}

std::string renderRules(const TermRewriteSystem& trs) {
  std::string out;
  for (const TrsRule& r : trs.rules)
    out += renderTerm(r.lhs) + " -> " + renderTerm(r.rhs) + "\n";
  return out;
}

std::string emitTpdb(const TermRewriteSystem& trs) {
  // Variables bound on some left-hand side are genuine; free counter
  // variables become fresh constants so the problem stays a plain TRS.
  std::set<std::string> vars;
  std::set<std::string> consts;
  for (const TrsRule& r : trs.rules) {
    auto b = termVars(r.lhs);
    vars.insert(b.begin(), b.end());
  }
  std::vector<TrsRule> rules = trs.rules;
  for (TrsRule& r : rules) {
    std::set<std::string> bound = termVars(r.lhs);
    TermSubst close;
    for (const std::string& k : r.freeRhs)
      if (!bound.count(k)) {
        close[k] = mkTerm("c" + k);
        consts.insert("c" + k);
      }
    if (!close.empty()) r.rhs = applySubst(close, r.rhs);
  }
  std::ostringstream os;
  os << "(VAR";
  for (const auto& v : vars) os << " " << v;
  os << ")\n(STRATEGY INNERMOST)\n(RULES\n";
  for (const TrsRule& r : rules)
    os << "  " << renderTerm(r.lhs) << " -> " << renderTerm(r.rhs) << "\n";
  os << ")\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Term utilities.
// ---------------------------------------------------------------------------

Term applySubst(const TermSubst& s, const Term& t) {
  if (t.var) {
    auto it = s.find(t.head);
    return it == s.end() ? t : it->second;
  }
  Term out{t.head, false, {}};
  out.args.reserve(t.args.size());
  for (const Term& a : t.args) out.args.push_back(applySubst(s, a));
  return out;
}

namespace {

bool occurs(const std::string& v, const Term& t) {
  if (t.var) return t.head == v;
  return std::any_of(t.args.begin(), t.args.end(),
                     [&](const Term& a) { return occurs(v, a); });
}

bool unifyInto(const Term& a, const Term& b, TermSubst& s) {
  Term x = applySubst(s, a);
  Term y = applySubst(s, b);
  if (x.var) {
    if (y.var && y.head == x.head) return true;
    if (occurs(x.head, y)) return false;
    TermSubst one{{x.head, y}};
    for (auto& [k, v] : s) v = applySubst(one, v);
    s[x.head] = y;
    return true;
  }
  if (y.var) return unifyInto(y, x, s);
  if (x.head != y.head || x.args.size() != y.args.size()) return false;
  for (size_t i = 0; i < x.args.size(); ++i)
    if (!unifyInto(x.args[i], y.args[i], s)) return false;
  return true;
}

bool matchInto(const Term& pattern, const Term& t, TermSubst& s) {
  if (pattern.var) {
    auto it = s.find(pattern.head);
    if (it != s.end()) return it->second == t;
    s[pattern.head] = t;
    return true;
  }
  if (t.var || pattern.head != t.head || pattern.args.size() != t.args.size())
    return false;
  for (size_t i = 0; i < pattern.args.size(); ++i)
    if (!matchInto(pattern.args[i], t.args[i], s)) return false;
  return true;
}

}  // namespace

std::optional<TermSubst> unifyTerms(const Term& a, const Term& b) {
  TermSubst s;
  if (unifyInto(a, b, s)) return s;
  return std::nullopt;
}

std::optional<TermSubst> matchTerm(const Term& pattern, const Term& t) {
  TermSubst s;
  if (matchInto(pattern, t, s)) return s;
  return std::nullopt;
}

const Term* subtermAt(const Term& t, const std::vector<int>& pos) {
  const Term* cur = &t;
  for (int i : pos) {
    if (i < 0 || static_cast<size_t>(i) >= cur->args.size()) return nullptr;
    cur = &cur->args[i];
  }
  return cur;
}

Term replaceAt(const Term& t, const std::vector<int>& pos, const Term& sub) {
  if (pos.empty()) return sub;
  Term out = t;
  Term* cur = &out;
  for (size_t i = 0; i + 1 < pos.size(); ++i) cur = &cur->args[pos[i]];
  cur->args[pos.back()] = sub;
  return out;
}

bool containsInstance(const Term& t, const Term& pattern) {
  if (matchTerm(pattern, t)) return true;
  return std::any_of(t.args.begin(), t.args.end(), [&](const Term& a) {
    return containsInstance(a, pattern);
  });
}

Term renameVars(const Term& t, const std::string& suffix) {
  if (t.var) return mkVar(t.head + suffix);
  Term out{t.head, false, {}};
  for (const Term& a : t.args) out.args.push_back(renameVars(a, suffix));
  return out;
}

}  // namespace lrsx
