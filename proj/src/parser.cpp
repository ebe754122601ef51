#include "lrsx/calculus.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace lrsx {

namespace {

// Reserved body constant for the [env,d] constraint sugar.
const std::string kEnvNccSym = "_envncc";

struct Token {
  enum Type { Ident, Str, Punct, Hole, End } type = End;
  std::string text;
  int hole = 0;
  int line = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : src(text) { advance(); }

  const Token& peek() const { return cur; }
  const Token& peek2() {
    if (!hasNext) {
      next = lex();
      hasNext = true;
    }
    return next;
  }
  Token take() {
    Token t = cur;
    advance();
    return t;
  }
  bool isPunct(const std::string& p) const {
    return cur.type == Token::Punct && cur.text == p;
  }
  bool isIdent(const std::string& id) const {
    return cur.type == Token::Ident && cur.text == id;
  }
  void expectPunct(const std::string& p) {
    if (!isPunct(p)) fail("expected '" + p + "'");
    advance();
  }
  std::string expectIdent() {
    if (cur.type != Token::Ident) fail("expected identifier");
    return take().text;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(cur.line, msg + " (at '" + describe(cur) + "')");
  }

 private:
  static std::string describe(const Token& t) {
    if (t.type == Token::End) return "end of input";
    if (t.type == Token::Hole)
      return t.hole ? "[." + std::to_string(t.hole) + "]" : "[.]";
    return t.text;
  }

  void advance() {
    if (hasNext) {
      cur = next;
      hasNext = false;
    } else {
      cur = lex();
    }
  }

  Token lex() {
    for (;;) {
      while (pos < src.size() && (src[pos] == ' ' || src[pos] == '\t' ||
                                  src[pos] == '\r' || src[pos] == '\n')) {
        if (src[pos] == '\n') ++line;
        ++pos;
      }
      if (pos + 1 < src.size() && src[pos] == '-' && src[pos + 1] == '-') {
        while (pos < src.size() && src[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    Token t;
    t.line = line;
    if (pos >= src.size()) return t;
    char c = src[pos];
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos;
      while (pos < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[pos])) ||
              src[pos] == '_' || src[pos] == '\'')) {
        ++pos;
      }
      t.type = Token::Ident;
      t.text = src.substr(start, pos - start);
      return t;
    }
    if (c == '"') {
      size_t start = ++pos;
      while (pos < src.size() && src[pos] != '"') ++pos;
      if (pos >= src.size()) throw ParseError(line, "unterminated string");
      t.type = Token::Str;
      t.text = src.substr(start, pos - start);
      ++pos;
      return t;
    }
    // Holes [.], [.1], ...
    if (c == '[' && pos + 1 < src.size() && src[pos + 1] == '.') {
      size_t p = pos + 2;
      int idx = 0;
      while (p < src.size() && std::isdigit(static_cast<unsigned char>(src[p]))) {
        idx = idx * 10 + (src[p] - '0');
        ++p;
      }
      if (p < src.size() && src[p] == ']') {
        pos = p + 1;
        t.type = Token::Hole;
        t.hole = idx;
        return t;
      }
    }
    auto multi = [&](const std::string& s) {
      if (src.compare(pos, s.size(), s) == 0) {
        pos += s.size();
        t.type = Token::Punct;
        t.text = s;
        return true;
      }
      return false;
    };
    if (multi("::=") || multi("==>") || multi("<-") || multi("/=")) return t;
    t.type = Token::Punct;
    t.text = std::string(1, c);
    ++pos;
    return t;
  }

  const std::string& src;
  size_t pos = 0;
  int line = 1;
  Token cur, next;
  bool hasNext = false;
};

const std::set<std::string> kStatementKeywords = {
    "define", "declare", "ANSWER",  "union",    "closure", "subclass",
    "ignore", "restrict", "subsume", "deterministic"};

class Parser {
 public:
  explicit Parser(const std::string& text) : lx(text) {}

  CalculusDescription run() {
    while (lx.peek().type != Token::End) statement();
    return std::move(desc);
  }

 private:
  bool atStatementStart() {
    const Token& t = lx.peek();
    if (t.type == Token::Str) return true;
    if (t.type == Token::Punct && t.text == "{") return true;
    return t.type == Token::Ident && kStatementKeywords.count(t.text);
  }

  void statement() {
    const Token& t = lx.peek();
    if (t.type == Token::Str) return command();
    if (lx.isPunct("{")) return rule();
    std::string kw = lx.expectIdent();
    if (kw == "define") return defineClass();
    if (kw == "declare") return declareTable();
    if (kw == "ANSWER") return answer();
    if (kw == "union") return unionDecl();
    if (kw == "closure") return closureDecl();
    if (kw == "subclass") return subclassDecl();
    if (kw == "deterministic") {
      desc.deterministic = true;
      return;
    }
    if (kw == "ignore") {
      desc.ignored.push_back(lx.expectIdent());
      return;
    }
    if (kw == "restrict") {
      std::string name = lx.expectIdent();
      desc.useBudgets[name] = std::stoi(lx.expectIdent());
      return;
    }
    if (kw == "subsume") {
      std::string a = lx.expectIdent();
      desc.subsume[a] = lx.expectIdent();
      return;
    }
    lx.fail("unknown statement '" + kw + "'");
  }

  // ---- expressions -------------------------------------------------------

  bool atExprEnd(const std::string& closer, bool stopComma) {
    const Token& t = lx.peek();
    if (t.type == Token::End) return true;
    if (atStatementStart()) return true;
    if (t.type == Token::Ident && (t.text == "where" || t.text == "in"))
      return true;
    if (t.type == Token::Punct) {
      if (!closer.empty() && t.text == closer) return true;
      if (t.text == "|" || t.text == "==>") return true;
      if (stopComma && t.text == ",") return true;
      if (t.text == ")" || t.text == "]") return true;  // never consume a closer
    }
    return false;
  }

  ExprPtr parseOpenExpr(const std::string& closer, bool stopComma) {
    const Token& t = lx.peek();
    // Head symbol with arguments: a bare identifier that is not a
    // meta-variable of expression/context kind and is followed by more input.
    if (t.type == Token::Ident && t.text != "letrec" &&
        !(isMetaName(t.text) &&
          (kindOfName(t.text) == MvKind::Expression ||
           kindOfName(t.text) == MvKind::Context))) {
      const Token& n = lx.peek2();
      bool headApply =
          !(n.type == Token::Punct &&
            (n.text == "." || n.text == "^" || n.text == "=" || n.text == "[")) &&
          !(n.type == Token::End) && !followsExprEnd(n, closer, stopComma);
      if (headApply) {
        std::string sym = lx.take().text;
        std::vector<Arg> args;
        while (!atExprEnd(closer, stopComma)) args.push_back(parseArg(sym));
        return mkFun(sym, std::move(args));
      }
    }
    return parseAtom();
  }

  bool followsExprEnd(const Token& t, const std::string& closer, bool stopComma) {
    if (t.type == Token::End) return true;
    if (t.type == Token::Str) return true;
    if (t.type == Token::Ident &&
        (kStatementKeywords.count(t.text) || t.text == "where" || t.text == "in"))
      return true;
    if (t.type == Token::Punct) {
      if (!closer.empty() && t.text == closer) return true;
      if (t.text == "|" || t.text == "==>" || t.text == "{") return true;
      if (stopComma && t.text == ",") return true;
      if (t.text == ")" || t.text == "]") return true;
    }
    return false;
  }

  Arg parseArg(const std::string& sym) {
    const Token& t = lx.peek();
    if (t.type == Token::Ident) {
      const Token& n = lx.peek2();
      // Binder-prefix argument X1.X2.body.
      if (n.type == Token::Punct && n.text == ".") {
        Binder b;
        while (lx.peek().type == Token::Ident &&
               lx.peek2().type == Token::Punct && lx.peek2().text == ".") {
          b.binders.push_back(Var{lx.take().text});
          lx.expectPunct(".");
        }
        b.body = parseAtom();
        return Arg{std::move(b)};
      }
      // Variable arguments: X/Y/Z metas, or concrete names under `var`.
      bool varKind = isMetaName(t.text) && kindOfName(t.text) == MvKind::Variable;
      if (varKind || (sym == kVarSym && !isMetaName(t.text))) {
        return Arg{Var{lx.take().text}};
      }
    }
    return Arg{parseAtom()};
  }

  ExprPtr parseAtom() {
    const Token& t = lx.peek();
    if (t.type == Token::Hole) return mkHole(lx.take().hole);
    if (lx.isPunct("(")) {
      lx.take();
      ExprPtr e = parseOpenExpr(")", false);
      lx.expectPunct(")");
      return e;
    }
    if (lx.isPunct("\\")) {
      lx.take();
      Binder b;
      b.binders.push_back(Var{lx.expectIdent()});
      lx.expectPunct(".");
      while (lx.peek().type == Token::Ident && lx.peek2().type == Token::Punct &&
             lx.peek2().text == ".") {
        b.binders.push_back(Var{lx.take().text});
        lx.expectPunct(".");
      }
      b.body = parseAtom();
      return mkFun(kLambdaSym, {Arg{std::move(b)}});
    }
    if (t.type != Token::Ident) lx.fail("expected expression");
    if (t.text == "letrec") return parseLetrecExpr("", false);
    std::string name = lx.take().text;
    if (isMetaName(name)) {
      switch (kindOfName(name)) {
        case MvKind::Expression: return mkSVar(name);
        case MvKind::Context:
          if (lx.isPunct("[")) {
            lx.take();
            ExprPtr body = parseOpenExpr("]", false);
            lx.expectPunct("]");
            return mkCtxApp(name, body);
          }
          // Bare class occurrence in a grammar production.
          return mkCtxApp(name, mkHole());
        case MvKind::Variable: return mkVarE(Var{name});
        default: lx.fail("chain variable is not an expression");
      }
    }
    return mkFun(name, {});  // nullary symbol
  }

  ExprPtr parseLetrecExpr(const std::string& closer, bool stopComma) {
    if (!lx.isIdent("letrec")) lx.fail("expected letrec");
    lx.take();
    Env env = parseEnvSegments("in");
    if (!lx.isIdent("in")) lx.fail("expected 'in'");
    lx.take();
    ExprPtr body = parseOpenExpr(closer, stopComma);
    return mkLetrec(std::move(env), body);
  }

  // Segments separated by ';' until the stop identifier (not consumed) or a
  // closing bracket.
  Env parseEnvSegments(const std::string& stopIdent) {
    Env env;
    if (lx.isPunct("{")) {  // explicit empty environment {}
      lx.take();
      lx.expectPunct("}");
      return env;
    }
    for (;;) {
      if (lx.isIdent(stopIdent) || lx.isPunct(",") || lx.isPunct("]")) break;
      std::string name = lx.expectIdent();
      if (isMetaName(name) && kindOfName(name) == MvKind::Environment) {
        env.push_back(EnvVar{name});
      } else if (isMetaName(name) && kindOfName(name) == MvKind::Chain) {
        lx.expectPunct("^");
        std::string cls = lx.expectIdent();
        lx.expectPunct("[");
        Var v{lx.expectIdent()};
        lx.expectPunct(",");
        ExprPtr arg = parseOpenExpr("]", false);
        lx.expectPunct("]");
        env.push_back(ChainSeg{name, cls, v, arg});
      } else {
        lx.expectPunct("=");
        env.push_back(Binding{Var{name}, parseAtom()});
      }
      if (lx.isPunct(";")) {
        lx.take();
        continue;
      }
      break;
    }
    return env;
  }

  // ---- constraints -------------------------------------------------------

  ConstraintTuple parseConstraints() {
    ConstraintTuple d;
    for (;;) {
      if (lx.isPunct("(")) {
        lx.take();
        ExprPtr s = parseOpenExpr(",", true);
        lx.expectPunct(",");
        ExprPtr ctx = parseOpenExpr(")", false);
        lx.expectPunct(")");
        d.nccs.emplace_back(s, ctx);
        auto split = splitNcc(s, ctx);
        d.atoms.insert(split.begin(), split.end());
      } else if (lx.isPunct("[")) {
        lx.take();
        Env env = parseEnvSegments(",");
        lx.expectPunct(",");
        ExprPtr ctx = parseOpenExpr("]", false);
        lx.expectPunct("]");
        ExprPtr s = mkLetrec(std::move(env), mkFun(kEnvNccSym, {}));
        d.nccs.emplace_back(s, ctx);
        auto split = splitNcc(s, ctx);
        d.atoms.insert(split.begin(), split.end());
      } else {
        std::string name = lx.expectIdent();
        lx.expectPunct("/=");
        if (lx.peek().type == Token::Hole && lx.peek().hole == 0) {
          lx.take();
          d.neCtx.push_back({name});
        } else {
          lx.expectPunct("{");
          lx.expectPunct("}");
          d.neEnv.push_back({name});
        }
      }
      if (lx.isPunct(",")) {
        lx.take();
        continue;
      }
      break;
    }
    return d;
  }

  // ---- statements --------------------------------------------------------

  void defineClass() {
    ContextClassDef def;
    def.name = lx.expectIdent();
    lx.expectPunct("::=");
    for (;;) {
      CtxProduction p;
      p.shape = parseOpenExpr("", false);
      if (lx.isIdent("where")) {
        lx.take();
        p.guard = parseConstraints();
      }
      def.productions.push_back(std::move(p));
      if (lx.isPunct("|")) {
        lx.take();
        continue;
      }
      break;
    }
    desc.classes[def.name] = std::move(def);
  }

  void declareTable() {
    std::string which = lx.expectIdent();
    std::string k1 = lx.expectIdent();
    std::string k2 = lx.expectIdent();
    lx.expectPunct("=");
    lx.expectPunct("(");
    if (which == "prefix") {
      std::string k3 = lx.expectIdent();
      lx.expectPunct(",");
      std::string k4 = lx.expectIdent();
      lx.expectPunct(")");
      desc.prefix[{k1, k2}] = {k3, k4};
    } else if (which == "fork") {
      ForkEntry e;
      e.k3 = lx.expectIdent();
      lx.expectPunct(",");
      e.k4 = lx.expectIdent();
      lx.expectPunct(",");
      e.k5 = lx.expectIdent();
      lx.expectPunct(",");
      e.shape = parseAtom();
      lx.expectPunct(")");
      desc.fork[{k1, k2}].push_back(std::move(e));
    } else {
      lx.fail("expected 'prefix' or 'fork'");
    }
  }

  void rule() {
    lx.expectPunct("{");
    Rule r;
    std::vector<std::string> parts;
    bool closure = false;
    for (;;) {
      if (lx.isPunct("+")) {
        lx.take();
        closure = true;
      } else {
        parts.push_back(lx.expectIdent());
      }
      if (lx.isPunct(",")) {
        lx.take();
        continue;
      }
      break;
    }
    lx.expectPunct("}");
    size_t i = 0;
    if (!parts.empty() && parts[0] == "SR") {
      r.kind = RuleKind::SR;
      i = 1;
    } else {
      r.kind = RuleKind::T;
    }
    if (i >= parts.size()) lx.fail("rule header needs a name");
    r.name = parts[i++];
    if (i < parts.size()) {
      r.variant = std::stoi(parts[i++]);
      if (i < parts.size()) lx.fail("too many rule header components");
    }
    r.closure = closure;
    r.lhs = parseOpenExpr("", false);
    if (!lx.isPunct("==>")) lx.fail("expected '==>'");
    lx.take();
    r.rhs = parseOpenExpr("", false);
    if (lx.isIdent("where")) {
      lx.take();
      r.delta = parseConstraints();
    }
    (r.kind == RuleKind::SR ? desc.srRules : desc.transformations)
        .push_back(std::move(r));
  }

  void answer() {
    Answer a;
    a.expr = parseOpenExpr("", false);
    if (lx.isIdent("where")) {
      lx.take();
      a.delta = parseConstraints();
    }
    desc.answers.push_back(std::move(a));
  }

  void command() {
    OverlapCommand c;
    c.outFile = lx.take().text;
    lx.expectPunct("<-");
    if (lx.expectIdent() != "overlap") lx.fail("expected 'overlap'");
    lx.expectPunct("(");
    c.ruleName = lx.expectIdent();
    if (lx.isPunct(",")) {
      lx.take();
      c.variant = std::stoi(lx.expectIdent());
    }
    lx.expectPunct(")");
    lx.expectPunct(".");
    std::string side = lx.expectIdent();
    if (side == "l") {
      c.left = true;
    } else if (side == "r") {
      c.left = false;
    } else {
      lx.fail("expected '.l' or '.r'");
    }
    if (lx.expectIdent() != "all") lx.fail("expected 'all'");
    desc.commands.push_back(std::move(c));
  }

  void unionDecl() {
    std::string name = lx.expectIdent();
    lx.expectPunct("=");
    std::vector<std::string> members;
    members.push_back(lx.expectIdent());
    while (lx.isPunct("|")) {
      lx.take();
      members.push_back(lx.expectIdent());
    }
    desc.unions[name] = std::move(members);
  }

  void closureDecl() {
    std::string name = lx.expectIdent();
    lx.expectPunct(",");
    lx.expectPunct("+");
    if (lx.expectIdent() != "of") lx.fail("expected 'of'");
    desc.closures[name] = lx.expectIdent();
  }

  void subclassDecl() {
    std::string sub = lx.expectIdent();
    desc.subclasses[sub].insert(lx.expectIdent());
  }

  Lexer lx;
  CalculusDescription desc;
};

}  // namespace

namespace {
void inferSignatures(const ExprPtr& e, std::map<std::string, SynType>& sig,
                     std::vector<Diagnostic>& out);
}

CalculusDescription parseCalculus(const std::string& text) {
  Parser p(text);
  CalculusDescription desc = p.run();
  // Infer symbol signatures from first use (consistency checked in validate).
  desc.symbols[kVarSym] = SynType{{ArgKind{true, 0}}};
  desc.symbols[kLambdaSym] = SynType{{ArgKind{false, 1}}};
  std::vector<Diagnostic> ignore;
  auto infer = [&](const ExprPtr& e) { inferSignatures(e, desc.symbols, ignore); };
  for (const auto& r : desc.srRules) {
    infer(r.lhs);
    infer(r.rhs);
  }
  for (const auto& r : desc.transformations) {
    infer(r.lhs);
    infer(r.rhs);
  }
  for (const auto& a : desc.answers) infer(a.expr);
  for (const auto& [name, def] : desc.classes)
    for (const auto& p : def.productions) infer(p.shape);
  return desc;
}

// ---------------------------------------------------------------------------
// Description queries.
// ---------------------------------------------------------------------------

const ContextClassDef* CalculusDescription::classOf(const std::string& name) const {
  auto it = classes.find(name);
  return it == classes.end() ? nullptr : &it->second;
}

bool CalculusDescription::isSubclassOf(const std::string& sub,
                                       const std::string& super) const {
  if (sub == super) return true;
  std::vector<std::string> work{sub};
  std::set<std::string> seen{sub};
  while (!work.empty()) {
    std::string cur = work.back();
    work.pop_back();
    auto it = subclasses.find(cur);
    if (it == subclasses.end()) continue;
    for (const auto& s : it->second) {
      if (s == super) return true;
      if (seen.insert(s).second) work.push_back(s);
    }
  }
  return false;
}

std::vector<const Rule*> CalculusDescription::transformationsNamed(
    const std::string& name, int variant) const {
  std::vector<const Rule*> out;
  for (const auto& r : transformations) {
    if (r.name == name && (variant == 0 || r.variant == variant))
      out.push_back(&r);
  }
  return out;
}

std::string CalculusDescription::unionNameOf(const std::string& ruleName) const {
  std::string cur = ruleName;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [uname, members] : unions) {
      if (std::find(members.begin(), members.end(), cur) != members.end()) {
        cur = uname;
        changed = true;
        break;
      }
    }
  }
  return cur;
}

std::string Rule::label() const {
  std::string out = kind == RuleKind::SR ? "SR," + name : name;
  if (closure) {
    out += ",+";
  } else if (variant != 0) {
    out += "," + std::to_string(variant);
  }
  return out;
}

std::string Rule::baseLabel() const {
  std::string out = kind == RuleKind::SR ? "SR," + name : name;
  if (closure) out += ",+";
  return out;
}

Rule reverseRule(const Rule& rule) {
  if (rule.kind != RuleKind::T)
    throw std::invalid_argument("only transformations can be reversed");
  Rule out = rule;
  std::swap(out.lhs, out.rhs);
  out.reversed = !rule.reversed;
  return out;
}

// ---------------------------------------------------------------------------
// Validation.
// ---------------------------------------------------------------------------

namespace {

void inferSignatures(const ExprPtr& e, std::map<std::string, SynType>& sig,
                     std::vector<Diagnostic>& out) {
  if (auto* c = std::get_if<CtxApp>(&e->node)) {
    inferSignatures(c->body, sig, out);
    return;
  }
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    for (const auto& seg : l->env) {
      if (auto* b = std::get_if<Binding>(&seg)) inferSignatures(b->body, sig, out);
      if (auto* ch = std::get_if<ChainSeg>(&seg)) inferSignatures(ch->arg, sig, out);
    }
    inferSignatures(l->body, sig, out);
    return;
  }
  auto* f = std::get_if<FunApp>(&e->node);
  if (!f) return;
  SynType st;
  for (const auto& a : f->args) {
    if (std::holds_alternative<Var>(a)) {
      st.args.push_back(ArgKind{true, 0});
    } else if (auto* x = std::get_if<ExprPtr>(&a)) {
      st.args.push_back(ArgKind{false, 0});
      inferSignatures(*x, sig, out);
    } else {
      const auto& b = std::get<Binder>(a);
      st.args.push_back(ArgKind{false, static_cast<int>(b.binders.size())});
      inferSignatures(b.body, sig, out);
    }
  }
  auto [it, fresh] = sig.try_emplace(f->sym, st);
  if (!fresh && !(it->second == st)) {
    out.push_back({Diagnostic::Error,
                   "symbol '" + f->sym + "' used with inconsistent signature"});
  }
}

struct OccCounts {
  std::map<std::string, int> s, e, d, ch;
  // Chain name -> set of distinct letrec environments it occurs in.
  std::map<std::string, int> chainEnvs;
};

void countOcc(const ExprPtr& e, OccCounts& oc) {
  if (auto* s = std::get_if<SVar>(&e->node)) {
    ++oc.s[s->name];
    return;
  }
  if (auto* c = std::get_if<CtxApp>(&e->node)) {
    ++oc.d[c->name];
    countOcc(c->body, oc);
    return;
  }
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    std::set<std::string> chainsHere;
    for (const auto& seg : l->env) {
      if (auto* ev = std::get_if<EnvVar>(&seg)) {
        ++oc.e[ev->name];
      } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
        ++oc.ch[ch->name];
        chainsHere.insert(ch->name);
        countOcc(ch->arg, oc);
      } else {
        countOcc(std::get<Binding>(seg).body, oc);
      }
    }
    for (const auto& n : chainsHere) ++oc.chainEnvs[n];
    countOcc(l->body, oc);
    return;
  }
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    for (const auto& a : f->args) {
      if (auto* x = std::get_if<ExprPtr>(&a)) countOcc(*x, oc);
      if (auto* b = std::get_if<Binder>(&a)) countOcc(b->body, oc);
    }
  }
}

void collectMetaNames(const ExprPtr& e, std::set<std::string>& out) {
  for (const auto& a : variableSets(e).metas) out.insert(a.name);
  auto vs = variableSets(e);
  // Variable metas occur inside vs.metas already; concrete names ignored.
  (void)vs;
}

std::set<std::string> deltaMetaNames(const ConstraintTuple& d) {
  std::set<std::string> out;
  for (const auto& g : d.neCtx) out.insert(g.begin(), g.end());
  for (const auto& g : d.neEnv) out.insert(g.begin(), g.end());
  for (const auto& [s, ctx] : d.nccs) {
    collectMetaNames(s, out);
    collectMetaNames(ctx, out);
  }
  return out;
}

// Binder names (lambda and letrec) and E/Ch segment names per side, for the
// syntactic sufficient check of the LVC-preservation condition.
struct SideShape {
  std::multiset<std::string> binders;
  std::set<std::string> envSegs;
};

void sideShape(const ExprPtr& e, SideShape& out) {
  if (auto* c = std::get_if<CtxApp>(&e->node)) {
    sideShape(c->body, out);
    return;
  }
  if (auto* l = std::get_if<Letrec>(&e->node)) {
    for (const auto& seg : l->env) {
      if (auto* ev = std::get_if<EnvVar>(&seg)) {
        out.envSegs.insert(ev->name);
      } else if (auto* ch = std::get_if<ChainSeg>(&seg)) {
        out.envSegs.insert(ch->name);
        out.binders.insert(ch->var.name);
        sideShape(ch->arg, out);
      } else {
        const auto& b = std::get<Binding>(seg);
        out.binders.insert(b.var.name);
        sideShape(b.body, out);
      }
    }
    sideShape(l->body, out);
    return;
  }
  if (auto* f = std::get_if<FunApp>(&e->node)) {
    for (const auto& a : f->args) {
      if (auto* x = std::get_if<ExprPtr>(&a)) sideShape(*x, out);
      if (auto* b = std::get_if<Binder>(&a)) {
        for (const auto& v : b->binders) out.binders.insert(v.name);
        sideShape(b->body, out);
      }
    }
  }
}

void validateRule(const Rule& r, const CalculusDescription& desc,
                  std::vector<Diagnostic>& out) {
  const std::string where = "rule " + r.label() + ": ";

  // (i) constraint meta-variables covered by the sides.
  std::set<std::string> sideMetas;
  collectMetaNames(r.lhs, sideMetas);
  collectMetaNames(r.rhs, sideMetas);
  for (const auto& n : deltaMetaNames(r.delta)) {
    if (isMetaName(n) && !sideMetas.count(n)) {
      out.push_back({Diagnostic::Error,
                     where + "constraint mentions '" + n +
                         "' which occurs on neither side (condition i)"});
    }
  }

  // (ii) occurrence restrictions per side.
  for (const ExprPtr& side : {r.lhs, r.rhs}) {
    OccCounts oc;
    countOcc(side, oc);
    for (const auto& [n, c] : oc.s) {
      if (c > 2)
        out.push_back({Diagnostic::Error,
                       where + "S-variable '" + n +
                           "' occurs more than twice on one side (condition ii)"});
    }
    for (const auto* m : {&oc.e, &oc.d, &oc.ch}) {
      for (const auto& [n, c] : *m) {
        if (c > 1)
          out.push_back({Diagnostic::Error,
                         where + "meta-variable '" + n +
                             "' occurs more than once on one side (condition ii)"});
      }
    }
    if (side == r.lhs) {
      for (const auto& [n, c] : oc.chainEnvs) {
        if (c > 1)
          out.push_back({Diagnostic::Error,
                         where + "chain variable '" + n +
                             "' spans several environments (condition ii)"});
      }
    }
  }

  // Chain variables make a transformation not overlapable.
  if (r.kind == RuleKind::T) {
    OccCounts oc;
    countOcc(r.lhs, oc);
    countOcc(r.rhs, oc);
    if (!oc.ch.empty()) {
      out.push_back({Diagnostic::Warning,
                     where + "contains chain variables: not overlapable"});
    }
  }

  // (iii) sufficient syntactic check; failure is a warning only.
  SideShape ls, rs;
  sideShape(r.lhs, ls);
  sideShape(r.rhs, rs);
  auto justified = [&](const std::string& name) {
    return deltaMetaNames(r.delta).count(name) != 0;
  };
  bool ok = true;
  for (const auto& b : rs.binders) {
    if (ls.binders.count(b) < rs.binders.count(b)) ok = false;
  }
  for (const auto& b : ls.binders) {
    if (rs.binders.count(b) < ls.binders.count(b) && !justified(b)) ok = false;
  }
  for (const auto& n : rs.envSegs) {
    if (!ls.envSegs.count(n)) ok = false;
  }
  for (const auto& n : ls.envSegs) {
    if (!rs.envSegs.count(n) && !justified(n)) ok = false;
  }
  if (!ok) {
    out.push_back({Diagnostic::Warning,
                   where + "cannot syntactically confirm LVC preservation "
                           "(condition iii)"});
  }

  // Class names used in context applications must be declared.
  std::set<std::string> metas;
  collectMetaNames(r.lhs, metas);
  collectMetaNames(r.rhs, metas);
  for (const auto& n : metas) {
    if (isMetaName(n) && kindOfName(n) == MvKind::Context) {
      std::string cls = classOfContextName(n);
      if (!desc.classOf(cls)) {
        out.push_back({Diagnostic::Error,
                       where + "context class '" + cls + "' is not defined"});
      }
    }
  }
}

}  // namespace

std::vector<Diagnostic> validate(const CalculusDescription& desc) {
  std::vector<Diagnostic> out;

  std::map<std::string, SynType> sig = desc.symbols;
  auto inferAll = [&](const ExprPtr& e) { inferSignatures(e, sig, out); };
  for (const auto& r : desc.srRules) {
    inferAll(r.lhs);
    inferAll(r.rhs);
  }
  for (const auto& r : desc.transformations) {
    inferAll(r.lhs);
    inferAll(r.rhs);
  }
  for (const auto& a : desc.answers) inferAll(a.expr);
  for (const auto& [name, def] : desc.classes) {
    for (const auto& p : def.productions) inferAll(p.shape);
  }

  for (const auto& [pair, entry] : desc.prefix) {
    for (const std::string& k : {pair.first, pair.second, entry.first, entry.second}) {
      if (!desc.classOf(k))
        out.push_back({Diagnostic::Error,
                       "prefix table mentions undefined class '" + k + "'"});
    }
  }
  for (const auto& [pair, entries] : desc.fork) {
    for (const auto& e : entries) {
      for (const std::string& k : {pair.first, pair.second, e.k3, e.k4, e.k5}) {
        if (!desc.classOf(k))
          out.push_back({Diagnostic::Error,
                         "fork table mentions undefined class '" + k + "'"});
      }
      if (countHoles(e.shape) != 2)
        out.push_back({Diagnostic::Error,
                       "fork shape must have exactly two holes"});
    }
  }

  std::set<std::pair<std::string, int>> names;
  for (const auto* rules : {&desc.srRules, &desc.transformations}) {
    for (const auto& r : *rules) {
      if (!r.closure && !names.insert({r.label(), 0}).second) {
        out.push_back({Diagnostic::Error,
                       "duplicate rule name " + r.label()});
      }
      validateRule(r, desc, out);
    }
  }

  for (const auto& c : desc.commands) {
    if (desc.transformationsNamed(c.ruleName, c.variant).empty()) {
      out.push_back({Diagnostic::Error,
                     "overlap command names unknown transformation '" +
                         c.ruleName + "'"});
    }
  }
  for (const auto& [name, base] : desc.closures) {
    bool found = desc.unions.count(base) != 0;
    for (const auto& r : desc.srRules) found = found || r.name == base;
    if (!found)
      out.push_back({Diagnostic::Error,
                     "closure '" + name + "' of unknown base '" + base + "'"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering.
// ---------------------------------------------------------------------------

namespace {

bool isEnvNccSugar(const ExprPtr& s) {
  if (auto* l = std::get_if<Letrec>(&s->node)) {
    if (auto* f = std::get_if<FunApp>(&l->body->node)) return f->sym == kEnvNccSym;
  }
  return false;
}

std::string renderConstraints(const ConstraintTuple& d) {
  std::vector<std::string> parts;
  for (const auto& g : d.neCtx) {
    for (const auto& n : g) parts.push_back(n + " /= [.]");
  }
  for (const auto& g : d.neEnv) {
    for (const auto& n : g) parts.push_back(n + " /= {}");
  }
  for (const auto& [s, ctx] : d.nccs) {
    if (isEnvNccSugar(s)) {
      const auto& l = std::get<Letrec>(s->node);
      parts.push_back("[" + render(l.env) + ", " + render(ctx) + "]");
    } else {
      parts.push_back("(" + render(s) + ", " + render(ctx) + ")");
    }
  }
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) out += (i ? ", " : "") + parts[i];
  return out;
}

}  // namespace

std::string render(const Rule& rule) {
  std::string out = "{" + rule.label() + "} " + render(rule.lhs) + " ==> " +
                    render(rule.rhs);
  std::string cs = renderConstraints(rule.delta);
  if (!cs.empty()) out += " where " + cs;
  return out;
}

std::string render(const CalculusDescription& desc) {
  std::ostringstream os;
  for (const auto& [name, def] : desc.classes) {
    os << "define " << name << " ::= ";
    for (size_t i = 0; i < def.productions.size(); ++i) {
      if (i) os << " | ";
      os << render(def.productions[i].shape);
      std::string g = renderConstraints(def.productions[i].guard);
      if (!g.empty()) os << " where " << g;
    }
    os << "\n";
  }
  for (const auto& [pair, e] : desc.prefix) {
    os << "declare prefix " << pair.first << " " << pair.second << " = ("
       << e.first << "," << e.second << ")\n";
  }
  for (const auto& [pair, entries] : desc.fork) {
    for (const auto& e : entries) {
      os << "declare fork " << pair.first << " " << pair.second << " = ("
         << e.k3 << "," << e.k4 << "," << e.k5 << "," << render(e.shape)
         << ")\n";
    }
  }
  for (const auto& r : desc.srRules) os << render(r) << "\n";
  for (const auto& a : desc.answers) {
    os << "ANSWER " << render(a.expr);
    std::string cs = renderConstraints(a.delta);
    if (!cs.empty()) os << " where " << cs;
    os << "\n";
  }
  for (const auto& r : desc.transformations) os << render(r) << "\n";
  for (const auto& [name, members] : desc.unions) {
    os << "union " << name << " = ";
    for (size_t i = 0; i < members.size(); ++i) os << (i ? " | " : "") << members[i];
    os << "\n";
  }
  for (const auto& [name, base] : desc.closures) {
    os << "closure " << name << ",+ of " << base << "\n";
  }
  for (const auto& [sub, supers] : desc.subclasses) {
    for (const auto& s : supers) os << "subclass " << sub << " " << s << "\n";
  }
  if (desc.deterministic) os << "deterministic\n";
  for (const auto& n : desc.ignored) os << "ignore " << n << "\n";
  for (const auto& [n, k] : desc.useBudgets) os << "restrict " << n << " " << k << "\n";
  for (const auto& [a, b] : desc.subsume) os << "subsume " << a << " " << b << "\n";
  for (const auto& c : desc.commands) {
    os << "\"" << c.outFile << "\" <- overlap (" << c.ruleName;
    if (c.variant) os << "," << c.variant;
    os << ")." << (c.left ? "l" : "r") << " all\n";
  }
  return os.str();
}

}  // namespace lrsx
