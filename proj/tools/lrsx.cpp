// Command-line driver: check | overlap | join | induct | oracle. Every run
// writes its artifacts plus a manifest into one output directory; diagram and
// rewrite-system files depend only on the input and flags, never on the run.
#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lrsx/oracle.hpp"
#include "lrsx/termination.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lrsx;

namespace {

// Exit contract: 0 success, 1 proof or coverage failure, 2 input error.
constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kInputError = 2;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string readFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void writeFile(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  os << text;
}

struct Run {
  std::string input;
  std::string command;
  fs::path outDir;
  json config = json::object();
  std::vector<std::string> outputs;
  json result = json::object();
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();

  fs::path artifact(const std::string& name) {
    outputs.push_back(name);
    return outDir / name;
  }

  void writeManifest() {
    json m;
    m["input"] = input;
    m["command"] = command;
    m["config"] = config;
    m["outputs"] = outputs;
    m["elapsed_ms"] =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - start)
            .count();
    m["result"] = result;
    writeFile(outDir / "manifest.json", m.dump(2) + "\n");
  }
};

Run openRun(const std::string& input, const std::string& command,
            std::string outDir) {
  if (outDir.empty())
    outDir = fs::path(input).stem().string() + "_" + command;
  fs::create_directories(outDir);
  return Run{input, command, outDir};
}

CalculusDescription loadCalculus(const std::string& path) {
  return parseCalculus(readFile(path));
}

bool hasChainEnv(const Env& env);
bool hasChain(const ExprPtr& e) {
  if (const auto* c = std::get_if<CtxApp>(&e->node)) return hasChain(c->body);
  if (const auto* l = std::get_if<Letrec>(&e->node))
    return hasChainEnv(l->env) || hasChain(l->body);
  if (const auto* f = std::get_if<FunApp>(&e->node))
    for (const Arg& a : f->args) {
      if (const auto* x = std::get_if<ExprPtr>(&a)) {
        if (hasChain(*x)) return true;
      } else if (const auto* b = std::get_if<Binder>(&a)) {
        if (hasChain(b->body)) return true;
      }
    }
  return false;
}
bool hasChainEnv(const Env& env) {
  for (const EnvSeg& s : env) {
    if (std::holds_alternative<ChainSeg>(s)) return true;
    if (const auto* b = std::get_if<Binding>(&s))
      if (hasChain(b->body)) return true;
  }
  return false;
}

bool usesChainVariables(const CalculusDescription& calc) {
  for (const Rule& r : calc.srRules)
    if (hasChain(r.lhs) || hasChain(r.rhs)) return true;
  for (const Rule& r : calc.transformations)
    if (hasChain(r.lhs) || hasChain(r.rhs)) return true;
  for (const Answer& a : calc.answers)
    if (hasChain(a.expr)) return true;
  return false;
}

std::vector<OverlapCommand> selectCommands(const CalculusDescription& calc,
                                           const std::string& only) {
  std::vector<OverlapCommand> out;
  for (const OverlapCommand& c : calc.commands)
    if (only.empty() || c.outFile == only) out.push_back(c);
  if (!only.empty() && out.empty())
    throw InputError("no overlap command writes \"" + only + "\"");
  return out;
}

int cmdCheck(const std::string& input, const std::string& outDir) {
  Run run = openRun(input, "check", outDir);
  CalculusDescription calc = loadCalculus(input);
  std::vector<Diagnostic> diags = validate(calc);
  json lines = json::array();
  int errors = 0;
  for (const Diagnostic& d : diags) {
    const char* tag = d.level == Diagnostic::Error     ? "error"
                      : d.level == Diagnostic::Warning ? "warning"
                                                       : "note";
    errors += d.level == Diagnostic::Error ? 1 : 0;
    std::cout << tag << ": " << d.message << "\n";
    lines.push_back(std::string(tag) + ": " + d.message);
  }
  run.result["diagnostics"] = lines;
  run.result["errors"] = errors;
  run.result["sr_rules"] = calc.srRules.size();
  run.result["transformations"] = calc.transformations.size();
  run.result["commands"] = calc.commands.size();
  run.writeManifest();
  std::cout << input << ": " << errors << " error(s)\n";
  return errors == 0 ? kOk : kInputError;
}

std::string renderOverlap(const Overlap& o) {
  std::string line = o.provenance + " | ";
  if (o.kind == Overlap::Answer)
    line += "answer " + render(o.peak.expr);
  else
    line += "peak " + render(o.peak.expr) + " | <-" + o.srLabel + "- " +
            render(o.left.expr);
  line += " | " + std::string(o.commuting ? "<-" : "-") + o.tLabel +
          (o.commuting ? "- " : "-> ") + render(o.right.expr);
  if (o.trivial) line += " | disjoint";
  return line;
}

int cmdOverlap(const std::string& input, const std::string& outDir,
               const std::string& only) {
  Run run = openRun(input, "overlap", outDir);
  CalculusDescription calc = loadCalculus(input);
  Solver solver(calc);
  json summary = json::object();
  for (const OverlapCommand& cmd : selectCommands(calc, only)) {
    std::vector<std::string> diagnostics;
    std::string text;
    int count = 0;
    for (const Rule* t : calc.transformationsNamed(cmd.ruleName, cmd.variant))
      for (const Overlap& o :
           computeOverlaps(solver, *t, cmd.left, &diagnostics)) {
        text += renderOverlap(o) + "\n";
        ++count;
      }
    for (const std::string& d : diagnostics) text += "skipped: " + d + "\n";
    writeFile(run.artifact(cmd.outFile + ".overlaps"), text);
    summary[cmd.outFile] = count;
    std::cout << cmd.outFile << ": " << count << " overlap(s)\n";
  }
  run.result["overlaps"] = summary;
  run.writeManifest();
  return kOk;
}

int cmdJoin(const std::string& input, const std::string& outDir) {
  Run run = openRun(input, "join", outDir);
  CalculusDescription calc = loadCalculus(input);
  SearchConfig cfg = SearchConfig::fromCalculus(calc);
  run.config["maxDepth"] = cfg.maxDepth;
  run.config["caseSplitBudget"] = cfg.caseSplitBudget;
  json summary = json::object();
  bool allJoined = true;
  for (const OverlapCommand& cmd : calc.commands) {
    DiagramRun r = computeDiagrams(calc, cmd, cfg);
    std::string text;
    for (const Diagram& d : r.diagrams) text += render(d) + "\n";
    writeFile(run.artifact(cmd.outFile), text);
    if (!r.complete()) {
      std::string rep;
      for (const std::string& u : r.unjoined) rep += "unjoined: " + u + "\n";
      for (const std::string& d : r.diagnostics) rep += "skipped: " + d + "\n";
      writeFile(run.artifact(cmd.outFile + ".unjoined"), rep);
      allJoined = false;
    }
    json s;
    s["overlaps"] = r.overlaps.size();
    s["diagrams"] = r.diagrams.size();
    s["unjoined"] = r.unjoined.size();
    summary[cmd.outFile] = s;
    std::cout << cmd.outFile << ": " << r.overlaps.size() << " overlap(s), "
              << r.diagrams.size() << " diagram(s), " << r.unjoined.size()
              << " unjoined\n";
  }
  run.result["commands"] = summary;
  run.result["joined"] = allJoined;
  run.writeManifest();
  return allJoined ? kOk : kFail;
}

std::vector<Diagram> readDiagramFile(const std::string& path) {
  std::istringstream is(readFile(path));
  std::vector<Diagram> out;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty() || line.rfind("--", 0) == 0) continue;
    try {
      out.push_back(parseDiagramLine(line));
    } catch (const std::exception& e) {
      throw InputError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

int cmdInduct(const std::vector<std::string>& inputs,
              const std::string& outDir, bool emitOnly, std::string atp,
              int atpTimeout, int loopDepth) {
  if (const char* env = std::getenv("LRSX_ATP_PATH")) atp = env;
  if (!atp.empty() && atp.find("{file}") == std::string::npos)
    atp += " {file}";
  Run run = openRun(inputs.front(), "induct", outDir);
  run.config["emit_only"] = emitOnly;
  run.config["atp"] = atp;
  json verdicts = json::object();
  bool allProved = true;
  for (const std::string& input : inputs) {
    std::string stem = fs::path(input).stem().string();
    TermRewriteSystem trs = encodeTrs(readDiagramFile(input));
    for (const std::string& w : wellFormedness(trs))
      throw InputError(input + ": " + w);
    writeFile(run.artifact(stem + ".rules.txt"), renderRules(trs));
    writeFile(run.artifact(stem + ".trs"), emitTpdb(trs));
    if (emitOnly) {
      verdicts[stem] = "Emitted";
      std::cout << stem << ": emitted, " << trs.rules.size() << " rule(s)\n";
      continue;
    }
    TerminationVerdict v = atp.empty()
                               ? proveInnermostTermination(trs)
                               : runExternalProver(trs, atp, atpTimeout);
    json jv;
    jv["kind"] = v.kind == TerminationVerdict::Proved      ? "Proved"
                 : v.kind == TerminationVerdict::Disproved ? "Disproved"
                                                           : "Unknown";
    jv["reason"] = v.reason;
    jv["external"] = v.externallyCertified;
    if (v.kind != TerminationVerdict::Proved) {
      allProved = false;
      if (v.kind != TerminationVerdict::Disproved)
        if (auto loop = detectNontermination(trs, loopDepth)) {
          jv["kind"] = "Disproved";
          jv["loop_replayed"] = replayLoop(trs, *loop);
          v.kind = TerminationVerdict::Disproved;
        }
    }
    verdicts[stem] = jv;
    std::cout << stem << ": " << jv["kind"].get<std::string>()
              << (v.reason.empty() ? "" : " (" + v.reason + ")") << "\n";
  }
  run.result["verdicts"] = verdicts;
  run.writeManifest();
  return emitOnly || allProved ? kOk : kFail;
}

int cmdOracle(const std::string& input, const std::string& outDir, int size,
              int fuel) {
  Run run = openRun(input, "oracle", outDir);
  run.config["size"] = size;
  CalculusDescription calc = loadCalculus(input);
  if (size == 0) {
    run.result["vacuous"] = true;
    run.writeManifest();
    std::cout << "size 0: nothing to enumerate, vacuously covered\n";
    return kOk;
  }
  if (usesChainVariables(calc))
    throw InputError(
        "the ground oracle does not support chain variables; remove the "
        "chain rules or validate a chain-free fragment");
  if (fuel <= 0) fuel = 4 * size;
  run.config["fuel"] = fuel;
  SearchConfig cfg = SearchConfig::fromCalculus(calc);
  std::string report;
  bool ok = true;

  DeterminismReport det = checkDeterminism(calc, size);
  report += "determinism: " + std::to_string(det.expressions) +
            " expression(s), " + std::to_string(det.counterexamples.size()) +
            " counterexample(s)\n";
  for (const std::string& c : det.counterexamples) report += "  " + c + "\n";
  if (!det.deterministic()) ok = false;
  run.result["determinism_counterexamples"] = det.counterexamples.size();

  json coverage = json::object();
  std::set<std::string> tNames;
  for (const OverlapCommand& cmd : calc.commands) {
    tNames.insert(cmd.ruleName);
    DiagramRun r = computeDiagrams(calc, cmd, cfg);
    if (!r.complete()) {
      ok = false;
      report += cmd.outFile + ": join search incomplete, " +
                std::to_string(r.unjoined.size()) + " unjoined\n";
    }
    CoverageReport cov =
        validateDiagrams(calc, r.diagrams, cmd.ruleName, cmd.left, size, fuel);
    report += cmd.outFile + ": " + std::to_string(cov.covered) + "/" +
              std::to_string(cov.forks) + " ground overlap(s) covered\n";
    for (const std::string& u : cov.uncovered)
      report += "  uncovered: " + u + "\n";
    if (!cov.complete()) ok = false;
    json jc;
    jc["forks"] = cov.forks;
    jc["covered"] = cov.covered;
    coverage[cmd.outFile] = jc;
  }
  run.result["coverage"] = coverage;

  // Convergence equivalence across every ground transformation step.
  int steps = 0, mismatches = 0;
  std::vector<ExprPtr> universe = enumerateGround(calc, size);
  for (const ExprPtr& s : universe)
    for (const std::string& name : tNames)
      for (const Rule* t : calc.transformationsNamed(name))
        for (const GroundStep& st : groundApply(calc, *t, s)) {
          ++steps;
          int f = std::max(fuel, defaultFuel(st.source));
          auto a = converges(calc, st.source, f).verdict;
          auto b = converges(calc, st.target, f).verdict;
          if (a == ConvergenceResult::FuelExhausted ||
              b == ConvergenceResult::FuelExhausted || a != b) {
            ++mismatches;
            report += "  convergence mismatch: " + render(st.source) + " -" +
                      st.label + "-> " + render(st.target) + "\n";
          }
        }
  report += "convergence equivalence: " + std::to_string(steps) +
            " step(s), " + std::to_string(mismatches) + " mismatch(es)\n";
  if (mismatches > 0) ok = false;
  run.result["transformation_steps"] = steps;
  run.result["convergence_mismatches"] = mismatches;
  run.result["covered"] = ok;

  writeFile(run.artifact("oracle_report.txt"), report);
  run.writeManifest();
  std::cout << report;
  return ok ? kOk : kFail;
}

// The historical positional style `name=value` is an alias for `--name=value`.
std::vector<std::string> normalizeArgs(int argc, char** argv) {
  std::vector<std::string> out;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    size_t eq = a.find('=');
    bool flagLike = eq != std::string::npos && eq > 0 && a[0] != '-';
    for (size_t j = 0; flagLike && j < eq; ++j)
      if (!std::isalnum(static_cast<unsigned char>(a[j])) && a[j] != '-')
        flagLike = false;
    if (flagLike && a.substr(eq + 1).find('/') != std::string::npos &&
        fs::exists(a))
      flagLike = false;  // a real file whose name contains '='
    out.push_back(flagLike ? "--" + a : a);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diagram-based correctness prover for program transformations"};
  app.require_subcommand(1);

  std::string input, outDir, only, atp;
  std::vector<std::string> diagramFiles;
  bool emitOnly = false;
  int atpTimeout = 60, loopDepth = 5, size = 5, fuel = 0;

  CLI::App* check = app.add_subcommand("check", "parse and validate an input file");
  check->add_option("input", input)->required();
  check->add_option("--out", outDir, "output directory");

  CLI::App* overlap = app.add_subcommand("overlap", "list critical overlaps");
  overlap->add_option("input", input)->required();
  overlap->add_option("--out", outDir, "output directory");
  overlap->add_option("--command", only, "only the command writing this file");

  CLI::App* join = app.add_subcommand("join", "compute and join all diagrams");
  join->add_option("input", input)->required();
  join->add_option("--out", outDir, "output directory");

  CLI::App* induct = app.add_subcommand(
      "induct", "encode diagram files and prove innermost termination");
  induct->add_option("diagrams", diagramFiles)->required();
  induct->add_option("--out", outDir, "output directory");
  induct->add_flag("--emit-only", emitOnly, "emit the problem, skip proving");
  induct->add_option("--atp-path", atp,
                     "external prover command ({file} placeholder; "
                     "LRSX_ATP_PATH overrides)");
  induct->add_option("--atp-timeout", atpTimeout, "external prover seconds");
  induct->add_option("--loop-depth", loopDepth, "non-termination search depth");

  CLI::App* oracle = app.add_subcommand(
      "oracle", "validate diagrams against the ground semantics");
  oracle->add_option("input", input)->required();
  oracle->add_option("--out", outDir, "output directory");
  oracle->add_option("--size", size, "maximum ground expression size");
  oracle->add_option("--fuel", fuel, "convergence fuel (0: 4x size)");

  std::vector<std::string> args = normalizeArgs(argc, argv);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (check->parsed()) return cmdCheck(input, outDir);
    if (overlap->parsed()) return cmdOverlap(input, outDir, only);
    if (join->parsed()) return cmdJoin(input, outDir);
    if (induct->parsed())
      return cmdInduct(diagramFiles, outDir, emitOnly, atp, atpTimeout,
                       loopDepth);
    if (oracle->parsed()) return cmdOracle(input, outDir, size, fuel);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
