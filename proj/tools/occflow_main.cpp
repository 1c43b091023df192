// ------ command-line front end ------
//
// Subcommands: parse (echo the labeled program), run (evaluate and report),
// typecheck (static report), soundness (run + check + agreement on one
// program), fuzz (generated corpus, JSONL).  Exit code 0 on success/pass,
// 1 on diagnostics or violations, 2 on usage errors.

#include <occflow/agreement.hpp>
#include <occflow/harness.hpp>
#include <occflow/report.hpp>
#include <occflow/runtime.hpp>
#include <occflow/syntax.hpp>
#include <occflow/typesys.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

namespace agreement = occflow::agreement;
namespace harness = occflow::harness;
namespace report = occflow::report;
namespace runtime = occflow::runtime;
namespace syntax = occflow::syntax;
namespace typesys = occflow::typesys;
using nlohmann::ordered_json;

// Thrown for problems with how the tool was invoked (exit 2), as opposed to
// problems with the program under analysis (exit 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string path;    // positional input file
  std::string expr;    // -e inline program text
  std::string format = "text";
  std::string kappa0_path;
  bool pi_from_trace = false;
  bool alpha = false;  // freshen clashing binders instead of rejecting
  std::uint64_t fuel = runtime::kDefaultFuel;
};

std::uint64_t env_fuel_or(std::uint64_t fallback) {
  const char* s = std::getenv("OCCFLOW_FUEL");
  if (!s) return fallback;
  char* end = nullptr;
  unsigned long long v = std::strtoull(s, &end, 10);
  if (end == s || *end != '\0' || v == 0) {
    std::cerr << "warning: ignoring OCCFLOW_FUEL=" << s
              << " (want a positive integer)\n";
    return fallback;
  }
  return static_cast<std::uint64_t>(v);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

syntax::OccPtr load_program(const Options& o) {
  if (!o.expr.empty()) return syntax::parse(o.expr, o.alpha);
  if (o.path.empty()) throw UsageError("no input: give a file or -e TEXT");
  return syntax::parse(slurp(o.path), o.alpha);
}

// An alias basis from a JSON array of arrays of names, the same shape the
// typecheck report emits: [["x","nu@2"],["y"]].
typesys::AliasBase load_kappa0(const std::string& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(slurp(path));
  } catch (const ordered_json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
  if (!j.is_array()) throw UsageError(path + ": want an array of cells");
  typesys::AliasBase k0;
  for (const auto& cell : j) {
    if (!cell.is_array()) throw UsageError(path + ": want an array of cells");
    std::set<typesys::TypeName> c;
    for (const auto& name : cell) {
      if (!name.is_string()) throw UsageError(path + ": names must be strings");
      std::string s = name.get<std::string>();
      if (s.rfind("nu@", 0) == 0) {
        try {
          c.insert(typesys::TypeName::ivar(std::stoull(s.substr(3))));
        } catch (const std::exception&) {
          throw UsageError(path + ": bad internal variable " + s);
        }
      } else {
        c.insert(typesys::TypeName::var(s));
      }
    }
    k0.cells.push_back(std::move(c));
  }
  return k0;
}

// Static order taken from an actual run: the recorded edges over all of the
// program's points.  Useful for asking "would the checker accept with the
// exact evaluation order?".
typesys::PiOrder pi_from_trace(const syntax::Occurrence& prog,
                               std::uint64_t fuel) {
  auto ev = runtime::eval_program(prog, fuel);
  typesys::PiOrder pi;
  pi.P = syntax::all_points(prog);
  pi.edges = ev.order.edges;
  return pi;
}

typesys::PiOrder make_pi(const Options& o, const syntax::Occurrence& prog) {
  return o.pi_from_trace ? pi_from_trace(prog, o.fuel)
                         : typesys::derive_pi(prog);
}

typesys::AliasBase make_kappa0(const Options& o,
                               const syntax::Occurrence& prog) {
  return o.kappa0_path.empty() ? typesys::derive_kappa0(prog)
                               : load_kappa0(o.kappa0_path);
}

void emit(const std::string& s) {
  std::cout << s;
  if (s.empty() || s.back() != '\n') std::cout << '\n';
}

// ------ subcommands ------

int do_parse(const Options& o) {
  auto prog = load_program(o);
  if (o.format == "json") {
    ordered_json j;
    j["program"] = syntax::render(*prog);
    emit(j.dump(2));
  } else {
    emit(syntax::render(*prog));
  }
  return 0;
}

int do_run(const Options& o) {
  auto prog = load_program(o);
  auto ev = runtime::eval_program(*prog, o.fuel);
  if (o.format == "json")
    emit(report::run_json(*prog, ev));
  else if (o.format == "dot")
    emit(report::depgraph_dot(ev));
  else
    emit(report::run_text(ev));
  return 0;
}

int do_typecheck(const Options& o) {
  auto prog = load_program(o);
  auto pi = make_pi(o, *prog);
  auto k0 = make_kappa0(o, *prog);
  auto tc = typesys::typecheck({}, pi, k0, *prog);
  if (o.format == "json")
    emit(report::typecheck_json(*prog, pi, k0, tc));
  else if (o.format == "dot")
    emit(report::typegraph_dot(pi, tc));
  else
    emit(report::typecheck_text(pi, k0, tc));
  return tc.ok ? 0 : 1;
}

int do_soundness(const Options& o) {
  auto prog = load_program(o);
  auto pi = make_pi(o, *prog);
  auto k0 = make_kappa0(o, *prog);
  auto tc = typesys::typecheck({}, pi, k0, *prog);

  ordered_json out;
  out["program"] = syntax::render(*prog);
  out["verdict"] = "";  // filled in by finish; placed here to pin field order

  auto finish = [&](harness::Verdict v, int code) {
    out["verdict"] = harness::verdict_name(v);
    if (o.format == "json") {
      emit(out.dump(2));
    } else {
      std::cout << "verdict " << harness::verdict_name(v) << "\n";
      if (out.count("detail"))
        std::cout << out["detail"].get<std::string>() << "\n";
      if (out.count("agreement"))
        for (const auto& v2 : out["agreement"]["violations"])
          std::cout << v2["clause"].get<std::string>() << ": "
                    << v2["witness"].get<std::string>() << "\n";
    }
    return code;
  };

  if (!tc.ok) {
    ordered_json diags = ordered_json::array();
    for (const auto& d : tc.diagnostics) {
      ordered_json jd;
      jd["code"] = typesys::diagnostic_name(d.code);
      jd["point"] = d.point;
      jd["message"] = d.message;
      diags.push_back(jd);
    }
    out["diagnostics"] = diags;
    if (!tc.diagnostics.empty()) {
      const auto& d = tc.diagnostics.front();
      out["detail"] = std::string(typesys::diagnostic_name(d.code)) +
                      " at point " + std::to_string(d.point) + ": " + d.message;
    }
    return finish(harness::Verdict::CheckerReject, 1);
  }

  runtime::EvalResult ev;
  try {
    ev = runtime::eval_program(*prog, o.fuel);
  } catch (const runtime::EvalError& e) {
    using K = runtime::EvalError::Kind;
    bool dynamic = e.kind == K::FuelExhausted ||
                   e.kind == K::NoMatchingPattern || e.kind == K::Overflow;
    out["detail"] = e.what();
    return finish(
        dynamic ? harness::Verdict::EvalError : harness::Verdict::Violation, 1);
  }

  agreement::AgreementReport rep;
  std::vector<std::string> why;
  if (!typesys::type_value(tc, pi, ev.value, tc.type, &why))
    rep.add("result-type", why.empty() ? "result value rejected by the result type"
                                       : why.front());
  rep.merge(agreement::env_agreement(ev.env_all, ev.store, ev.depfn, ev.order,
                                     tc.gamma, pi, k0));
  rep.merge(agreement::type_agreement(ev.env_all, ev.value, ev.depfn, ev.deps,
                                      tc.gamma, tc.type, k0));
  out["agreement"] = ordered_json::parse(report::agreement_json(rep));
  return finish(rep.ok ? harness::Verdict::Pass : harness::Verdict::Violation,
                rep.ok ? 0 : 1);
}

int do_fuzz(const harness::GenConfig& cfg) {
  auto sum = harness::run_corpus(cfg);
  std::cout << report::corpus_jsonl(sum);
  std::cout << ordered_json::parse(report::summary_json(sum)).dump() << "\n";
  return sum.violations == 0 ? 0 : 1;
}

void add_input_options(CLI::App* cmd, Options& o) {
  auto* in = cmd->add_option("input", o.path, "program file (UTF-8 text)")
                 ->check(CLI::ExistingFile);
  cmd->add_option("-e,--expr", o.expr, "inline program text")->excludes(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "dependency and alias analysis for a labeled expression language"};
  app.require_subcommand(1);

  Options parse_o, run_o, type_o, sound_o;
  parse_o.fuel = run_o.fuel = type_o.fuel = sound_o.fuel =
      env_fuel_or(runtime::kDefaultFuel);

  auto* cmd_parse =
      app.add_subcommand("parse", "echo the program with every label filled in");
  add_input_options(cmd_parse, parse_o);
  cmd_parse->add_option("--format", parse_o.format, "output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  cmd_parse->add_flag("--alpha", parse_o.alpha,
                      "freshen clashing binder names instead of rejecting");

  auto* cmd_run = app.add_subcommand(
      "run", "evaluate and report value, store, bindings and order");
  add_input_options(cmd_run, run_o);
  cmd_run->add_option("--format", run_o.format, "output format")
      ->check(CLI::IsMember({"text", "json", "dot"}))
      ->capture_default_str();
  cmd_run->add_option("--fuel", run_o.fuel, "evaluation step budget")
      ->check(CLI::PositiveNumber);

  auto* cmd_type = app.add_subcommand(
      "typecheck", "report inferred types, static order and alias basis");
  add_input_options(cmd_type, type_o);
  cmd_type->add_option("--format", type_o.format, "output format")
      ->check(CLI::IsMember({"text", "json", "dot"}))
      ->capture_default_str();
  cmd_type->add_option("--fuel", type_o.fuel,
                       "evaluation step budget (used with --pi-from-trace)")
      ->check(CLI::PositiveNumber);
  cmd_type->add_option("--kappa0", type_o.kappa0_path,
                       "alias basis JSON (array of cells) instead of the "
                       "derived one");
  cmd_type->add_flag("--pi-from-trace", type_o.pi_from_trace,
                     "take the static order from a recorded run instead of "
                     "deriving it");

  auto* cmd_sound = app.add_subcommand(
      "soundness", "run, check and compare one program end to end");
  add_input_options(cmd_sound, sound_o);
  cmd_sound->add_option("--format", sound_o.format, "output format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  cmd_sound->add_option("--fuel", sound_o.fuel, "evaluation step budget")
      ->check(CLI::PositiveNumber);
  cmd_sound->add_option("--kappa0", sound_o.kappa0_path,
                        "alias basis JSON (array of cells) instead of the "
                        "derived one");
  cmd_sound->add_flag("--pi-from-trace", sound_o.pi_from_trace,
                      "take the static order from a recorded run instead of "
                      "deriving it");

  harness::GenConfig fuzz_cfg;
  fuzz_cfg.fuel = env_fuel_or(fuzz_cfg.fuel);
  auto* cmd_fuzz = app.add_subcommand(
      "fuzz", "generate programs and check each one, JSONL to stdout");
  cmd_fuzz->add_option("--seed", fuzz_cfg.seed, "corpus seed")
      ->capture_default_str();
  cmd_fuzz->add_option("--count", fuzz_cfg.count, "number of programs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_fuzz->add_option("--max-depth", fuzz_cfg.max_depth, "generator depth")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_fuzz->add_option("--max-refs", fuzz_cfg.max_refs,
                       "reference cells per program")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd_fuzz
      ->add_flag("--no-letrec", [&](std::int64_t) { fuzz_cfg.allow_letrec = false; },
                 "generate without recursive lets")
      ->take_last();
  cmd_fuzz->add_option("--fuel", fuzz_cfg.fuel, "evaluation step budget")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_parse->parsed()) return do_parse(parse_o);
    if (cmd_run->parsed()) return do_run(run_o);
    if (cmd_type->parsed()) return do_typecheck(type_o);
    if (cmd_sound->parsed()) return do_soundness(sound_o);
    if (cmd_fuzz->parsed()) return do_fuzz(fuzz_cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const syntax::SyntaxError& e) {
    std::cerr << "parse error at byte " << e.position << ": " << e.what()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
