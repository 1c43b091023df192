#pragma once

// ------ program generator and soundness harness ------
//
// Random closed programs are pushed through the full pipeline: derive the
// static order and alias basis, check, evaluate, then verify that the run
// agrees with the static story.  An accepted program may still stop with a
// resource or match failure, but a static-class runtime error or a failed
// agreement on an accepted program is a soundness violation.

#include <occflow/agreement.hpp>
#include <occflow/runtime.hpp>
#include <occflow/syntax.hpp>
#include <occflow/typesys.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace occflow::harness {

// Seed scrambler for deriving independent per-item seeds from a base seed.
std::uint64_t splitmix64(std::uint64_t x);

struct GenConfig {
  int max_depth = 6;
  int max_refs = 3;
  bool allow_letrec = true;
  std::uint64_t seed = 1;
  int count = 1000;
  std::uint64_t fuel = 100'000;
};

// One closed, binder-unique, densely labeled program.  First-order by
// construction: parameters and results of abstractions are integers or
// booleans, cells hold base values, and recursion is a single self-call with
// constant arguments, so generated programs terminate.
syntax::OccPtr generate(const GenConfig& cfg, std::uint64_t seed);

enum class Verdict { Pass, CheckerReject, EvalError, Violation };
const char* verdict_name(Verdict v);  // "pass", "checker-reject", ...

struct CaseResult {
  std::string program;  // rendered source
  Verdict verdict = Verdict::Pass;
  std::string detail;
  std::uint64_t seed = 0;
};

// The full pipeline on one program.
CaseResult check_soundness(const syntax::Occurrence& o,
                           std::uint64_t fuel = runtime::kDefaultFuel);

// Every recorded variable binding must name a binder of the program, never a
// free name.  Runs the program; reports ran=false (and ok) when evaluation
// stops early, since there is no history to check.
struct HistoryResult {
  bool ok = true;
  bool ran = false;
  std::string detail;
};
HistoryResult check_history(const syntax::Occurrence& o,
                            std::uint64_t fuel = runtime::kDefaultFuel);

// Extending the initial environment with bindings for a fresh name must not
// change the result type.  Vacuously true for rejected programs.
bool check_strengthening(const syntax::Occurrence& o, std::uint64_t seed,
                         int extensions = 5, std::string* why = nullptr);

struct CorpusSummary {
  int passes = 0;
  int checker_rejects = 0;
  int eval_errors = 0;
  int violations = 0;
  std::vector<CaseResult> results;

  int total() const {
    return passes + checker_rejects + eval_errors + violations;
  }
};

CorpusSummary run_corpus(const GenConfig& cfg);

}  // namespace occflow::harness
