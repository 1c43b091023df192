#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <occflow/harness.hpp>
#include <occflow/syntax.hpp>

#include <set>
#include <string>

using namespace occflow;
using harness::CaseResult;
using harness::CorpusSummary;
using harness::GenConfig;
using harness::Verdict;

namespace {

const char* kWrite =
    "(let x (ref 3^1)^2 "
    "(let y (let z (5^3)^4 (x^5 := z^7)^8)^9 (! x)^10)^11)^12";
const char* kAliasRead =
    "(let x (3^1)^2 (let y (ref x^3)^4 (! y^5)^6)^7)^8";

bool contains_node(const syntax::Occurrence& o, auto pred) {
  bool found = false;
  syntax::for_each_node(o, [&](const syntax::Occurrence& n) {
    if (pred(n)) found = true;
  });
  return found;
}

template <class Node>
bool has_kind(const syntax::Occurrence& o) {
  return contains_node(
      o, [](const syntax::Occurrence& n) {
        return std::holds_alternative<Node>(n.expr);
      });
}

}  // namespace

// ------ seed scrambler ------

TEST_CASE("splitmix64 matches the reference first outputs") {
  // Reference sequence for the all-zero seed.
  CHECK(harness::splitmix64(0) == 0xE220A8397B1DCDAFull);
  CHECK(harness::splitmix64(harness::splitmix64(0)) !=
        harness::splitmix64(0));
  // Distinct inputs scramble to distinct outputs on a sample range.
  std::set<std::uint64_t> outs;
  for (std::uint64_t i = 0; i < 1000; ++i) outs.insert(harness::splitmix64(i));
  CHECK(outs.size() == 1000);
}

// ------ generator ------

TEST_CASE("generation is deterministic per seed") {
  GenConfig cfg;
  cfg.max_depth = 5;
  cfg.max_refs = 2;
  auto a = harness::generate(cfg, 7);
  auto b = harness::generate(cfg, 7);
  REQUIRE(a);
  REQUIRE(b);
  CHECK(syntax::render(*a) == syntax::render(*b));
  CHECK(syntax::equal(*a, *b));

  std::set<std::string> distinct;
  for (std::uint64_t s = 0; s < 8; ++s)
    distinct.insert(syntax::render(*harness::generate(cfg, s)));
  CHECK(distinct.size() >= 4);
}

TEST_CASE("generated programs are closed, binder-unique, densely labeled") {
  GenConfig cfg;
  cfg.max_depth = 5;
  cfg.max_refs = 2;
  for (std::uint64_t s = 0; s < 200; ++s) {
    auto p = harness::generate(cfg, s);
    REQUIRE(p);
    CAPTURE(s);
    CAPTURE(syntax::render(*p));
    CHECK(syntax::fv(*p).empty());
    CHECK(syntax::check_binder_unique(*p).empty());
    // Post-order labeling covers 1..N with no gaps or zeros.
    auto pts = syntax::all_points(*p);
    REQUIRE(!pts.empty());
    CHECK(*pts.begin() == 1);
    CHECK(*pts.rbegin() == pts.size());
    // Canonical text round-trips through the parser.
    auto back = syntax::parse(syntax::render(*p));
    CHECK(syntax::equal(*p, *back));
  }
}

TEST_CASE("the corpus exercises every construct") {
  GenConfig cfg;
  cfg.max_depth = 6;
  cfg.max_refs = 3;
  bool ref = false, deref = false, assign = false, abs = false, app = false,
       kase = false, letrec = false, constop = false;
  for (std::uint64_t s = 0; s < 300; ++s) {
    auto p = harness::generate(cfg, s);
    ref |= has_kind<syntax::RefE>(*p);
    deref |= has_kind<syntax::DerefE>(*p);
    assign |= has_kind<syntax::AssignE>(*p);
    abs |= has_kind<syntax::AbsE>(*p);
    app |= has_kind<syntax::AppE>(*p);
    kase |= has_kind<syntax::CaseE>(*p);
    letrec |= has_kind<syntax::LetRecE>(*p);
    constop |= has_kind<syntax::ConstAppE>(*p);
  }
  CHECK(ref);
  CHECK(deref);
  CHECK(assign);
  CHECK(abs);
  CHECK(app);
  CHECK(kase);
  CHECK(letrec);
  CHECK(constop);
}

TEST_CASE("disabling recursion removes it from the output") {
  GenConfig cfg;
  cfg.max_depth = 6;
  cfg.allow_letrec = false;
  for (std::uint64_t s = 0; s < 120; ++s)
    CHECK(!has_kind<syntax::LetRecE>(*harness::generate(cfg, s)));
}

// ------ single-program verdicts ------

TEST_CASE("a well-typed store program passes the whole pipeline") {
  auto r = harness::check_soundness(*syntax::parse(kWrite));
  CHECK(r.verdict == Verdict::Pass);
  CHECK(r.detail.empty());
  CHECK(harness::check_soundness(*syntax::parse(kAliasRead)).verdict ==
        Verdict::Pass);
  CHECK(harness::check_soundness(*syntax::parse("(PLUS 3^1 4^2)^3")).verdict ==
        Verdict::Pass);
}

TEST_CASE("checker rejections are classified, not treated as violations") {
  auto r = harness::check_soundness(*syntax::parse("(! 3^1)^2"));
  CHECK(r.verdict == Verdict::CheckerReject);
  CHECK(!r.detail.empty());
}

TEST_CASE("resource and match failures are eval errors") {
  // Accepted by the checker (the recursive argument is constant), loops
  // forever: fuel runs out.
  auto loop = syntax::parse(
      "(let rec f (lambda n . (f^1 0^2)^3)^4 (f^5 0^6)^7)^8");
  auto r = harness::check_soundness(*loop, 4000);
  CHECK(r.verdict == Verdict::EvalError);
  CHECK(r.detail.find("FuelExhausted") != std::string::npos);

  // Non-total case: no branch matches 5.
  auto partial = syntax::parse("(case 5^1 (0 1^2))^3");
  CHECK(harness::check_soundness(*partial).verdict == Verdict::EvalError);

  // Arithmetic overflow.
  auto big = syntax::parse(
      "(PLUS 9000000000000000000^1 9000000000000000000^2)^3");
  CHECK(harness::check_soundness(*big).verdict == Verdict::EvalError);
}

TEST_CASE("verdict names are stable") {
  CHECK(std::string(harness::verdict_name(Verdict::Pass)) == "pass");
  CHECK(std::string(harness::verdict_name(Verdict::CheckerReject)) ==
        "checker-reject");
  CHECK(std::string(harness::verdict_name(Verdict::EvalError)) ==
        "eval-error");
  CHECK(std::string(harness::verdict_name(Verdict::Violation)) == "VIOLATION");
}

// ------ corpus ------

TEST_CASE("a seeded corpus runs clean") {
  GenConfig cfg;
  cfg.max_depth = 5;
  cfg.max_refs = 2;
  cfg.seed = 42;
  cfg.count = 150;
  cfg.fuel = 50'000;
  auto sum = harness::run_corpus(cfg);
  REQUIRE(sum.results.size() == 150);
  CHECK(sum.total() == 150);
  for (const auto& r : sum.results) {
    CAPTURE(r.program);
    CAPTURE(r.detail);
    CHECK(r.verdict != Verdict::Violation);
  }
  CHECK(sum.violations == 0);
  // The generator aims for well-typed terminating programs, so passes must
  // dominate; rejects and eval errors stay a small minority.
  CHECK(sum.passes > 100);
  // Per-item seeds are recorded so any case can be replayed.
  std::set<std::uint64_t> seeds;
  for (const auto& r : sum.results) seeds.insert(r.seed);
  CHECK(seeds.size() == sum.results.size());
}

TEST_CASE("corpus runs are reproducible") {
  GenConfig cfg;
  cfg.max_depth = 4;
  cfg.seed = 99;
  cfg.count = 25;
  auto a = harness::run_corpus(cfg);
  auto b = harness::run_corpus(cfg);
  REQUIRE(a.results.size() == b.results.size());
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    CHECK(a.results[i].program == b.results[i].program);
    CHECK(a.results[i].verdict == b.results[i].verdict);
  }
}

// ------ binding-history check ------

TEST_CASE("recorded variable bindings name binders only") {
  auto h = harness::check_history(*syntax::parse(kWrite));
  CHECK(h.ok);
  CHECK(h.ran);
  auto h2 = harness::check_history(*syntax::parse(kAliasRead));
  CHECK(h2.ok);
  CHECK(h2.ran);
  // A run that stops early has no complete history to check.
  auto loop = syntax::parse(
      "(let rec f (lambda n . (f^1 0^2)^3)^4 (f^5 0^6)^7)^8");
  auto h3 = harness::check_history(*loop, 4000);
  CHECK(h3.ok);
  CHECK(!h3.ran);
}

TEST_CASE("binding history holds across a generated corpus") {
  GenConfig cfg;
  cfg.max_depth = 5;
  cfg.max_refs = 2;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto p = harness::generate(cfg, harness::splitmix64(777 + s));
    auto h = harness::check_history(*p, 50'000);
    CAPTURE(syntax::render(*p));
    CAPTURE(h.detail);
    CHECK(h.ok);
  }
}

// ------ environment strengthening ------

TEST_CASE("fresh initial bindings never change the result type") {
  std::string why;
  CHECK(harness::check_strengthening(*syntax::parse(kWrite), 1, 5, &why));
  CHECK(why.empty());
  CHECK(harness::check_strengthening(*syntax::parse(kAliasRead), 2));
  CHECK(harness::check_strengthening(
      *syntax::parse("((lambda y . y^1)^2 7^3)^4"), 3));
  // Vacuous on rejected programs.
  CHECK(harness::check_strengthening(*syntax::parse("(! 3^1)^2"), 4));
}

TEST_CASE("strengthening holds across generated accepted programs") {
  GenConfig cfg;
  cfg.max_depth = 5;
  cfg.max_refs = 2;
  int accepted = 0;
  for (std::uint64_t s = 0; accepted < 40 && s < 120; ++s) {
    auto p = harness::generate(cfg, harness::splitmix64(31337 + s));
    auto r = harness::check_soundness(*p, 50'000);
    if (r.verdict == Verdict::CheckerReject) continue;
    ++accepted;
    std::string why;
    bool ok = harness::check_strengthening(*p, s, 3, &why);
    CAPTURE(syntax::render(*p));
    CAPTURE(why);
    CHECK(ok);
  }
  CHECK(accepted == 40);
}
