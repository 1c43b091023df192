#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <occflow/runtime.hpp>

using namespace occflow;
using namespace occflow::runtime;

namespace {

const char* kWriteProgram =
    "(let x (ref 3^1)^2 (let y (let z (5^3)^4 (x^5:=z^7)^8)^9 (!x)^10)^11)^12";

EvalResult run_text(const char* text, std::uint64_t fuel = kDefaultFuel) {
  auto o = syntax::parse(text);
  return eval_program(*o, fuel);
}

DependencyPair dep(std::set<LocOcc> L, std::set<VarOcc> V) {
  DependencyPair d;
  d.L = std::move(L);
  d.V = std::move(V);
  return d;
}

}  // namespace

TEST_CASE("apply implements the functional constants") {
  CHECK(apply(Constant::op(Constant::Kind::Plus), Value::integer(2), Value::integer(2)) ==
        Value::integer(4));
  CHECK(apply(Constant::op(Constant::Kind::Times), Value::integer(5), Value::integer(0)) ==
        Value::integer(0));
  CHECK(apply(Constant::op(Constant::Kind::Less), Value::integer(3), Value::integer(7)) ==
        Value::boolean(true));
  CHECK(apply(Constant::op(Constant::Kind::Minus), Value::integer(3), Value::integer(7)) ==
        Value::integer(-4));
  CHECK(apply(Constant::op(Constant::Kind::Greater), Value::integer(3), Value::integer(7)) ==
        Value::boolean(false));
  CHECK(apply(Constant::op(Constant::Kind::Equal), Value::integer(3), Value::integer(3)) ==
        Value::boolean(true));
  // EQUAL also accepts two booleans; everything else is integer-only.
  CHECK(apply(Constant::op(Constant::Kind::Equal), Value::boolean(true), Value::boolean(false)) ==
        Value::boolean(false));
  CHECK_THROWS_AS(apply(Constant::op(Constant::Kind::Plus), Value::boolean(true), Value::integer(1)),
                  EvalError);
  CHECK_THROWS_AS(apply(Constant::op(Constant::Kind::Less), Value::boolean(true), Value::boolean(true)),
                  EvalError);
}

TEST_CASE("apply detects 64-bit overflow") {
  auto big = Value::integer(std::numeric_limits<std::int64_t>::max());
  try {
    apply(Constant::op(Constant::Kind::Plus), big, Value::integer(1));
    FAIL_CHECK("expected Overflow");
  } catch (const EvalError& e) {
    CHECK(e.kind == EvalError::Kind::Overflow);
  }
  CHECK_THROWS_AS(apply(Constant::op(Constant::Kind::Times), big, Value::integer(2)), EvalError);
}

TEST_CASE("match follows the pattern equations") {
  auto sub = match(Value::integer(3), syntax::Pattern::var("x"));
  REQUIRE(sub.has_value());
  REQUIRE(sub->size() == 1);
  CHECK((*sub)[0].first == "x");
  CHECK((*sub)[0].second == Value::integer(3));

  auto id = match(Value::integer(3), syntax::Pattern::integer(3));
  REQUIRE(id.has_value());
  CHECK(id->empty());

  CHECK(!match(Value::integer(3), syntax::Pattern::integer(4)).has_value());
  CHECK(match(Value::integer(3), syntax::Pattern::wildcard()).has_value());
  CHECK(match(Value::boolean(true), syntax::Pattern::boolean(true)).has_value());
  CHECK(!match(Value::boolean(true), syntax::Pattern::boolean(false)).has_value());
  // A location matches only variable or wildcard patterns.
  CHECK(!match(Value::loc(1), syntax::Pattern::integer(1)).has_value());
  CHECK(match(Value::loc(1), syntax::Pattern::var("m")).has_value());
}

TEST_CASE("match_w extends only for variable patterns") {
  auto d = dep({}, {VarOcc{"z", 7}});
  auto ext = match_w(syntax::Pattern::var("x"), 8, d);
  REQUIRE(ext.has_value());
  CHECK(ext->first == DepKey{DepBase::var("x"), 8});
  CHECK(ext->second == d);
  CHECK(!match_w(syntax::Pattern::wildcard(), 8, d).has_value());
  CHECK(!match_w(syntax::Pattern::integer(1), 3, d).has_value());
}

TEST_CASE("env_inverse scans by value equality") {
  Env env;
  env.emplace("x", Value::loc(1));
  env.emplace("y", Value::loc(1));
  env.emplace("z", Value::integer(3));
  CHECK(env_inverse(env, Value::loc(1)) == std::set<std::string>{"x", "y"});
  CHECK(env_inverse(Env{}, Value::loc(1)) == std::set<std::string>{});
  Env env2;
  env2.emplace("x", Value::integer(3));
  CHECK(env_inverse(env2, Value::loc(1)) == std::set<std::string>{});
}

TEST_CASE("depfn_update records bindings, journal, and order edges") {
  DepFunc w;
  PointOrder order;
  depfn_update(w, DepKey{DepBase::var("x"), 2}, dep({}, {}), order, 1);
  CHECK(w.bindings.size() == 1);
  CHECK(w.journal.size() == 1);
  CHECK(w.journal[0].seq == 1);
  CHECK(order.edges == std::set<std::pair<ProgramPoint, ProgramPoint>>{{1, 2}});

  // Rebinding the same subject at a later point links the earlier point.
  depfn_update(w, DepKey{DepBase::location(1), 2}, dep({}, {}), order, 1);
  depfn_update(w, DepKey{DepBase::location(1), 8}, dep({}, {VarOcc{"z", 7}}), order, 7);
  CHECK(order.edges.count({2, 8}) == 1);
  CHECK(order.edges.count({7, 8}) == 1);

  // cur == key.point adds no self-edge.
  PointOrder o2;
  DepFunc w2;
  depfn_update(w2, DepKey{DepBase::var("y"), 4}, dep({}, {}), o2, 4);
  CHECK(o2.edges.empty());

  // Rebinding the same occurrence point adds no self-edge either.
  depfn_update(w2, DepKey{DepBase::var("y"), 4}, dep({}, {VarOcc{"q", 1}}), o2, 4);
  CHECK(o2.edges.empty());
  CHECK(w2.bindings.at(DepKey{DepBase::var("y"), 4}) == dep({}, {VarOcc{"q", 1}}));
  CHECK(w2.journal.size() == 2);
  CHECK(w2.journal[1].seq == 2);
}

TEST_CASE("uf_runtime returns the most recent binding") {
  DepFunc w;
  PointOrder order;
  depfn_update(w, DepKey{DepBase::var("x"), 2}, dep({}, {}), order, 2);
  CHECK(uf_runtime(DepBase::var("x"), w) == DepKey{DepBase::var("x"), 2});

  depfn_update(w, DepKey{DepBase::var("y"), 4}, dep({}, {}), order, 4);
  depfn_update(w, DepKey{DepBase::var("y"), 7}, dep({}, {}), order, 4);
  CHECK(uf_runtime(DepBase::var("y"), w) == DepKey{DepBase::var("y"), 7});

  CHECK_THROWS_AS(uf_runtime(DepBase::var("missing"), w), EvalError);
}

TEST_CASE("uf_order finds the unique greatest binding when it exists") {
  DepFunc w;
  PointOrder order;
  depfn_update(w, DepKey{DepBase::var("y"), 4}, dep({}, {}), order, 2);
  depfn_update(w, DepKey{DepBase::var("y"), 7}, dep({}, {}), order, 4);
  // order has (2,4) and (4,7): 7 is greatest.
  auto g = uf_order(DepBase::var("y"), w, order);
  REQUIRE(g.has_value());
  CHECK(g->point == 7);

  // Incomparable bindings (hand-built state: depfn_update itself always
  // orders rebindings of one subject) have no unique greatest element.
  DepFunc w2;
  w2.bindings[DepKey{DepBase::var("y"), 4}] = dep({}, {});
  w2.bindings[DepKey{DepBase::var("y"), 7}] = dep({}, {});
  w2.journal.push_back(JournalEntry{DepKey{DepBase::var("y"), 4}, 1});
  w2.journal.push_back(JournalEntry{DepKey{DepBase::var("y"), 7}, 2});
  PointOrder o2;
  CHECK(!uf_order(DepBase::var("y"), w2, o2).has_value());
}

TEST_CASE("constant application evaluates with empty deps") {
  auto r = run_text("(PLUS 3^1 5^2)^3");
  CHECK(r.value == Value::integer(8));
  CHECK(r.deps == DependencyPair{});
  CHECK(r.point == 3);
  CHECK(r.store.cells.empty());
  CHECK(r.depfn.bindings.empty());
}

TEST_CASE("write example produces the pinned run facts") {
  auto r = run_text(kWriteProgram);

  CHECK(r.value == Value::integer(5));
  CHECK(r.point == 12);

  // Final store: one cell, l1 ↦ 5.
  REQUIRE(r.store.cells.size() == 1);
  CHECK(r.store.cells.at(1) == Value::integer(5));
  CHECK(r.store.next == 2);

  // Dependency function, exactly five bindings.
  std::map<DepKey, DependencyPair> expect{
      {DepKey{DepBase::var("x"), 2}, dep({}, {})},
      {DepKey{DepBase::var("z"), 4}, dep({}, {})},
      {DepKey{DepBase::var("y"), 9}, dep({}, {VarOcc{"x", 5}})},
      {DepKey{DepBase::location(1), 2}, dep({}, {})},
      {DepKey{DepBase::location(1), 8}, dep({}, {VarOcc{"z", 7}})},
  };
  CHECK(r.depfn.bindings == expect);

  // Binding history: l1^2, x^2, z^4, l1^8, y^9.
  REQUIRE(r.depfn.journal.size() == 5);
  CHECK(r.depfn.journal[0].key == DepKey{DepBase::location(1), 2});
  CHECK(r.depfn.journal[1].key == DepKey{DepBase::var("x"), 2});
  CHECK(r.depfn.journal[2].key == DepKey{DepBase::var("z"), 4});
  CHECK(r.depfn.journal[3].key == DepKey{DepBase::location(1), 8});
  CHECK(r.depfn.journal[4].key == DepKey{DepBase::var("y"), 9});
  for (std::size_t i = 0; i < r.depfn.journal.size(); ++i)
    CHECK(r.depfn.journal[i].seq == i + 1);

  // Point order: ref body before allocation, value before write, earlier
  // location binding before the rebinding.
  CHECK(r.order.edges ==
        std::set<std::pair<ProgramPoint, ProgramPoint>>{{1, 2}, {7, 8}, {2, 8}});
  CHECK(r.order.closure_antisymmetric());

  // The run's own deps: the read location occurrence plus the written value's.
  CHECK(r.deps == dep({LocOcc{1, 10}}, {VarOcc{"z", 7}}));

  // The greatest binding of l1 is the write at point 8.
  CHECK(uf_runtime(DepBase::location(1), r.depfn) == DepKey{DepBase::location(1), 8});
  auto g = uf_order(DepBase::location(1), r.depfn, r.order);
  REQUIRE(g.has_value());
  CHECK(*g == DepKey{DepBase::location(1), 8});

  // Cumulative environment.
  CHECK(r.env_all.at("x") == Value::loc(1));
  CHECK(r.env_all.at("z") == Value::integer(5));
  CHECK(r.env_all.at("y") == Value::unit());
}

TEST_CASE("application binds the parameter at the operand's end point") {
  auto r = run_text("((lambda y . y^1)^2 3^3)^4");
  CHECK(r.value == Value::integer(3));
  CHECK(r.depfn.bindings.size() == 1);
  CHECK(r.depfn.bindings.at(DepKey{DepBase::var("y"), 3}) == dep({}, {}));
  // Result deps: operator's ∪ body's — the body's variable use shows up.
  CHECK(r.deps == dep({}, {VarOcc{"y", 1}}));
  CHECK(r.order.edges.empty());
}

TEST_CASE("case takes the first matching branch and records the pattern binding") {
  auto r = run_text("(case (PLUS 1^1 1^2)^3 (1 10^4) (m (PLUS m^5 5^6)^7) (_ 0^8))^9");
  CHECK(r.value == Value::integer(7));
  // m bound at the scrutinee's point with the scrutinee's deps, so the
  // binding precedes every use inside the arm.
  CHECK(r.depfn.bindings.at(DepKey{DepBase::var("m"), 3}) == dep({}, {}));
  CHECK(r.order.edges.empty());
  // Whole-case deps: scrutinee ∪ taken branch.
  CHECK(r.deps == dep({}, {VarOcc{"m", 5}}));
}

TEST_CASE("recursion terminates and rebinds the parameter") {
  auto r = run_text(
      "(let rec f (lambda n . (case n^1 (0 5^2) (m (f^3 0^4)^5))^6)^7 (f^8 1^9)^10)^11");
  CHECK(r.value == Value::integer(5));
  CHECK(r.depfn.bindings.at(DepKey{DepBase::var("f"), 7}) == dep({}, {}));
  // The recursive call rebinds n at the inner argument's point.
  CHECK(r.depfn.bindings.count(DepKey{DepBase::var("n"), 9}) == 1);
  CHECK(r.depfn.bindings.count(DepKey{DepBase::var("n"), 4}) == 1);
  CHECK(r.order.edges.count({9, 4}) == 1);
  CHECK(uf_runtime(DepBase::var("n"), r.depfn) == DepKey{DepBase::var("n"), 4});
  CHECK(r.deps == dep({}, {VarOcc{"f", 3}, VarOcc{"f", 8}, VarOcc{"n", 1}}));
}

TEST_CASE("store stays fresh and locations count up") {
  auto r = run_text("(let a (ref 1) (let b (ref 2) (PLUS (! a) (! b))))");
  CHECK(r.store.cells.size() == 2);
  CHECK(r.store.cells.count(1) == 1);
  CHECK(r.store.cells.count(2) == 1);
  CHECK(r.store.next == 3);
  CHECK(r.store.cells.count(r.store.next) == 0);
  CHECK(r.value == Value::integer(3));
}

TEST_CASE("runtime errors carry their kind and point") {
  auto kind_of = [](const char* text) {
    try {
      run_text(text);
      return std::optional<EvalError::Kind>{};
    } catch (const EvalError& e) {
      return std::optional<EvalError::Kind>{e.kind};
    }
  };
  CHECK(kind_of("(x^1 2^2)^3") == EvalError::Kind::Unbound);
  CHECK(kind_of("(3^1 2^2)^3") == EvalError::Kind::NotAFunction);
  CHECK(kind_of("(! 5^1)^2") == EvalError::Kind::NotALocation);
  CHECK(kind_of("(5^1 := 1^2)^3") == EvalError::Kind::NotALocation);
  CHECK(kind_of("(case 3^1 (4 1^2))^3") == EvalError::Kind::NoMatchingPattern);
  CHECK(kind_of("(PLUS true^1 1^2)^3") == EvalError::Kind::RuntimeType);
  CHECK(!kind_of("(case 3^1 (4 1^2) (_ 0^3))^4").has_value());
}

TEST_CASE("divergence exhausts fuel") {
  try {
    run_text("(let rec f (lambda n . (f^1 n^2)^3)^4 (f^5 0^6)^7)^8", 10'000);
    FAIL_CHECK("expected FuelExhausted");
  } catch (const EvalError& e) {
    CHECK(e.kind == EvalError::Kind::FuelExhausted);
  }
}

TEST_CASE("evaluation is deterministic including journals") {
  auto a = run_text(kWriteProgram);
  auto b = run_text(kWriteProgram);
  CHECK(a.value == b.value);
  CHECK(a.depfn.bindings == b.depfn.bindings);
  REQUIRE(a.depfn.journal.size() == b.depfn.journal.size());
  for (std::size_t i = 0; i < a.depfn.journal.size(); ++i) {
    CHECK(a.depfn.journal[i].key == b.depfn.journal[i].key);
    CHECK(a.depfn.journal[i].seq == b.depfn.journal[i].seq);
  }
  CHECK(a.order.edges == b.order.edges);
  CHECK(a.deps == b.deps);
}

TEST_CASE("deps domain stays within the program's points") {
  const char* progs[] = {
      kWriteProgram,
      "(case (PLUS 1^1 1^2)^3 (1 10^4) (m (PLUS m^5 5^6)^7) (_ 0^8))^9",
      "(let a (ref 1) (let b a (b := (! a))))",
  };
  for (const char* text : progs) {
    auto o = syntax::parse(text);
    auto pts = syntax::all_points(*o);
    auto r = eval_program(*o);
    auto check_pair = [&](const DependencyPair& d) {
      for (const auto& lo : d.L) CHECK(pts.count(lo.point) == 1);
      for (const auto& vo : d.V) CHECK(pts.count(vo.point) == 1);
    };
    check_pair(r.deps);
    for (const auto& [k, d] : r.depfn.bindings) {
      CHECK(pts.count(k.point) == 1);
      check_pair(d);
    }
  }
}

TEST_CASE("aliasing through let keeps one location") {
  auto r = run_text("(let x (ref 1^1)^2 (let y x^3 (!x^4)^5)^6)^7");
  CHECK(r.value == Value::integer(1));
  CHECK(r.store.cells.size() == 1);
  CHECK(env_inverse(r.env_all, Value::loc(1)) == std::set<std::string>{"x", "y"});
  // y's binding carries the x use; the deref reads through l1's creation.
  CHECK(r.depfn.bindings.at(DepKey{DepBase::var("y"), 3}) == dep({}, {VarOcc{"x", 3}}));
  CHECK(r.deps == dep({LocOcc{1, 5}}, {}));
  CHECK(r.order.edges == std::set<std::pair<ProgramPoint, ProgramPoint>>{{1, 2}});
}

TEST_CASE("value rendering is stable") {
  CHECK(Value::integer(5).to_string() == "5");
  CHECK(Value::boolean(true).to_string() == "true");
  CHECK(Value::loc(1).to_string() == "l1");
  CHECK(Value::unit().to_string() == "()");
  auto r = run_text("(lambda x . x^1)^2");
  CHECK(r.value.to_string() == "<fun x @2>");
}
