#pragma once

// ------ values, stores, dependency functions, evaluator ------
//
// The evaluator computes, alongside the value, a dependency function w that
// records for every binding occurrence (variable or store location, paired
// with the point it was bound at) the location/variable occurrences its value
// was derived from, plus a point order approximating "bound before".

#include <occflow/syntax.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace occflow::runtime {

using syntax::Constant;
using syntax::OccPtr;
using syntax::Occurrence;
using syntax::Pattern;
using syntax::ProgramPoint;

using Location = std::uint64_t;  // allocation ids start at 1

// ------ values and environments ------

struct Value;
using Env = std::map<std::string, Value>;

struct ClosureV {
  std::string param;
  ProgramPoint lam_point = 0;  // label of the abstraction node
  OccPtr body;
  std::shared_ptr<const Env> env;
};

struct RecClosureV {
  std::string param;
  std::string fname;
  ProgramPoint lam_point = 0;
  OccPtr body;
  std::shared_ptr<const Env> env;  // without fname; re-added on application
};

struct UnitV {};

struct Value {
  std::variant<Constant, Location, ClosureV, RecClosureV, UnitV> v;

  Value() : v(UnitV{}) {}
  Value(Constant c) : v(c) {}
  static Value loc(Location l) { Value x; x.v = l; return x; }
  static Value unit() { return Value(); }
  static Value integer(std::int64_t n) { return Value(Constant::integer(n)); }
  static Value boolean(bool b) { return Value(Constant::boolean(b)); }

  bool is_const() const { return std::holds_alternative<Constant>(v); }
  bool is_loc() const { return std::holds_alternative<Location>(v); }
  bool is_unit() const { return std::holds_alternative<UnitV>(v); }
  bool is_closure() const {
    return std::holds_alternative<ClosureV>(v) ||
           std::holds_alternative<RecClosureV>(v);
  }
  const Constant& as_const() const { return std::get<Constant>(v); }
  Location as_loc() const { return std::get<Location>(v); }

  std::string to_string() const;  // "5", "true", "l1", "()", "<fun x @2>"
  friend bool operator==(const Value&, const Value&);
};

// ------ dependency pairs and functions ------

struct VarOcc {
  std::string name;
  ProgramPoint point = 0;
  std::string to_string() const { return name + "^" + std::to_string(point); }
  friend auto operator<=>(const VarOcc&, const VarOcc&) = default;
};

struct LocOcc {
  Location loc = 0;
  ProgramPoint point = 0;
  std::string to_string() const {
    return "l" + std::to_string(loc) + "^" + std::to_string(point);
  }
  friend auto operator<=>(const LocOcc&, const LocOcc&) = default;
};

struct DependencyPair {
  std::set<LocOcc> L;
  std::set<VarOcc> V;

  DependencyPair& merge(const DependencyPair& other);
  std::string to_string() const;  // "({l1^8},{z^7})", members sorted
  friend bool operator==(const DependencyPair&, const DependencyPair&) = default;
};

// A binding subject: a variable name or a store location.
struct DepBase {
  enum class Kind { Var, Loc };
  Kind kind = Kind::Var;
  std::string name;  // Kind::Var
  Location loc = 0;  // Kind::Loc

  static DepBase var(std::string n) { return {Kind::Var, std::move(n), 0}; }
  static DepBase location(Location l) { return {Kind::Loc, {}, l}; }
  std::string to_string() const {
    return kind == Kind::Var ? name : "l" + std::to_string(loc);
  }
  friend auto operator<=>(const DepBase&, const DepBase&) = default;
};

struct DepKey {
  DepBase base;
  ProgramPoint point = 0;
  std::string to_string() const {
    return base.to_string() + "^" + std::to_string(point);
  }
  friend auto operator<=>(const DepKey&, const DepKey&) = default;
};

struct JournalEntry {
  DepKey key;
  std::uint64_t seq = 0;  // strictly increasing from 1
};

struct DepFunc {
  std::map<DepKey, DependencyPair> bindings;
  std::vector<JournalEntry> journal;
};

struct PointOrder {
  std::set<std::pair<ProgramPoint, ProgramPoint>> edges;

  // Reflexive-transitive reachability.
  bool reaches(ProgramPoint a, ProgramPoint b) const;
  // Antisymmetry of the reflexive-transitive closure (no 2+ cycles).
  bool closure_antisymmetric() const;
  std::set<ProgramPoint> points() const;  // endpoints mentioned by edges
};

// ------ store and results ------

struct Store {
  std::map<Location, Value> cells;
  Location next = 1;
};

struct EvalResult {
  Value value;
  Store store;
  DepFunc depfn;
  PointOrder order;
  DependencyPair deps;
  ProgramPoint point = 0;  // label of the evaluated occurrence
  Env env_all;  // every binding made during the run, last write wins
};

// ------ errors ------

struct EvalError : std::runtime_error {
  enum class Kind {
    Unbound, NotAFunction, NotALocation, NoMatchingPattern,
    RuntimeType, Overflow, FuelExhausted
  };
  Kind kind;
  ProgramPoint point;
  EvalError(Kind k, ProgramPoint p, const std::string& msg);
};

const char* eval_error_name(EvalError::Kind k);

// ------ operations ------

constexpr std::uint64_t kDefaultFuel = 1'000'000;

// Functional constants on values; EQUAL also accepts two booleans.
Value apply(const Constant& c, const Value& v1, const Value& v2);

// match(n,n)=id, match(b,b)=id, match(v,_)=id, match(v,x)=[x↦v], else nothing.
std::optional<std::vector<std::pair<std::string, Value>>> match(
    const Value& v, const Pattern& s);

// [x^p ↦ d] for a variable pattern, empty extension otherwise.
std::optional<std::pair<DepKey, DependencyPair>> match_w(
    const Pattern& s, ProgramPoint p, const DependencyPair& d);

std::set<std::string> env_inverse(const Env& env, const Value& v);

// bindings[key] := d, journal append, order gains edges from every earlier
// binding point of the same subject and from cur (unless cur == key.point).
void depfn_update(DepFunc& w, const DepKey& key, const DependencyPair& d,
                  PointOrder& order, ProgramPoint cur);

// Most recent journal binding of u (runtime lookup; last binding wins).
DepKey uf_runtime(const DepBase& u, const DepFunc& w);  // throws Unbound

// Declarative greatest binding over the point order; empty when the
// bindings of u have no unique greatest element.
std::optional<DepKey> uf_order(const DepBase& u, const DepFunc& w,
                               const PointOrder& order);

EvalResult eval(const Env& env, const Occurrence& o, const Store& sto,
                const DepFunc& w, const PointOrder& order, ProgramPoint p,
                std::uint64_t fuel = kDefaultFuel);

EvalResult eval_program(const Occurrence& o, std::uint64_t fuel = kDefaultFuel);

}  // namespace occflow::runtime
