#pragma once

// ------ data-flow and alias types, static point order, type checker ------
//
// A base type (δ,κ) lists the occurrences a value was derived from (δ) and
// the names it may alias (κ, non-empty exactly for location-valued
// expressions; internal variables ν@p stand in for the cell allocated by the
// ref at point p).  Abstractions get arrow types.  The checker consumes a
// static point order Π (an over-approximation of evaluation order) and an
// alias basis κ⁰ (a partition of names into may-alias cells).

#include <occflow/runtime.hpp>
#include <occflow/syntax.hpp>

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace occflow::typesys {

using runtime::Env;
using runtime::Value;
using syntax::OccPtr;
using syntax::Occurrence;
using syntax::Pattern;
using syntax::ProgramPoint;

// ------ names, occurrences, types ------

// A type-level name: a program variable or the internal variable of a ref.
struct TypeName {
  enum class Kind { Var, IVar };
  Kind kind = Kind::Var;
  std::string name;            // Kind::Var
  ProgramPoint ref_point = 0;  // Kind::IVar: allocating ref's label

  static TypeName var(std::string n) { return {Kind::Var, std::move(n), 0}; }
  static TypeName ivar(ProgramPoint p) { return {Kind::IVar, {}, p}; }
  bool is_ivar() const { return kind == Kind::IVar; }
  std::string to_string() const {
    return kind == Kind::Var ? name : "nu@" + std::to_string(ref_point);
  }
  friend auto operator<=>(const TypeName&, const TypeName&) = default;
};

struct TypeOcc {
  TypeName base;
  ProgramPoint point = 0;
  std::string to_string() const {
    return base.to_string() + "^" + std::to_string(point);
  }
  friend auto operator<=>(const TypeOcc&, const TypeOcc&) = default;
};

struct Type {
  enum class Kind { Base, Arrow };
  Kind kind = Kind::Base;
  std::set<TypeOcc> delta;   // Kind::Base
  std::set<TypeName> kappa;  // Kind::Base
  std::shared_ptr<Type> from, to;  // Kind::Arrow

  static Type base(std::set<TypeOcc> d = {}, std::set<TypeName> k = {});
  static Type arrow(Type t1, Type t2);
  bool is_base() const { return kind == Kind::Base; }
  std::string to_string() const;  // "({x^3},{x,nu@2})", "(({},{}) -> ...)"
  friend bool operator==(const Type&, const Type&);
};

using TypeEnv = std::map<TypeOcc, Type>;

// ------ static point order and alias basis ------

struct PiOrder {
  std::set<ProgramPoint> P;
  std::set<std::pair<ProgramPoint, ProgramPoint>> edges;

  bool reaches(ProgramPoint a, ProgramPoint b) const;  // reflexive-transitive
  bool closure_antisymmetric() const;
};

struct AliasBase {
  std::vector<std::set<TypeName>> cells;

  // Partition check over the given universe; fills `why` on failure.
  bool is_partition_over(const std::set<TypeName>& universe,
                         std::string* why = nullptr) const;
  const std::set<TypeName>* cell_of(const TypeName& n) const;
  std::string to_string() const;
};

using Chain = std::vector<ProgramPoint>;  // ascending, last element maximal
using ChainSet = std::vector<Chain>;

// ------ diagnostics ------

struct TypeDiagnostic {
  enum class Code {
    TypeMismatch, NotAFunctionType, RefOfAbstraction, DerefOfNonLocationType,
    PolymorphismRestriction, UnboundOccurrence, KappaEmptyOnDeref,
    ShapeMismatch, PiNotPartialOrder, BadAliasBase, NotBinderUnique
  };
  Code code = Code::TypeMismatch;
  ProgramPoint point = 0;
  std::string message;
};

const char* diagnostic_name(TypeDiagnostic::Code c);

struct TypeError : std::runtime_error {
  TypeDiagnostic diag;
  explicit TypeError(TypeDiagnostic d);
};

// ------ unions and lookups ------

Type type_union(const Type& a, const Type& b);  // throws ShapeMismatch
Type base_union(const Type& t, const Type& d);  // d must be Base

// Greatest binding occurrence of u in Γ at or below `at` in Π.
std::optional<TypeOcc> uf_pi(const TypeName& u, const TypeEnv& gamma,
                             const PiOrder& pi, ProgramPoint at);

// All maximal totally-ordered chains in Π with maximal element p.
ChainSet p_chains(const PiOrder& pi, ProgramPoint p);

// Union over chains of the per-chain greatest binding of u.
std::set<TypeOcc> uf_upsilon(const TypeName& u, const TypeEnv& gamma,
                             const ChainSet& chains);

// Γ[x^p : T] for a variable pattern; no-op otherwise.
void sigma(TypeEnv& gamma, const Pattern& s, ProgramPoint p, const Type& t);

// ------ derived inputs ------

// Static evaluation-order approximation: sequencing edges per rule, case arms
// mutually incomparable and joined at the case point, abstraction bodies
// chained from their (first non-recursive) application site.
PiOrder derive_pi(const Occurrence& o);

// Syntactic alias basis: one cell per ref with its internal variable plus all
// variables bound (through let/var/case-scrutinee chains) to location-valued
// expressions; every other name is a singleton cell.
AliasBase derive_kappa0(const Occurrence& o);

// All names the alias basis must cover: every variable plus one ν@p per ref.
std::set<TypeName> name_universe(const Occurrence& o);

// ------ type checker ------

struct TypeckResult {
  bool ok = false;
  Type type;                            // valid when ok
  TypeEnv gamma;                        // final Γ (bindings + assumptions)
  std::map<ProgramPoint, Type> occ_types;
  // λ point → (parameter type, binding point of the assumption)
  std::map<ProgramPoint, std::pair<Type, ProgramPoint>> assumptions;
  std::vector<TypeDiagnostic> diagnostics;
};

TypeckResult typecheck(const TypeEnv& gamma0, const PiOrder& pi,
                       const AliasBase& kappa0, const Occurrence& o);

// Checking-mode value typing: does T accept v under the checker's state?
// (The value rules leave δ/κ unconstrained, so candidates are verified, not
// inferred.)  Failures are appended to `why` when given.
bool type_value(const TypeckResult& ctx, const PiOrder& pi, const Value& v,
                const Type& t, std::vector<std::string>* why = nullptr);

// Every bound variable needs some occurrence in Γ whose type accepts its
// value; returns the failing variables.
std::vector<std::string> env_welltyped(const TypeckResult& ctx,
                                       const PiOrder& pi, const Env& env);

}  // namespace occflow::typesys
