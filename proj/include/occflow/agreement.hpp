#pragma once

// ------ runtime/static agreement relations ------
//
// After a run, the recorded dependency function and point order are compared
// against the checker's environment and static order.  Each relation returns
// a report listing every violated clause with a concrete witness, so a
// failing corpus item can be diagnosed from the report alone.

#include <occflow/runtime.hpp>
#include <occflow/typesys.hpp>

#include <string>
#include <vector>

namespace occflow::agreement {

using runtime::DepFunc;
using runtime::DependencyPair;
using runtime::Env;
using runtime::PointOrder;
using runtime::Store;
using runtime::Value;
using syntax::ProgramPoint;
using typesys::AliasBase;
using typesys::PiOrder;
using typesys::Type;
using typesys::TypeEnv;
using typesys::TypeName;
using typesys::TypeOcc;

struct AgreementViolation {
  std::string clause;   // stable tag, e.g. "coverage", "dependency", "alias"
  std::string witness;  // human-readable culprit
};

struct AgreementReport {
  bool ok = true;
  std::vector<AgreementViolation> violations;

  void add(std::string clause, std::string witness);
  void merge(const AgreementReport& other);
  std::string to_string() const;  // "ok" or one violation per line
};

// Variable dependencies must be declared (V ⊆ δ), and every recorded
// location dependency must be covered by an alias cell that δ references:
// the cell of the location's current names, or an internal-variable-only
// cell when nothing in the environment names it.
AgreementReport dep_agreement(const Env& env, const DependencyPair& d,
                              const std::set<TypeOcc>& delta,
                              const AliasBase& kappa0);

// A location's static aliases must name it: some internal variable in κ is
// bound in Γ at one of the location's recorded binding points, and the cell
// containing the location's environment names (or some cell, when it has
// none) supplies such an internal variable.
AgreementReport alias_agreement(const Env& env, const DepFunc& w,
                                runtime::Location l, const TypeEnv& gamma,
                                const std::set<TypeName>& kappa,
                                const AliasBase& kappa0);

// A value against a type: abstractions recurse into the codomain, base
// values answer to dep_agreement, locations additionally to alias_agreement
// (the unit value carries no aliases and skips the alias clause).
AgreementReport type_agreement(const Env& env, const Value& v,
                               const DepFunc& w, const DependencyPair& d,
                               const TypeEnv& gamma, const Type& t,
                               const AliasBase& kappa0);

// The whole-run relation:
//   - every environment variable and every recorded variable binding has a
//     matching occurrence in Γ ("coverage"),
//   - recorded variable bindings agree with their values and types,
//   - each location's binding points are covered by a single internal
//     variable in Γ ("cell-naming"),
//   - stored values agree with the types bound for those points
//     ("stored-type"),
//   - every recorded order edge is within the static order ("order"),
//   - each location's most recent write is the greatest binding on some
//     chain of the static order ("latest-write").
AgreementReport env_agreement(const Env& env, const Store& sto,
                              const DepFunc& w, const PointOrder& order,
                              const TypeEnv& gamma, const PiOrder& pi,
                              const AliasBase& kappa0);

}  // namespace occflow::agreement
