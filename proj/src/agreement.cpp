#include <occflow/agreement.hpp>

#include <sstream>

namespace occflow::agreement {

namespace {

using runtime::DepBase;
using runtime::DepKey;
using runtime::Location;

// Prefix sub-relation findings with the binding they were checked for.
void absorb(AgreementReport& into, const AgreementReport& sub,
            const std::string& context) {
  for (const auto& v : sub.violations) into.add(v.clause, context + v.witness);
}

bool cell_referenced(const std::set<TypeName>& cell,
                     const std::set<TypeOcc>& delta) {
  for (const auto& occ : delta)
    if (cell.count(occ.base)) return true;
  return false;
}

bool ivar_only(const std::set<TypeName>& cell) {
  for (const auto& n : cell)
    if (!n.is_ivar()) return false;
  return true;
}

std::string delta_string(const std::set<TypeOcc>& delta) {
  return Type::base(delta, {}).to_string();
}

}  // namespace

// ------ reports ------

void AgreementReport::add(std::string clause, std::string witness) {
  ok = false;
  violations.push_back({std::move(clause), std::move(witness)});
}

void AgreementReport::merge(const AgreementReport& other) {
  for (const auto& v : other.violations) add(v.clause, v.witness);
}

std::string AgreementReport::to_string() const {
  if (ok) return "agree";
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "\n";
    out << violations[i].clause << ": " << violations[i].witness;
  }
  return out.str();
}

// ------ dependency pairs against δ ------

AgreementReport dep_agreement(const Env& env, const DependencyPair& d,
                              const std::set<TypeOcc>& delta,
                              const AliasBase& kappa0) {
  AgreementReport rep;
  for (const auto& vo : d.V) {
    if (!delta.count(TypeOcc{TypeName::var(vo.name), vo.point}))
      rep.add("dependency", vo.to_string() + " was read but is not in " +
                                delta_string(delta));
  }
  for (const auto& lo : d.L) {
    auto names = runtime::env_inverse(env, Value::loc(lo.loc));
    bool covered = false;
    if (!names.empty()) {
      // All of the location's names live in one cell; δ must reference it.
      const std::set<TypeName>* cell = kappa0.cell_of(TypeName::var(*names.begin()));
      bool holds_all = cell != nullptr;
      if (cell)
        for (const auto& n : names)
          if (!cell->count(TypeName::var(n))) holds_all = false;
      covered = holds_all && cell_referenced(*cell, delta);
    } else {
      for (const auto& cell : kappa0.cells)
        if (ivar_only(cell) && cell_referenced(cell, delta)) covered = true;
    }
    if (!covered)
      rep.add("dependency",
              lo.to_string() + " was read but no cell naming it is referenced by " +
                  delta_string(delta));
  }
  return rep;
}

// ------ location aliases against κ ------

AgreementReport alias_agreement(const Env& env, const DepFunc& w,
                                runtime::Location l, const TypeEnv& gamma,
                                const std::set<TypeName>& kappa,
                                const AliasBase& kappa0) {
  AgreementReport rep;
  std::set<syntax::ProgramPoint> locpts;
  for (const auto& [key, dep] : w.bindings)
    if (key.base.kind == DepBase::Kind::Loc && key.base.loc == l)
      locpts.insert(key.point);

  auto matching = [&](const TypeName& n) {
    if (!n.is_ivar()) return false;
    for (auto p : locpts)
      if (gamma.count(TypeOcc{n, p})) return true;
    return false;
  };

  bool named = false;
  for (const auto& n : kappa)
    if (matching(n)) named = true;
  if (!named)
    rep.add("alias", "no internal variable in {" +
                         [&] {
                           std::string s;
                           for (const auto& n : kappa)
                             s += (s.empty() ? "" : ",") + n.to_string();
                           return s;
                         }() +
                         "} is bound at a binding point of l" + std::to_string(l));

  auto names = runtime::env_inverse(env, Value::loc(l));
  if (!names.empty()) {
    const std::set<TypeName>* cell = kappa0.cell_of(TypeName::var(*names.begin()));
    bool holds_all = cell != nullptr;
    if (cell)
      for (const auto& n : names)
        if (!cell->count(TypeName::var(n))) holds_all = false;
    bool supplied = false;
    if (holds_all)
      for (const auto& n : *cell)
        if (kappa.count(n) && matching(n)) supplied = true;
    if (!supplied)
      rep.add("alias", "the cell holding the names of l" + std::to_string(l) +
                           " supplies no matching internal variable");
  } else {
    bool supplied = false;
    for (const auto& cell : kappa0.cells)
      for (const auto& n : cell)
        if (kappa.count(n) && matching(n)) supplied = true;
    if (!supplied)
      rep.add("alias", "no cell supplies a matching internal variable for l" +
                           std::to_string(l));
  }
  return rep;
}

// ------ a value against a type ------

AgreementReport type_agreement(const Env& env, const Value& v,
                               const DepFunc& w, const DependencyPair& d,
                               const TypeEnv& gamma, const Type& t,
                               const AliasBase& kappa0) {
  AgreementReport rep;
  if (v.is_loc()) {
    if (!t.is_base()) {
      rep.add("location-shape",
              v.to_string() + " is a location but carries an arrow type");
      return rep;
    }
    rep.merge(dep_agreement(env, d, t.delta, kappa0));
    rep.merge(alias_agreement(env, w, v.as_loc(), gamma, t.kappa, kappa0));
    return rep;
  }
  if (!t.is_base())
    return type_agreement(env, v, w, d, gamma, *t.to, kappa0);
  rep.merge(dep_agreement(env, d, t.delta, kappa0));
  return rep;
}

// ------ the whole-run relation ------

AgreementReport env_agreement(const Env& env, const Store& sto,
                              const DepFunc& w, const PointOrder& order,
                              const TypeEnv& gamma, const PiOrder& pi,
                              const AliasBase& kappa0) {
  AgreementReport rep;

  std::set<std::string> vars_in_w;
  std::map<Location, std::set<syntax::ProgramPoint>> loc_points;
  for (const auto& [key, dep] : w.bindings) {
    if (key.base.kind == DepBase::Kind::Var)
      vars_in_w.insert(key.base.name);
    else
      loc_points[key.base.loc].insert(key.point);
  }
  std::set<std::string> vars_in_gamma;
  std::set<TypeName> ivars_in_gamma;
  for (const auto& [occ, t] : gamma) {
    if (occ.base.is_ivar())
      ivars_in_gamma.insert(occ.base);
    else
      vars_in_gamma.insert(occ.base.name);
  }

  // Every environment variable was recorded and typed somewhere.
  for (const auto& [x, v] : env) {
    if (!vars_in_w.count(x))
      rep.add("coverage", "'" + x + "' is bound in the environment but has no "
                                    "recorded binding");
    if (!vars_in_gamma.count(x))
      rep.add("coverage", "'" + x + "' is bound in the environment but has no "
                                    "typed occurrence");
  }

  // Every recorded variable binding is typed at the same occurrence and, for
  // live variables, agrees with the current value.
  for (const auto& [key, dep] : w.bindings) {
    if (key.base.kind != DepBase::Kind::Var) continue;
    TypeOcc occ{TypeName::var(key.base.name), key.point};
    auto it = gamma.find(occ);
    if (it == gamma.end()) {
      rep.add("coverage", "recorded binding " + key.to_string() +
                              " has no typed occurrence");
      continue;
    }
    auto ev = env.find(key.base.name);
    if (ev == env.end()) continue;
    absorb(rep, type_agreement(env, ev->second, w, dep, gamma, it->second, kappa0),
           key.to_string() + ": ");
  }

  // Each location's binding points are named by one internal variable, and
  // the stored value agrees with a type bound at each point.
  for (const auto& [l, pts] : loc_points) {
    bool covering = false;
    for (const auto& nu : ivars_in_gamma) {
      bool all = true;
      for (auto p : pts)
        if (!gamma.count(TypeOcc{nu, p})) all = false;
      if (all) covering = true;
    }
    if (!covering)
      rep.add("cell-naming", "no single internal variable covers every "
                             "binding point of l" + std::to_string(l));

    auto sv = sto.cells.find(l);
    if (sv == sto.cells.end()) {
      rep.add("stored-type", "l" + std::to_string(l) + " is missing from the store");
    } else {
      for (auto p : pts) {
        DepKey key{DepBase::location(l), p};
        const DependencyPair& dep = w.bindings.at(key);
        bool okp = false;
        for (const auto& nu : ivars_in_gamma) {
          auto it = gamma.find(TypeOcc{nu, p});
          if (it == gamma.end()) continue;
          if (type_agreement(env, sv->second, w, dep, gamma, it->second, kappa0).ok) {
            okp = true;
            break;
          }
        }
        if (!okp)
          rep.add("stored-type", key.to_string() +
                                     ": no internal variable bound at this "
                                     "point types the stored value");
      }
    }

    // The most recent write is the greatest binding on some static chain.
    auto q = runtime::uf_runtime(DepBase::location(l), w).point;
    auto visible_from = [&](syntax::ProgramPoint vantage) {
      auto chains = typesys::p_chains(pi, vantage);
      for (const auto& nu : ivars_in_gamma)
        if (typesys::uf_upsilon(nu, gamma, chains).count(TypeOcc{nu, q}))
          return true;
      return false;
    };
    bool visible = pi.P.count(q) && visible_from(q);
    if (!visible)
      for (auto vantage : pi.P)
        if (visible_from(vantage)) {
          visible = true;
          break;
        }
    if (!visible)
      rep.add("latest-write", "the most recent write to l" + std::to_string(l) +
                                  " (point " + std::to_string(q) +
                                  ") is not visible on any static chain");
  }

  // Recorded ordering must be sanctioned statically.
  for (const auto& [a, b] : order.edges)
    if (!pi.reaches(a, b))
      rep.add("order", "(" + std::to_string(a) + "," + std::to_string(b) +
                           ") is recorded but not statically ordered");

  return rep;
}

}  // namespace occflow::agreement
