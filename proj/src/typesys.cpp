#include <occflow/typesys.hpp>

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>

namespace occflow::typesys {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

using Code = TypeDiagnostic::Code;
using syntax::AbsE;
using syntax::AppE;
using syntax::AssignE;
using syntax::CaseE;
using syntax::ConstAppE;
using syntax::ConstE;
using syntax::DerefE;
using syntax::LetE;
using syntax::LetRecE;
using syntax::RefE;
using syntax::VarE;

TypeDiagnostic mkdiag(Code c, ProgramPoint p, std::string msg) {
  return TypeDiagnostic{c, p, std::move(msg)};
}

}  // namespace

// ------ types ------

Type Type::base(std::set<TypeOcc> d, std::set<TypeName> k) {
  Type t;
  t.kind = Kind::Base;
  t.delta = std::move(d);
  t.kappa = std::move(k);
  return t;
}

Type Type::arrow(Type t1, Type t2) {
  Type t;
  t.kind = Kind::Arrow;
  t.from = std::make_shared<Type>(std::move(t1));
  t.to = std::make_shared<Type>(std::move(t2));
  return t;
}

bool operator==(const Type& a, const Type& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Type::Kind::Base)
    return a.delta == b.delta && a.kappa == b.kappa;
  return *a.from == *b.from && *a.to == *b.to;
}

std::string Type::to_string() const {
  if (kind == Kind::Arrow)
    return "(" + from->to_string() + " -> " + to->to_string() + ")";
  std::vector<std::string> occs;
  for (const auto& o : delta) occs.push_back(o.to_string());
  std::vector<std::string> names;
  for (const auto& n : kappa) names.push_back(n.to_string());
  std::sort(occs.begin(), occs.end());
  std::sort(names.begin(), names.end());
  std::ostringstream out;
  out << "({";
  for (std::size_t i = 0; i < occs.size(); ++i) out << (i ? "," : "") << occs[i];
  out << "},{";
  for (std::size_t i = 0; i < names.size(); ++i)
    out << (i ? "," : "") << names[i];
  out << "})";
  return out.str();
}

// ------ static point order ------

bool PiOrder::reaches(ProgramPoint a, ProgramPoint b) const {
  if (a == b) return true;
  std::set<ProgramPoint> seen{a};
  std::deque<ProgramPoint> todo{a};
  while (!todo.empty()) {
    ProgramPoint q = todo.front();
    todo.pop_front();
    for (auto it = edges.lower_bound({q, 0}); it != edges.end() && it->first == q;
         ++it) {
      if (it->second == b) return true;
      if (seen.insert(it->second).second) todo.push_back(it->second);
    }
  }
  return false;
}

bool PiOrder::closure_antisymmetric() const {
  std::map<ProgramPoint, std::set<ProgramPoint>> reach;
  for (ProgramPoint a : P) {
    auto& r = reach[a];
    std::deque<ProgramPoint> todo{a};
    while (!todo.empty()) {
      ProgramPoint q = todo.front();
      todo.pop_front();
      for (auto it = edges.lower_bound({q, 0});
           it != edges.end() && it->first == q; ++it)
        if (r.insert(it->second).second) todo.push_back(it->second);
    }
  }
  for (const auto& [a, r] : reach)
    for (ProgramPoint b : r)
      if (b != a && reach[b].count(a)) return false;
  return true;
}

// ------ alias basis ------

bool AliasBase::is_partition_over(const std::set<TypeName>& universe,
                                  std::string* why) const {
  auto fail = [&](std::string m) {
    if (why) *why = std::move(m);
    return false;
  };
  std::set<TypeName> seen;
  for (const auto& cell : cells) {
    if (cell.empty()) return fail("alias basis contains an empty cell");
    for (const auto& n : cell)
      if (!seen.insert(n).second)
        return fail("name appears in two cells: " + n.to_string());
  }
  for (const auto& n : universe)
    if (!seen.count(n)) return fail("name missing from every cell: " + n.to_string());
  for (const auto& n : seen)
    if (!universe.count(n))
      return fail("cell names a symbol absent from the program: " + n.to_string());
  if (why) why->clear();
  return true;
}

const std::set<TypeName>* AliasBase::cell_of(const TypeName& n) const {
  for (const auto& cell : cells)
    if (cell.count(n)) return &cell;
  return nullptr;
}

std::string AliasBase::to_string() const {
  std::vector<std::string> rendered;
  for (const auto& cell : cells) {
    std::vector<std::string> names;
    for (const auto& n : cell) names.push_back(n.to_string());
    std::sort(names.begin(), names.end());
    std::string s = "{";
    for (std::size_t i = 0; i < names.size(); ++i)
      s += (i ? "," : "") + names[i];
    rendered.push_back(s + "}");
  }
  std::sort(rendered.begin(), rendered.end());
  std::string out = "{";
  for (std::size_t i = 0; i < rendered.size(); ++i)
    out += (i ? "," : "") + rendered[i];
  return out + "}";
}

// ------ diagnostics ------

const char* diagnostic_name(TypeDiagnostic::Code c) {
  switch (c) {
    case Code::TypeMismatch: return "TypeMismatch";
    case Code::NotAFunctionType: return "NotAFunctionType";
    case Code::RefOfAbstraction: return "RefOfAbstraction";
    case Code::DerefOfNonLocationType: return "DerefOfNonLocationType";
    case Code::PolymorphismRestriction: return "PolymorphismRestriction";
    case Code::UnboundOccurrence: return "UnboundOccurrence";
    case Code::KappaEmptyOnDeref: return "KappaEmptyOnDeref";
    case Code::ShapeMismatch: return "ShapeMismatch";
    case Code::PiNotPartialOrder: return "PiNotPartialOrder";
    case Code::BadAliasBase: return "BadAliasBase";
    case Code::NotBinderUnique: return "NotBinderUnique";
  }
  return "TypeDiagnostic";
}

TypeError::TypeError(TypeDiagnostic d)
    : std::runtime_error(std::string(diagnostic_name(d.code)) + ": " + d.message),
      diag(std::move(d)) {}

// ------ unions ------

Type type_union(const Type& a, const Type& b) {
  if (a.kind != b.kind)
    throw TypeError(mkdiag(Code::ShapeMismatch, 0,
                           "cannot join a base type with an arrow type"));
  if (a.is_base()) {
    Type r = a;
    r.delta.insert(b.delta.begin(), b.delta.end());
    r.kappa.insert(b.kappa.begin(), b.kappa.end());
    return r;
  }
  return Type::arrow(type_union(*a.from, *b.from), type_union(*a.to, *b.to));
}

Type base_union(const Type& t, const Type& d) {
  if (!d.is_base())
    throw TypeError(mkdiag(Code::ShapeMismatch, 0,
                           "dependency summand must be a base type"));
  if (t.is_base()) return type_union(t, d);
  return Type::arrow(*t.from, base_union(*t.to, d));
}

// ------ order lookups ------

std::optional<TypeOcc> uf_pi(const TypeName& u, const TypeEnv& gamma,
                             const PiOrder& pi, ProgramPoint at) {
  std::vector<TypeOcc> cands;
  for (const auto& [occ, t] : gamma)
    if (occ.base == u && pi.reaches(occ.point, at)) cands.push_back(occ);
  for (const auto& c : cands) {
    bool greatest = true;
    for (const auto& o : cands)
      if (!pi.reaches(o.point, c.point)) {
        greatest = false;
        break;
      }
    if (greatest) return c;
  }
  return std::nullopt;
}

ChainSet p_chains(const PiOrder& pi, ProgramPoint p) {
  // Down-set of p via a backward traversal.
  std::map<ProgramPoint, std::vector<ProgramPoint>> rev;
  for (const auto& [a, b] : pi.edges) rev[b].push_back(a);
  std::set<ProgramPoint> down{p};
  std::deque<ProgramPoint> todo{p};
  while (!todo.empty()) {
    ProgramPoint q = todo.front();
    todo.pop_front();
    for (ProgramPoint a : rev[q])
      if (down.insert(a).second) todo.push_back(a);
  }

  // Reachability restricted to the down-set (reflexive).
  std::map<ProgramPoint, std::set<ProgramPoint>> reach;
  for (ProgramPoint a : down) {
    auto& r = reach[a];
    r.insert(a);
    std::deque<ProgramPoint> work{a};
    while (!work.empty()) {
      ProgramPoint q = work.front();
      work.pop_front();
      for (auto it = pi.edges.lower_bound({q, 0});
           it != pi.edges.end() && it->first == q; ++it) {
        if (!down.count(it->second)) continue;
        if (r.insert(it->second).second) work.push_back(it->second);
      }
    }
  }

  // Immediate (covering) predecessors: maximal strict predecessors.
  std::map<ProgramPoint, std::vector<ProgramPoint>> below;
  for (ProgramPoint b : down) {
    std::vector<ProgramPoint> preds;
    for (ProgramPoint a : down)
      if (a != b && reach[a].count(b)) preds.push_back(a);
    for (ProgramPoint a : preds) {
      bool maximal = true;
      for (ProgramPoint c : preds)
        if (c != a && reach[a].count(c)) {
          maximal = false;
          break;
        }
      if (maximal) below[b].push_back(a);
    }
  }

  ChainSet out;
  Chain cur;
  std::function<void(ProgramPoint)> descend = [&](ProgramPoint q) {
    cur.push_back(q);
    if (below[q].empty()) {
      Chain chain(cur.rbegin(), cur.rend());
      out.push_back(std::move(chain));
    } else {
      for (ProgramPoint a : below[q]) {
        // Guards against cyclic inputs; a valid order never trips this.
        if (std::find(cur.begin(), cur.end(), a) == cur.end()) descend(a);
      }
    }
    cur.pop_back();
  };
  descend(p);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::set<TypeOcc> uf_upsilon(const TypeName& u, const TypeEnv& gamma,
                             const ChainSet& chains) {
  std::set<TypeOcc> out;
  for (const auto& chain : chains) {
    std::optional<ProgramPoint> best;
    for (ProgramPoint q : chain)
      if (gamma.count(TypeOcc{u, q})) best = q;  // chains ascend
    if (best) out.insert(TypeOcc{u, *best});
  }
  return out;
}

void sigma(TypeEnv& gamma, const Pattern& s, ProgramPoint p, const Type& t) {
  if (s.kind == Pattern::Kind::Var)
    gamma[TypeOcc{TypeName::var(s.name), p}] = t;
}

// ------ derived inputs ------

std::set<TypeName> name_universe(const Occurrence& o) {
  std::set<TypeName> u;
  syntax::for_each_node(o, [&](const Occurrence& n) {
    std::visit(overloaded{
                   [&](const VarE& v) { u.insert(TypeName::var(v.name)); },
                   [&](const AbsE& a) { u.insert(TypeName::var(a.param)); },
                   [&](const LetE& l) { u.insert(TypeName::var(l.name)); },
                   [&](const LetRecE& l) { u.insert(TypeName::var(l.name)); },
                   [&](const CaseE& c) {
                     for (const auto& br : c.branches)
                       if (br.pat.kind == Pattern::Kind::Var)
                         u.insert(TypeName::var(br.pat.name));
                   },
                   [&](const RefE&) { u.insert(TypeName::ivar(n.point)); },
                   [](const auto&) {},
               },
               n.expr);
  });
  return u;
}

namespace {

struct NameUF {
  std::map<TypeName, TypeName> parent;

  void add(const TypeName& n) {
    if (!parent.count(n)) parent[n] = n;
  }
  TypeName find(TypeName n) {
    while (!(parent.at(n) == n)) n = parent.at(n);
    return n;
  }
  void unite(const TypeName& a, const TypeName& b) {
    add(a);
    add(b);
    TypeName ra = find(a), rb = find(b);
    if (!(ra == rb)) parent[rb] = ra;
  }
};

using Origins = std::set<ProgramPoint>;
using OriginEnv = std::map<std::string, Origins>;

Origins origins_walk(const Occurrence& o, OriginEnv env, NameUF& uf) {
  return std::visit(
      overloaded{
          [&](const VarE& v) -> Origins {
            auto it = env.find(v.name);
            return it != env.end() ? it->second : Origins{};
          },
          [&](const ConstE&) -> Origins { return {}; },
          [&](const AbsE& a) -> Origins {
            auto e2 = env;
            e2[a.param] = {};
            origins_walk(*a.body, std::move(e2), uf);
            return {};
          },
          [&](const AppE& a) -> Origins {
            origins_walk(*a.fn, env, uf);
            origins_walk(*a.arg, env, uf);
            return {};
          },
          [&](const ConstAppE& c) -> Origins {
            origins_walk(*c.lhs, env, uf);
            origins_walk(*c.rhs, env, uf);
            return {};
          },
          [&](const LetE& l) -> Origins {
            Origins o1 = origins_walk(*l.bound, env, uf);
            for (ProgramPoint p : o1)
              uf.unite(TypeName::var(l.name), TypeName::ivar(p));
            auto e2 = env;
            e2[l.name] = o1;
            return origins_walk(*l.body, std::move(e2), uf);
          },
          [&](const LetRecE& l) -> Origins {
            auto e2 = env;
            e2[l.name] = {};
            origins_walk(*l.bound, e2, uf);
            return origins_walk(*l.body, std::move(e2), uf);
          },
          [&](const CaseE& c) -> Origins {
            Origins s = origins_walk(*c.scrutinee, env, uf);
            Origins out;
            for (const auto& br : c.branches) {
              auto e2 = env;
              if (br.pat.kind == Pattern::Kind::Var) {
                for (ProgramPoint p : s)
                  uf.unite(TypeName::var(br.pat.name), TypeName::ivar(p));
                e2[br.pat.name] = s;
              }
              Origins b = origins_walk(*br.body, std::move(e2), uf);
              out.insert(b.begin(), b.end());
            }
            return out;
          },
          [&](const RefE& r) -> Origins {
            origins_walk(*r.init, env, uf);
            return {o.point};
          },
          [&](const DerefE& d) -> Origins {
            origins_walk(*d.target, env, uf);
            return {};  // cells hold base values, never locations
          },
          [&](const AssignE& a) -> Origins {
            origins_walk(*a.target, env, uf);
            origins_walk(*a.value, env, uf);
            return {};
          },
      },
      o.expr);
}

}  // namespace

AliasBase derive_kappa0(const Occurrence& o) {
  NameUF uf;
  auto universe = name_universe(o);
  for (const auto& n : universe) uf.add(n);
  origins_walk(o, {}, uf);

  std::map<TypeName, std::set<TypeName>> groups;
  for (const auto& n : universe) groups[uf.find(n)].insert(n);
  AliasBase k;
  for (auto& [root, cell] : groups) k.cells.push_back(std::move(cell));
  std::sort(k.cells.begin(), k.cells.end());
  return k;
}

// ------ application-site resolution ------

namespace {

struct CallGraph {
  std::map<ProgramPoint, ProgramPoint> site_lambda;  // application -> λ
  std::map<ProgramPoint, ProgramPoint> entry_site;   // λ -> first outside site
  std::map<ProgramPoint, ProgramPoint> anchor;       // λ -> assumption point
  std::map<ProgramPoint, const AbsE*> abs_at;
  std::map<ProgramPoint, std::set<ProgramPoint>> body_points;
};

CallGraph resolve_calls(const Occurrence& root) {
  CallGraph cg;
  syntax::for_each_node(root, [&](const Occurrence& n) {
    if (const auto* a = std::get_if<AbsE>(&n.expr)) {
      cg.abs_at[n.point] = a;
      cg.body_points[n.point] = syntax::all_points(*a->body);
    }
  });

  using Scope = std::map<std::string, ProgramPoint>;
  std::function<void(const Occurrence&, Scope)> walk = [&](const Occurrence& n,
                                                           Scope scope) {
    std::visit(
        overloaded{
            [&](const VarE&) {},
            [&](const ConstE&) {},
            [&](const AbsE& a) {
              auto s2 = scope;
              s2.erase(a.param);
              walk(*a.body, std::move(s2));
            },
            [&](const AppE& a) {
              ProgramPoint lam = 0;
              if (const auto* ab = std::get_if<AbsE>(&a.fn->expr)) {
                (void)ab;
                lam = a.fn->point;
              } else if (const auto* v = std::get_if<VarE>(&a.fn->expr)) {
                auto it = scope.find(v->name);
                if (it != scope.end()) lam = it->second;
              }
              if (lam != 0) {
                cg.site_lambda[n.point] = lam;
                if (!cg.entry_site.count(lam) &&
                    !cg.body_points[lam].count(n.point)) {
                  cg.entry_site[lam] = n.point;
                  cg.anchor[lam] = a.arg->point;
                }
              }
              walk(*a.fn, scope);
              walk(*a.arg, scope);
            },
            [&](const ConstAppE& c) {
              walk(*c.lhs, scope);
              walk(*c.rhs, scope);
            },
            [&](const LetE& l) {
              walk(*l.bound, scope);
              auto s2 = scope;
              if (std::holds_alternative<AbsE>(l.bound->expr))
                s2[l.name] = l.bound->point;
              else
                s2.erase(l.name);
              walk(*l.body, std::move(s2));
            },
            [&](const LetRecE& l) {
              auto s2 = scope;
              if (std::holds_alternative<AbsE>(l.bound->expr))
                s2[l.name] = l.bound->point;
              else
                s2.erase(l.name);
              walk(*l.bound, s2);
              walk(*l.body, std::move(s2));
            },
            [&](const CaseE& c) {
              walk(*c.scrutinee, scope);
              for (const auto& br : c.branches) {
                auto s2 = scope;
                if (br.pat.kind == Pattern::Kind::Var) s2.erase(br.pat.name);
                walk(*br.body, std::move(s2));
              }
            },
            [&](const RefE& r) { walk(*r.init, scope); },
            [&](const DerefE& d) { walk(*d.target, scope); },
            [&](const AssignE& a) {
              walk(*a.target, scope);
              walk(*a.value, scope);
            },
        },
        n.expr);
  };
  walk(root, {});

  for (const auto& [lam, abs] : cg.abs_at)
    if (!cg.anchor.count(lam)) cg.anchor[lam] = lam;
  return cg;
}

}  // namespace

PiOrder derive_pi(const Occurrence& root) {
  CallGraph cg = resolve_calls(root);
  PiOrder pi;
  pi.P = syntax::all_points(root);

  auto edge = [&](ProgramPoint a, ProgramPoint b) {
    if (a != 0 && a != b) pi.edges.insert({a, b});
  };
  std::function<ProgramPoint(const Occurrence&, ProgramPoint)> walk =
      [&](const Occurrence& n, ProgramPoint in) -> ProgramPoint {
    ProgramPoint p = n.point;
    std::visit(
        overloaded{
            [&](const VarE&) { edge(in, p); },
            [&](const ConstE&) { edge(in, p); },
            [&](const AbsE& a) {
              edge(in, p);
              if (!cg.entry_site.count(p)) walk(*a.body, p);
            },
            [&](const AppE& a) {
              ProgramPoint x = walk(*a.fn, in);
              ProgramPoint y = walk(*a.arg, x);
              auto it = cg.site_lambda.find(p);
              if (it != cg.site_lambda.end() &&
                  cg.entry_site.at(it->second) == p) {
                ProgramPoint e = walk(*cg.abs_at.at(it->second)->body, y);
                edge(e, p);
              } else {
                edge(y, p);
              }
            },
            [&](const ConstAppE& c) {
              ProgramPoint x = walk(*c.lhs, in);
              ProgramPoint y = walk(*c.rhs, x);
              edge(y, p);
            },
            [&](const LetE& l) {
              ProgramPoint x = walk(*l.bound, in);
              ProgramPoint y = walk(*l.body, x);
              edge(y, p);
            },
            [&](const LetRecE& l) {
              ProgramPoint x = walk(*l.bound, in);
              ProgramPoint y = walk(*l.body, x);
              edge(y, p);
            },
            [&](const CaseE& c) {
              ProgramPoint s = walk(*c.scrutinee, in);
              for (const auto& br : c.branches) {
                ProgramPoint b = walk(*br.body, s);
                edge(b, p);
              }
            },
            [&](const RefE& r) { edge(walk(*r.init, in), p); },
            [&](const DerefE& d) { edge(walk(*d.target, in), p); },
            [&](const AssignE& a) {
              ProgramPoint x = walk(*a.target, in);
              ProgramPoint y = walk(*a.value, x);
              edge(y, p);
            },
        },
        n.expr);
    return p;
  };
  walk(root, 0);
  return pi;
}

// ------ the checker ------

namespace {

class Checker {
 public:
  Checker(const TypeEnv& g0, const PiOrder& pi, const AliasBase& k0,
          const Occurrence& root)
      : g0_(g0), pi_(pi), k0_(k0), root_(root) {}

  TypeckResult run() {
    TypeckResult res;
    if (auto clashes = syntax::check_binder_unique(root_); !clashes.empty()) {
      res.diagnostics.push_back(
          mkdiag(Code::NotBinderUnique, clashes.front().second,
                 "'" + clashes.front().name + "' is bound more than once"));
      return res;
    }
    for (const auto& [a, b] : pi_.edges)
      if (!pi_.P.count(a) || !pi_.P.count(b)) {
        res.diagnostics.push_back(mkdiag(Code::PiNotPartialOrder, a,
                                         "order edge endpoint outside the point set"));
        return res;
      }
    if (!pi_.closure_antisymmetric()) {
      res.diagnostics.push_back(
          mkdiag(Code::PiNotPartialOrder, 0, "the point order has a cycle"));
      return res;
    }
    for (ProgramPoint p : syntax::all_points(root_))
      if (!pi_.P.count(p)) {
        res.diagnostics.push_back(
            mkdiag(Code::PiNotPartialOrder, p,
                   "program point missing from the point order"));
        return res;
      }
    std::string why;
    if (!k0_.is_partition_over(name_universe(root_), &why)) {
      res.diagnostics.push_back(mkdiag(Code::BadAliasBase, 0, why));
      return res;
    }

    cg_ = resolve_calls(root_);

    // Parameter assumptions are solved by replay: each pass types the whole
    // program under the assumptions observed in the previous one.
    Type result_type;
    bool converged = false;
    std::size_t max_passes = cg_.abs_at.size() + 2;
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
      gamma_ = g0_;
      occ_types_.clear();
      observed_.clear();
      used_.clear();
      diags_.clear();
      try {
        result_type = check(root_);
      } catch (const TypeError& e) {
        diags_.push_back(e.diag);
      }
      if (!diags_.empty()) break;
      converged = true;
      for (const auto& [lam, t] : observed_) {
        auto u = used_.find(lam);
        const Type prev = u != used_.end() ? u->second : Type::base();
        if (!(t == prev)) converged = false;
      }
      if (converged) break;
      slots_ = observed_;
    }
    if (diags_.empty() && !converged)
      diags_.push_back(mkdiag(Code::PolymorphismRestriction, root_.point,
                              "parameter assumptions did not converge"));

    res.ok = diags_.empty();
    if (res.ok) res.type = result_type;
    res.gamma = std::move(gamma_);
    res.occ_types = std::move(occ_types_);
    for (const auto& [lam, abs] : cg_.abs_at) {
      auto u = used_.find(lam);
      res.assumptions[lam] = {u != used_.end() ? u->second : Type::base(),
                              cg_.anchor.at(lam)};
    }
    res.diagnostics = std::move(diags_);
    return res;
  }

 private:
  Type check(const Occurrence& o) {
    Type t = dispatch(o);
    occ_types_[o.point] = t;
    return t;
  }

  Type assumption_for(ProgramPoint lam) const {
    if (auto it = observed_.find(lam); it != observed_.end()) return it->second;
    if (auto it = slots_.find(lam); it != slots_.end()) return it->second;
    return Type::base();
  }

  const ChainSet& chains_for(ProgramPoint p) {
    auto it = chains_cache_.find(p);
    if (it == chains_cache_.end())
      it = chains_cache_.emplace(p, p_chains(pi_, p)).first;
    return it->second;
  }

  Type dispatch(const Occurrence& o) {
    ProgramPoint p = o.point;
    return std::visit(
        overloaded{
            [&](const VarE& v) -> Type {
              auto occ = uf_pi(TypeName::var(v.name), gamma_, pi_, p);
              if (!occ)
                throw TypeError(mkdiag(Code::UnboundOccurrence, p,
                                       "no visible binding for '" + v.name + "'"));
              return base_union(gamma_.at(*occ),
                                Type::base({TypeOcc{TypeName::var(v.name), p}}, {}));
            },
            [&](const ConstE&) -> Type { return Type::base(); },
            [&](const AbsE& a) -> Type {
              Type t1 = assumption_for(p);
              used_[p] = t1;
              gamma_[TypeOcc{TypeName::var(a.param), cg_.anchor.at(p)}] = t1;
              Type t2 = check(*a.body);
              return Type::arrow(std::move(t1), std::move(t2));
            },
            [&](const AppE& a) -> Type {
              Type targ = check(*a.arg);
              auto site = cg_.site_lambda.find(p);
              bool resolved = site != cg_.site_lambda.end();
              if (resolved) {
                ProgramPoint lam = site->second;
                if (auto it = observed_.find(lam); it != observed_.end()) {
                  if (!(it->second == targ))
                    throw TypeError(mkdiag(
                        Code::PolymorphismRestriction, p,
                        "abstraction at point " + std::to_string(lam) +
                            " is applied at incompatible argument types"));
                } else {
                  observed_[lam] = targ;
                }
                gamma_[TypeOcc{TypeName::var(cg_.abs_at.at(lam)->param),
                               a.arg->point}] = targ;
              }
              Type tfn = check(*a.fn);
              if (tfn.is_base())
                throw TypeError(mkdiag(Code::NotAFunctionType, a.fn->point,
                                       "operator does not have an arrow type"));
              if (!resolved && !(*tfn.from == targ))
                throw TypeError(
                    mkdiag(Code::TypeMismatch, p,
                           "argument type does not match the operator domain"));
              return *tfn.to;
            },
            [&](const ConstAppE&) -> Type { return check_constapp(o); },
            [&](const LetE& l) -> Type {
              Type t1 = check(*l.bound);
              TypeOcc bx{TypeName::var(l.name), l.bound->point};
              if (t1.is_base() && !t1.kappa.empty()) {
                std::set<TypeName> k = t1.kappa;
                for (const auto& n : syntax::fv(*l.bound))
                  k.insert(TypeName::var(n));
                gamma_[bx] = Type::base(t1.delta, std::move(k));
              } else {
                gamma_[bx] = std::move(t1);
              }
              return check(*l.body);
            },
            [&](const LetRecE& l) -> Type { return check_letrec(l); },
            [&](const CaseE& c) -> Type {
              Type ts = check(*c.scrutinee);
              if (!ts.is_base())
                throw TypeError(mkdiag(Code::TypeMismatch, c.scrutinee->point,
                                       "scrutinee must have a base type"));
              std::optional<Type> acc;
              for (const auto& br : c.branches) {
                // Pattern variables bind at the scrutinee's point — the
                // value they receive materialized there, and every use
                // inside the arm sits above it in the static order.
                sigma(gamma_, br.pat, c.scrutinee->point, ts);
                Type tb = check(*br.body);
                acc = acc ? type_union(*acc, tb) : std::move(tb);
              }
              return base_union(*acc, Type::base(ts.delta, ts.kappa));
            },
            [&](const RefE& r) -> Type {
              Type t1 = check(*r.init);
              if (!t1.is_base())
                throw TypeError(mkdiag(Code::RefOfAbstraction, p,
                                       "cells cannot hold abstractions"));
              gamma_[TypeOcc{TypeName::ivar(p), p}] = std::move(t1);
              return Type::base({}, {TypeName::ivar(p)});
            },
            [&](const DerefE& d) -> Type {
              Type tt = check(*d.target);
              if (!tt.is_base())
                throw TypeError(mkdiag(Code::DerefOfNonLocationType, p,
                                       "read target must have a base type"));
              if (tt.kappa.empty())
                throw TypeError(mkdiag(Code::KappaEmptyOnDeref, p,
                                       "read target has no alias information"));
              const ChainSet& chains = chains_for(p);
              std::optional<Type> acc;
              std::set<TypeOcc> dd = tt.delta;
              for (const auto& n : tt.kappa) {
                if (!n.is_ivar()) continue;
                dd.insert(TypeOcc{n, p});
                for (const auto& occ : uf_upsilon(n, gamma_, chains)) {
                  const Type& bound = gamma_.at(occ);
                  acc = acc ? type_union(*acc, bound) : bound;
                }
              }
              if (!acc)
                throw TypeError(mkdiag(Code::UnboundOccurrence, p,
                                       "no reachable binding for any aliased cell"));
              return base_union(*acc, Type::base(std::move(dd), {}));
            },
            [&](const AssignE& a) -> Type {
              Type t1 = check(*a.target);
              if (!t1.is_base())
                throw TypeError(mkdiag(Code::DerefOfNonLocationType, p,
                                       "write target must have a base type"));
              if (t1.kappa.empty())
                throw TypeError(mkdiag(Code::KappaEmptyOnDeref, p,
                                       "write target has no alias information"));
              Type t2 = check(*a.value);
              if (!t2.is_base())
                throw TypeError(mkdiag(Code::RefOfAbstraction, p,
                                       "cells cannot hold abstractions"));
              for (const auto& n : t1.kappa)
                if (n.is_ivar()) gamma_[TypeOcc{n, p}] = t2;
              return Type::base(t1.delta, t1.kappa);
            },
        },
        o.expr);
  }

  Type check_constapp(const Occurrence& o) {
    const auto& c = std::get<ConstAppE>(o.expr);
    Type tl = check(*c.lhs);
    Type tr = check(*c.rhs);
    if (!tl.is_base() || !tr.is_base())
      throw TypeError(mkdiag(Code::TypeMismatch, o.point,
                             "primitive operands must have base types"));
    return type_union(tl, tr);
  }

  Type check_letrec(const LetRecE& l) {
    const auto* ab = std::get_if<AbsE>(&l.bound->expr);
    if (!ab)
      throw TypeError(mkdiag(Code::TypeMismatch, l.bound->point,
                             "recursive binding must be an abstraction"));
    ProgramPoint lam = l.bound->point;
    Type t1 = assumption_for(lam);
    used_[lam] = t1;
    gamma_[TypeOcc{TypeName::var(ab->param), cg_.anchor.at(lam)}] = t1;
    TypeOcc fx{TypeName::var(l.name), lam};

    // One fixed-point iteration from the empty guess, then a stability check.
    auto snapshot = observed_;
    gamma_[fx] = Type::arrow(t1, Type::base());
    Type ta = check(*ab->body);
    observed_ = std::move(snapshot);  // keep only the final derivation's sites
    gamma_[fx] = Type::arrow(t1, ta);
    Type tb = check(*ab->body);
    if (!(tb == ta))
      throw TypeError(mkdiag(Code::TypeMismatch, lam,
                             "recursive result type is not stable"));
    occ_types_[lam] = gamma_.at(fx);
    return check(*l.body);
  }

  const TypeEnv& g0_;
  const PiOrder& pi_;
  const AliasBase& k0_;
  const Occurrence& root_;
  CallGraph cg_;
  TypeEnv gamma_;
  std::map<ProgramPoint, Type> occ_types_;
  std::map<ProgramPoint, Type> slots_, observed_, used_;
  std::vector<TypeDiagnostic> diags_;
  std::map<ProgramPoint, ChainSet> chains_cache_;
};

}  // namespace

TypeckResult typecheck(const TypeEnv& gamma0, const PiOrder& pi,
                       const AliasBase& kappa0, const Occurrence& o) {
  return Checker(gamma0, pi, kappa0, o).run();
}

// ------ value typing ------

namespace {

bool type_leq(const Type& a, const Type& b) {
  if (a.kind != b.kind) return false;
  if (a.is_base())
    return std::includes(b.delta.begin(), b.delta.end(), a.delta.begin(),
                         a.delta.end()) &&
           std::includes(b.kappa.begin(), b.kappa.end(), a.kappa.begin(),
                         a.kappa.end());
  return *a.from == *b.from && type_leq(*a.to, *b.to);
}

bool closure_ok(const TypeckResult& ctx, const PiOrder& pi, ProgramPoint lam,
                const Occurrence& body, const Env& env, const Type& t,
                std::vector<std::string>* why) {
  auto fail = [&](std::string m) {
    if (why) why->push_back(std::move(m));
    return false;
  };
  if (t.is_base()) return fail("an abstraction needs an arrow type");
  Type t1 = Type::base();
  if (auto it = ctx.assumptions.find(lam); it != ctx.assumptions.end())
    t1 = it->second.first;
  if (!(*t.from == t1))
    return fail("domain differs from the recorded parameter assumption");
  auto bt = ctx.occ_types.find(body.point);
  if (bt == ctx.occ_types.end())
    return fail("the abstraction body was never checked");
  if (!type_leq(bt->second, *t.to))
    return fail("codomain drops occurrences of the checked body type");
  auto bad = env_welltyped(ctx, pi, env);
  if (!bad.empty())
    return fail("captured environment is not well-typed at '" + bad.front() +
                "'");
  return true;
}

}  // namespace

bool type_value(const TypeckResult& ctx, const PiOrder& pi, const Value& v,
                const Type& t, std::vector<std::string>* why) {
  auto fail = [&](std::string m) {
    if (why) why->push_back(std::move(m));
    return false;
  };
  return std::visit(
      overloaded{
          [&](const syntax::Constant&) {
            if (!t.is_base()) return fail("a constant needs a base type");
            if (!t.kappa.empty()) return fail("a constant cannot carry aliases");
            return true;
          },
          [&](const runtime::UnitV&) {
            if (!t.is_base()) return fail("the unit value needs a base type");
            if (!t.kappa.empty())
              return fail("the unit value cannot carry aliases");
            return true;
          },
          [&](runtime::Location l) {
            if (!t.is_base()) return fail("a location needs a base type");
            if (t.kappa.empty())
              return fail("location l" + std::to_string(l) +
                          " has a type with no aliases");
            return true;
          },
          [&](const runtime::ClosureV& c) {
            return closure_ok(ctx, pi, c.lam_point, *c.body, *c.env, t, why);
          },
          [&](const runtime::RecClosureV& c) {
            return closure_ok(ctx, pi, c.lam_point, *c.body, *c.env, t, why);
          },
      },
      v.v);
}

std::vector<std::string> env_welltyped(const TypeckResult& ctx,
                                       const PiOrder& pi, const Env& env) {
  std::vector<std::string> fails;
  for (const auto& [x, v] : env) {
    bool ok = false;
    TypeName u = TypeName::var(x);
    for (const auto& [occ, t] : ctx.gamma) {
      if (!(occ.base == u)) continue;
      if (type_value(ctx, pi, v, t)) {
        ok = true;
        break;
      }
    }
    if (!ok) fails.push_back(x);
  }
  return fails;
}

}  // namespace occflow::typesys
