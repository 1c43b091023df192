#include <occflow/runtime.hpp>

#include <algorithm>
#include <deque>

namespace occflow::runtime {

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

// ------ values ------

std::string Value::to_string() const {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return x.to_string();
        } else if constexpr (std::is_same_v<T, Location>) {
          return "l" + std::to_string(x);
        } else if constexpr (std::is_same_v<T, ClosureV>) {
          return "<fun " + x.param + " @" + std::to_string(x.lam_point) + ">";
        } else if constexpr (std::is_same_v<T, RecClosureV>) {
          return "<rec " + x.fname + " " + x.param + " @" +
                 std::to_string(x.lam_point) + ">";
        } else {
          return "()";
        }
      },
      v);
}

bool operator==(const Value& a, const Value& b) {
  if (a.v.index() != b.v.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Constant>) {
          return x == std::get<Constant>(b.v);
        } else if constexpr (std::is_same_v<T, Location>) {
          return x == std::get<Location>(b.v);
        } else if constexpr (std::is_same_v<T, ClosureV>) {
          const auto& y = std::get<ClosureV>(b.v);
          return x.param == y.param && x.lam_point == y.lam_point &&
                 x.body == y.body && x.env == y.env;
        } else if constexpr (std::is_same_v<T, RecClosureV>) {
          const auto& y = std::get<RecClosureV>(b.v);
          return x.param == y.param && x.fname == y.fname &&
                 x.lam_point == y.lam_point && x.body == y.body && x.env == y.env;
        } else {
          return true;
        }
      },
      a.v);
}

DependencyPair& DependencyPair::merge(const DependencyPair& other) {
  L.insert(other.L.begin(), other.L.end());
  V.insert(other.V.begin(), other.V.end());
  return *this;
}

std::string DependencyPair::to_string() const {
  std::string s = "({";
  bool first = true;
  for (const auto& lo : L) {
    if (!first) s += ",";
    s += lo.to_string();
    first = false;
  }
  s += "},{";
  first = true;
  for (const auto& vo : V) {
    if (!first) s += ",";
    s += vo.to_string();
    first = false;
  }
  return s + "})";
}

// ------ point order ------

bool PointOrder::reaches(ProgramPoint a, ProgramPoint b) const {
  if (a == b) return true;
  std::set<ProgramPoint> seen{a};
  std::deque<ProgramPoint> work{a};
  while (!work.empty()) {
    ProgramPoint cur = work.front();
    work.pop_front();
    for (const auto& [from, to] : edges) {
      if (from != cur || seen.count(to)) continue;
      if (to == b) return true;
      seen.insert(to);
      work.push_back(to);
    }
  }
  return false;
}

bool PointOrder::closure_antisymmetric() const {
  auto pts = points();
  for (auto a : pts)
    for (auto b : pts)
      if (a != b && reaches(a, b) && reaches(b, a)) return false;
  return true;
}

std::set<ProgramPoint> PointOrder::points() const {
  std::set<ProgramPoint> out;
  for (const auto& [a, b] : edges) {
    out.insert(a);
    out.insert(b);
  }
  return out;
}

// ------ errors ------

const char* eval_error_name(EvalError::Kind k) {
  switch (k) {
    case EvalError::Kind::Unbound: return "Unbound";
    case EvalError::Kind::NotAFunction: return "NotAFunction";
    case EvalError::Kind::NotALocation: return "NotALocation";
    case EvalError::Kind::NoMatchingPattern: return "NoMatchingPattern";
    case EvalError::Kind::RuntimeType: return "RuntimeType";
    case EvalError::Kind::Overflow: return "Overflow";
    case EvalError::Kind::FuelExhausted: return "FuelExhausted";
  }
  return "?";
}

EvalError::EvalError(Kind k, ProgramPoint p, const std::string& msg)
    : std::runtime_error(std::string(eval_error_name(k)) + " at point " +
                         std::to_string(p) + ": " + msg),
      kind(k),
      point(p) {}

// ------ constants, matching, environments ------

Value apply(const Constant& c, const Value& v1, const Value& v2) {
  auto need_int = [](const Value& v) -> std::int64_t {
    if (!v.is_const() || v.as_const().kind != Constant::Kind::Int)
      throw EvalError(EvalError::Kind::RuntimeType, 0,
                      "operand is not an integer: " + v.to_string());
    return v.as_const().n;
  };
  switch (c.kind) {
    case Constant::Kind::Plus:
    case Constant::Kind::Minus:
    case Constant::Kind::Times: {
      std::int64_t a = need_int(v1), b = need_int(v2), r = 0;
      bool ovf = false;
      if (c.kind == Constant::Kind::Plus) ovf = __builtin_add_overflow(a, b, &r);
      else if (c.kind == Constant::Kind::Minus) ovf = __builtin_sub_overflow(a, b, &r);
      else ovf = __builtin_mul_overflow(a, b, &r);
      if (ovf)
        throw EvalError(EvalError::Kind::Overflow, 0,
                        "64-bit arithmetic overflow");
      return Value::integer(r);
    }
    case Constant::Kind::Less:
      return Value::boolean(need_int(v1) < need_int(v2));
    case Constant::Kind::Greater:
      return Value::boolean(need_int(v1) > need_int(v2));
    case Constant::Kind::Equal: {
      if (v1.is_const() && v2.is_const()) {
        const auto& a = v1.as_const();
        const auto& b = v2.as_const();
        if (a.kind == Constant::Kind::Int && b.kind == Constant::Kind::Int)
          return Value::boolean(a.n == b.n);
        if (a.kind == Constant::Kind::Bool && b.kind == Constant::Kind::Bool)
          return Value::boolean(a.b == b.b);
      }
      throw EvalError(EvalError::Kind::RuntimeType, 0,
                      "EQUAL needs two integers or two booleans");
    }
    default:
      throw EvalError(EvalError::Kind::RuntimeType, 0,
                      "not a functional constant: " + c.to_string());
  }
}

std::optional<std::vector<std::pair<std::string, Value>>> match(
    const Value& v, const Pattern& s) {
  switch (s.kind) {
    case Pattern::Kind::Wildcard:
      return std::vector<std::pair<std::string, Value>>{};
    case Pattern::Kind::Var:
      return std::vector<std::pair<std::string, Value>>{{s.name, v}};
    case Pattern::Kind::Int:
      if (v.is_const() && v.as_const().kind == Constant::Kind::Int &&
          v.as_const().n == s.n)
        return std::vector<std::pair<std::string, Value>>{};
      return std::nullopt;
    case Pattern::Kind::Bool:
      if (v.is_const() && v.as_const().kind == Constant::Kind::Bool &&
          v.as_const().b == s.b)
        return std::vector<std::pair<std::string, Value>>{};
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<std::pair<DepKey, DependencyPair>> match_w(
    const Pattern& s, ProgramPoint p, const DependencyPair& d) {
  if (s.kind != Pattern::Kind::Var) return std::nullopt;
  return std::make_pair(DepKey{DepBase::var(s.name), p}, d);
}

std::set<std::string> env_inverse(const Env& env, const Value& v) {
  std::set<std::string> out;
  for (const auto& [name, val] : env)
    if (val == v) out.insert(name);
  return out;
}

// ------ dependency function updates and lookups ------

void depfn_update(DepFunc& w, const DepKey& key, const DependencyPair& d,
                  PointOrder& order, ProgramPoint cur) {
  for (const auto& [k, unused] : w.bindings) {
    (void)unused;
    if (k.base == key.base && k.point != key.point)
      order.edges.insert({k.point, key.point});
  }
  if (cur != 0 && cur != key.point) order.edges.insert({cur, key.point});
  w.bindings[key] = d;
  w.journal.push_back(JournalEntry{key, w.journal.size() + 1});
}

DepKey uf_runtime(const DepBase& u, const DepFunc& w) {
  for (auto it = w.journal.rbegin(); it != w.journal.rend(); ++it)
    if (it->key.base == u) return it->key;
  throw EvalError(EvalError::Kind::Unbound, 0,
                  "no binding for " + u.to_string());
}

std::optional<DepKey> uf_order(const DepBase& u, const DepFunc& w,
                               const PointOrder& order) {
  std::vector<DepKey> candidates;
  for (const auto& [k, d] : w.bindings) {
    (void)d;
    if (k.base == u) candidates.push_back(k);
  }
  for (const auto& c : candidates) {
    bool greatest = true;
    for (const auto& other : candidates)
      if (!order.reaches(other.point, c.point)) {
        greatest = false;
        break;
      }
    if (greatest) return c;
  }
  return std::nullopt;
}

// ------ evaluator ------

namespace {

// The big-step interpreter is recursive; the depth guard keeps deep object
// recursion from exhausting the C++ stack before the fuel counter fires.
constexpr int kMaxEvalDepth = 20'000;

struct Step {
  Value value;
  DependencyPair deps;
};

class Evaluator {
 public:
  Evaluator(const Store& sto, const DepFunc& w, const PointOrder& order,
            std::uint64_t fuel)
      : sto_(sto), w_(w), order_(order), fuel_(fuel) {}

  Step run(const Env& env, const Occurrence& o) {
    if (fuel_ == 0 || depth_ >= kMaxEvalDepth)
      throw EvalError(EvalError::Kind::FuelExhausted, o.point,
                      "evaluation budget exhausted");
    --fuel_;
    ++depth_;
    Step s = dispatch(env, o);
    --depth_;
    return s;
  }

  Store sto_;
  DepFunc w_;
  PointOrder order_;
  Env env_all_;

 private:
  void bind_value(const std::string& name, const Value& v) {
    env_all_.insert_or_assign(name, v);
  }

  Step dispatch(const Env& env, const Occurrence& o) {
    return std::visit(
        [&](const auto& e) -> Step { return eval_node(env, o, e); }, o.expr);
  }

  Step eval_node(const Env&, const Occurrence&, const ConstE& e) {
    return {Value(e.c), {}};
  }

  Step eval_node(const Env& env, const Occurrence& o, const VarE& e) {
    auto it = env.find(e.name);
    if (it == env.end())
      throw EvalError(EvalError::Kind::Unbound, o.point,
                      "unbound variable " + e.name);
    DepKey key = lookup_key(DepBase::var(e.name), o.point);
    DependencyPair d = w_.bindings.at(key);
    d.V.insert(VarOcc{e.name, o.point});
    return {it->second, std::move(d)};
  }

  Step eval_node(const Env& env, const Occurrence& o, const AbsE& e) {
    ClosureV c{e.param, o.point, e.body, std::make_shared<Env>(env)};
    Value v;
    v.v = std::move(c);
    return {std::move(v), {}};
  }

  Step eval_node(const Env& env, const Occurrence& o, const AppE& e) {
    Step fn = run(env, *e.fn);
    Step arg = run(env, *e.arg);

    if (std::holds_alternative<ClosureV>(fn.value.v)) {
      const auto& c = std::get<ClosureV>(fn.value.v);
      depfn_update(w_, DepKey{DepBase::var(c.param), e.arg->point}, arg.deps,
                   order_, e.arg->point);
      Env inner = *c.env;
      inner.insert_or_assign(c.param, arg.value);
      bind_value(c.param, arg.value);
      Step body = run(inner, *c.body);
      DependencyPair d = fn.deps;
      d.merge(body.deps);
      return {std::move(body.value), std::move(d)};
    }
    if (std::holds_alternative<RecClosureV>(fn.value.v)) {
      const auto& c = std::get<RecClosureV>(fn.value.v);
      depfn_update(w_, DepKey{DepBase::var(c.param), e.arg->point}, arg.deps,
                   order_, e.arg->point);
      Env inner = *c.env;
      inner.insert_or_assign(c.param, arg.value);
      inner.insert_or_assign(c.fname, fn.value);
      bind_value(c.param, arg.value);
      Step body = run(inner, *c.body);
      DependencyPair d = fn.deps;
      d.merge(body.deps);
      return {std::move(body.value), std::move(d)};
    }
    throw EvalError(EvalError::Kind::NotAFunction, o.point,
                    "cannot apply " + fn.value.to_string());
  }

  Step eval_node(const Env& env, const Occurrence& o, const ConstAppE& e) {
    Step lhs = run(env, *e.lhs);
    Step rhs = run(env, *e.rhs);
    Value v;
    try {
      v = apply(e.op, lhs.value, rhs.value);
    } catch (const EvalError& err) {
      throw EvalError(err.kind, o.point, err.what());
    }
    DependencyPair d = lhs.deps;
    d.merge(rhs.deps);
    return {std::move(v), std::move(d)};
  }

  Step eval_node(const Env& env, const Occurrence&, const LetE& e) {
    Step bound = run(env, *e.bound);
    depfn_update(w_, DepKey{DepBase::var(e.name), e.bound->point}, bound.deps,
                 order_, e.bound->point);
    Env inner = env;
    inner.insert_or_assign(e.name, bound.value);
    bind_value(e.name, bound.value);
    return run(inner, *e.body);
  }

  Step eval_node(const Env& env, const Occurrence& o, const LetRecE& e) {
    const auto* abs = std::get_if<AbsE>(&e.bound->expr);
    if (abs == nullptr)
      throw EvalError(EvalError::Kind::RuntimeType, o.point,
                      "let rec binds a non-abstraction");
    RecClosureV rc{abs->param, e.name, e.bound->point, abs->body,
                   std::make_shared<Env>(env)};
    Value v;
    v.v = std::move(rc);
    depfn_update(w_, DepKey{DepBase::var(e.name), e.bound->point}, {}, order_,
                 e.bound->point);
    Env inner = env;
    inner.insert_or_assign(e.name, v);
    bind_value(e.name, v);
    return run(inner, *e.body);
  }

  Step eval_node(const Env& env, const Occurrence& o, const CaseE& e) {
    Step scrut = run(env, *e.scrutinee);
    for (const auto& br : e.branches) {
      auto sub = match(scrut.value, br.pat);
      if (!sub) continue;
      Env inner = env;
      for (const auto& [name, val] : *sub) {
        inner.insert_or_assign(name, val);
        bind_value(name, val);
      }
      if (auto ext = match_w(br.pat, e.scrutinee->point, scrut.deps))
        depfn_update(w_, ext->first, ext->second, order_, e.scrutinee->point);
      Step body = run(inner, *br.body);
      DependencyPair d = scrut.deps;
      d.merge(body.deps);
      return {std::move(body.value), std::move(d)};
    }
    throw EvalError(EvalError::Kind::NoMatchingPattern, o.point,
                    "no branch matches " + scrut.value.to_string());
  }

  Step eval_node(const Env& env, const Occurrence& o, const RefE& e) {
    Step init = run(env, *e.init);
    Location l = sto_.next++;
    sto_.cells[l] = init.value;
    depfn_update(w_, DepKey{DepBase::location(l), o.point}, init.deps, order_,
                 e.init->point);
    return {Value::loc(l), {}};
  }

  Step eval_node(const Env& env, const Occurrence& o, const DerefE& e) {
    Step target = run(env, *e.target);
    if (!target.value.is_loc())
      throw EvalError(EvalError::Kind::NotALocation, o.point,
                      "cannot dereference " + target.value.to_string());
    Location l = target.value.as_loc();
    DepKey key = lookup_key(DepBase::location(l), o.point);
    DependencyPair d = w_.bindings.at(key);
    d.L.insert(LocOcc{l, o.point});
    return {sto_.cells.at(l), std::move(d)};
  }

  Step eval_node(const Env& env, const Occurrence& o, const AssignE& e) {
    Step target = run(env, *e.target);
    if (!target.value.is_loc())
      throw EvalError(EvalError::Kind::NotALocation, o.point,
                      "cannot assign to " + target.value.to_string());
    Location l = target.value.as_loc();
    Step value = run(env, *e.value);
    sto_.cells[l] = value.value;
    depfn_update(w_, DepKey{DepBase::location(l), o.point}, value.deps, order_,
                 e.value->point);
    return {Value::unit(), std::move(target.deps)};
  }

  DepKey lookup_key(const DepBase& u, ProgramPoint at) {
    try {
      return uf_runtime(u, w_);
    } catch (const EvalError& e) {
      throw EvalError(e.kind, at, e.what());
    }
  }

  std::uint64_t fuel_;
  int depth_ = 0;
};

}  // namespace

EvalResult eval(const Env& env, const Occurrence& o, const Store& sto,
                const DepFunc& w, const PointOrder& order, ProgramPoint p,
                std::uint64_t fuel) {
  (void)p;  // the incoming point; bindings always use subexpression end points
  Evaluator ev(sto, w, order, fuel);
  Step s = ev.run(env, o);
  EvalResult r;
  r.value = std::move(s.value);
  r.store = std::move(ev.sto_);
  r.depfn = std::move(ev.w_);
  r.order = std::move(ev.order_);
  r.deps = std::move(s.deps);
  r.point = o.point;
  r.env_all = std::move(ev.env_all_);
  return r;
}

EvalResult eval_program(const Occurrence& o, std::uint64_t fuel) {
  return eval(Env{}, o, Store{}, DepFunc{}, PointOrder{}, 0, fuel);
}

}  // namespace occflow::runtime
