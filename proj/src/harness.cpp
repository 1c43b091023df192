#include <occflow/harness.hpp>

#include <algorithm>
#include <random>
#include <utility>

namespace occflow::harness {

using runtime::EvalError;
using runtime::EvalResult;
using syntax::AbsE;
using syntax::AppE;
using syntax::AssignE;
using syntax::CaseBranch;
using syntax::CaseE;
using syntax::ConstAppE;
using syntax::ConstE;
using syntax::Constant;
using syntax::DerefE;
using syntax::LetE;
using syntax::LetRecE;
using syntax::OccPtr;
using syntax::Occurrence;
using syntax::Pattern;
using syntax::ProgramPoint;
using syntax::RefE;
using syntax::VarE;
using syntax::occ;
using typesys::Type;
using typesys::TypeEnv;
using typesys::TypeOcc;

// ------ seeds ------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// ------ generator ------

namespace {

// Value shapes steered by the generator.  Unit stands for a throwaway store
// write and is only requested while a cell variable is in scope.
enum class Shape { Int, Bool, RefInt, RefBool, Unit };

Shape cell_shape(Shape s) {
  return s == Shape::RefInt ? Shape::Int : Shape::Bool;
}

class Generator {
 public:
  Generator(const GenConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {}

  OccPtr program() {
    Shape top = coin(60) ? Shape::Int : Shape::Bool;
    auto e = gen(top, cfg_.max_depth);
    syntax::label_program(*e);
    return e;
  }

 private:
  static constexpr int kMaxNodes = 300;

  const GenConfig& cfg_;
  std::mt19937_64 rng_;
  std::vector<std::pair<std::string, Shape>> scope_;
  int refs_ = 0;
  int fresh_ = 0;
  int nodes_ = 0;

  int roll(int n) {
    return std::uniform_int_distribution<int>(0, n - 1)(rng_);
  }
  bool coin(int pct) { return roll(100) < pct; }
  std::string fresh() { return "x" + std::to_string(++fresh_); }

  std::vector<std::string> vars_of(Shape s) const {
    std::vector<std::string> out;
    for (const auto& [name, sh] : scope_)
      if (sh == s) out.push_back(name);
    return out;
  }

  std::vector<std::pair<std::string, Shape>> cell_vars() const {
    std::vector<std::pair<std::string, Shape>> out;
    for (const auto& [name, sh] : scope_)
      if (sh == Shape::RefInt || sh == Shape::RefBool) out.emplace_back(name, sh);
    return out;
  }

  OccPtr lit(Shape s) {
    if (s == Shape::Int)
      return occ(ConstE{Constant::integer(roll(13) - 3)});
    return occ(ConstE{Constant::boolean(coin(50))});
  }

  OccPtr var_or_lit(Shape s) {
    auto vs = vars_of(s);
    if (!vs.empty() && coin(55)) return occ(VarE{vs[roll(int(vs.size()))]});
    return lit(s);
  }

  OccPtr gen(Shape s, int depth) {
    ++nodes_;
    depth = std::max(depth, 1);
    switch (s) {
      case Shape::RefInt:
      case Shape::RefBool: {
        auto vs = vars_of(s);
        if (!vs.empty() && coin(70))
          return occ(VarE{vs[roll(int(vs.size()))]});
        ++refs_;
        return occ(RefE{gen(cell_shape(s), depth - 1)});
      }
      case Shape::Unit: {
        auto cells = cell_vars();
        auto [name, sh] = cells[roll(int(cells.size()))];
        return occ(AssignE{occ(VarE{name}), gen(cell_shape(sh), depth - 1)});
      }
      default:
        break;
    }
    if (depth <= 1 || nodes_ > kMaxNodes) return var_or_lit(s);

    switch (roll(10)) {
      case 0:
        return var_or_lit(s);
      case 1:
      case 2:
        return gen_constop(s, depth);
      case 3:
      case 4:
        return gen_let(s, depth);
      case 5: {
        Shape rs = s == Shape::Int ? Shape::RefInt : Shape::RefBool;
        auto vs = vars_of(rs);
        if (vs.empty()) return gen_let(s, depth);
        return occ(DerefE{occ(VarE{vs[roll(int(vs.size()))]})});
      }
      case 6:
        return gen_case(s, depth);
      case 7:
        return gen_apply(s, depth);
      case 8:
        if (cfg_.allow_letrec && s == Shape::Int && depth >= 4)
          return gen_letrec(depth);
        return gen_apply(s, depth);
      default:
        if (!cell_vars().empty()) return gen_seq(s, depth);
        return gen_let(s, depth);
    }
  }

  OccPtr gen_constop(Shape s, int depth) {
    if (s == Shape::Int) {
      static const Constant::Kind ops[] = {
          Constant::Kind::Plus, Constant::Kind::Minus, Constant::Kind::Times};
      return occ(ConstAppE{Constant::op(ops[roll(3)]),
                           gen(Shape::Int, depth - 1),
                           gen(Shape::Int, depth - 1)});
    }
    if (coin(25))
      return occ(ConstAppE{Constant::op(Constant::Kind::Equal),
                           gen(Shape::Bool, depth - 1),
                           gen(Shape::Bool, depth - 1)});
    static const Constant::Kind cmps[] = {
        Constant::Kind::Equal, Constant::Kind::Less, Constant::Kind::Greater};
    return occ(ConstAppE{Constant::op(cmps[roll(3)]),
                         gen(Shape::Int, depth - 1),
                         gen(Shape::Int, depth - 1)});
  }

  Shape pick_bound_shape() {
    std::vector<Shape> opts = {Shape::Int, Shape::Int, Shape::Bool};
    if (refs_ < cfg_.max_refs) {
      opts.push_back(Shape::RefInt);
      opts.push_back(Shape::RefBool);
    }
    if (!cell_vars().empty()) opts.push_back(Shape::Unit);
    return opts[roll(int(opts.size()))];
  }

  OccPtr gen_let(Shape s, int depth) {
    Shape bs = pick_bound_shape();
    auto bound = gen(bs, depth - 1);
    auto name = fresh();
    scope_.emplace_back(name, bs);
    auto body = gen(s, depth - 1);
    scope_.pop_back();
    return occ(LetE{name, std::move(bound), std::move(body)});
  }

  // let u = (cell := e) in body — a sequenced store write.
  OccPtr gen_seq(Shape s, int depth) {
    auto bound = gen(Shape::Unit, depth - 1);
    auto name = fresh();
    scope_.emplace_back(name, Shape::Unit);
    auto body = gen(s, depth - 1);
    scope_.pop_back();
    return occ(LetE{name, std::move(bound), std::move(body)});
  }

  OccPtr gen_case(Shape s, int depth) {
    std::vector<CaseBranch> branches;
    if (coin(60)) {
      auto scrut = gen(Shape::Int, depth - 1);
      int arms = 1 + roll(2);
      for (int i = 0; i < arms; ++i)
        branches.push_back(
            {Pattern::integer(roll(13) - 3), gen(s, depth - 1)});
      if (coin(50)) {
        auto v = fresh();
        scope_.emplace_back(v, Shape::Int);
        branches.push_back({Pattern::var(v), gen(s, depth - 1)});
        scope_.pop_back();
      } else {
        branches.push_back({Pattern::wildcard(), gen(s, depth - 1)});
      }
      return occ(CaseE{std::move(scrut), std::move(branches)});
    }
    auto scrut = gen(Shape::Bool, depth - 1);
    branches.push_back({Pattern::boolean(true), gen(s, depth - 1)});
    branches.push_back({Pattern::boolean(false), gen(s, depth - 1)});
    return occ(CaseE{std::move(scrut), std::move(branches)});
  }

  // Either an immediate ((lambda p . body) arg) or a let-bound abstraction
  // with a single call site; both keep every abstraction monomorphic.
  OccPtr gen_apply(Shape s, int depth) {
    Shape ps = coin(50) ? Shape::Int : Shape::Bool;
    auto arg = gen(ps, depth - 2);
    auto param = fresh();
    scope_.emplace_back(param, ps);
    auto body = gen(s, depth - 2);
    scope_.pop_back();
    auto lam = occ(AbsE{param, std::move(body)});
    if (coin(50)) return occ(AppE{std::move(lam), std::move(arg)});
    auto f = fresh();
    return occ(LetE{f, std::move(lam),
                    occ(AppE{occ(VarE{f}), std::move(arg)})});
  }

  // let rec f = lambda n . case n of 0 -> base | m -> f 0 in f k
  // The recursive argument is a constant, so the loop takes exactly one
  // step and both call sites agree on the parameter's type.
  OccPtr gen_letrec(int depth) {
    auto f = fresh();
    auto n = fresh();
    auto m = fresh();
    scope_.emplace_back(n, Shape::Int);
    auto base = gen(Shape::Int, depth - 3);
    scope_.pop_back();
    std::vector<CaseBranch> branches;
    branches.push_back({Pattern::integer(0), std::move(base)});
    branches.push_back(
        {Pattern::var(m),
         occ(AppE{occ(VarE{f}), occ(ConstE{Constant::integer(0)})})});
    auto lam = occ(AbsE{n, occ(CaseE{occ(VarE{n}), std::move(branches)})});
    auto entry =
        occ(AppE{occ(VarE{f}), occ(ConstE{Constant::integer(1 + roll(2))})});
    return occ(LetRecE{f, std::move(lam), std::move(entry)});
  }
};

}  // namespace

OccPtr generate(const GenConfig& cfg, std::uint64_t seed) {
  Generator g(cfg, seed);
  return g.program();
}

// ------ verdicts ------

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::CheckerReject: return "checker-reject";
    case Verdict::EvalError: return "eval-error";
    case Verdict::Violation: return "VIOLATION";
  }
  return "?";
}

// ------ soundness pipeline ------

namespace {

std::string first_line(const std::string& s) {
  auto nl = s.find('\n');
  return nl == std::string::npos ? s : s.substr(0, nl);
}

}  // namespace

CaseResult check_soundness(const Occurrence& o, std::uint64_t fuel) {
  CaseResult res;
  res.program = syntax::render(o);

  auto pi = typesys::derive_pi(o);
  auto k0 = typesys::derive_kappa0(o);
  auto tc = typesys::typecheck({}, pi, k0, o);
  if (!tc.ok) {
    res.verdict = Verdict::CheckerReject;
    if (!tc.diagnostics.empty()) {
      const auto& d = tc.diagnostics.front();
      res.detail = std::string(typesys::diagnostic_name(d.code)) + " at point " +
                   std::to_string(d.point) + ": " + d.message;
    }
    return res;
  }

  EvalResult ev;
  try {
    ev = runtime::eval_program(o, fuel);
  } catch (const EvalError& e) {
    using K = EvalError::Kind;
    // Running out of budget or of patterns is an honest dynamic failure; an
    // unbound name, a non-function operator, a bad location or an ill-typed
    // primitive in an accepted program means the checker missed something.
    bool dynamic = e.kind == K::FuelExhausted ||
                   e.kind == K::NoMatchingPattern || e.kind == K::Overflow;
    res.verdict = dynamic ? Verdict::EvalError : Verdict::Violation;
    res.detail = e.what();
    return res;
  }

  std::vector<std::string> why;
  if (!typesys::type_value(tc, pi, ev.value, tc.type, &why)) {
    res.verdict = Verdict::Violation;
    res.detail = "result value rejected by the result type";
    if (!why.empty()) res.detail += ": " + why.front();
    return res;
  }

  auto envrep = agreement::env_agreement(ev.env_all, ev.store, ev.depfn,
                                         ev.order, tc.gamma, pi, k0);
  if (!envrep.ok) {
    res.verdict = Verdict::Violation;
    res.detail = "environment agreement failed: " + first_line(envrep.to_string());
    return res;
  }

  auto resrep = agreement::type_agreement(ev.env_all, ev.value, ev.depfn,
                                          ev.deps, tc.gamma, tc.type, k0);
  if (!resrep.ok) {
    res.verdict = Verdict::Violation;
    res.detail = "result agreement failed: " + first_line(resrep.to_string());
    return res;
  }

  res.verdict = Verdict::Pass;
  return res;
}

// ------ binding history ------

HistoryResult check_history(const Occurrence& o, std::uint64_t fuel) {
  HistoryResult h;
  EvalResult ev;
  try {
    ev = runtime::eval_program(o, fuel);
  } catch (const EvalError&) {
    return h;  // nothing ran to completion; nothing to check
  }
  h.ran = true;
  auto binders = syntax::binder_names(o);
  std::set<std::string> names(binders.begin(), binders.end());
  auto free = syntax::fv(o);
  for (const auto& [key, dep] : ev.depfn.bindings) {
    if (key.base.kind != runtime::DepBase::Kind::Var) continue;
    if (!names.count(key.base.name)) {
      h.ok = false;
      h.detail = "recorded binding " + key.to_string() +
                 " does not name a binder of the program";
      return h;
    }
    if (free.count(key.base.name)) {
      h.ok = false;
      h.detail = "recorded binding " + key.to_string() + " names a free variable";
      return h;
    }
  }
  return h;
}

// ------ environment strengthening ------

bool check_strengthening(const Occurrence& o, std::uint64_t seed,
                         int extensions, std::string* why) {
  auto pi = typesys::derive_pi(o);
  auto k0 = typesys::derive_kappa0(o);
  auto tc = typesys::typecheck({}, pi, k0, o);
  if (!tc.ok) return true;  // nothing accepted, nothing to preserve

  // A name no occurrence of the program can mention.
  std::set<std::string> taken;
  syntax::for_each_node(o, [&](const Occurrence& n) {
    if (auto* v = std::get_if<VarE>(&n.expr)) taken.insert(v->name);
  });
  for (const auto& b : syntax::binder_names(o)) taken.insert(b);

  std::vector<ProgramPoint> pts(pi.P.begin(), pi.P.end());
  if (pts.empty()) pts.push_back(1);
  std::mt19937_64 rng(splitmix64(seed));
  auto roll = [&](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };

  for (int i = 0; i < extensions; ++i) {
    std::string z = "zz" + std::to_string(i);
    while (taken.count(z)) z += "_";
    TypeEnv g0;
    ProgramPoint at = pts[roll(pts.size())];
    Type t;
    switch (roll(3)) {
      case 0:
        t = Type::base();
        break;
      case 1:
        t = Type::base({TypeOcc{typesys::TypeName::var(z), pts[roll(pts.size())]}},
                       {});
        break;
      default:
        t = Type::arrow(Type::base(), Type::base());
        break;
    }
    g0[TypeOcc{typesys::TypeName::var(z), at}] = t;
    auto tc2 = typesys::typecheck(g0, pi, k0, o);
    if (!tc2.ok) {
      if (why)
        *why = "extension " + z + "^" + std::to_string(at) +
               " made the checker reject";
      return false;
    }
    if (!(tc2.type == tc.type)) {
      if (why)
        *why = "extension " + z + "^" + std::to_string(at) +
               " changed the result type from " + tc.type.to_string() +
               " to " + tc2.type.to_string();
      return false;
    }
  }
  return true;
}

// ------ corpus ------

CorpusSummary run_corpus(const GenConfig& cfg) {
  CorpusSummary sum;
  sum.results.reserve(std::size_t(std::max(cfg.count, 0)));
  for (int i = 0; i < cfg.count; ++i) {
    std::uint64_t seed = splitmix64(cfg.seed + std::uint64_t(i));
    auto prog = generate(cfg, seed);
    auto res = check_soundness(*prog, cfg.fuel);
    res.seed = seed;
    switch (res.verdict) {
      case Verdict::Pass: ++sum.passes; break;
      case Verdict::CheckerReject: ++sum.checker_rejects; break;
      case Verdict::EvalError: ++sum.eval_errors; break;
      case Verdict::Violation: ++sum.violations; break;
    }
    sum.results.push_back(std::move(res));
  }
  return sum;
}

}  // namespace occflow::harness
