#include <occflow/syntax.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>

namespace occflow::syntax {

// ------ constants and patterns ------

Constant Constant::integer(std::int64_t v) {
  Constant c;
  c.kind = Kind::Int;
  c.n = v;
  return c;
}

Constant Constant::boolean(bool v) {
  Constant c;
  c.kind = Kind::Bool;
  c.b = v;
  return c;
}

Constant Constant::op(Kind k) {
  Constant c;
  c.kind = k;
  return c;
}

std::string Constant::to_string() const {
  switch (kind) {
    case Kind::Int: return std::to_string(n);
    case Kind::Bool: return b ? "true" : "false";
    case Kind::Plus: return "PLUS";
    case Kind::Minus: return "MINUS";
    case Kind::Times: return "TIMES";
    case Kind::Equal: return "EQUAL";
    case Kind::Less: return "LESS";
    case Kind::Greater: return "GREATER";
  }
  return "?";
}

bool operator==(const Constant& a, const Constant& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Constant::Kind::Int) return a.n == b.n;
  if (a.kind == Constant::Kind::Bool) return a.b == b.b;
  return true;
}

Pattern Pattern::integer(std::int64_t v) {
  Pattern p;
  p.kind = Kind::Int;
  p.n = v;
  return p;
}

Pattern Pattern::boolean(bool v) {
  Pattern p;
  p.kind = Kind::Bool;
  p.b = v;
  return p;
}

Pattern Pattern::var(std::string name) {
  Pattern p;
  p.kind = Kind::Var;
  p.name = std::move(name);
  return p;
}

Pattern Pattern::wildcard() { return Pattern{}; }

std::string Pattern::to_string() const {
  switch (kind) {
    case Kind::Int: return std::to_string(n);
    case Kind::Bool: return b ? "true" : "false";
    case Kind::Var: return name;
    case Kind::Wildcard: return "_";
  }
  return "?";
}

bool operator==(const Pattern& a, const Pattern& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Pattern::Kind::Int: return a.n == b.n;
    case Pattern::Kind::Bool: return a.b == b.b;
    case Pattern::Kind::Var: return a.name == b.name;
    case Pattern::Kind::Wildcard: return true;
  }
  return false;
}

OccPtr occ(Expr e, ProgramPoint p) {
  auto o = std::make_shared<Occurrence>();
  o->expr = std::move(e);
  o->point = p;
  return o;
}

// ------ errors ------

SyntaxError::SyntaxError(std::size_t pos, const std::string& what)
    : std::runtime_error("syntax error at byte " + std::to_string(pos) + ": " + what),
      position(pos) {}

DuplicatePointError::DuplicatePointError(ProgramPoint p)
    : std::runtime_error("duplicate program point ^" + std::to_string(p)), point(p) {}

DuplicateBinderError::DuplicateBinderError(const std::string& n)
    : std::runtime_error("duplicate binder '" + n + "' (program must be binder-unique; "
                         "run the alpha renaming pass to freshen)"),
      name(n) {}

// ------ lexer ------

namespace {

struct Token {
  enum class Kind {
    LParen, RParen, Ident, Int, Bool, Label, ConstOp,
    KwLambda, KwLet, KwRec, KwCase, KwRef, Bang, Assign, Dot, Underscore, End
  };
  Kind kind = Kind::End;
  std::size_t pos = 0;
  std::string text;        // Ident
  std::int64_t n = 0;      // Int
  bool b = false;          // Bool
  Constant::Kind op = Constant::Kind::Plus;  // ConstOp
  ProgramPoint label = 0;  // Label
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : s_(text) {}

  Token next() {
    skip_ws();
    Token t;
    t.pos = i_;
    if (i_ >= s_.size()) return t;
    char c = s_[i_];
    if (c == '(') { ++i_; t.kind = Token::Kind::LParen; return t; }
    if (c == ')') { ++i_; t.kind = Token::Kind::RParen; return t; }
    if (c == '.') { ++i_; t.kind = Token::Kind::Dot; return t; }
    if (c == '!') { ++i_; t.kind = Token::Kind::Bang; return t; }
    if (c == ':') {
      if (i_ + 1 < s_.size() && s_[i_ + 1] == '=') {
        i_ += 2;
        t.kind = Token::Kind::Assign;
        return t;
      }
      throw SyntaxError(i_, "expected ':='");
    }
    if (c == '^') {
      ++i_;
      std::size_t start = i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (start == i_) throw SyntaxError(start, "expected digits after '^'");
      ProgramPoint v = 0;
      auto [p, ec] = std::from_chars(s_.data() + start, s_.data() + i_, v);
      if (ec != std::errc() || p != s_.data() + i_)
        throw SyntaxError(start, "label out of range");
      if (v == 0) throw SyntaxError(start, "labels start at 1");
      t.kind = Token::Kind::Label;
      t.label = v;
      return t;
    }
    if (c == '_') {
      ++i_;
      t.kind = Token::Kind::Underscore;
      return t;
    }
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = i_;
      if (c == '-') ++i_;
      std::size_t dstart = i_;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      if (dstart == i_) throw SyntaxError(start, "expected digits");
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(s_.data() + start, s_.data() + i_, v);
      if (ec != std::errc() || p != s_.data() + i_)
        throw SyntaxError(start, "integer literal out of range");
      t.kind = Token::Kind::Int;
      t.n = v;
      return t;
    }
    if (std::islower(static_cast<unsigned char>(c))) {
      std::size_t start = i_;
      while (i_ < s_.size() &&
             (std::islower(static_cast<unsigned char>(s_[i_])) ||
              std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
        ++i_;
      std::string w = s_.substr(start, i_ - start);
      if (w == "lambda") t.kind = Token::Kind::KwLambda;
      else if (w == "let") t.kind = Token::Kind::KwLet;
      else if (w == "rec") t.kind = Token::Kind::KwRec;
      else if (w == "case") t.kind = Token::Kind::KwCase;
      else if (w == "ref") t.kind = Token::Kind::KwRef;
      else if (w == "true" || w == "false") {
        t.kind = Token::Kind::Bool;
        t.b = (w == "true");
      } else {
        t.kind = Token::Kind::Ident;
        t.text = std::move(w);
      }
      return t;
    }
    if (std::isupper(static_cast<unsigned char>(c))) {
      std::size_t start = i_;
      while (i_ < s_.size() && std::isupper(static_cast<unsigned char>(s_[i_]))) ++i_;
      std::string w = s_.substr(start, i_ - start);
      t.kind = Token::Kind::ConstOp;
      if (w == "PLUS") t.op = Constant::Kind::Plus;
      else if (w == "MINUS") t.op = Constant::Kind::Minus;
      else if (w == "TIMES") t.op = Constant::Kind::Times;
      else if (w == "EQUAL") t.op = Constant::Kind::Equal;
      else if (w == "LESS") t.op = Constant::Kind::Less;
      else if (w == "GREATER") t.op = Constant::Kind::Greater;
      else throw SyntaxError(start, "unknown operator '" + w + "'");
      return t;
    }
    throw SyntaxError(i_, std::string("unexpected character '") + c + "'");
  }

 private:
  void skip_ws() {
    while (i_ < s_.size() &&
           std::isspace(static_cast<unsigned char>(s_[i_])))
      ++i_;
  }
  const std::string& s_;
  std::size_t i_ = 0;
};

// ------ parser ------

class Parser {
 public:
  explicit Parser(const std::string& text) : lex_(text) { advance(); }

  OccPtr parse_program() {
    OccPtr o = parse_occ();
    if (cur_.kind != Token::Kind::End)
      throw SyntaxError(cur_.pos, "trailing input after expression");
    return o;
  }

 private:
  void advance() { cur_ = lex_.next(); }

  bool accept(Token::Kind k) {
    if (cur_.kind != k) return false;
    advance();
    return true;
  }

  void expect(Token::Kind k, const char* what) {
    if (cur_.kind != k) throw SyntaxError(cur_.pos, std::string("expected ") + what);
    advance();
  }

  std::string expect_ident() {
    if (cur_.kind != Token::Kind::Ident)
      throw SyntaxError(cur_.pos, "expected identifier");
    std::string s = cur_.text;
    advance();
    return s;
  }

  ProgramPoint optional_label() {
    if (cur_.kind == Token::Kind::Label) {
      ProgramPoint p = cur_.label;
      advance();
      return p;
    }
    return 0;
  }

  Pattern parse_pattern() {
    switch (cur_.kind) {
      case Token::Kind::Int: {
        auto v = cur_.n;
        advance();
        return Pattern::integer(v);
      }
      case Token::Kind::Bool: {
        auto v = cur_.b;
        advance();
        return Pattern::boolean(v);
      }
      case Token::Kind::Ident: {
        auto s = cur_.text;
        advance();
        return Pattern::var(s);
      }
      case Token::Kind::Underscore:
        advance();
        return Pattern::wildcard();
      default:
        throw SyntaxError(cur_.pos, "expected pattern");
    }
  }

  OccPtr parse_occ() {
    switch (cur_.kind) {
      case Token::Kind::Int: {
        auto v = cur_.n;
        advance();
        return occ(ConstE{Constant::integer(v)}, optional_label());
      }
      case Token::Kind::Bool: {
        auto v = cur_.b;
        advance();
        return occ(ConstE{Constant::boolean(v)}, optional_label());
      }
      case Token::Kind::Ident: {
        auto s = cur_.text;
        advance();
        return occ(VarE{s}, optional_label());
      }
      case Token::Kind::LParen:
        advance();
        return parse_form();
      default:
        throw SyntaxError(cur_.pos, "expected expression");
    }
  }

  OccPtr parse_form() {
    switch (cur_.kind) {
      case Token::Kind::KwLambda: {
        advance();
        std::string param = expect_ident();
        expect(Token::Kind::Dot, "'.'");
        OccPtr body = parse_occ();
        expect(Token::Kind::RParen, "')'");
        return occ(AbsE{param, body}, optional_label());
      }
      case Token::Kind::KwLet: {
        advance();
        bool rec = accept(Token::Kind::KwRec);
        std::string name = expect_ident();
        OccPtr bound = parse_occ();
        OccPtr body = parse_occ();
        expect(Token::Kind::RParen, "')'");
        if (rec) return occ(LetRecE{name, bound, body}, optional_label());
        return occ(LetE{name, bound, body}, optional_label());
      }
      case Token::Kind::KwCase: {
        advance();
        OccPtr scrut = parse_occ();
        std::vector<CaseBranch> branches;
        while (cur_.kind == Token::Kind::LParen) {
          advance();
          Pattern pat = parse_pattern();
          OccPtr body = parse_occ();
          expect(Token::Kind::RParen, "')' closing branch");
          branches.push_back(CaseBranch{pat, body});
        }
        if (branches.empty())
          throw SyntaxError(cur_.pos, "case needs at least one branch");
        expect(Token::Kind::RParen, "')'");
        return occ(CaseE{scrut, std::move(branches)}, optional_label());
      }
      case Token::Kind::KwRef: {
        advance();
        OccPtr init = parse_occ();
        expect(Token::Kind::RParen, "')'");
        return occ(RefE{init}, optional_label());
      }
      case Token::Kind::Bang: {
        advance();
        OccPtr target = parse_occ();
        expect(Token::Kind::RParen, "')'");
        return occ(DerefE{target}, optional_label());
      }
      case Token::Kind::ConstOp: {
        auto op_kind = cur_.op;
        advance();
        OccPtr lhs = parse_occ();
        OccPtr rhs = parse_occ();
        expect(Token::Kind::RParen, "')'");
        return occ(ConstAppE{Constant::op(op_kind), lhs, rhs}, optional_label());
      }
      case Token::Kind::RParen:
        throw SyntaxError(cur_.pos, "empty form");
      default: {
        OccPtr first = parse_occ();
        if (accept(Token::Kind::RParen)) {
          // Grouping parentheses around a single occurrence; an outer label
          // replaces the inner one (the replaced label becomes a point gap).
          ProgramPoint outer = optional_label();
          if (outer != 0) first->point = outer;
          return first;
        }
        if (accept(Token::Kind::Assign)) {
          OccPtr value = parse_occ();
          expect(Token::Kind::RParen, "')'");
          return occ(AssignE{first, value}, optional_label());
        }
        OccPtr arg = parse_occ();
        expect(Token::Kind::RParen, "')'");
        return occ(AppE{first, arg}, optional_label());
      }
    }
  }

  Lexer lex_;
  Token cur_;
};

template <typename F>
void walk_children(const Occurrence& o, F&& f) {
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, AbsE>) {
          f(*e.body);
        } else if constexpr (std::is_same_v<T, AppE>) {
          f(*e.fn);
          f(*e.arg);
        } else if constexpr (std::is_same_v<T, ConstAppE>) {
          f(*e.lhs);
          f(*e.rhs);
        } else if constexpr (std::is_same_v<T, LetE> || std::is_same_v<T, LetRecE>) {
          f(*e.bound);
          f(*e.body);
        } else if constexpr (std::is_same_v<T, CaseE>) {
          f(*e.scrutinee);
          for (const auto& br : e.branches) f(*br.body);
        } else if constexpr (std::is_same_v<T, RefE>) {
          f(*e.init);
        } else if constexpr (std::is_same_v<T, DerefE>) {
          f(*e.target);
        } else if constexpr (std::is_same_v<T, AssignE>) {
          f(*e.target);
          f(*e.value);
        }
      },
      o.expr);
}

void check_duplicate_points(const Occurrence& o, std::set<ProgramPoint>& seen) {
  walk_children(o, [&](const Occurrence& c) { check_duplicate_points(c, seen); });
  if (o.point != 0 && !seen.insert(o.point).second)
    throw DuplicatePointError(o.point);
}

void label_post_order(Occurrence& o, ProgramPoint& next) {
  walk_children(o, [&](const Occurrence& c) {
    label_post_order(const_cast<Occurrence&>(c), next);
  });
  if (o.point == 0) o.point = next++;
}

}  // namespace

// ------ operations ------

OccPtr parse(const std::string& text, bool alpha) {
  Parser parser(text);
  OccPtr o = parser.parse_program();
  std::set<ProgramPoint> seen;
  check_duplicate_points(*o, seen);
  label_program(*o);
  auto clashes = check_binder_unique(*o);
  if (!clashes.empty()) {
    if (!alpha) throw DuplicateBinderError(clashes.front().name);
    o = alpha_rename(*o);
  }
  return o;
}

void label_program(Occurrence& o) {
  ProgramPoint next = max_point(o) + 1;
  label_post_order(o, next);
}

std::string render(const Occurrence& o) {
  std::string s = std::visit(
      [&](const auto& e) -> std::string {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, VarE>) {
          return e.name;
        } else if constexpr (std::is_same_v<T, ConstE>) {
          return e.c.to_string();
        } else if constexpr (std::is_same_v<T, AbsE>) {
          return "(lambda " + e.param + " . " + render(*e.body) + ")";
        } else if constexpr (std::is_same_v<T, AppE>) {
          return "(" + render(*e.fn) + " " + render(*e.arg) + ")";
        } else if constexpr (std::is_same_v<T, ConstAppE>) {
          return "(" + e.op.to_string() + " " + render(*e.lhs) + " " +
                 render(*e.rhs) + ")";
        } else if constexpr (std::is_same_v<T, LetE>) {
          return "(let " + e.name + " " + render(*e.bound) + " " +
                 render(*e.body) + ")";
        } else if constexpr (std::is_same_v<T, LetRecE>) {
          return "(let rec " + e.name + " " + render(*e.bound) + " " +
                 render(*e.body) + ")";
        } else if constexpr (std::is_same_v<T, CaseE>) {
          std::string r = "(case " + render(*e.scrutinee);
          for (const auto& br : e.branches)
            r += " (" + br.pat.to_string() + " " + render(*br.body) + ")";
          return r + ")";
        } else if constexpr (std::is_same_v<T, RefE>) {
          return "(ref " + render(*e.init) + ")";
        } else if constexpr (std::is_same_v<T, DerefE>) {
          return "(! " + render(*e.target) + ")";
        } else {
          return "(" + render(*e.target) + " := " + render(*e.value) + ")";
        }
      },
      o.expr);
  return s + "^" + std::to_string(o.point);
}

bool equal(const Occurrence& a, const Occurrence& b) {
  if (a.point != b.point) return false;
  if (a.expr.index() != b.expr.index()) return false;
  return std::visit(
      [&](const auto& ea) -> bool {
        using T = std::decay_t<decltype(ea)>;
        const auto& eb = std::get<T>(b.expr);
        if constexpr (std::is_same_v<T, VarE>) {
          return ea.name == eb.name;
        } else if constexpr (std::is_same_v<T, ConstE>) {
          return ea.c == eb.c;
        } else if constexpr (std::is_same_v<T, AbsE>) {
          return ea.param == eb.param && equal(*ea.body, *eb.body);
        } else if constexpr (std::is_same_v<T, AppE>) {
          return equal(*ea.fn, *eb.fn) && equal(*ea.arg, *eb.arg);
        } else if constexpr (std::is_same_v<T, ConstAppE>) {
          return ea.op == eb.op && equal(*ea.lhs, *eb.lhs) && equal(*ea.rhs, *eb.rhs);
        } else if constexpr (std::is_same_v<T, LetE> || std::is_same_v<T, LetRecE>) {
          return ea.name == eb.name && equal(*ea.bound, *eb.bound) &&
                 equal(*ea.body, *eb.body);
        } else if constexpr (std::is_same_v<T, CaseE>) {
          if (!equal(*ea.scrutinee, *eb.scrutinee)) return false;
          if (ea.branches.size() != eb.branches.size()) return false;
          for (std::size_t i = 0; i < ea.branches.size(); ++i) {
            if (!(ea.branches[i].pat == eb.branches[i].pat)) return false;
            if (!equal(*ea.branches[i].body, *eb.branches[i].body)) return false;
          }
          return true;
        } else if constexpr (std::is_same_v<T, RefE>) {
          return equal(*ea.init, *eb.init);
        } else if constexpr (std::is_same_v<T, DerefE>) {
          return equal(*ea.target, *eb.target);
        } else {
          return equal(*ea.target, *eb.target) && equal(*ea.value, *eb.value);
        }
      },
      a.expr);
}

std::set<std::string> tau(const Pattern& p) {
  if (p.kind == Pattern::Kind::Var) return {p.name};
  return {};
}

std::set<std::string> fv(const Occurrence& o) {
  return std::visit(
      [&](const auto& e) -> std::set<std::string> {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, VarE>) {
          return {e.name};
        } else if constexpr (std::is_same_v<T, ConstE>) {
          return {};
        } else if constexpr (std::is_same_v<T, AbsE>) {
          auto s = fv(*e.body);
          s.erase(e.param);
          return s;
        } else if constexpr (std::is_same_v<T, AppE>) {
          auto s = fv(*e.fn);
          s.merge(fv(*e.arg));
          return s;
        } else if constexpr (std::is_same_v<T, ConstAppE>) {
          auto s = fv(*e.lhs);
          s.merge(fv(*e.rhs));
          return s;
        } else if constexpr (std::is_same_v<T, LetE>) {
          auto s = fv(*e.body);
          s.erase(e.name);
          s.merge(fv(*e.bound));
          return s;
        } else if constexpr (std::is_same_v<T, LetRecE>) {
          auto s = fv(*e.bound);
          s.merge(fv(*e.body));
          s.erase(e.name);
          return s;
        } else if constexpr (std::is_same_v<T, CaseE>) {
          // Pattern variables of every branch are removed from the whole
          // union, scrutinee included.
          auto s = fv(*e.scrutinee);
          for (const auto& br : e.branches) s.merge(fv(*br.body));
          for (const auto& br : e.branches)
            for (const auto& v : tau(br.pat)) s.erase(v);
          return s;
        } else if constexpr (std::is_same_v<T, RefE>) {
          return fv(*e.init);
        } else if constexpr (std::is_same_v<T, DerefE>) {
          return fv(*e.target);
        } else {
          auto s = fv(*e.target);
          s.merge(fv(*e.value));
          return s;
        }
      },
      o.expr);
}

std::set<ProgramPoint> points(const std::vector<const Occurrence*>& occs) {
  std::set<ProgramPoint> out;
  for (const auto* o : occs) out.insert(o->point);
  return out;
}

std::set<ProgramPoint> all_points(const Occurrence& o) {
  std::set<ProgramPoint> out;
  for_each_node(o, [&](const Occurrence& n) { out.insert(n.point); });
  return out;
}

ProgramPoint max_point(const Occurrence& o) {
  ProgramPoint m = 0;
  for_each_node(o, [&](const Occurrence& n) { m = std::max(m, n.point); });
  return m;
}

void for_each_node(const Occurrence& o,
                   const std::function<void(const Occurrence&)>& f) {
  f(o);
  walk_children(o, [&](const Occurrence& c) { for_each_node(c, f); });
}

namespace {

void collect_binders(const Occurrence& o,
                     std::vector<std::pair<std::string, ProgramPoint>>& out) {
  std::visit(
      [&](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, AbsE>) {
          out.emplace_back(e.param, o.point);
        } else if constexpr (std::is_same_v<T, LetE> || std::is_same_v<T, LetRecE>) {
          out.emplace_back(e.name, o.point);
        } else if constexpr (std::is_same_v<T, CaseE>) {
          for (const auto& br : e.branches)
            for (const auto& v : tau(br.pat)) out.emplace_back(v, o.point);
        }
      },
      o.expr);
  walk_children(o, [&](const Occurrence& c) { collect_binders(c, out); });
}

}  // namespace

std::vector<BinderClash> check_binder_unique(const Occurrence& o) {
  std::vector<std::pair<std::string, ProgramPoint>> binders;
  collect_binders(o, binders);
  std::map<std::string, ProgramPoint> first;
  std::vector<BinderClash> clashes;
  for (const auto& [name, pt] : binders) {
    auto it = first.find(name);
    if (it == first.end()) {
      first.emplace(name, pt);
    } else {
      clashes.push_back(BinderClash{name, it->second, pt});
    }
  }
  return clashes;
}

std::vector<std::string> binder_names(const Occurrence& o) {
  std::vector<std::pair<std::string, ProgramPoint>> binders;
  collect_binders(o, binders);
  std::vector<std::string> out;
  out.reserve(binders.size());
  for (auto& [name, pt] : binders) out.push_back(name);
  return out;
}

OccPtr clone(const Occurrence& o) {
  Expr e = std::visit(
      [&](const auto& v) -> Expr {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, VarE> || std::is_same_v<T, ConstE>) {
          return v;
        } else if constexpr (std::is_same_v<T, AbsE>) {
          return AbsE{v.param, clone(*v.body)};
        } else if constexpr (std::is_same_v<T, AppE>) {
          return AppE{clone(*v.fn), clone(*v.arg)};
        } else if constexpr (std::is_same_v<T, ConstAppE>) {
          return ConstAppE{v.op, clone(*v.lhs), clone(*v.rhs)};
        } else if constexpr (std::is_same_v<T, LetE>) {
          return LetE{v.name, clone(*v.bound), clone(*v.body)};
        } else if constexpr (std::is_same_v<T, LetRecE>) {
          return LetRecE{v.name, clone(*v.bound), clone(*v.body)};
        } else if constexpr (std::is_same_v<T, CaseE>) {
          CaseE c{clone(*v.scrutinee), {}};
          for (const auto& br : v.branches)
            c.branches.push_back(CaseBranch{br.pat, clone(*br.body)});
          return c;
        } else if constexpr (std::is_same_v<T, RefE>) {
          return RefE{clone(*v.init)};
        } else if constexpr (std::is_same_v<T, DerefE>) {
          return DerefE{clone(*v.target)};
        } else {
          return AssignE{clone(*v.target), clone(*v.value)};
        }
      },
      o.expr);
  return occ(std::move(e), o.point);
}

namespace {

class Renamer {
 public:
  explicit Renamer(const Occurrence& root) {
    for_each_node(root, [&](const Occurrence& n) {
      std::visit(
          [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, VarE>) used_.insert(e.name);
            else if constexpr (std::is_same_v<T, AbsE>) used_.insert(e.param);
            else if constexpr (std::is_same_v<T, LetE> || std::is_same_v<T, LetRecE>)
              used_.insert(e.name);
            else if constexpr (std::is_same_v<T, CaseE>) {
              for (const auto& br : e.branches)
                for (const auto& v : tau(br.pat)) used_.insert(v);
            }
          },
          n.expr);
    });
  }

  OccPtr rename(const Occurrence& o, std::map<std::string, std::string> scope) {
    Expr e = std::visit(
        [&](const auto& v) -> Expr {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, VarE>) {
            auto it = scope.find(v.name);
            return VarE{it == scope.end() ? v.name : it->second};
          } else if constexpr (std::is_same_v<T, ConstE>) {
            return v;
          } else if constexpr (std::is_same_v<T, AbsE>) {
            auto inner = scope;
            std::string p = bind(v.param, inner);
            return AbsE{p, rename(*v.body, inner)};
          } else if constexpr (std::is_same_v<T, AppE>) {
            return AppE{rename(*v.fn, scope), rename(*v.arg, scope)};
          } else if constexpr (std::is_same_v<T, ConstAppE>) {
            return ConstAppE{v.op, rename(*v.lhs, scope), rename(*v.rhs, scope)};
          } else if constexpr (std::is_same_v<T, LetE>) {
            OccPtr bound = rename(*v.bound, scope);
            auto inner = scope;
            std::string n = bind(v.name, inner);
            return LetE{n, bound, rename(*v.body, inner)};
          } else if constexpr (std::is_same_v<T, LetRecE>) {
            auto inner = scope;
            std::string n = bind(v.name, inner);
            return LetRecE{n, rename(*v.bound, inner), rename(*v.body, inner)};
          } else if constexpr (std::is_same_v<T, CaseE>) {
            CaseE c{rename(*v.scrutinee, scope), {}};
            for (const auto& br : v.branches) {
              if (br.pat.kind == Pattern::Kind::Var) {
                auto inner = scope;
                std::string n = bind(br.pat.name, inner);
                c.branches.push_back(
                    CaseBranch{Pattern::var(n), rename(*br.body, inner)});
              } else {
                c.branches.push_back(CaseBranch{br.pat, rename(*br.body, scope)});
              }
            }
            return c;
          } else if constexpr (std::is_same_v<T, RefE>) {
            return RefE{rename(*v.init, scope)};
          } else if constexpr (std::is_same_v<T, DerefE>) {
            return DerefE{rename(*v.target, scope)};
          } else {
            return AssignE{rename(*v.target, scope), rename(*v.value, scope)};
          }
        },
        o.expr);
    return occ(std::move(e), o.point);
  }

 private:
  std::string bind(const std::string& name, std::map<std::string, std::string>& scope) {
    std::string fresh = name;
    if (!bound_.insert(name).second) {
      int k = 1;
      do {
        fresh = name + "_" + std::to_string(k++);
      } while (used_.count(fresh) || bound_.count(fresh));
      bound_.insert(fresh);
      used_.insert(fresh);
    }
    scope[name] = fresh;
    return fresh;
  }

  std::set<std::string> used_;
  std::set<std::string> bound_;  // binder names seen so far (first wins)
};

}  // namespace

OccPtr alpha_rename(const Occurrence& o) {
  Renamer r(o);
  return r.rename(o, {});
}

}  // namespace occflow::syntax
