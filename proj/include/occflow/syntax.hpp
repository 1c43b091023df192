#pragma once

// ------ labeled expression trees ------
//
// Every expression node carries a program point (a positive integer label).
// Concrete syntax attaches labels with ^n; unlabeled nodes are completed in
// post order with fresh points above the largest explicit one, so explicit
// labels survive verbatim and gaps in the numbering are fine.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace occflow::syntax {

using ProgramPoint = std::uint64_t;  // 0 is reserved for "not yet labeled"

// ------ constants and patterns ------

struct Constant {
  enum class Kind { Int, Bool, Plus, Minus, Times, Equal, Less, Greater };
  Kind kind = Kind::Int;
  std::int64_t n = 0;  // Kind::Int
  bool b = false;      // Kind::Bool

  static Constant integer(std::int64_t v);
  static Constant boolean(bool v);
  static Constant op(Kind k);

  bool is_op() const { return kind != Kind::Int && kind != Kind::Bool; }
  std::string to_string() const;
  friend bool operator==(const Constant&, const Constant&);
};

struct Pattern {
  enum class Kind { Int, Bool, Var, Wildcard };
  Kind kind = Kind::Wildcard;
  std::int64_t n = 0;
  bool b = false;
  std::string name;

  static Pattern integer(std::int64_t v);
  static Pattern boolean(bool v);
  static Pattern var(std::string name);
  static Pattern wildcard();

  std::string to_string() const;
  friend bool operator==(const Pattern&, const Pattern&);
};

// ------ expression variants ------

struct Occurrence;
using OccPtr = std::shared_ptr<Occurrence>;

struct VarE { std::string name; };
struct ConstE { Constant c; };
struct AbsE { std::string param; OccPtr body; };
struct AppE { OccPtr fn; OccPtr arg; };
struct ConstAppE { Constant op; OccPtr lhs; OccPtr rhs; };
struct LetE { std::string name; OccPtr bound; OccPtr body; };
struct LetRecE { std::string name; OccPtr bound; OccPtr body; };
struct CaseBranch { Pattern pat; OccPtr body; };
struct CaseE { OccPtr scrutinee; std::vector<CaseBranch> branches; };
struct RefE { OccPtr init; };
struct DerefE { OccPtr target; };
struct AssignE { OccPtr target; OccPtr value; };

using Expr = std::variant<VarE, ConstE, AbsE, AppE, ConstAppE, LetE, LetRecE,
                          CaseE, RefE, DerefE, AssignE>;

struct Occurrence {
  Expr expr;
  ProgramPoint point = 0;
};

OccPtr occ(Expr e, ProgramPoint p = 0);

// ------ errors ------

struct SyntaxError : std::runtime_error {
  std::size_t position;  // byte offset into the input
  SyntaxError(std::size_t pos, const std::string& what);
};

struct DuplicatePointError : std::runtime_error {
  ProgramPoint point;
  explicit DuplicatePointError(ProgramPoint p);
};

struct DuplicateBinderError : std::runtime_error {
  std::string name;
  explicit DuplicateBinderError(const std::string& n);
};

// ------ operations ------

// Parse concrete syntax, complete missing labels, and validate that explicit
// labels and binder names are unique.  With alpha=true clashing binders are
// freshened instead of rejected.
OccPtr parse(const std::string& text, bool alpha = false);

// Canonical concrete syntax with every label printed; parse(render(o)) == o.
std::string render(const Occurrence& o);

bool equal(const Occurrence& a, const Occurrence& b);

// Free variables / pattern variables.
std::set<std::string> fv(const Occurrence& o);
std::set<std::string> tau(const Pattern& p);

// Labels of a set of occurrences, and of a whole tree.
std::set<ProgramPoint> points(const std::vector<const Occurrence*>& occs);
std::set<ProgramPoint> all_points(const Occurrence& o);
ProgramPoint max_point(const Occurrence& o);

struct BinderClash {
  std::string name;
  ProgramPoint first = 0;   // points of the two binding constructs
  ProgramPoint second = 0;
};

// Empty result means binder-unique (every lambda/let/let rec/pattern binder
// name bound exactly once).
std::vector<BinderClash> check_binder_unique(const Occurrence& o);

// Freshen clashing binders by numeric suffixing; result is binder-unique and
// alpha-equivalent to the input.
OccPtr alpha_rename(const Occurrence& o);

// Assign fresh post-order labels (above the current maximum) to every node
// with point 0.  Used by parse and by the program generator.
void label_program(Occurrence& o);

// All binder names in order of appearance (lambda params, let/let rec names,
// pattern variables).
std::vector<std::string> binder_names(const Occurrence& o);

// Pre-order traversal over all nodes.
void for_each_node(const Occurrence& o,
                   const std::function<void(const Occurrence&)>& f);

OccPtr clone(const Occurrence& o);

}  // namespace occflow::syntax
