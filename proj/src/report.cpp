#include <occflow/report.hpp>

#include <json.hpp>

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace occflow::report {

using nlohmann::ordered_json;

namespace {

ordered_json deps_json(const runtime::DependencyPair& d) {
  ordered_json j;
  auto& L = j["L"] = ordered_json::array();
  for (const auto& lo : d.L) L.push_back(lo.to_string());
  auto& V = j["V"] = ordered_json::array();
  for (const auto& vo : d.V) V.push_back(vo.to_string());
  return j;
}

ordered_json edges_json(
    const std::set<std::pair<syntax::ProgramPoint, syntax::ProgramPoint>>&
        edges) {
  auto j = ordered_json::array();
  for (const auto& [a, b] : edges) j.push_back(ordered_json::array({a, b}));
  return j;
}

}  // namespace

// ------ run reports ------

std::string run_json(const syntax::Occurrence& prog,
                     const runtime::EvalResult& r) {
  ordered_json j;
  j["program"] = syntax::render(prog);
  j["point"] = r.point;
  j["value"] = r.value.to_string();
  j["deps"] = deps_json(r.deps);

  auto store = ordered_json::object();
  for (const auto& [l, v] : r.store.cells)
    store["l" + std::to_string(l)] = v.to_string();
  j["store"] = store;

  auto bindings = ordered_json::array();
  for (const auto& [key, d] : r.depfn.bindings) {
    ordered_json b;
    b["key"] = key.to_string();
    b["L"] = deps_json(d)["L"];
    b["V"] = deps_json(d)["V"];
    bindings.push_back(std::move(b));
  }
  j["bindings"] = bindings;

  auto journal = ordered_json::array();
  for (const auto& e : r.depfn.journal)
    journal.push_back(ordered_json{{"seq", e.seq}, {"key", e.key.to_string()}});
  j["journal"] = journal;

  j["order"] = edges_json(r.order.edges);
  return j.dump(2);
}

std::string run_text(const runtime::EvalResult& r) {
  std::ostringstream out;
  out << "value " << r.value.to_string() << "\n";
  out << "point " << r.point << "\n";
  out << "deps " << r.deps.to_string() << "\n";
  for (const auto& [l, v] : r.store.cells)
    out << "store l" << l << " = " << v.to_string() << "\n";
  for (const auto& e : r.depfn.journal)
    out << "bind " << e.key.to_string() << " = "
        << r.depfn.bindings.at(e.key).to_string() << "\n";
  out << "order";
  for (const auto& [a, b] : r.order.edges) out << " (" << a << "," << b << ")";
  out << "\n";
  return out.str();
}

// ------ typecheck reports ------

std::string typecheck_json(const syntax::Occurrence& prog,
                           const typesys::PiOrder& pi,
                           const typesys::AliasBase& kappa0,
                           const typesys::TypeckResult& tc) {
  ordered_json j;
  j["program"] = syntax::render(prog);
  j["ok"] = tc.ok;
  if (tc.ok) j["type"] = tc.type.to_string();

  auto diags = ordered_json::array();
  for (const auto& d : tc.diagnostics)
    diags.push_back(ordered_json{{"code", typesys::diagnostic_name(d.code)},
                                 {"point", d.point},
                                 {"message", d.message}});
  j["diagnostics"] = diags;

  auto gamma = ordered_json::array();
  for (const auto& [occ, t] : tc.gamma)
    gamma.push_back(
        ordered_json{{"occ", occ.to_string()}, {"type", t.to_string()}});
  j["gamma"] = gamma;

  auto occ_types = ordered_json::array();
  for (const auto& [p, t] : tc.occ_types)
    occ_types.push_back(ordered_json{{"point", p}, {"type", t.to_string()}});
  j["occurrence_types"] = occ_types;

  auto assumptions = ordered_json::array();
  for (const auto& [lam, a] : tc.assumptions)
    assumptions.push_back(ordered_json{{"lambda", lam},
                                       {"parameter_type", a.first.to_string()},
                                       {"bound_at", a.second}});
  j["assumptions"] = assumptions;

  ordered_json pj;
  auto points = ordered_json::array();
  for (auto p : pi.P) points.push_back(p);
  pj["points"] = points;
  pj["edges"] = edges_json(pi.edges);
  j["pi"] = pj;

  auto cells = ordered_json::array();
  for (const auto& cell : kappa0.cells) {
    auto c = ordered_json::array();
    for (const auto& n : cell) c.push_back(n.to_string());
    cells.push_back(std::move(c));
  }
  j["kappa0"] = cells;
  return j.dump(2);
}

std::string typecheck_text(const typesys::PiOrder& pi,
                           const typesys::AliasBase& kappa0,
                           const typesys::TypeckResult& tc) {
  std::ostringstream out;
  if (tc.ok) {
    out << "ok\n";
    out << "type " << tc.type.to_string() << "\n";
  } else {
    out << "rejected\n";
  }
  for (const auto& d : tc.diagnostics)
    out << "diagnostic " << typesys::diagnostic_name(d.code) << " at point "
        << d.point << ": " << d.message << "\n";
  for (const auto& [occ, t] : tc.gamma)
    out << "gamma " << occ.to_string() << " : " << t.to_string() << "\n";
  out << "kappa0 " << kappa0.to_string() << "\n";
  out << "pi";
  for (const auto& [a, b] : pi.edges) out << " (" << a << "," << b << ")";
  out << "\n";
  return out.str();
}

// ------ agreement and corpus reports ------

std::string agreement_json(const agreement::AgreementReport& rep) {
  ordered_json j;
  j["ok"] = rep.ok;
  auto vs = ordered_json::array();
  for (const auto& v : rep.violations)
    vs.push_back(ordered_json{{"clause", v.clause}, {"witness", v.witness}});
  j["violations"] = vs;
  return j.dump(2);
}

std::string summary_json(const harness::CorpusSummary& sum) {
  ordered_json j;
  j["count"] = sum.total();
  j["pass"] = sum.passes;
  j["checker_reject"] = sum.checker_rejects;
  j["eval_error"] = sum.eval_errors;
  j["violation"] = sum.violations;
  return j.dump(2);
}

std::string corpus_jsonl(const harness::CorpusSummary& sum) {
  std::ostringstream out;
  for (const auto& r : sum.results) {
    ordered_json j;
    j["seed"] = r.seed;
    j["verdict"] = harness::verdict_name(r.verdict);
    j["detail"] = r.detail;
    j["program"] = r.program;
    out << j.dump() << "\n";
  }
  return out.str();
}

// ------ graphs ------

std::string depgraph_dot(const runtime::EvalResult& r) {
  std::set<std::string> keys;
  std::map<syntax::ProgramPoint, std::vector<std::string>> at_point;
  for (const auto& [key, d] : r.depfn.bindings) {
    keys.insert(key.to_string());
    at_point[key.point].push_back(key.to_string());
  }

  std::set<std::string> referenced;
  for (const auto& [key, d] : r.depfn.bindings) {
    for (const auto& lo : d.L) referenced.insert(lo.to_string());
    for (const auto& vo : d.V) referenced.insert(vo.to_string());
  }
  for (const auto& s : keys) referenced.erase(s);

  std::set<syntax::ProgramPoint> bare_points;
  for (const auto& [a, b] : r.order.edges) {
    if (!at_point.count(a)) bare_points.insert(a);
    if (!at_point.count(b)) bare_points.insert(b);
  }

  std::ostringstream out;
  out << "digraph bindings {\n";
  out << "  rankdir=BT;\n";
  for (const auto& k : keys) out << "  \"" << k << "\" [shape=box];\n";
  for (const auto& o : referenced) out << "  \"" << o << "\" [shape=oval];\n";
  for (auto p : bare_points)
    out << "  \"@" << p << "\" [shape=point, xlabel=\"" << p << "\"];\n";

  for (const auto& [key, d] : r.depfn.bindings) {
    for (const auto& lo : d.L)
      out << "  \"" << key.to_string() << "\" -> \"" << lo.to_string()
          << "\";\n";
    for (const auto& vo : d.V)
      out << "  \"" << key.to_string() << "\" -> \"" << vo.to_string()
          << "\";\n";
  }

  auto ends = [&](syntax::ProgramPoint p) {
    if (auto it = at_point.find(p); it != at_point.end()) return it->second;
    return std::vector<std::string>{"@" + std::to_string(p)};
  };
  for (const auto& [a, b] : r.order.edges)
    for (const auto& from : ends(a))
      for (const auto& to : ends(b))
        out << "  \"" << from << "\" -> \"" << to << "\" [style=dashed];\n";

  out << "}\n";
  return out.str();
}

std::string typegraph_dot(const typesys::PiOrder& pi,
                          const typesys::TypeckResult& tc) {
  std::ostringstream out;
  out << "digraph static_order {\n";
  out << "  rankdir=BT;\n";
  for (auto p : pi.P)
    out << "  \"@" << p << "\" [shape=circle, label=\"" << p << "\"];\n";
  for (const auto& [occ, t] : tc.gamma)
    out << "  \"" << occ.to_string() << "\" [shape=box, label=\""
        << occ.to_string() << " : " << t.to_string() << "\"];\n";
  for (const auto& [a, b] : pi.edges)
    out << "  \"@" << a << "\" -> \"@" << b << "\";\n";
  for (const auto& [occ, t] : tc.gamma)
    if (pi.P.count(occ.point))
      out << "  \"" << occ.to_string() << "\" -> \"@" << occ.point
          << "\" [style=dotted];\n";
  out << "}\n";
  return out.str();
}

}  // namespace occflow::report
