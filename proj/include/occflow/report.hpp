#pragma once

// ------ JSON, Graphviz and plain-text rendering of analysis results ------
//
// Everything here is presentation only: the structures are rendered with
// stable member order and sorted sets so output is byte-reproducible for a
// given result.

#include <occflow/agreement.hpp>
#include <occflow/harness.hpp>
#include <occflow/runtime.hpp>
#include <occflow/syntax.hpp>
#include <occflow/typesys.hpp>

#include <string>

namespace occflow::report {

// Pretty-printed JSON (2-space indent).
std::string run_json(const syntax::Occurrence& prog,
                     const runtime::EvalResult& r);
std::string typecheck_json(const syntax::Occurrence& prog,
                           const typesys::PiOrder& pi,
                           const typesys::AliasBase& kappa0,
                           const typesys::TypeckResult& tc);
std::string agreement_json(const agreement::AgreementReport& rep);

// Corpus results: a one-object summary, and one JSON object per line.
std::string summary_json(const harness::CorpusSummary& sum);
std::string corpus_jsonl(const harness::CorpusSummary& sum);

// Recorded bindings as a graph.  Box nodes are binding occurrences (the
// domain of the dependency function), oval nodes are occurrences referenced
// from a dependency set, point nodes stand in for order endpoints that bind
// nothing.  Solid edges go from a binding to what it depends on; dashed
// edges render the recorded point order.
std::string depgraph_dot(const runtime::EvalResult& r);

// The static point order as a graph: circle nodes are program points, solid
// edges the order's covering edges, box nodes the checked environment's
// bindings (dotted edge to the point each binding lives at).
std::string typegraph_dot(const typesys::PiOrder& pi,
                          const typesys::TypeckResult& tc);

// Human-oriented plain text, one fact per line.
std::string run_text(const runtime::EvalResult& r);
std::string typecheck_text(const typesys::PiOrder& pi,
                           const typesys::AliasBase& kappa0,
                           const typesys::TypeckResult& tc);

}  // namespace occflow::report
