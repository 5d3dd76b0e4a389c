#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tablekb/fact_store.hpp"

namespace tablekb {

// A triple whose positions may hold variables.
struct TriplePattern {
    Term subject;
    Term predicate;
    Term object;
};

struct Filter {
    enum class Kind {
        StringEquals,            // ?v = "text"          (exact lexical form, any literal)
        StringEqualsIgnoreCase,  // strieq(?v, "text")   (full case folding)
        DatatypeIn,              // datatype(?v) = xsd:X (integer counts as decimal)
    };
    Kind kind = Kind::StringEquals;
    std::string variable;
    std::string text;
    Datatype datatype = Datatype::String;
};

bool filter_holds(const Filter& f, const Term& value);

struct BgpQuery {
    std::vector<TriplePattern> patterns;
    std::vector<Filter> filters;
    std::vector<std::string> projection;
};

// Throws QueryError when a projected or filtered variable does not occur in
// any pattern, or when the query has no pattern.
void validate(const BgpQuery& q);

// One row per distinct solution, values aligned with q.projection.
using Binding = std::vector<Term>;

// Evaluates q against the store with set semantics. Rows come back sorted.
std::vector<Binding> match_bgp(const FactStore& store, const BgpQuery& q);

// Parses the select/where subset:
//
//   prefix ex: <http://example.org/>
//   select distinct ?column where {
//     ?table :hasCol ?column ; :caption ?cap .
//     ?cell :inColumn ?column ; rdf:value ?v .
//     ?column :hasTitle "f1" .
//     filter(datatype(?v) = xsd:decimal)
//   }
//
// Built-in prefixes are ':' (tablekb namespace), rdf:, rdfs: and xsd:.
// Throws ParseError carrying line:column of the offending token.
BgpQuery parse_query(std::string_view text);

}  // namespace tablekb
