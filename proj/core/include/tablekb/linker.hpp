#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tablekb/fact_store.hpp"
#include "tablekb/ingest.hpp"
#include "tablekb/rules.hpp"

namespace tablekb {

// Facts of arbitrary arity keyed by predicate name. The chase works on this
// view of the KB: a triple (s, p, o) becomes p(s, o) with p the local name of
// the predicate ("rdf:type" -> type, ":hasTitle" -> hasTitle).
using Tuple = std::vector<Term>;
using FactSet = std::map<std::string, std::set<Tuple>>;

std::size_t fact_count(const FactSet& facts);

// True iff both terms are literals whose full Unicode case-folded lexical
// forms are equal.
bool str_eq(std::string_view a, std::string_view b);
bool str_eq(const Term& a, const Term& b);

// Converts the KB into chase facts.
//
//  * type(X, :Cell) is kept only for mention cells: string-valued, non-empty,
//    outside rows typed :HeaderRow. Other cells get no entity.
//  * value/hasTitle facts with an empty string are dropped (no label).
//  * hasAuthor(P, A) is added from metas. Papers referenced by fromPaper
//    without any author facts are reported in warnings.
FactSet base_facts(const FactStore& store, std::span<const PaperMeta> metas,
                   std::vector<std::string>* warnings = nullptr);

// Saturates the enabled Datalog rules over base_facts(store, metas) and
// returns only the facts of the predicates those rules define.
FactSet ground_aux_predicates(const RuleSet& rules, const FactStore& store, std::span<const PaperMeta> metas);

struct ChaseConfig {
    // Alarm when rule applications exceed budget_factor * initial facts.
    double budget_factor = 10.0;
};

struct ChaseStats {
    std::size_t initial_facts = 0;
    std::size_t nulls_created = 0;
    std::size_t steps = 0;   // new Datalog facts + TGD firings + merges
    std::size_t rounds = 0;
    std::map<std::string, std::size_t> merges_per_rule;
    std::size_t column_entities = 0;
    std::size_t cell_entities = 0;
    std::size_t entity_count = 0;

    std::size_t total_merges() const;
};

struct ChaseResult {
    // Input store plus colEntity / cellEntity triples, with merges applied.
    FactStore store;
    // Every fact of the final database, auxiliary predicates included.
    FactSet facts;
    // Column or cell iri -> canonical entity term.
    std::map<Term, Term> entity_of;
    ChaseStats stats;
    std::vector<std::string> warnings;
};

// Restricted chase of the enabled rules. Each round saturates the Datalog
// rules, fires TGDs whose head is not yet satisfied (nulls numbered
// sequentially in match order), then applies every EGD match and rewrites
// the database to canonical terms; rounds repeat until nothing changes.
//
// Throws RuleError when the program is not weakly acyclic, ChaseError when
// the step budget is exceeded or an EGD equates two distinct constants.
ChaseResult restricted_chase(const RuleSet& rules, const FactStore& store, std::span<const PaperMeta> metas = {},
                             const ChaseConfig& cfg = {});

// Names surviving entity terms :E1, :E2, ... in term order and emits
// (cell :denotes E), (column :colDenotes E), (E rdf:type :Entity) and one
// (E :label L) per distinct cell value or column title in the class.
std::vector<Triple> materialize_entities(const ChaseResult& result);

// Cells grouped by the entity they denote.
std::map<Term, std::vector<Term>> entity_cells(const ChaseResult& result);

struct AblationRow {
    std::string name;               // "none", a rule name, or "all"
    std::vector<std::string> egds;  // enabled EGDs
    std::size_t nulls = 0;
    std::size_t column_entities = 0;
    std::size_t cell_entities = 0;
    std::size_t entities = 0;
    std::map<std::string, std::size_t> merges_per_rule;
};

// No EGD, each EGD alone, all EGDs.
std::vector<std::set<std::string>> default_ablation_subsets(const RuleSet& rules);

// Runs the chase once per EGD subset, in parallel on independent copies.
// Rows come back in subset order.
std::vector<AblationRow> ablate(const RuleSet& rules, const FactStore& store, std::span<const PaperMeta> metas,
                                const std::vector<std::set<std::string>>& subsets, const ChaseConfig& cfg = {});

struct LinkPrecisionReport {
    std::map<Term, double> per_entity;
    double mean = 0.0;  // 0 when there are no entities
};

// Per entity: size of the largest group of its cells sharing a gold concept,
// divided by the number of cells. Throws EvalError listing cells absent
// from gold.
LinkPrecisionReport link_precision(const std::map<Term, std::vector<Term>>& entity_cells,
                                   const std::map<Term, std::string>& gold);

}  // namespace tablekb
