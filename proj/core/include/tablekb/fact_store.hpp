#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tablekb/term.hpp"
#include "tablekb/union_find.hpp"

namespace tablekb {

struct Triple {
    Term subject;
    Term predicate;
    Term object;

    friend bool operator==(const Triple&, const Triple&) = default;
    friend auto operator<=>(const Triple&, const Triple&) = default;
};

std::string to_string(const Triple& t);

// Throws StoreError when t is not a storable triple (variables, literal
// subject, non-iri predicate). `position` is reported in the message.
void validate_triple(const Triple& t, std::size_t position = 0);

// Indexed set of ground triples with equality rewriting.
//
// Invariants:
//  * every stored triple only mentions canonical representatives;
//  * the canonical representative of a class is its minimum term;
//  * literals are never merged.
//
// Reads are safe to share between threads; insert/merge/erase need
// exclusive access.
class FactStore {
public:
    FactStore() = default;

    void insert(const Triple& t);
    void insert(std::span<const Triple> ts);

    // Removes the canonical form of t. Returns whether it was present.
    bool erase(const Triple& t);

    // Joins the equivalence classes of a and b and rewrites every stored
    // triple to the new representative. Returns false when a and b were
    // already equal. Throws StoreError for variables and literals.
    bool merge(const Term& a, const Term& b);

    Term canonical(const Term& t) const { return eq_.find(t); }
    Triple canonical(const Triple& t) const;

    bool contains(const Triple& t) const;
    std::size_t size() const { return triples_.size(); }
    bool empty() const { return triples_.empty(); }

    // All triples in sorted order.
    const std::set<Triple>& triples() const { return triples_; }

    // Triples matching the bound positions (nullopt = wildcard). Bound
    // terms are canonicalized before lookup. Result is sorted.
    std::vector<Triple> match(const std::optional<Term>& s, const std::optional<Term>& p,
                              const std::optional<Term>& o) const;

    // Cheap upper bound on match() size, used for join ordering.
    std::size_t estimate(const std::optional<Term>& s, const std::optional<Term>& p,
                         const std::optional<Term>& o) const;

    // Non-representative terms mapped to their representative.
    std::map<Term, Term> equivalences() const { return eq_.mapping(); }

    friend bool operator==(const FactStore& a, const FactStore& b) {
        return a.triples_ == b.triples_ && a.eq_.mapping() == b.eq_.mapping();
    }

private:
    void index(const Triple& t);
    void unindex(const Triple& t);

    std::set<Triple> triples_;
    std::map<Term, std::set<Triple>> by_subject_;
    std::map<Term, std::set<Triple>> by_predicate_;
    std::map<Term, std::set<Triple>> by_object_;
    MinUnionFind<Term> eq_;
};

}  // namespace tablekb
