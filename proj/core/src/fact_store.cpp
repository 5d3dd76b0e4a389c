#include "tablekb/fact_store.hpp"

#include "tablekb/errors.hpp"

namespace tablekb {

std::string to_string(const Triple& t) {
    return to_string(t.subject) + " " + to_string(t.predicate) + " " + to_string(t.object) + " .";
}

void validate_triple(const Triple& t, std::size_t position) {
    auto fail = [&](const std::string& why) {
        throw StoreError("triple #" + std::to_string(position) + " (" + to_string(t) + "): " + why);
    };
    if (t.subject.is_variable() || t.predicate.is_variable() || t.object.is_variable())
        fail("variables cannot be stored");
    if (t.subject.is_literal()) fail("subject must be an iri or a null");
    if (!t.predicate.is_iri()) fail("predicate must be an iri");
}

Triple FactStore::canonical(const Triple& t) const {
    return Triple{eq_.find(t.subject), eq_.find(t.predicate), eq_.find(t.object)};
}

void FactStore::index(const Triple& t) {
    by_subject_[t.subject].insert(t);
    by_predicate_[t.predicate].insert(t);
    by_object_[t.object].insert(t);
}

void FactStore::unindex(const Triple& t) {
    auto drop = [&t](std::map<Term, std::set<Triple>>& idx, const Term& key) {
        auto it = idx.find(key);
        if (it == idx.end()) return;
        it->second.erase(t);
        if (it->second.empty()) idx.erase(it);
    };
    drop(by_subject_, t.subject);
    drop(by_predicate_, t.predicate);
    drop(by_object_, t.object);
}

void FactStore::insert(const Triple& t) {
    validate_triple(t);
    Triple c = canonical(t);
    if (triples_.insert(c).second) index(c);
}

void FactStore::insert(std::span<const Triple> ts) {
    for (std::size_t i = 0; i < ts.size(); ++i) validate_triple(ts[i], i);
    for (const auto& t : ts) {
        Triple c = canonical(t);
        if (triples_.insert(c).second) index(c);
    }
}

bool FactStore::erase(const Triple& t) {
    Triple c = canonical(t);
    if (triples_.erase(c) == 0) return false;
    unindex(c);
    return true;
}

bool FactStore::merge(const Term& a, const Term& b) {
    if (!a.is_ground() || !b.is_ground()) throw StoreError("cannot merge variables");
    Term ra = eq_.find(a);
    Term rb = eq_.find(b);
    if (ra == rb) return false;
    if (ra.is_literal() || rb.is_literal())
        throw StoreError("literals are never merged: " + to_string(ra) + " ~ " + to_string(rb));

    auto joined = eq_.unite(ra, rb);
    const Term& keep = joined->first;
    const Term& gone = joined->second;

    std::set<Triple> affected;
    for (auto* idx : {&by_subject_, &by_predicate_, &by_object_}) {
        auto it = idx->find(gone);
        if (it != idx->end()) affected.insert(it->second.begin(), it->second.end());
    }
    for (const auto& t : affected) {
        triples_.erase(t);
        unindex(t);
    }
    auto subst = [&](const Term& x) -> const Term& { return x == gone ? keep : x; };
    for (const auto& t : affected) {
        Triple r{subst(t.subject), subst(t.predicate), subst(t.object)};
        if (triples_.insert(r).second) index(r);
    }
    return true;
}

bool FactStore::contains(const Triple& t) const { return triples_.count(canonical(t)) != 0; }

std::vector<Triple> FactStore::match(const std::optional<Term>& s, const std::optional<Term>& p,
                                     const std::optional<Term>& o) const {
    std::optional<Term> cs = s ? std::optional<Term>(eq_.find(*s)) : std::nullopt;
    std::optional<Term> cp = p ? std::optional<Term>(eq_.find(*p)) : std::nullopt;
    std::optional<Term> co = o ? std::optional<Term>(eq_.find(*o)) : std::nullopt;

    const std::set<Triple>* source = &triples_;
    static const std::set<Triple> kEmpty;
    auto pick = [&](const std::map<Term, std::set<Triple>>& idx, const Term& key) {
        auto it = idx.find(key);
        const std::set<Triple>* cand = it == idx.end() ? &kEmpty : &it->second;
        if (cand->size() < source->size()) source = cand;
    };
    if (cs) pick(by_subject_, *cs);
    if (cp) pick(by_predicate_, *cp);
    if (co) pick(by_object_, *co);

    std::vector<Triple> out;
    for (const auto& t : *source) {
        if (cs && !(t.subject == *cs)) continue;
        if (cp && !(t.predicate == *cp)) continue;
        if (co && !(t.object == *co)) continue;
        out.push_back(t);
    }
    return out;
}

std::size_t FactStore::estimate(const std::optional<Term>& s, const std::optional<Term>& p,
                                const std::optional<Term>& o) const {
    std::size_t best = triples_.size();
    auto look = [&](const std::map<Term, std::set<Triple>>& idx, const Term& key) {
        auto it = idx.find(eq_.find(key));
        best = std::min(best, it == idx.end() ? std::size_t{0} : it->second.size());
    };
    if (s) look(by_subject_, *s);
    if (p) look(by_predicate_, *p);
    if (o) look(by_object_, *o);
    return best;
}

}  // namespace tablekb
