#include "tablekb/linker.hpp"

#include <algorithm>
#include <future>
#include <optional>
#include <unordered_map>

#include "tablekb/errors.hpp"
#include "tablekb/union_find.hpp"
#include "tablekb/unicode.hpp"

namespace tablekb {

namespace {

// ---------------------------------------------------------------- database

struct Relation {
    std::set<Tuple> tuples;
    // index[pos][term] -> tuples with that term at pos; built lazily.
    mutable std::vector<std::map<Term, std::vector<const Tuple*>>> index;
    mutable bool indexed = false;

    void build_index() const {
        if (indexed) return;
        index.clear();
        for (const auto& t : tuples) {
            if (index.size() < t.size()) index.resize(t.size());
            for (std::size_t i = 0; i < t.size(); ++i) index[i][t[i]].push_back(&t);
        }
        indexed = true;
    }
};

class Database {
public:
    explicit Database(const FactSet& facts) {
        for (const auto& [p, tuples] : facts)
            for (const auto& t : tuples) add(p, t);
    }

    // Inserts the canonical form; returns whether it was new.
    bool add(const std::string& pred, const Tuple& t) {
        Tuple c = t;
        for (auto& x : c) x = eq_.find(x);
        Relation& r = rels_[pred];
        auto [it, inserted] = r.tuples.insert(std::move(c));
        if (inserted && r.indexed) {
            if (r.index.size() < it->size()) r.index.resize(it->size());
            for (std::size_t i = 0; i < it->size(); ++i) r.index[i][(*it)[i]].push_back(&*it);
        }
        return inserted;
    }

    const Relation* get(const std::string& pred) const {
        auto it = rels_.find(pred);
        return it == rels_.end() ? nullptr : &it->second;
    }

    Term find(const Term& t) const { return eq_.find(t); }

    std::optional<std::pair<Term, Term>> unite(const Term& a, const Term& b) { return eq_.unite(a, b); }

    // Rewrites every tuple to canonical terms.
    void rewrite() {
        for (auto& [p, r] : rels_) {
            std::set<Tuple> next;
            bool changed = false;
            for (const auto& t : r.tuples) {
                Tuple c = t;
                for (auto& x : c) {
                    Term f = eq_.find(x);
                    if (f != x) {
                        x = std::move(f);
                        changed = true;
                    }
                }
                next.insert(std::move(c));
            }
            if (changed) {
                r.tuples = std::move(next);
                r.indexed = false;
                r.index.clear();
            }
        }
    }

    FactSet facts() const {
        FactSet out;
        for (const auto& [p, r] : rels_)
            if (!r.tuples.empty()) out[p] = r.tuples;
        return out;
    }

    const MinUnionFind<Term>& equalities() const { return eq_; }

private:
    std::map<std::string, Relation> rels_;
    MinUnionFind<Term> eq_;
};

// ----------------------------------------------------------- compiled rules

struct Arg {
    int slot = -1;  // variable slot, or -1 for a constant
    Term constant;
};

struct CAtom {
    std::string predicate;
    bool builtin = false;
    std::vector<Arg> args;
};

struct CRule {
    const Rule* rule = nullptr;
    std::vector<std::string> slots;  // slot -> variable name
    std::vector<CAtom> body;
    std::vector<CAtom> head;
    std::vector<int> existential_slots;
    int left = -1;
    int right = -1;
};

CRule compile(const Rule& r) {
    CRule c;
    c.rule = &r;
    std::map<std::string, int> slot_of;
    auto slot = [&](const std::string& v) {
        auto [it, inserted] = slot_of.emplace(v, static_cast<int>(c.slots.size()));
        if (inserted) c.slots.push_back(v);
        return it->second;
    };
    auto conv = [&](const std::vector<RuleAtom>& atoms) {
        std::vector<CAtom> out;
        for (const auto& a : atoms) {
            CAtom ca{a.predicate, a.builtin, {}};
            for (const auto& t : a.args) {
                if (t.is_variable())
                    ca.args.push_back({slot(t.text()), {}});
                else
                    ca.args.push_back({-1, t});
            }
            out.push_back(std::move(ca));
        }
        return out;
    };
    c.body = conv(r.body);
    c.head = conv(r.head);
    for (const auto& e : r.existentials) c.existential_slots.push_back(slot(e));
    if (r.kind == Rule::Kind::Egd) {
        c.left = slot(r.equated_left);
        c.right = slot(r.equated_right);
    }
    return c;
}

struct Env {
    std::vector<Term> value;
    std::vector<char> bound;
    explicit Env(std::size_t n) : value(n), bound(n, 0) {}
};

class CasefoldCache {
public:
    const std::string& get(const std::string& s) {
        auto it = cache_.find(s);
        if (it != cache_.end()) return it->second;
        return cache_.emplace(s, unicode::casefold(s)).first->second;
    }

private:
    std::unordered_map<std::string, std::string> cache_;
};

bool eval_builtin(const CAtom& a, const Env& env, CasefoldCache& fold) {
    // Only STR_EQ exists; the parser rejects anything else.
    auto term = [&](const Arg& x) -> const Term& { return x.slot >= 0 ? env.value[x.slot] : x.constant; };
    const Term& l = term(a.args[0]);
    const Term& r = term(a.args[1]);
    if (!l.is_literal() || !r.is_literal()) return false;
    return fold.get(l.text()) == fold.get(r.text());
}

template <class F>
void join(const Database& db, const std::vector<CAtom>& atoms, Env& env, std::vector<char>& used,
          std::size_t remaining, CasefoldCache& fold, const F& emit) {
    if (remaining == 0) {
        emit(env);
        return;
    }
    auto all_bound = [&](const CAtom& a) {
        return std::all_of(a.args.begin(), a.args.end(), [&](const Arg& x) { return x.slot < 0 || env.bound[x.slot]; });
    };

    // Builtins as soon as their arguments are bound.
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (used[i] || !atoms[i].builtin || !all_bound(atoms[i])) continue;
        if (!eval_builtin(atoms[i], env, fold)) return;
        used[i] = 1;
        join(db, atoms, env, used, remaining - 1, fold, emit);
        used[i] = 0;
        return;
    }

    // Most bound relational atom next; ties broken by rule order.
    int best = -1;
    int best_bound = -1;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (used[i] || atoms[i].builtin) continue;
        int b = 0;
        for (const auto& x : atoms[i].args)
            if (x.slot < 0 || env.bound[x.slot]) ++b;
        if (b > best_bound) {
            best = static_cast<int>(i);
            best_bound = b;
        }
    }
    if (best < 0) return;  // only unbound builtins left; cannot happen for parsed rules
    const CAtom& a = atoms[best];
    const Relation* rel = db.get(a.predicate);
    if (!rel) return;

    auto value_of = [&](const Arg& x) -> const Term* {
        if (x.slot < 0) return &x.constant;
        return env.bound[x.slot] ? &env.value[x.slot] : nullptr;
    };

    auto try_tuple = [&](const Tuple& t) {
        if (t.size() != a.args.size()) return;
        std::vector<int> newly;
        bool ok = true;
        for (std::size_t k = 0; k < t.size() && ok; ++k) {
            const Arg& x = a.args[k];
            if (const Term* v = value_of(x)) {
                // Constants are compared canonically: equalities may have
                // rewritten them in the data.
                if (x.slot < 0 ? db.find(*v) != t[k] : *v != t[k]) ok = false;
            } else {
                env.value[x.slot] = t[k];
                env.bound[x.slot] = 1;
                newly.push_back(x.slot);
            }
        }
        if (ok) {
            used[best] = 1;
            join(db, atoms, env, used, remaining - 1, fold, emit);
            used[best] = 0;
        }
        for (int s : newly) env.bound[s] = 0;
    };

    std::optional<std::size_t> key;
    for (std::size_t k = 0; k < a.args.size(); ++k)
        if (value_of(a.args[k])) {
            key = k;
            break;
        }
    if (key) {
        rel->build_index();
        if (*key >= rel->index.size()) return;
        const Term* v = value_of(a.args[*key]);
        Term probe = a.args[*key].slot < 0 ? db.find(*v) : *v;
        auto it = rel->index[*key].find(probe);
        if (it == rel->index[*key].end()) return;
        // Copy: recursion never inserts, but keep iteration independent of
        // the index anyway.
        std::vector<const Tuple*> candidates = it->second;
        for (const Tuple* t : candidates) try_tuple(*t);
    } else {
        for (const auto& t : rel->tuples) try_tuple(t);
    }
}

template <class F>
void for_each_match(const Database& db, const std::vector<CAtom>& atoms, Env env, CasefoldCache& fold, const F& emit) {
    std::vector<char> used(atoms.size(), 0);
    join(db, atoms, env, used, atoms.size(), fold, emit);
}

Tuple instantiate(const CAtom& a, const Env& env) {
    Tuple t;
    t.reserve(a.args.size());
    for (const auto& x : a.args) t.push_back(x.slot >= 0 ? env.value[x.slot] : x.constant);
    return t;
}

// ------------------------------------------------------------------- chase

class Chase {
public:
    Chase(const RuleSet& rules, const FactSet& facts, const ChaseConfig& cfg, std::uint64_t first_null)
        : db_(facts), next_null_(first_null) {
        for (const auto& r : rules.rules) {
            if (!rules.enabled(r)) continue;
            CRule c = compile(r);
            switch (r.kind) {
            case Rule::Kind::Datalog: datalog_.push_back(std::move(c)); break;
            case Rule::Kind::Tgd: tgds_.push_back(std::move(c)); break;
            case Rule::Kind::Egd: egds_.push_back(std::move(c)); break;
            }
        }
        stats_.initial_facts = fact_count(facts);
        budget_ = static_cast<std::size_t>(cfg.budget_factor * static_cast<double>(stats_.initial_facts));
        for (const auto& e : egds_) stats_.merges_per_rule[e.rule->name] = 0;
    }

    void saturate() {
        for (;;) {
            std::vector<std::pair<std::string, Tuple>> derived;
            for (const auto& r : datalog_)
                for_each_match(db_, r.body, Env(r.slots.size()), fold_, [&](const Env& env) {
                    for (const auto& h : r.head) derived.emplace_back(h.predicate, instantiate(h, env));
                });
            bool changed = false;
            for (const auto& [p, t] : derived)
                if (db_.add(p, t)) {
                    changed = true;
                    step();
                }
            if (!changed) return;
        }
    }

    bool fire_tgds() {
        bool fired = false;
        for (const auto& r : tgds_) {
            std::vector<Env> matches;
            for_each_match(db_, r.body, Env(r.slots.size()), fold_, [&](const Env& env) { matches.push_back(env); });
            for (auto& env : matches) {
                if (head_satisfied(r, env)) continue;
                for (int s : r.existential_slots) {
                    env.value[s] = Term::null(next_null_++);
                    env.bound[s] = 1;
                    ++stats_.nulls_created;
                }
                for (const auto& h : r.head) db_.add(h.predicate, instantiate(h, env));
                fired = true;
                step();
            }
        }
        return fired;
    }

    bool apply_egds() {
        std::vector<std::tuple<const CRule*, Term, Term>> pairs;
        for (const auto& r : egds_)
            for_each_match(db_, r.body, Env(r.slots.size()), fold_, [&](const Env& env) {
                if (env.value[r.left] != env.value[r.right])
                    pairs.emplace_back(&r, env.value[r.left], env.value[r.right]);
            });
        bool merged = false;
        for (const auto& [r, x, y] : pairs) {
            Term a = db_.find(x), b = db_.find(y);
            if (a == b) continue;
            if (!a.is_null() && !b.is_null())
                throw ChaseError("rule " + r->rule->name + " equates distinct constants " + to_string(a) + " and " +
                                 to_string(b));
            db_.unite(a, b);
            ++stats_.merges_per_rule[r->rule->name];
            merged = true;
            step();
        }
        if (merged) db_.rewrite();
        return merged;
    }

    void run() {
        for (;;) {
            ++stats_.rounds;
            saturate();
            if (fire_tgds()) continue;
            if (!apply_egds()) break;
        }
    }

    const Database& db() const { return db_; }
    ChaseStats& stats() { return stats_; }

private:
    bool head_satisfied(const CRule& r, const Env& env) {
        bool found = false;
        // Existential slots stay unbound and are matched freely.
        for_each_match(db_, r.head, env, fold_, [&](const Env&) { found = true; });
        return found;
    }

    void step() {
        if (++stats_.steps > budget_)
            throw ChaseError("step budget of " + std::to_string(budget_) + " rule applications exceeded (" +
                             std::to_string(stats_.initial_facts) + " initial facts)");
    }

    Database db_;
    std::vector<CRule> datalog_, tgds_, egds_;
    CasefoldCache fold_;
    ChaseStats stats_;
    std::size_t budget_ = 0;
    std::uint64_t next_null_;
};

std::uint64_t first_free_null(const FactStore& store) {
    std::uint64_t next = 1;
    for (const auto& t : store.triples())
        for (const Term* x : {&t.subject, &t.object})
            if (x->is_null()) next = std::max(next, x->null_id() + 1);
    return next;
}

const Term& col_entity_pred() {
    static const Term t = vocab::local("colEntity");
    return t;
}
const Term& cell_entity_pred() {
    static const Term t = vocab::local("cellEntity");
    return t;
}

}  // namespace

std::size_t fact_count(const FactSet& facts) {
    std::size_t n = 0;
    for (const auto& [p, ts] : facts) n += ts.size();
    return n;
}

bool str_eq(std::string_view a, std::string_view b) { return unicode::casefold(a) == unicode::casefold(b); }

bool str_eq(const Term& a, const Term& b) { return a.is_literal() && b.is_literal() && str_eq(a.text(), b.text()); }

std::size_t ChaseStats::total_merges() const {
    std::size_t n = 0;
    for (const auto& [r, k] : merges_per_rule) n += k;
    return n;
}

FactSet base_facts(const FactStore& store, std::span<const PaperMeta> metas, std::vector<std::string>* warnings) {
    const Term type = vocab::rdf_type();
    const Term cell_class = vocab::local("Cell");
    const Term header_row = vocab::local("HeaderRow");
    const Term in_row = vocab::local("inRow");
    const Term has_title = vocab::local("hasTitle");
    const Term value = vocab::rdf_value();
    const Term from_paper = vocab::local("fromPaper");
    const Term has_author = vocab::local("hasAuthor");

    std::set<Term> header_rows;
    for (const auto& t : store.match(std::nullopt, type, header_row)) header_rows.insert(t.subject);

    auto is_mention = [&](const Term& cell) {
        auto values = store.match(cell, value, std::nullopt);
        if (values.empty()) return false;
        const Term& v = values.front().object;
        if (!v.is_literal() || v.datatype() != Datatype::String || v.text().empty()) return false;
        for (const auto& r : store.match(cell, in_row, std::nullopt))
            if (header_rows.count(r.object)) return false;
        return true;
    };

    FactSet out;
    for (const auto& t : store.triples()) {
        if (t.predicate == type && t.object == cell_class && !is_mention(t.subject)) continue;
        if ((t.predicate == value || t.predicate == has_title) && t.object.is_literal() && t.object.text().empty())
            continue;
        out[vocab::local_name(t.predicate)].insert({t.subject, t.object});
    }

    std::set<Term> papers_with_authors;
    for (const auto& t : store.match(std::nullopt, has_author, std::nullopt)) papers_with_authors.insert(t.subject);
    for (const auto& m : metas) {
        Term p = store.canonical(iris::paper(m.paper_id));
        for (const auto& a : m.authors) out["hasAuthor"].insert({p, store.canonical(iris::author(a.author_id))});
        if (!m.authors.empty()) papers_with_authors.insert(p);
    }
    if (warnings) {
        std::set<Term> missing;
        for (const auto& t : store.match(std::nullopt, from_paper, std::nullopt))
            if (!papers_with_authors.count(t.object)) missing.insert(t.object);
        for (const auto& p : missing)
            warnings->push_back("no author metadata for " + to_string(p) + "; its tables get no eAuthLabel facts");
    }
    return out;
}

FactSet ground_aux_predicates(const RuleSet& rules, const FactStore& store, std::span<const PaperMeta> metas) {
    std::set<std::string> defined;
    RuleSet datalog_only = rules;
    for (const auto& r : rules.rules) {
        if (r.kind == Rule::Kind::Datalog) {
            if (rules.enabled(r))
                for (const auto& h : r.head) defined.insert(h.predicate);
        } else {
            datalog_only.disabled.insert(r.name);
        }
    }
    FactSet base = base_facts(store, metas);
    // Aux rules are non-recursive, so the budget only guards against
    // mistakes in user rule files.
    Chase chase(datalog_only, base, ChaseConfig{}, first_free_null(store));
    chase.saturate();
    FactSet all = chase.db().facts();
    FactSet out;
    for (const auto& p : defined)
        if (auto it = all.find(p); it != all.end()) out[p] = it->second;
    return out;
}

ChaseResult restricted_chase(const RuleSet& rules, const FactStore& store, std::span<const PaperMeta> metas,
                             const ChaseConfig& cfg) {
    if (std::string why = acyclicity_violation(rules); !why.empty())
        throw RuleError("refusing to chase a ruleset that is not weakly acyclic: " + why);

    ChaseResult result;
    FactSet base = base_facts(store, metas, &result.warnings);
    Chase chase(rules, base, cfg, first_free_null(store));
    chase.run();

    result.facts = chase.db().facts();
    result.stats = chase.stats();

    result.store = store;
    std::set<Term> col_ents, cell_ents;
    auto collect = [&](const std::string& pred, const Term& iri_pred, std::set<Term>& ents) {
        auto it = result.facts.find(pred);
        if (it == result.facts.end()) return;
        for (const auto& t : it->second) {
            if (t.size() != 2) continue;
            result.store.insert(Triple{t[0], iri_pred, t[1]});
            result.entity_of[t[0]] = t[1];
            ents.insert(t[1]);
        }
    };
    collect("colEntity", col_entity_pred(), col_ents);
    collect("cellEntity", cell_entity_pred(), cell_ents);
    for (const auto& [from, to] : chase.db().equalities().mapping())
        if (from.is_null() && to.is_null()) result.store.merge(from, to);

    result.stats.column_entities = col_ents.size();
    result.stats.cell_entities = cell_ents.size();
    std::set<Term> all = col_ents;
    all.insert(cell_ents.begin(), cell_ents.end());
    result.stats.entity_count = all.size();
    return result;
}

std::vector<Triple> materialize_entities(const ChaseResult& result) {
    const Term denotes = vocab::local("denotes");
    const Term col_denotes = vocab::local("colDenotes");
    const Term label = vocab::local("label");
    const Term entity_class = vocab::local("Entity");
    const Term type = vocab::rdf_type();
    const Term value = vocab::rdf_value();
    const Term has_title = vocab::local("hasTitle");

    std::set<Term> columns;
    for (const auto& t : result.store.match(std::nullopt, col_entity_pred(), std::nullopt)) columns.insert(t.subject);

    std::set<Term> entities;
    for (const auto& [item, e] : result.entity_of) entities.insert(e);
    std::map<Term, Term> name;
    std::size_t k = 0;
    for (const auto& e : entities) name[e] = e.is_null() ? vocab::local("E" + std::to_string(++k)) : e;

    std::vector<Triple> out;
    for (const auto& [item, e] : result.entity_of) {
        const Term& iri = name.at(e);
        bool is_column = columns.count(item) != 0;
        out.push_back({item, is_column ? col_denotes : denotes, iri});
        out.push_back({iri, type, entity_class});
        for (const auto& t : result.store.match(item, is_column ? has_title : value, std::nullopt))
            if (t.object.is_literal() && !t.object.text().empty())
                out.push_back({iri, label, Term::literal(t.object.text())});
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::map<Term, std::vector<Term>> entity_cells(const ChaseResult& result) {
    std::map<Term, std::vector<Term>> out;
    for (const auto& t : result.store.match(std::nullopt, cell_entity_pred(), std::nullopt))
        out[result.store.canonical(t.object)].push_back(t.subject);
    return out;
}

std::vector<std::set<std::string>> default_ablation_subsets(const RuleSet& rules) {
    std::vector<std::set<std::string>> out;
    auto egds = rules.egd_names();
    out.push_back({});
    for (const auto& e : egds) out.push_back({e});
    if (egds.size() > 1) out.push_back(std::set<std::string>(egds.begin(), egds.end()));
    return out;
}

std::vector<AblationRow> ablate(const RuleSet& rules, const FactStore& store, std::span<const PaperMeta> metas,
                                const std::vector<std::set<std::string>>& subsets, const ChaseConfig& cfg) {
    const auto all_egds = rules.egd_names();
    for (const auto& s : subsets)
        for (const auto& name : s)
            if (std::find(all_egds.begin(), all_egds.end(), name) == all_egds.end())
                throw RuleError("ablation subset names unknown EGD '" + name + "'");

    std::vector<std::future<AblationRow>> jobs;
    for (const auto& subset : subsets) {
        jobs.push_back(std::async(std::launch::async, [&rules, &store, metas, subset, &cfg, &all_egds] {
            FactStore copy = store;
            ChaseResult r = restricted_chase(rules.with_egds(subset), copy, metas, cfg);
            AblationRow row;
            if (subset.empty())
                row.name = "none";
            else if (subset.size() == 1)
                row.name = *subset.begin();
            else if (subset.size() == all_egds.size())
                row.name = "all";
            else
                for (const auto& n : subset) row.name += (row.name.empty() ? "" : "+") + n;
            row.egds.assign(subset.begin(), subset.end());
            row.nulls = r.stats.nulls_created;
            row.column_entities = r.stats.column_entities;
            row.cell_entities = r.stats.cell_entities;
            row.entities = r.stats.entity_count;
            row.merges_per_rule = r.stats.merges_per_rule;
            return row;
        }));
    }
    std::vector<AblationRow> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

LinkPrecisionReport link_precision(const std::map<Term, std::vector<Term>>& entity_cells,
                                   const std::map<Term, std::string>& gold) {
    std::vector<std::string> missing;
    for (const auto& [e, cells] : entity_cells)
        for (const auto& c : cells)
            if (!gold.count(c)) missing.push_back(to_string(c));
    if (!missing.empty()) {
        std::string msg = "cells without a gold concept:";
        for (const auto& m : missing) msg += " " + m;
        throw EvalError(msg);
    }

    LinkPrecisionReport out;
    double sum = 0.0;
    for (const auto& [e, cells] : entity_cells) {
        if (cells.empty()) continue;
        std::map<std::string, std::size_t> counts;
        std::size_t best = 0;
        for (const auto& c : cells) best = std::max(best, ++counts[gold.at(c)]);
        double p = static_cast<double>(best) / static_cast<double>(cells.size());
        out.per_entity[e] = p;
        sum += p;
    }
    if (!out.per_entity.empty()) out.mean = sum / static_cast<double>(out.per_entity.size());
    return out;
}

}  // namespace tablekb
