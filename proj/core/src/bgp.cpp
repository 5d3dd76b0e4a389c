#include "tablekb/bgp.hpp"

#include <algorithm>
#include <set>

#include "lexer.hpp"
#include "tablekb/errors.hpp"
#include "tablekb/unicode.hpp"

namespace tablekb {

bool filter_holds(const Filter& f, const Term& value) {
    if (!value.is_literal()) return false;
    switch (f.kind) {
    case Filter::Kind::StringEquals:
        return value.text() == f.text;
    case Filter::Kind::StringEqualsIgnoreCase:
        return unicode::casefold(value.text()) == unicode::casefold(f.text);
    case Filter::Kind::DatatypeIn:
        if (f.datatype == Datatype::Decimal)
            return value.datatype() == Datatype::Decimal || value.datatype() == Datatype::Integer;
        return value.datatype() == f.datatype;
    }
    return false;
}

void validate(const BgpQuery& q) {
    if (q.patterns.empty()) throw QueryError("query has no triple pattern");
    std::set<std::string> vars;
    for (const auto& p : q.patterns)
        for (const Term* t : {&p.subject, &p.predicate, &p.object})
            if (t->is_variable()) vars.insert(t->text());
    for (const auto& v : q.projection)
        if (!vars.count(v)) throw QueryError("projected variable ?" + v + " does not occur in any pattern");
    for (const auto& f : q.filters)
        if (!vars.count(f.variable)) throw QueryError("filter variable ?" + f.variable + " is unbound");
    if (q.projection.empty()) throw QueryError("empty projection");
}

namespace {

using Env = std::map<std::string, Term>;

class Evaluator {
public:
    Evaluator(const FactStore& store, const BgpQuery& q) : store_(store), q_(q) {
        remaining_.resize(q.patterns.size());
        for (std::size_t i = 0; i < remaining_.size(); ++i) remaining_[i] = i;
    }

    std::set<Binding> run() {
        Env env;
        solve(env);
        return std::move(out_);
    }

private:
    std::optional<Term> resolve(const Term& t, const Env& env) const {
        if (!t.is_variable()) return t;
        auto it = env.find(t.text());
        if (it == env.end()) return std::nullopt;
        return it->second;
    }

    bool filters_ok(const Env& env, const std::string& just_bound) const {
        for (const auto& f : q_.filters) {
            if (f.variable != just_bound) continue;
            if (!filter_holds(f, env.at(f.variable))) return false;
        }
        return true;
    }

    bool bind(Env& env, const Term& pattern, const Term& value, std::vector<std::string>& added) const {
        if (!pattern.is_variable()) return true;
        auto it = env.find(pattern.text());
        if (it != env.end()) return it->second == value;
        env.emplace(pattern.text(), value);
        added.push_back(pattern.text());
        return filters_ok(env, pattern.text());
    }

    void solve(Env& env) {
        if (remaining_.empty()) {
            Binding row;
            row.reserve(q_.projection.size());
            for (const auto& v : q_.projection) row.push_back(env.at(v));
            out_.insert(std::move(row));
            return;
        }
        // Most selective pattern first.
        std::size_t best_slot = 0;
        std::size_t best_est = SIZE_MAX;
        for (std::size_t k = 0; k < remaining_.size(); ++k) {
            const auto& p = q_.patterns[remaining_[k]];
            std::size_t est = store_.estimate(resolve(p.subject, env), resolve(p.predicate, env),
                                              resolve(p.object, env));
            if (est < best_est) {
                best_est = est;
                best_slot = k;
            }
        }
        const std::size_t chosen = remaining_[best_slot];
        remaining_.erase(remaining_.begin() + static_cast<std::ptrdiff_t>(best_slot));
        const auto& p = q_.patterns[chosen];

        for (const auto& t : store_.match(resolve(p.subject, env), resolve(p.predicate, env),
                                          resolve(p.object, env))) {
            std::vector<std::string> added;
            if (bind(env, p.subject, t.subject, added) && bind(env, p.predicate, t.predicate, added) &&
                bind(env, p.object, t.object, added))
                solve(env);
            for (const auto& v : added) env.erase(v);
        }
        remaining_.insert(remaining_.begin() + static_cast<std::ptrdiff_t>(best_slot), chosen);
    }

    const FactStore& store_;
    const BgpQuery& q_;
    std::vector<std::size_t> remaining_;
    std::set<Binding> out_;
};

}  // namespace

std::vector<Binding> match_bgp(const FactStore& store, const BgpQuery& q) {
    validate(q);
    auto rows = Evaluator(store, q).run();
    return {rows.begin(), rows.end()};
}

namespace {

using detail::Lexer;
using detail::Prefixes;
using detail::Tok;

Filter parse_filter(Lexer& lex, const Prefixes& prefixes) {
    lex.expect_punct("(");
    Filter f;
    if (lex.at_word("datatype")) {
        lex.next();
        lex.expect_punct("(");
        if (lex.peek().kind != Tok::Var) lex.fail("expected variable");
        f.variable = lex.next().text;
        lex.expect_punct(")");
        lex.expect_punct("=");
        Term dt = detail::parse_term(lex, prefixes, false);
        if (!dt.is_iri() || !datatype_from_iri(dt.text(), f.datatype))
            lex.fail("datatype filter needs xsd:string, xsd:decimal or xsd:integer");
        f.kind = Filter::Kind::DatatypeIn;
    } else if (lex.at_word("strieq")) {
        lex.next();
        lex.expect_punct("(");
        if (lex.peek().kind != Tok::Var) lex.fail("expected variable");
        f.variable = lex.next().text;
        lex.expect_punct(",");
        if (lex.peek().kind != Tok::String) lex.fail("expected string literal");
        f.text = lex.next().text;
        lex.expect_punct(")");
        f.kind = Filter::Kind::StringEqualsIgnoreCase;
    } else if (lex.peek().kind == Tok::Var) {
        f.variable = lex.next().text;
        lex.expect_punct("=");
        if (lex.peek().kind != Tok::String) lex.fail("expected string literal");
        f.text = lex.next().text;
        f.kind = Filter::Kind::StringEquals;
    } else {
        lex.fail("unsupported filter expression");
    }
    lex.expect_punct(")");
    return f;
}

}  // namespace

BgpQuery parse_query(std::string_view text) {
    Lexer lex(text);
    Prefixes prefixes;
    BgpQuery q;

    while (lex.at_word("prefix")) {
        lex.next();
        const auto& t = lex.peek();
        if (t.kind != Tok::PName || t.text.back() != ':') lex.fail("expected 'name:' after prefix");
        std::string name = lex.next().text;
        name.pop_back();
        if (lex.peek().kind != Tok::Iri) lex.fail("expected <iri>");
        prefixes.declare(std::move(name), lex.next().text);
    }

    lex.expect_word("select");
    if (lex.at_word("distinct")) lex.next();
    while (lex.peek().kind == Tok::Var) q.projection.push_back(lex.next().text);
    if (q.projection.empty()) lex.fail("expected at least one projected variable");
    if (lex.at_word("where")) lex.next();
    lex.expect_punct("{");

    while (!lex.at_punct("}")) {
        if (lex.peek().kind == Tok::End) lex.fail("expected '}'");
        if (lex.at_word("filter")) {
            lex.next();
            q.filters.push_back(parse_filter(lex, prefixes));
            if (lex.at_punct(".")) lex.next();
            continue;
        }
        Term subject = detail::parse_term(lex, prefixes, false);
        if (subject.is_literal()) lex.fail("subject cannot be a literal");
        for (;;) {
            Term predicate = detail::parse_term(lex, prefixes, true);
            if (!predicate.is_iri() && !predicate.is_variable()) lex.fail("predicate must be an iri or variable");
            for (;;) {
                Term object = detail::parse_term(lex, prefixes, false);
                q.patterns.push_back(TriplePattern{subject, predicate, std::move(object)});
                if (!lex.at_punct(",")) break;
                lex.next();
            }
            if (!lex.at_punct(";")) break;
            lex.next();
            if (lex.at_punct(".") || lex.at_punct("}")) break;
        }
        if (lex.at_punct(".")) {
            lex.next();
        } else if (!lex.at_punct("}")) {
            lex.fail("expected '.' or '}'");
        }
    }
    lex.next();
    if (lex.peek().kind != Tok::End) lex.fail("trailing input after query");

    try {
        validate(q);
    } catch (const QueryError& e) {
        throw ParseError(e.what());
    }
    return q;
}

}  // namespace tablekb
