#include "tablekb/rules.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "lexer.hpp"
#include "tablekb/errors.hpp"
#include "tablekb/ingest.hpp"

namespace tablekb {

using detail::Lexer;
using detail::Tok;

namespace {

const std::set<std::string> kBuiltins = {"STR_EQ"};

void collect_vars(const std::vector<RuleAtom>& atoms, std::set<std::string>& out) {
    for (const auto& a : atoms)
        for (const auto& t : a.args)
            if (t.kind() == TermKind::Variable) out.insert(t.text());
}

RuleAtom parse_atom(Lexer& lex, const detail::Prefixes& prefixes, bool in_head, std::set<std::string>& existentials) {
    RuleAtom atom;
    const auto& tok = lex.peek();
    if (tok.kind == Tok::Builtin) {
        if (in_head) lex.fail("builtin atoms are only allowed in rule bodies");
        if (!kBuiltins.count(tok.text)) lex.fail("unknown builtin @" + tok.text);
        atom.builtin = true;
        atom.predicate = lex.next().text;
    } else if (tok.kind == Tok::Word) {
        atom.predicate = lex.next().text;
    } else {
        lex.fail("expected a predicate name");
    }
    lex.expect_punct("(");
    while (!lex.at_punct(")")) {
        if (lex.peek().kind == Tok::Existential) {
            if (!in_head) lex.fail("existential variables may only occur in rule heads");
            std::string name = lex.next().text;
            existentials.insert(name);
            atom.args.push_back(Term::variable(name));
        } else {
            atom.args.push_back(detail::parse_term(lex, prefixes, false));
        }
        if (lex.at_punct(",")) {
            lex.next();
            if (lex.at_punct(")")) lex.fail("expected an argument");
        } else if (!lex.at_punct(")")) {
            lex.fail("expected ',' or ')'");
        }
    }
    lex.next();
    if (atom.args.empty()) lex.fail("atom " + atom.predicate + " has no arguments");
    if (atom.builtin && atom.args.size() != 2) lex.fail("@STR_EQ takes exactly two arguments");
    return atom;
}

Rule parse_rule_line(std::string_view line, std::size_t line_no, const detail::Prefixes& prefixes,
                     std::size_t ordinal) {
    try {
        Lexer lex(line);
        Rule rule;
        if (lex.peek().kind == Tok::PName && lex.peek().text.ends_with(":")) {
            rule.name = lex.next().text;
            rule.name.pop_back();
        } else {
            rule.name = "rule" + std::to_string(ordinal);
        }

        std::set<std::string> body_existentials;
        while (true) {
            rule.body.push_back(parse_atom(lex, prefixes, false, body_existentials));
            if (lex.at_punct(",")) {
                lex.next();
                continue;
            }
            break;
        }
        lex.expect_punct("->");

        std::set<std::string> body_vars;
        collect_vars(rule.body, body_vars);
        bool any_relational = std::any_of(rule.body.begin(), rule.body.end(), [](const RuleAtom& a) { return !a.builtin; });
        if (!any_relational) throw RuleError("rule " + rule.name + " needs at least one non-builtin body atom");
        for (const auto& a : rule.body)
            if (a.builtin)
                for (const auto& t : a.args)
                    if (t.kind() == TermKind::Variable) {
                        bool bound = false;
                        for (const auto& b : rule.body)
                            if (!b.builtin && std::find(b.args.begin(), b.args.end(), t) != b.args.end()) bound = true;
                        if (!bound) throw RuleError("rule " + rule.name + ": builtin variable ?" + t.text() + " is not bound by a body atom");
                    }

        if (lex.peek().kind == Tok::Var) {
            rule.kind = Rule::Kind::Egd;
            rule.equated_left = lex.next().text;
            lex.expect_punct("~");
            if (lex.peek().kind != Tok::Var) lex.fail("expected a variable after '~'");
            rule.equated_right = lex.next().text;
            for (const auto& v : {rule.equated_left, rule.equated_right})
                if (!body_vars.count(v)) throw RuleError("rule " + rule.name + ": equated variable ?" + v + " does not occur in the body");
        } else {
            std::set<std::string> existentials;
            while (true) {
                rule.head.push_back(parse_atom(lex, prefixes, true, existentials));
                if (lex.at_punct(",")) {
                    lex.next();
                    continue;
                }
                break;
            }
            rule.existentials.assign(existentials.begin(), existentials.end());
            rule.kind = existentials.empty() ? Rule::Kind::Datalog : Rule::Kind::Tgd;
            std::set<std::string> head_vars;
            collect_vars(rule.head, head_vars);
            for (const auto& v : head_vars)
                if (!body_vars.count(v) && !existentials.count(v))
                    throw RuleError("rule " + rule.name + ": head variable ?" + v + " does not occur in the body");
            for (const auto& v : existentials)
                if (body_vars.count(v)) throw RuleError("rule " + rule.name + ": !" + v + " clashes with a body variable");
        }
        if (lex.at_punct(".")) lex.next();
        if (lex.peek().kind != Tok::End) lex.fail("unexpected trailing input");
        return rule;
    } catch (const ParseError& e) {
        throw RuleError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const RuleError& e) {
        std::string msg = e.what();
        if (msg.starts_with("line ")) throw;
        throw RuleError("line " + std::to_string(line_no) + ": " + msg);
    }
}

std::string atom_string(const RuleAtom& a, const std::set<std::string>& existentials) {
    std::string out = (a.builtin ? "@" : "") + a.predicate + "(";
    for (std::size_t i = 0; i < a.args.size(); ++i) {
        if (i) out += ", ";
        const Term& t = a.args[i];
        if (t.kind() == TermKind::Variable)
            out += (existentials.count(t.text()) ? "!" : "?") + t.text();
        else if (t.kind() == TermKind::Iri && t.text().starts_with(vocab::kBase))
            out += ":" + vocab::local_name(t);
        else
            out += to_string(t);
    }
    return out + ")";
}

}  // namespace

std::set<std::string> Rule::frontier() const {
    std::set<std::string> body_vars, head_vars, out;
    collect_vars(body, body_vars);
    collect_vars(head, head_vars);
    std::set_intersection(body_vars.begin(), body_vars.end(), head_vars.begin(), head_vars.end(),
                          std::inserter(out, out.end()));
    return out;
}

std::string to_string(const Rule& r) {
    std::set<std::string> ex(r.existentials.begin(), r.existentials.end());
    std::string out = r.name + ": ";
    for (std::size_t i = 0; i < r.body.size(); ++i) out += (i ? ", " : "") + atom_string(r.body[i], ex);
    out += " -> ";
    if (r.kind == Rule::Kind::Egd) return out + "?" + r.equated_left + " ~ ?" + r.equated_right;
    for (std::size_t i = 0; i < r.head.size(); ++i) out += (i ? ", " : "") + atom_string(r.head[i], ex);
    return out;
}

const Rule* RuleSet::find(std::string_view name) const {
    for (const auto& r : rules)
        if (r.name == name) return &r;
    return nullptr;
}

std::vector<std::string> RuleSet::egd_names() const {
    std::vector<std::string> out;
    for (const auto& r : rules)
        if (r.kind == Rule::Kind::Egd) out.push_back(r.name);
    return out;
}

RuleSet RuleSet::with_egds(const std::set<std::string>& keep) const {
    RuleSet out = *this;
    for (const auto& r : rules) {
        if (r.kind != Rule::Kind::Egd) continue;
        if (keep.count(r.name))
            out.disabled.erase(r.name);
        else
            out.disabled.insert(r.name);
    }
    return out;
}

RuleSet parse_rules(std::string_view text) {
    detail::Prefixes prefixes;
    RuleSet out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        ++line_no;
        start = end + 1;

        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#') {
            if (end == text.size()) break;
            continue;
        }
        Rule r = parse_rule_line(line, line_no, prefixes, out.rules.size() + 1);
        if (out.find(r.name)) throw RuleError("line " + std::to_string(line_no) + ": duplicate rule name " + r.name);
        out.rules.push_back(std::move(r));
        if (end == text.size()) break;
    }
    return out;
}

RuleSet load_rules(const std::filesystem::path& path) {
    try {
        return parse_rules(read_file(path));
    } catch (const IngestError& e) {
        throw RuleError(e.what());
    } catch (const RuleError& e) {
        throw RuleError(path.string() + ": " + e.what());
    }
}

std::string acyclicity_violation(const RuleSet& rules) {
    using Position = std::pair<std::string, std::size_t>;
    struct Edge {
        Position to;
        bool special;
        std::string rule;
    };
    std::map<Position, std::vector<Edge>> graph;

    for (const auto& r : rules.rules) {
        if (r.kind == Rule::Kind::Egd) continue;
        std::set<std::string> ex(r.existentials.begin(), r.existentials.end());
        std::set<std::string> front = r.frontier();
        for (const auto& b : r.body) {
            if (b.builtin) continue;
            for (std::size_t i = 0; i < b.args.size(); ++i) {
                const Term& v = b.args[i];
                if (v.kind() != TermKind::Variable || !front.count(v.text())) continue;
                Position from{b.predicate, i};
                for (const auto& h : r.head)
                    for (std::size_t j = 0; j < h.args.size(); ++j) {
                        const Term& w = h.args[j];
                        if (w.kind() != TermKind::Variable) continue;
                        if (w == v)
                            graph[from].push_back({{h.predicate, j}, false, r.name});
                        else if (ex.count(w.text()))
                            graph[from].push_back({{h.predicate, j}, true, r.name});
                    }
            }
        }
    }

    auto reaches = [&](const Position& src, const Position& dst) {
        std::set<Position> seen{src};
        std::vector<Position> stack{src};
        while (!stack.empty()) {
            Position p = stack.back();
            stack.pop_back();
            if (p == dst) return true;
            auto it = graph.find(p);
            if (it == graph.end()) continue;
            for (const auto& e : it->second)
                if (seen.insert(e.to).second) stack.push_back(e.to);
        }
        return false;
    };

    for (const auto& [from, edges] : graph)
        for (const auto& e : edges)
            if (e.special && reaches(e.to, from)) {
                std::ostringstream os;
                os << "rule " << e.rule << " creates nulls at " << e.to.first << "[" << e.to.second + 1
                   << "] which flow back to " << from.first << "[" << from.second + 1 << "]";
                return os.str();
            }
    return {};
}

bool is_weakly_acyclic(const RuleSet& rules) { return acyclicity_violation(rules).empty(); }

}  // namespace tablekb
