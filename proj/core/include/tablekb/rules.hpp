#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tablekb/term.hpp"

namespace tablekb {

// p(t1, ..., tn). Builtins (currently only STR_EQ) may appear in bodies.
struct RuleAtom {
    std::string predicate;
    std::vector<Term> args;
    bool builtin = false;
};

// One rule of the linking program.
//
//  * Datalog: body -> head atoms, every head variable occurs in the body.
//  * Tgd:     body -> head atoms with existential variables (!Z).
//  * Egd:     body -> ?X ~ ?Y.
struct Rule {
    enum class Kind { Datalog, Tgd, Egd };

    std::string name;
    Kind kind = Kind::Datalog;
    std::vector<RuleAtom> body;
    std::vector<RuleAtom> head;
    std::vector<std::string> existentials;
    std::string equated_left;
    std::string equated_right;

    // Body variables that also occur in the head (TGDs and Datalog).
    std::set<std::string> frontier() const;
};

std::string to_string(const Rule& r);

// Rules in file order plus the names of disabled rules. Disabled rules are
// kept so that the acyclicity check always sees the full program.
struct RuleSet {
    std::vector<Rule> rules;
    std::set<std::string> disabled;

    bool enabled(const Rule& r) const { return !disabled.count(r.name); }
    const Rule* find(std::string_view name) const;
    std::vector<std::string> egd_names() const;

    // Disables every EGD not in keep.
    RuleSet with_egds(const std::set<std::string>& keep) const;
};

// One rule per line:
//
//   [name:] body-atom, ..., body-atom -> head
//
// head is either atoms (existentials written !Z) or "?X ~ ?Y". Variables are
// ?X, constants use the query term syntax (":Column", "text"), builtins are
// written @STR_EQ(?L, ?M). '#' starts a comment. Throws RuleError with the
// line number.
RuleSet parse_rules(std::string_view text);
RuleSet load_rules(const std::filesystem::path& path);

// Weak acyclicity of the Datalog and TGD rules: no cycle in the position
// dependency graph passes through an edge that creates a null. Returns an
// empty string when acyclic, otherwise a description of the offending cycle.
std::string acyclicity_violation(const RuleSet& rules);
bool is_weakly_acyclic(const RuleSet& rules);

}  // namespace tablekb
