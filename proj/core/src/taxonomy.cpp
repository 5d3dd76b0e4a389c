#include "tablekb/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "tablekb/errors.hpp"
#include "tablekb/unicode.hpp"

namespace tablekb {

namespace {
bool valid_name(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    });
}
}  // namespace

Taxonomy Taxonomy::parse(std::string_view text) {
    Taxonomy t;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = unicode::trim(line);
        if (line.empty()) continue;

        std::string child;
        std::optional<std::string> parent;
        if (auto lt = line.find('<'); lt != std::string::npos) {
            child = unicode::trim(line.substr(0, lt));
            parent = unicode::trim(line.substr(lt + 1));
        } else {
            child = line;
        }
        auto where = "line " + std::to_string(line_no) + ": ";
        if (!valid_name(child) || (parent && !valid_name(*parent)))
            throw TaxonomyError(where + "malformed declaration '" + line + "'");
        if (parent && *parent == child) throw TaxonomyError(where + "class " + child + " is its own parent (cycle)");
        auto [it, inserted] = t.parent_.emplace(child, parent);
        if (!inserted) {
            if (it->second == parent) continue;
            throw TaxonomyError(where + "class " + child + " declared with two different parents");
        }
    }

    // Parents must be declared; roots are classes without a parent.
    for (const auto& [name, parent] : t.parent_) {
        if (parent && !t.parent_.count(*parent))
            throw TaxonomyError("class " + name + " has undeclared parent " + *parent);
        if (!parent) t.roots_.push_back(name);
    }

    // Cycle and depth check: walk up from each class.
    for (const auto& [name, parent] : t.parent_) {
        std::set<std::string> seen{name};
        std::size_t depth = 1;
        for (auto cur = parent; cur; cur = t.parent_.at(*cur)) {
            if (!seen.insert(*cur).second) throw TaxonomyError("cycle through class " + name);
            ++depth;
        }
        if (depth > kMaxDepth)
            throw TaxonomyError("class " + name + " has depth " + std::to_string(depth) + " (max " +
                                std::to_string(kMaxDepth) + ")");
    }

    const std::vector<std::string> expected{"Example", "Input", "Observation", "Other"};
    if (t.roots_ != expected) {
        std::string got;
        for (const auto& r : t.roots_) got += (got.empty() ? "" : ", ") + r;
        throw TaxonomyError("roots must be exactly Example, Input, Observation, Other; got {" + got + "}");
    }
    return t;
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw TaxonomyError("cannot read taxonomy " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::vector<std::string> Taxonomy::classes() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : parent_) out.push_back(name);
    return out;
}

bool Taxonomy::is_root(std::string_view name) const {
    auto it = parent_.find(std::string(name));
    return it != parent_.end() && !it->second;
}

std::vector<std::string> Taxonomy::ancestors(std::string_view name) const {
    auto it = parent_.find(std::string(name));
    if (it == parent_.end()) throw TaxonomyError("unknown class " + std::string(name));
    std::vector<std::string> out;
    for (auto cur = it->second; cur; cur = parent_.at(*cur)) out.push_back(*cur);
    return out;
}

std::vector<std::string> Taxonomy::column_labels() const {
    std::vector<std::string> out;
    for (const auto& [name, parent] : parent_)
        if (parent || name == kOther) out.push_back(name);
    return out;
}

std::vector<Triple> taxonomy_triples(const Taxonomy& taxonomy) {
    std::vector<Triple> out;
    for (const auto& c : taxonomy.classes()) {
        auto up = taxonomy.ancestors(c);
        if (!up.empty()) out.push_back({vocab::local(c), vocab::rdfs_subclass_of(), vocab::local(up.front())});
    }
    return out;
}

}  // namespace tablekb
