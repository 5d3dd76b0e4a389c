#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tablekb/fact_store.hpp"

namespace tablekb {

// Class forest used for table types (the roots) and column types (every
// non-root class, plus Other).
//
// File format, one declaration per line, '#' starts a comment:
//
//   Observation            # a root
//   Metric < Observation   # subclass edge
//   Recall < Metric
class Taxonomy {
public:
    static constexpr std::size_t kMaxDepth = 3;
    static constexpr std::string_view kOther = "Other";

    // Validates and builds the taxonomy. Throws TaxonomyError naming the
    // offending classes.
    static Taxonomy parse(std::string_view text);
    static Taxonomy load(const std::filesystem::path& path);

    bool contains(std::string_view name) const { return parent_.count(std::string(name)) != 0; }
    std::size_t size() const { return parent_.size(); }

    // Sorted class names.
    std::vector<std::string> classes() const;
    const std::vector<std::string>& roots() const { return roots_; }

    // Parent chain up to the root, nearest first. Empty for a root.
    std::vector<std::string> ancestors(std::string_view name) const;

    // Labels for table typing: the four roots, sorted.
    std::vector<std::string> table_labels() const { return roots_; }
    // Labels for column typing: non-root classes plus Other, sorted.
    std::vector<std::string> column_labels() const;

    bool is_root(std::string_view name) const;

private:
    std::map<std::string, std::optional<std::string>> parent_;
    std::vector<std::string> roots_;
};

// (:Child rdfs:subClassOf :Parent) for every edge, in class order.
std::vector<Triple> taxonomy_triples(const Taxonomy& taxonomy);

}  // namespace tablekb
