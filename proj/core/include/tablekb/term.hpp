#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace tablekb {

enum class TermKind : std::uint8_t { Iri = 0, Literal = 1, Null = 2, Variable = 3 };

// Literal datatypes. Integer is treated as a subtype of Decimal by the
// datatype-membership filter.
enum class Datatype : std::uint8_t { String = 0, Decimal = 1, Integer = 2 };

std::string_view datatype_name(Datatype dt);        // "string", "decimal", "integer"
std::string_view datatype_iri(Datatype dt);         // full xsd iri
bool datatype_from_iri(std::string_view iri, Datatype& out);

// A term of the knowledge base. Ground terms (iri, literal, null) are
// totally ordered: iri < literal < null. Iris compare by text, literals by
// (datatype, lexical form), nulls by id. Variables sort after every ground
// term and only occur in queries and rules.
class Term {
public:
    Term() = default;

    static Term iri(std::string text);
    static Term literal(std::string lexical, Datatype dt = Datatype::String);
    static Term null(std::uint64_t id);
    static Term variable(std::string name);

    TermKind kind() const { return kind_; }
    bool is_iri() const { return kind_ == TermKind::Iri; }
    bool is_literal() const { return kind_ == TermKind::Literal; }
    bool is_null() const { return kind_ == TermKind::Null; }
    bool is_variable() const { return kind_ == TermKind::Variable; }
    bool is_ground() const { return kind_ != TermKind::Variable; }

    // Iri text, literal lexical form or variable name. Empty for nulls.
    const std::string& text() const { return text_; }
    Datatype datatype() const { return datatype_; }
    std::uint64_t null_id() const { return null_id_; }

    friend bool operator==(const Term& a, const Term& b) = default;
    friend std::strong_ordering operator<=>(const Term& a, const Term& b);

    std::size_t hash() const;

private:
    TermKind kind_ = TermKind::Iri;
    Datatype datatype_ = Datatype::String;
    std::uint64_t null_id_ = 0;
    std::string text_;
};

// N-Triples style rendering: <iri>, "lex"^^<dt>, _:n<id>, ?var.
std::string to_string(const Term& t);

struct TermHash {
    std::size_t operator()(const Term& t) const { return t.hash(); }
};

// Namespaces and vocabulary used across the pipeline.
namespace vocab {
inline constexpr std::string_view kBase = "http://tablekb.org/ns#";
inline constexpr std::string_view kRdf = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
inline constexpr std::string_view kRdfs = "http://www.w3.org/2000/01/rdf-schema#";
inline constexpr std::string_view kXsd = "http://www.w3.org/2001/XMLSchema#";

Term local(std::string_view name);     // kBase + name
Term rdf_type();
Term rdf_value();
Term rdfs_subclass_of();

// Strips kBase / kRdf / kRdfs prefixes: ":hasRow" -> "hasRow", "rdf:type" -> "type".
// Other iris are returned unchanged.
std::string local_name(const Term& iri);
}  // namespace vocab

}  // namespace tablekb

template <>
struct std::hash<tablekb::Term> {
    std::size_t operator()(const tablekb::Term& t) const noexcept { return t.hash(); }
};
