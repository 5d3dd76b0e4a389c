#include "tablekb/term.hpp"

#include <array>

namespace tablekb {

namespace {
constexpr std::array<std::string_view, 3> kDatatypeNames{"string", "decimal", "integer"};
constexpr std::array<std::string_view, 3> kDatatypeIris{
    "http://www.w3.org/2001/XMLSchema#string",
    "http://www.w3.org/2001/XMLSchema#decimal",
    "http://www.w3.org/2001/XMLSchema#integer",
};
}  // namespace

std::string_view datatype_name(Datatype dt) { return kDatatypeNames[static_cast<std::size_t>(dt)]; }

std::string_view datatype_iri(Datatype dt) { return kDatatypeIris[static_cast<std::size_t>(dt)]; }

bool datatype_from_iri(std::string_view iri, Datatype& out) {
    for (std::size_t i = 0; i < kDatatypeIris.size(); ++i) {
        if (kDatatypeIris[i] == iri) {
            out = static_cast<Datatype>(i);
            return true;
        }
    }
    return false;
}

Term Term::iri(std::string text) {
    Term t;
    t.kind_ = TermKind::Iri;
    t.text_ = std::move(text);
    return t;
}

Term Term::literal(std::string lexical, Datatype dt) {
    Term t;
    t.kind_ = TermKind::Literal;
    t.datatype_ = dt;
    t.text_ = std::move(lexical);
    return t;
}

Term Term::null(std::uint64_t id) {
    Term t;
    t.kind_ = TermKind::Null;
    t.null_id_ = id;
    return t;
}

Term Term::variable(std::string name) {
    Term t;
    t.kind_ = TermKind::Variable;
    t.text_ = std::move(name);
    return t;
}

std::strong_ordering operator<=>(const Term& a, const Term& b) {
    if (auto c = a.kind_ <=> b.kind_; c != 0) return c;
    switch (a.kind_) {
    case TermKind::Null:
        return a.null_id_ <=> b.null_id_;
    case TermKind::Literal:
        if (auto c = a.datatype_ <=> b.datatype_; c != 0) return c;
        [[fallthrough]];
    default:
        return a.text_.compare(b.text_) <=> 0;
    }
}

std::size_t Term::hash() const {
    std::size_t h = std::hash<std::string>{}(text_);
    h ^= (static_cast<std::size_t>(kind_) << 1) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= (static_cast<std::size_t>(datatype_) << 3) + (h << 6) + (h >> 2);
    h ^= std::hash<std::uint64_t>{}(null_id_) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

namespace {
void escape_into(std::string& out, std::string_view s) {
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\t': out += "\\t"; break;
        default: out += c;
        }
    }
}
}  // namespace

std::string to_string(const Term& t) {
    std::string out;
    switch (t.kind()) {
    case TermKind::Iri:
        out.reserve(t.text().size() + 2);
        out += '<';
        out += t.text();
        out += '>';
        break;
    case TermKind::Literal:
        out += '"';
        escape_into(out, t.text());
        out += "\"^^<";
        out += datatype_iri(t.datatype());
        out += '>';
        break;
    case TermKind::Null:
        out = "_:n" + std::to_string(t.null_id());
        break;
    case TermKind::Variable:
        out = "?" + t.text();
        break;
    }
    return out;
}

namespace vocab {

Term local(std::string_view name) {
    std::string s(kBase);
    s += name;
    return Term::iri(std::move(s));
}

Term rdf_type() { return Term::iri(std::string(kRdf) + "type"); }
Term rdf_value() { return Term::iri(std::string(kRdf) + "value"); }
Term rdfs_subclass_of() { return Term::iri(std::string(kRdfs) + "subClassOf"); }

std::string local_name(const Term& iri) {
    const std::string& s = iri.text();
    if (s.starts_with(kBase)) return s.substr(kBase.size());
    if (s.starts_with(kRdf)) return s.substr(kRdf.size());
    if (s.starts_with(kRdfs)) return s.substr(kRdfs.size());
    return s;
}

}  // namespace vocab

}  // namespace tablekb
