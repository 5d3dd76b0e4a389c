#include "lexer.hpp"

#include <cctype>

namespace tablekb::detail {

namespace {
bool is_name_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || c == '-' || u >= 0x80;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}
}  // namespace

bool Lexer::at_word(std::string_view w) const { return cur_.kind == Tok::Word && lower(cur_.text) == lower(w); }

void Lexer::expect_punct(std::string_view p) {
    if (!at_punct(p)) fail("expected '" + std::string(p) + "'");
    advance();
}

void Lexer::expect_word(std::string_view w) {
    if (!at_word(w)) fail("expected '" + std::string(w) + "'");
    advance();
}

void Lexer::bump() {
    if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
    } else {
        ++col_;
    }
    ++pos_;
}

void Lexer::advance() {
    // Skip whitespace and '#' comments.
    for (;;) {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(ch()))) bump();
        if (ch() == '#') {
            while (pos_ < src_.size() && ch() != '\n') bump();
            continue;
        }
        break;
    }
    cur_ = Token{};
    cur_.line = line_;
    cur_.col = col_;
    if (pos_ >= src_.size()) {
        cur_.kind = Tok::End;
        return;
    }

    const char c = ch();
    auto take_name = [&]() {
        std::string s;
        while (pos_ < src_.size() && is_name_char(ch()) && !(ch() == '-' && ch(1) == '>')) {
            s += ch();
            bump();
        }
        return s;
    };

    if (c == '?' || c == '$' || c == '!' || c == '@') {
        bump();
        cur_.kind = c == '!' ? Tok::Existential : c == '@' ? Tok::Builtin : Tok::Var;
        cur_.text = take_name();
        if (cur_.text.empty()) fail_at(cur_, "empty name after '" + std::string(1, c) + "'");
        return;
    }
    if (c == '<' && ch(1) != '-') {
        bump();
        std::string s;
        while (pos_ < src_.size() && ch() != '>') {
            if (ch() == '\n' || ch() == ' ') fail_at(cur_, "unterminated iri");
            s += ch();
            bump();
        }
        if (pos_ >= src_.size()) fail_at(cur_, "unterminated iri");
        bump();
        cur_.kind = Tok::Iri;
        cur_.text = std::move(s);
        return;
    }
    if (c == '"' || c == '\'') {
        const char quote = c;
        bump();
        std::string s;
        for (;;) {
            if (pos_ >= src_.size() || ch() == '\n') fail_at(cur_, "unterminated string");
            char d = ch();
            if (d == quote) {
                bump();
                break;
            }
            if (d == '\\') {
                bump();
                char e = ch();
                switch (e) {
                case 'n': s += '\n'; break;
                case 't': s += '\t'; break;
                case 'r': s += '\r'; break;
                case '"': s += '"'; break;
                case '\'': s += '\''; break;
                case '\\': s += '\\'; break;
                default: fail_at(cur_, "bad escape in string");
                }
                bump();
                continue;
            }
            s += d;
            bump();
        }
        cur_.kind = Tok::String;
        cur_.text = std::move(s);
        return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        ((c == '-' || c == '+') && std::isdigit(static_cast<unsigned char>(ch(1))))) {
        std::string s(1, c);
        bump();
        while (std::isdigit(static_cast<unsigned char>(ch()))) {
            s += ch();
            bump();
        }
        cur_.kind = Tok::Integer;
        if (ch() == '.' && std::isdigit(static_cast<unsigned char>(ch(1)))) {
            s += '.';
            bump();
            while (std::isdigit(static_cast<unsigned char>(ch()))) {
                s += ch();
                bump();
            }
            cur_.kind = Tok::Decimal;
        }
        cur_.text = std::move(s);
        return;
    }
    if (c == '-' && ch(1) == '>') {
        bump();
        bump();
        cur_.kind = Tok::Punct;
        cur_.text = "->";
        return;
    }
    if (c == '^' && ch(1) == '^') {
        bump();
        bump();
        cur_.kind = Tok::Punct;
        cur_.text = "^^";
        return;
    }
    if (c == '_' && ch(1) == ':') {
        bump();
        bump();
        cur_.kind = Tok::Blank;
        cur_.text = take_name();
        return;
    }
    if (c == ':' || std::isalpha(static_cast<unsigned char>(c))) {
        std::string s = c == ':' ? std::string() : take_name();
        if (ch() == ':') {
            bump();
            std::string local = take_name();
            cur_.kind = Tok::PName;
            cur_.text = s + ":" + local;
        } else {
            cur_.kind = Tok::Word;
            cur_.text = std::move(s);
        }
        return;
    }
    static constexpr std::string_view kPunct = ".;,{}()=~";
    if (kPunct.find(c) != std::string_view::npos) {
        bump();
        cur_.kind = Tok::Punct;
        cur_.text = std::string(1, c);
        return;
    }
    cur_.text = std::string(1, c);
    fail_at(cur_, "unexpected character");
}

Prefixes::Prefixes() {
    map_[""] = std::string(vocab::kBase);
    map_["rdf"] = std::string(vocab::kRdf);
    map_["rdfs"] = "http://www.w3.org/2000/01/rdf-schema#";
    map_["xsd"] = std::string(vocab::kXsd);
}

std::string Prefixes::expand(const Token& pname) const {
    auto colon = pname.text.find(':');
    std::string prefix = pname.text.substr(0, colon);
    auto it = map_.find(prefix);
    if (it == map_.end()) Lexer::fail_at(pname, "unknown prefix '" + prefix + ":'");
    return it->second + pname.text.substr(colon + 1);
}

Term parse_term(Lexer& lex, const Prefixes& prefixes, bool allow_a) {
    const Token& t = lex.peek();
    switch (t.kind) {
    case Tok::Var: return Term::variable(lex.next().text);
    case Tok::Iri: return Term::iri(lex.next().text);
    case Tok::PName: {
        Token p = lex.next();
        return Term::iri(prefixes.expand(p));
    }
    case Tok::Blank: {
        Token b = lex.next();
        if (b.text.size() < 2 || b.text[0] != 'n') Lexer::fail_at(b, "nulls are written _:n<id>");
        try {
            std::size_t used = 0;
            auto id = std::stoull(b.text.substr(1), &used);
            if (used + 1 != b.text.size()) throw std::invalid_argument("trailing");
            return Term::null(id);
        } catch (const std::exception&) {
            Lexer::fail_at(b, "nulls are written _:n<id>");
        }
    }
    case Tok::Integer: return Term::literal(lex.next().text, Datatype::Integer);
    case Tok::Decimal: return Term::literal(lex.next().text, Datatype::Decimal);
    case Tok::String: {
        std::string value = lex.next().text;
        Datatype dt = Datatype::String;
        if (lex.at_punct("^^")) {
            lex.next();
            const Token& d = lex.peek();
            std::string iri;
            if (d.kind == Tok::Iri) {
                iri = lex.next().text;
            } else if (d.kind == Tok::PName) {
                Token p = lex.next();
                iri = prefixes.expand(p);
            } else {
                lex.fail("expected datatype iri");
            }
            if (!datatype_from_iri(iri, dt)) lex.fail("unsupported datatype <" + iri + ">");
        }
        return Term::literal(std::move(value), dt);
    }
    case Tok::Word:
        if (allow_a && t.text == "a") {
            lex.next();
            return vocab::rdf_type();
        }
        [[fallthrough]];
    default:
        lex.fail("expected a term");
    }
}

}  // namespace tablekb::detail
