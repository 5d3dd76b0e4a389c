#pragma once

// Tokenizer shared by the query and rule parsers.

#include <map>
#include <string>
#include <string_view>

#include "tablekb/errors.hpp"
#include "tablekb/term.hpp"

namespace tablekb::detail {

enum class Tok {
    End,
    Var,          // ?x
    Existential,  // !z
    Builtin,      // @NAME
    Iri,          // <...>
    PName,        // pfx:local or :local
    Blank,        // _:n3
    String,       // "..." (text holds the unescaped value)
    Integer,
    Decimal,
    Word,         // bare identifier: select, where, a, filter, ...
    Punct,        // . ; , { } ( ) = ~ -> ^^
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::size_t line = 1;
    std::size_t col = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return cur_; }
    Token next() {
        Token t = cur_;
        advance();
        return t;
    }

    bool at_punct(std::string_view p) const { return cur_.kind == Tok::Punct && cur_.text == p; }
    bool at_word(std::string_view w) const;  // case-insensitive

    void expect_punct(std::string_view p);
    void expect_word(std::string_view w);

    [[noreturn]] void fail(const std::string& what) const { fail_at(cur_, what); }
    [[noreturn]] static void fail_at(const Token& t, const std::string& what) {
        throw ParseError(std::to_string(t.line) + ":" + std::to_string(t.col) + ": " + what +
                         (t.kind == Tok::End ? " (at end of input)" : " (near '" + t.text + "')"));
    }

private:
    void advance();
    char ch(std::size_t off = 0) const { return pos_ + off < src_.size() ? src_[pos_ + off] : '\0'; }
    void bump();

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
    Token cur_;
};

// Prefix table with the built-in ':', rdf:, rdfs:, xsd: entries.
class Prefixes {
public:
    Prefixes();
    void declare(std::string prefix, std::string iri) { map_[std::move(prefix)] = std::move(iri); }
    // Expands "pfx:local"; throws ParseError via the lexer on unknown prefix.
    std::string expand(const Token& pname) const;

private:
    std::map<std::string, std::string> map_;
};

// Parses a ground term or variable at the lexer position. Accepts
// variables, iris, prefixed names, blank nulls, string and numeric
// literals, and the keyword 'a' (rdf:type) when allow_a is set.
Term parse_term(Lexer& lex, const Prefixes& prefixes, bool allow_a);

}  // namespace tablekb::detail
