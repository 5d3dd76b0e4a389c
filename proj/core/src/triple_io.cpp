#include "tablekb/triple_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

#include "lexer.hpp"
#include "tablekb/errors.hpp"

namespace tablekb {

std::string serialize(const FactStore& store) {
    std::vector<std::string> lines;
    lines.reserve(store.size());
    for (const auto& t : store.triples()) lines.push_back(to_string(t));
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

FactStore parse_triples(std::string_view text) {
    FactStore store;
    detail::Prefixes prefixes;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        ++line_no;
        start = end + 1;

        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#') {
            if (end == text.size()) break;
            continue;
        }
        try {
            detail::Lexer lex(line);
            Triple t;
            t.subject = detail::parse_term(lex, prefixes, false);
            t.predicate = detail::parse_term(lex, prefixes, false);
            t.object = detail::parse_term(lex, prefixes, false);
            lex.expect_punct(".");
            if (lex.peek().kind != detail::Tok::End) lex.fail("trailing input");
            validate_triple(t, line_no);
            store.insert(t);
        } catch (const Error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (end == text.size()) break;
    }
    return store;
}

void write_triples(const std::filesystem::path& path, const FactStore& store) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << serialize(store);
    if (!out) throw Error("write failed: " + path.string());
}

FactStore read_triples(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_triples(buf.str());
}

}  // namespace tablekb
