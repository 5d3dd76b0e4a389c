#include "tablekb/ingest.hpp"

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <httplib.h>

#include "tablekb/errors.hpp"
#include "tablekb/unicode.hpp"

namespace tablekb {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

namespace iris {

namespace {
// Keeps [A-Za-z0-9_.-], percent-encodes everything else.
std::string encode_id(std::string_view id) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (char ch : id) {
        auto u = static_cast<unsigned char>(ch);
        if (std::isalnum(u) || ch == '_' || ch == '-' || ch == '.') {
            out += ch;
        } else {
            out += '%';
            out += kHex[u >> 4];
            out += kHex[u & 15];
        }
    }
    return out;
}
}  // namespace

Term table(const TableDoc& t) { return vocab::local("T" + std::to_string(t.number)); }

Term row(const TableDoc& t, std::size_t r) {
    return vocab::local("T" + std::to_string(t.number) + "-r" + std::to_string(r + 1));
}

Term column(const TableDoc& t, std::size_t c) {
    return vocab::local("T" + std::to_string(t.number) + "-c" + std::to_string(c + 1));
}

Term cell(const TableDoc& t, std::size_t r, std::size_t c) {
    return vocab::local("T" + std::to_string(t.number) + "-r" + std::to_string(r + 1) + "c" +
                        std::to_string(c + 1));
}

Term paper(std::string_view paper_id) { return vocab::local("P-" + encode_id(paper_id)); }

Term author(std::string_view author_id) { return vocab::local("A-" + encode_id(author_id)); }

}  // namespace iris

TableDoc parse_table_csv(std::string_view csv, std::string caption, std::string paper_id, std::size_t number) {
    if (csv.starts_with("\xEF\xBB\xBF")) csv.remove_prefix(3);
    if (!unicode::is_valid_utf8(csv)) throw IngestError("table " + std::to_string(number) + ": input is not valid UTF-8");

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_has_content = false;

    auto end_field = [&]() {
        row.push_back(unicode::trim(field));
        field.clear();
    };
    auto end_row = [&]() {
        end_field();
        if (row_has_content) rows.push_back(std::move(row));
        row.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < csv.size(); ++i) {
        const char ch = csv[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < csv.size() && csv[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += ch;
            }
            continue;
        }
        switch (ch) {
        case '"':
            in_quotes = true;
            row_has_content = true;
            break;
        case ',':
            end_field();
            row_has_content = true;
            break;
        case '\r':
            if (i + 1 < csv.size() && csv[i + 1] == '\n') ++i;
            end_row();
            break;
        case '\n':
            end_row();
            break;
        default:
            field += ch;
            row_has_content = true;
        }
    }
    if (in_quotes) throw IngestError("table " + std::to_string(number) + ": unterminated quoted field");
    end_row();

    if (rows.empty()) throw IngestError("table " + std::to_string(number) + ": no rows");

    TableDoc t;
    t.number = number;
    t.paper_id = std::move(paper_id);
    t.caption = unicode::trim(caption);
    t.n_rows = rows.size();
    for (const auto& r : rows) t.n_cols = std::max(t.n_cols, r.size());
    for (auto& r : rows) r.resize(t.n_cols);
    t.cells = std::move(rows);
    return t;
}

Datatype infer_literal_datatype(std::string_view text) {
    static const std::regex kInteger(R"([+-]?[0-9]+)");
    static const std::regex kDecimal(R"([+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?)");

    std::string s = unicode::trim(text);
    if (s.empty()) return Datatype::String;
    if (std::regex_match(s, kInteger)) return Datatype::Integer;

    static constexpr std::string_view kPlusMinus = "\xC2\xB1";  // U+00B1
    if (auto pm = s.find(kPlusMinus); pm != std::string::npos && pm > 0) {
        s = unicode::trim(s.substr(0, pm));
    } else if (s.back() == '%') {
        s = unicode::trim(s.substr(0, s.size() - 1));
    } else if (s.front() == '%') {
        s = unicode::trim(s.substr(1));
    }
    if (!s.empty() && std::regex_match(s, kDecimal)) return Datatype::Decimal;
    return Datatype::String;
}

Term cell_literal(std::string_view text) { return Term::literal(std::string(text), infer_literal_datatype(text)); }

std::vector<Triple> dump_rdf(const TableDoc& t) {
    const Term type = vocab::rdf_type();
    const Term table = iris::table(t);
    auto idx = [](std::size_t i) { return Term::literal(std::to_string(i + 1), Datatype::Integer); };

    std::vector<Triple> out;
    out.reserve(3 + 3 * t.n_rows + 4 * t.n_cols + 7 * t.n_rows * t.n_cols);
    out.push_back({table, type, vocab::local("Table")});
    out.push_back({table, vocab::local("caption"), Term::literal(t.caption)});
    out.push_back({table, vocab::local("fromPaper"), iris::paper(t.paper_id)});

    for (std::size_t r = 0; r < t.n_rows; ++r) {
        const Term row = iris::row(t, r);
        out.push_back({table, vocab::local("hasRow"), row});
        out.push_back({row, type, vocab::local("Row")});
        out.push_back({row, vocab::local("rowIndex"), idx(r)});
    }
    for (std::size_t c = 0; c < t.n_cols; ++c) {
        const Term col = iris::column(t, c);
        out.push_back({table, vocab::local("hasCol"), col});
        out.push_back({col, type, vocab::local("Column")});
        out.push_back({col, vocab::local("colIndex"), idx(c)});
        if (!t.header_rows.empty()) {
            std::string title;
            for (std::size_t r : t.header_rows) {
                const auto& text = t.cell(r, c);
                if (text.empty()) continue;
                if (!title.empty()) title += ' ';
                title += text;
            }
            out.push_back({col, vocab::local("hasTitle"), Term::literal(std::move(title))});
        }
    }
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        for (std::size_t c = 0; c < t.n_cols; ++c) {
            const Term cell = iris::cell(t, r, c);
            out.push_back({cell, vocab::local("cellOf"), table});
            out.push_back({cell, type, vocab::local("Cell")});
            out.push_back({cell, vocab::local("rowIdx"), idx(r)});
            out.push_back({cell, vocab::local("colIdx"), idx(c)});
            out.push_back({cell, vocab::rdf_value(), cell_literal(t.cell(r, c))});
            out.push_back({cell, vocab::local("inColumn"), iris::column(t, c)});
            out.push_back({cell, vocab::local("inRow"), iris::row(t, r)});
        }
    }
    return out;
}

std::vector<Triple> dump_paper(const PaperMeta& meta) {
    const Term type = vocab::rdf_type();
    const Term paper = iris::paper(meta.paper_id);
    std::vector<Triple> out;
    out.push_back({paper, type, vocab::local("Paper")});
    out.push_back({paper, vocab::local("paperId"), Term::literal(meta.paper_id)});
    out.push_back({paper, vocab::local("title"), Term::literal(meta.title)});
    out.push_back({paper, vocab::local("venue"), Term::literal(meta.venue)});
    for (const auto& a : meta.authors) {
        const Term author = iris::author(a.author_id);
        out.push_back({paper, vocab::local("hasAuthor"), author});
        out.push_back({author, type, vocab::local("Author")});
        out.push_back({author, vocab::local("authorId"), Term::literal(a.author_id)});
        out.push_back({author, vocab::local("name"), Term::literal(a.name)});
    }
    return out;
}

PaperMeta paper_meta_from_json(const std::string& paper_id, const nlohmann::json& j) {
    auto fail = [&](const std::string& why) -> PaperMeta { throw MetadataError(paper_id, why); };
    if (!j.is_object()) return fail("expected a JSON object");

    auto text_field = [&](const char* key) -> std::string {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) return {};
        if (!it->is_string()) throw MetadataError(paper_id, std::string("field '") + key + "' is not a string");
        return it->get<std::string>();
    };

    PaperMeta m;
    m.paper_id = paper_id;
    if (auto id = text_field("paperId"); !id.empty() && id != paper_id)
        return fail("response is for paper '" + id + "'");
    m.title = text_field("title");
    m.venue = text_field("venue");

    auto authors = j.find("authors");
    if (authors == j.end()) return fail("missing 'authors'");
    if (!authors->is_array()) return fail("'authors' is not an array");
    std::set<std::string> seen;
    for (const auto& a : *authors) {
        if (!a.is_object()) return fail("author entry is not an object");
        auto id = a.find("authorId");
        auto name = a.find("name");
        if (name == a.end() || !name->is_string()) return fail("author without a string 'name'");
        // Authors without an id cannot be disambiguated; skip them.
        if (id == a.end() || id->is_null()) continue;
        if (!id->is_string()) return fail("'authorId' is not a string");
        std::string aid = id->get<std::string>();
        if (!seen.insert(aid).second) return fail("duplicate authorId '" + aid + "'");
        m.authors.push_back({std::move(aid), name->get<std::string>()});
    }
    return m;
}

namespace {

PaperMeta fetch_remote(const std::string& paper_id, const MetadataSource& source) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::string url = source.endpoint_template;
    for (auto pos = url.find("{paper_id}"); pos != std::string::npos; pos = url.find("{paper_id}"))
        url.replace(pos, 10, paper_id);
    std::smatch m;
    if (!std::regex_match(url, m, kUrl)) throw MetadataError(paper_id, "bad endpoint url '" + url + "'");
    std::string path = m[2].matched ? m[2].str() : "/";

    httplib::Client client(m[1].str());
    client.set_connection_timeout(source.timeout);
    client.set_read_timeout(source.timeout);
    auto res = client.Get(path);
    if (!res) throw MetadataError(paper_id, "request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw MetadataError(paper_id, "HTTP status " + std::to_string(res->status));
    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw MetadataError(paper_id, "response is not JSON");
    return paper_meta_from_json(paper_id, j);
}

}  // namespace

PaperMeta fetch_paper_metadata(const std::string& paper_id, const MetadataSource& source) {
    if (source.kind == MetadataSource::Kind::Remote) return fetch_remote(paper_id, source);

    const auto path = source.fixture_dir / (paper_id + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MetadataError(paper_id, "no fixture at " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw MetadataError(paper_id, "fixture is not JSON");
    return paper_meta_from_json(paper_id, j);
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
    nlohmann::json j = nlohmann::json::parse(read_file(manifest), nullptr, false);
    if (j.is_discarded()) throw IngestError(manifest.string() + ": not valid JSON");
    auto tables = j.find("tables");
    if (tables == j.end() || !tables->is_array()) throw IngestError(manifest.string() + ": missing 'tables' array");
    if (tables->empty()) throw IngestError(manifest.string() + ": manifest lists no tables");

    std::vector<ManifestEntry> out;
    for (std::size_t i = 0; i < tables->size(); ++i) {
        const auto& e = (*tables)[i];
        if (!e.is_object() || !e.contains("file") || !e["file"].is_string() || !e.contains("paper_id") ||
            !e["paper_id"].is_string())
            throw IngestError(manifest.string() + ": entry " + std::to_string(i) + " needs 'file' and 'paper_id'");
        ManifestEntry m;
        m.file = e["file"].get<std::string>();
        if (m.file.is_relative()) m.file = manifest.parent_path() / m.file;
        m.caption = e.value("caption", "");
        m.paper_id = e["paper_id"].get<std::string>();
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<TableDoc> load_tables(const std::vector<ManifestEntry>& entries) {
    std::vector<TableDoc> out;
    out.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        out.push_back(parse_table_csv(read_file(e.file), e.caption, e.paper_id, i + 1));
    }
    return out;
}

nlohmann::json to_json(const TableDoc& t) {
    return nlohmann::json{
        {"number", t.number},   {"paper_id", t.paper_id}, {"caption", t.caption},
        {"n_rows", t.n_rows},   {"n_cols", t.n_cols},     {"cells", t.cells},
        {"header_rows", t.header_rows},
    };
}

TableDoc table_from_json(const nlohmann::json& j) {
    try {
        TableDoc t;
        t.number = j.at("number").get<std::size_t>();
        t.paper_id = j.at("paper_id").get<std::string>();
        t.caption = j.at("caption").get<std::string>();
        t.n_rows = j.at("n_rows").get<std::size_t>();
        t.n_cols = j.at("n_cols").get<std::size_t>();
        t.cells = j.at("cells").get<std::vector<std::vector<std::string>>>();
        t.header_rows = j.at("header_rows").get<std::set<std::size_t>>();
        if (t.n_rows == 0 || t.n_cols == 0 || t.cells.size() != t.n_rows)
            throw IngestError("table " + std::to_string(t.number) + ": inconsistent dimensions");
        for (const auto& r : t.cells)
            if (r.size() != t.n_cols) throw IngestError("table " + std::to_string(t.number) + ": ragged grid");
        for (auto r : t.header_rows)
            if (r >= t.n_rows) throw IngestError("table " + std::to_string(t.number) + ": header row out of range");
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(std::string("malformed table document: ") + e.what());
    }
}

nlohmann::json to_json(const PaperMeta& m) {
    nlohmann::json authors = nlohmann::json::array();
    for (const auto& a : m.authors) authors.push_back({{"authorId", a.author_id}, {"name", a.name}});
    return nlohmann::json{{"paperId", m.paper_id}, {"title", m.title}, {"venue", m.venue}, {"authors", authors}};
}

}  // namespace tablekb
