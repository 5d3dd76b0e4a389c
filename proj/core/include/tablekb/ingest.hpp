#pragma once

#include <chrono>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tablekb/fact_store.hpp"

namespace tablekb {

// A parsed table. Row and column indices are 0-based here; minted iris and
// index literals are 1-based.
struct TableDoc {
    std::size_t number = 1;  // position in the input manifest, 1-based
    std::string paper_id;
    std::string caption;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<std::vector<std::string>> cells;  // row-major, rectangular
    std::set<std::size_t> header_rows;

    const std::string& cell(std::size_t r, std::size_t c) const { return cells[r][c]; }
    bool is_header(std::size_t r) const { return header_rows.count(r) != 0; }
};

struct Author {
    std::string author_id;
    std::string name;
};

struct PaperMeta {
    std::string paper_id;
    std::string title;
    std::string venue;
    std::vector<Author> authors;
};

// Iris minted for tables, rows, columns, cells, papers and authors.
namespace iris {
Term table(const TableDoc& t);
Term row(const TableDoc& t, std::size_t r);
Term column(const TableDoc& t, std::size_t c);
Term cell(const TableDoc& t, std::size_t r, std::size_t c);
Term paper(std::string_view paper_id);
Term author(std::string_view author_id);
}  // namespace iris

// RFC 4180 CSV (quotes, doubled quotes, CRLF). Cells are trimmed; short
// rows are padded with "". Throws IngestError on empty input or invalid
// UTF-8.
TableDoc parse_table_csv(std::string_view csv, std::string caption, std::string paper_id,
                         std::size_t number = 1);

// integer: optional sign and digits. decimal: a decimal number once one
// leading or trailing '%' or a trailing "±..." is removed. string otherwise.
Datatype infer_literal_datatype(std::string_view text);

Term cell_literal(std::string_view text);

// The naive conversion of one table into triples.
std::vector<Triple> dump_rdf(const TableDoc& t);

// (paper, :title/:venue/:hasAuthor), (author, :authorId/:name) triples.
std::vector<Triple> dump_paper(const PaperMeta& meta);

struct MetadataSource {
    enum class Kind { Fixture, Remote };
    Kind kind = Kind::Fixture;
    std::filesystem::path fixture_dir;
    // e.g. "https://api.semanticscholar.org/graph/v1/paper/{paper_id}?fields=title,venue,authors"
    std::string endpoint_template;
    std::chrono::seconds timeout{10};
};

// Fixture mode reads <dir>/<paper_id>.json, remote mode issues a GET to the
// endpoint template with {paper_id} substituted. Throws MetadataError.
PaperMeta fetch_paper_metadata(const std::string& paper_id, const MetadataSource& source);

// Maps a JSON document {paperId,title,venue,authors:[{authorId,name}]}.
PaperMeta paper_meta_from_json(const std::string& paper_id, const nlohmann::json& j);

struct ManifestEntry {
    std::filesystem::path file;
    std::string caption;
    std::string paper_id;
};

// {"tables": [{"file": "t1.csv", "caption": "...", "paper_id": "..."}]}.
// Relative files resolve against the manifest directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

std::vector<TableDoc> load_tables(const std::vector<ManifestEntry>& entries);

nlohmann::json to_json(const TableDoc& t);
TableDoc table_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PaperMeta& m);

std::string read_file(const std::filesystem::path& path);

}  // namespace tablekb
