#pragma once

#include <array>
#include <set>
#include <string_view>
#include <vector>

#include "tablekb/ingest.hpp"

namespace tablekb {

enum class CharClass : std::size_t { Numeric = 0, Uppercase, Lowercase, Space, NonAlphanumeric, Other };
inline constexpr std::size_t kCharClassCount = 6;

// Per-class character counts of a cell. Counts sum to the number of code
// points in the text.
struct CharClassHistogram {
    std::array<std::size_t, kCharClassCount> counts{};

    std::size_t operator[](CharClass c) const { return counts[static_cast<std::size_t>(c)]; }
    std::size_t total() const;
    friend bool operator==(const CharClassHistogram&, const CharClassHistogram&) = default;
};

CharClassHistogram char_class_histogram(std::string_view text);

struct HeaderConfig {
    double tau = 1.0;
    bool fallback_first_row = true;
};

void validate(const HeaderConfig& cfg);

// Mean over columns and classes of |count - mu| / sigma for the cells of row
// r, where mu and sigma (population) are taken over the column. A class
// with sigma == 0 contributes 0.
double row_outlier_score(const TableDoc& t, std::size_t r);

// Scores for every row at once (shares the column statistics).
std::vector<double> row_outlier_scores(const TableDoc& t);

// Longest prefix of rows scoring above tau; {0} as a fallback when that is
// empty, the fallback is enabled, and the table has at least two rows.
std::set<std::size_t> detect_headers(const TableDoc& t, const HeaderConfig& cfg);

// Runs detect_headers and stores the result in t.header_rows.
void annotate_headers(TableDoc& t, const HeaderConfig& cfg);

// (row, rdf:type, :HeaderRow) for each header row.
std::vector<Triple> header_triples(const TableDoc& t);

}  // namespace tablekb
