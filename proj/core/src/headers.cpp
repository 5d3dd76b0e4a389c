#include "tablekb/headers.hpp"

#include <cmath>
#include <numeric>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "tablekb/errors.hpp"

namespace tablekb {

std::size_t CharClassHistogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

namespace {

CharClass classify(UChar32 c) {
    if (u_isdigit(c)) return CharClass::Numeric;
    if (u_isupper(c)) return CharClass::Uppercase;
    if (u_islower(c)) return CharClass::Lowercase;
    if (u_isUWhiteSpace(c)) return CharClass::Space;
    if (c < 0x80 && (u_ispunct(c) || (c > 0x20 && c < 0x7F))) return CharClass::NonAlphanumeric;
    return CharClass::Other;
}

}  // namespace

CharClassHistogram char_class_histogram(std::string_view text) {
    CharClassHistogram h;
    const auto* p = reinterpret_cast<const uint8_t*>(text.data());
    const auto n = static_cast<int32_t>(text.size());
    int32_t i = 0;
    while (i < n) {
        UChar32 c;
        U8_NEXT(p, i, n, c);
        CharClass k = c < 0 ? CharClass::Other : classify(c);
        ++h.counts[static_cast<std::size_t>(k)];
    }
    return h;
}

void validate(const HeaderConfig& cfg) {
    if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) throw ConfigError("header tau must be a positive number");
}

std::vector<double> row_outlier_scores(const TableDoc& t) {
    std::vector<double> scores(t.n_rows, 0.0);
    if (t.n_rows == 0 || t.n_cols == 0) return scores;

    std::vector<CharClassHistogram> column(t.n_rows);
    const double n = static_cast<double>(t.n_rows);
    for (std::size_t c = 0; c < t.n_cols; ++c) {
        for (std::size_t r = 0; r < t.n_rows; ++r) column[r] = char_class_histogram(t.cell(r, c));
        for (std::size_t k = 0; k < kCharClassCount; ++k) {
            double mean = 0.0;
            for (const auto& h : column) mean += static_cast<double>(h.counts[k]);
            mean /= n;
            double var = 0.0;
            for (const auto& h : column) {
                double d = static_cast<double>(h.counts[k]) - mean;
                var += d * d;
            }
            const double sigma = std::sqrt(var / n);
            if (sigma == 0.0) continue;
            for (std::size_t r = 0; r < t.n_rows; ++r)
                scores[r] += std::abs(static_cast<double>(column[r].counts[k]) - mean) / sigma;
        }
    }
    const double cells_per_row = static_cast<double>(t.n_cols * kCharClassCount);
    for (auto& s : scores) s /= cells_per_row;
    return scores;
}

double row_outlier_score(const TableDoc& t, std::size_t r) {
    if (r >= t.n_rows) throw IngestError("row " + std::to_string(r) + " out of range");
    return row_outlier_scores(t)[r];
}

std::set<std::size_t> detect_headers(const TableDoc& t, const HeaderConfig& cfg) {
    validate(cfg);
    const auto scores = row_outlier_scores(t);
    std::set<std::size_t> out;
    for (std::size_t r = 0; r < t.n_rows && scores[r] > cfg.tau; ++r) out.insert(r);
    if (out.empty() && cfg.fallback_first_row && t.n_rows >= 2) out.insert(0);
    return out;
}

void annotate_headers(TableDoc& t, const HeaderConfig& cfg) { t.header_rows = detect_headers(t, cfg); }

std::vector<Triple> header_triples(const TableDoc& t) {
    std::vector<Triple> out;
    for (std::size_t r : t.header_rows) out.push_back({iris::row(t, r), vocab::rdf_type(), vocab::local("HeaderRow")});
    return out;
}

}  // namespace tablekb
