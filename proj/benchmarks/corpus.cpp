#include "corpus.hpp"

#include <filesystem>
#include <set>

#include "tablekb/headers.hpp"
#include "tablekb/pipeline.hpp"
#include "tablekb/taxonomy.hpp"

namespace tablekb::bench {

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::path(TABLEKB_BENCH_DATA_DIR) / "classification";

const Taxonomy& taxonomy() {
    static const Taxonomy t = Taxonomy::load(fs::path(TABLEKB_BENCH_DATA_DIR) / "taxonomy.txt");
    return t;
}

const GoldStandard& gold() {
    static const GoldStandard g = load_gold(kDir / "gold.json");
    return g;
}

FactStore build_store(const std::vector<TableDoc>& tables, const std::vector<PaperMeta>& papers) {
    FactStore store;
    std::set<std::string> paper_ids;
    for (const auto& t : tables) {
        store.insert(dump_rdf(t));
        store.insert(header_triples(t));
        paper_ids.insert(t.paper_id);
    }
    for (const auto& p : papers)
        if (paper_ids.count(p.paper_id)) store.insert(dump_paper(p));
    store.insert(taxonomy_triples(taxonomy()));
    annotate_kb(store, gold().table, Task::Table, taxonomy());
    annotate_kb(store, gold().column, Task::Column, taxonomy());
    return store;
}

}  // namespace

const Corpus& classification_corpus() {
    static const Corpus c = [] {
        Corpus out;
        out.tables = load_tables(read_manifest(kDir / "manifest.json"));
        for (auto& t : out.tables) annotate_headers(t, HeaderConfig{});
        std::set<std::string> ids;
        for (const auto& t : out.tables) ids.insert(t.paper_id);
        MetadataSource source;
        source.fixture_dir = kDir / "papers";
        for (const auto& id : ids) out.papers.push_back(fetch_paper_metadata(id, source));
        out.store = build_store(out.tables, out.papers);
        return out;
    }();
    return c;
}

FactStore corpus_prefix(std::size_t n) {
    const auto& c = classification_corpus();
    std::vector<TableDoc> tables(c.tables.begin(), c.tables.begin() + static_cast<std::ptrdiff_t>(std::min(n, c.tables.size())));
    return build_store(tables, c.papers);
}

}  // namespace tablekb::bench
