#pragma once

#include <vector>

#include "tablekb/fact_store.hpp"
#include "tablekb/ingest.hpp"

namespace tablekb::bench {

// The shipped 120-table classification corpus with gold types, loaded once.
struct Corpus {
    std::vector<TableDoc> tables;
    std::vector<PaperMeta> papers;
    FactStore store;  // naive dump, header rows, taxonomy and gold type annotations
};

const Corpus& classification_corpus();

// The first n tables of the corpus as an annotated store.
FactStore corpus_prefix(std::size_t n);

}  // namespace tablekb::bench
