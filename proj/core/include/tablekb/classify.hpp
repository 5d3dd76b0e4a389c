#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tablekb/fact_store.hpp"
#include "tablekb/ingest.hpp"
#include "tablekb/taxonomy.hpp"
#include "tablekb/weaksup.hpp"

namespace tablekb {

enum class Task { Table, Column };

std::string_view task_name(Task task);
Task task_from_name(std::string_view name);

// Lowercased tokens. Runs of letters and digits stay together ("f1",
// "bert-large" -> "bert", "large"); numbers become "<num>".
std::vector<std::string> tokenize(std::string_view text);

// 1- to 3-grams of the tokens, space-joined, in order of appearance.
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, std::size_t max_n = 3);

// Numeric summary of a table or column: fraction of numeric cells, and
// min/max/median/mean/std averaged over numeric columns.
struct NumericSummary {
    double numeric_fraction = 0.0;
    double min = 0.0;
    double max = 0.0;
    double median = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
};

// One classification item: text units grouped by extraction source, plus
// numeric statistics. Ngrams never span two text units.
struct ClassificationItem {
    Term iri;
    std::vector<std::vector<std::string>> sources;
    NumericSummary numeric;
};

// Source names per task. Table: {"content"} (cells and caption). Column:
// {"caption", "header", "other_headers", "body"}.
const std::vector<std::string>& source_names(Task task);

ClassificationItem make_table_item(const TableDoc& t);
ClassificationItem make_column_item(const TableDoc& t, std::size_t c);
std::vector<ClassificationItem> make_items(const std::vector<TableDoc>& tables, Task task);

// Column c counts as numeric when at least half of its non-empty body
// cells parse as numbers.
bool is_numeric_column(const TableDoc& t, std::size_t c);

struct VocabularyConfig {
    std::size_t table_min_count = 2;   // table task: keep ngrams seen more than once
    std::size_t column_top_k = 1000;  // column task: most frequent per source
};

// Ngram feature space. Indices are dense: source 0 first, then source 1, ...;
// within a source by descending corpus count, then lexicographically. The
// six numeric features follow the ngram block.
struct Vocabulary {
    Task task = Task::Table;
    std::size_t n_docs = 0;
    std::vector<std::string> source_names;
    std::vector<std::map<std::string, std::size_t>> index;  // per source
    std::vector<double> idf;                                 // per ngram feature
    // Range of each compressed numeric statistic over the corpus.
    std::array<double, 6> numeric_min{};
    std::array<double, 6> numeric_max{};

    std::size_t ngram_features() const { return idf.size(); }
    std::size_t size() const { return idf.size() + 6; }
    std::size_t numeric_offset() const { return idf.size(); }
};

Vocabulary build_vocabulary(std::span<const ClassificationItem> corpus, Task task, const VocabularyConfig& cfg = {});

// Sparse vector with strictly increasing indices and finite weights.
struct FeatureVector {
    std::vector<std::pair<std::size_t, double>> entries;
    std::size_t dim = 0;
};

// tf * ln(N / df) per ngram, scaled to unit L2 norm over the ngram block,
// then the numeric block. The five statistics are compressed with
// sign(x) * ln(1 + |x|); all six are then min-max scaled to [0, 1] with the
// vocabulary's corpus range.
FeatureVector extract_features(const ClassificationItem& item, const Vocabulary& vocab);

// Multinomial Naive Bayes trained on fractional counts. Negative feature
// weights are treated as 0.
struct NBModel {
    std::vector<std::string> classes;
    std::vector<double> log_prior;                   // K
    std::vector<std::vector<double>> log_likelihood;  // K x F, each row a log-distribution
    double alpha = 1.0;
};

struct LRConfig {
    double learning_rate = 4.0;
    double l2 = 1e-4;
    int epochs = 1000;
};

// Softmax regression.
struct LRModel {
    std::vector<std::string> classes;
    std::vector<std::vector<double>> weights;  // K x F
    std::vector<double> bias;                  // K
    double l2 = 0.0;
    double final_loss = 0.0;
    std::vector<double> loss_history;  // loss before each epoch, then the final loss
};

using Classifier = std::variant<NBModel, LRModel>;

// soft_labels[i] is a distribution over classes for features[i].
NBModel train_nb(std::span<const FeatureVector> features, std::span<const std::vector<double>> soft_labels,
                 const std::vector<std::string>& classes, double alpha = 1.0);

LRModel train_lr(std::span<const FeatureVector> features, std::span<const std::vector<double>> soft_labels,
                 const std::vector<std::string>& classes, const LRConfig& cfg);

// Mean soft cross-entropy + l2/2 * ||W||^2 and its gradient (same layout
// as the model). Used by train_lr and by gradient checks.
struct LRGradient {
    double loss = 0.0;
    std::vector<std::vector<double>> d_weights;
    std::vector<double> d_bias;
};
LRGradient lr_loss_and_gradient(const LRModel& model, std::span<const FeatureVector> features,
                                std::span<const std::vector<double>> soft_labels);

std::vector<double> predict(const NBModel& model, const FeatureVector& fv);
std::vector<double> predict(const LRModel& model, const FeatureVector& fv);
std::vector<double> predict(const Classifier& model, const FeatureVector& fv);
const std::vector<std::string>& classes_of(const Classifier& model);

std::size_t argmax(std::span<const double> xs);

// Replaces earlier type predictions of the same task on the given items by
// (item, rdf:type, :<Class>). Throws ModelError for classes outside the
// task's label space.
void annotate_kb(FactStore& store, const std::map<Term, std::string>& predictions, Task task,
                 const Taxonomy& taxonomy);

nlohmann::json to_json(const Vocabulary& v);
Vocabulary vocabulary_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Classifier& c);
Classifier classifier_from_json(const nlohmann::json& j);

}  // namespace tablekb
