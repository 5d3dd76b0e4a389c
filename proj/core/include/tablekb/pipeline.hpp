#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tablekb/classify.hpp"
#include "tablekb/headers.hpp"
#include "tablekb/ingest.hpp"
#include "tablekb/linker.hpp"
#include "tablekb/weaksup.hpp"

namespace tablekb {

// ----------------------------------------------------------------- metrics

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;  // gold items of the class
};

struct EvalReport {
    std::map<std::string, ClassMetrics> per_class;
    double accuracy = 0.0;
    double micro_precision = 0.0;
    double micro_recall = 0.0;
    double micro_f1 = 0.0;
    // Macro averages leave out Other.
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::size_t items = 0;
};

// Scores every predicted item against gold. Classes are the union of
// predicted and gold labels; precision of a never-predicted class is 0.
// Micro scores pool true/false positives and negatives over all classes.
// Throws EvalError listing items without gold.
EvalReport eval_classification(const std::map<Term, std::string>& predictions, const std::map<Term, std::string>& gold);

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const std::vector<AblationRow>& rows);

// --------------------------------------------------------------- pipeline

struct ClassifierConfig {
    enum class Kind { NaiveBayes, LogisticRegression };
    Kind kind = Kind::NaiveBayes;
    double alpha = 0.1;  // NB smoothing
    LRConfig lr;
};

struct PipelineConfig {
    std::filesystem::path manifest;
    MetadataSource metadata;
    std::filesystem::path taxonomy;
    std::filesystem::path table_lfs;
    std::filesystem::path column_lfs;
    HeaderConfig headers;
    LabelModelConfig label_model;
    // true: train on label model posteriors; false: on majority vote.
    bool use_label_model = true;
    VocabularyConfig vocabulary;
    ClassifierConfig table_classifier;   // NB by default
    ClassifierConfig column_classifier;  // LR by default
    std::filesystem::path rules;
    std::set<std::string> disabled_rules;
    ChaseConfig chase;
    std::filesystem::path output_dir;

    PipelineConfig();
};

// Reads the JSON config. Relative paths resolve against the config file's
// directory. If TABLEKB_FIXTURE_DIR is set it replaces the metadata fixture
// directory. Validates with validate(PipelineConfig).
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
// Every referenced input exists and every threshold is in range; throws
// ConfigError otherwise.
void validate(const PipelineConfig& cfg);

enum class Stage { Ingest, Headers, Dump, Label, LabelModel, Train, Annotate, Link };

const std::vector<Stage>& all_stages();
std::string stage_name(Stage s);
Stage stage_from_name(const std::string& name);

// Artifacts in the output directory, one set per stage.
namespace artifacts {
inline constexpr const char* kTables = "tables.json";           // ingest
inline constexpr const char* kPapers = "papers.json";           // ingest
inline constexpr const char* kTablesHeaders = "tables_headers.json";  // headers
inline constexpr const char* kNaiveKb = "kb_naive.nt";          // dump
inline constexpr const char* kAnnotatedKb = "kb_annotated.nt";  // annotate
inline constexpr const char* kKb = "kb.nt";                     // link
inline constexpr const char* kLinkStats = "link_stats.json";    // link
inline constexpr const char* kSummary = "summary.json";
std::string matrix(Task t);       // label
std::string label_model(Task t);  // labelmodel
std::string labels(Task t);       // labelmodel
std::string model(Task t);        // train
std::string predictions(Task t);  // annotate
}  // namespace artifacts

struct StageReport {
    Stage stage;
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;
    nlohmann::json summary;
};

// Runs one stage from the previous stage's artifacts. Throws StageError
// with the stage name and, where one is at fault, the item id. task limits
// the label, labelmodel and train stages to one task.
StageReport run_stage(const PipelineConfig& cfg, Stage stage, std::optional<Task> task = std::nullopt);

// Runs stages [from, Link] and writes summary.json.
std::vector<StageReport> run_pipeline(const PipelineConfig& cfg, Stage from = Stage::Ingest);

// Helpers shared with the CLI.
std::vector<TableDoc> read_tables_json(const std::filesystem::path& path);
std::vector<PaperMeta> read_papers_json(const std::filesystem::path& path);
std::map<Term, std::string> read_predictions(const std::filesystem::path& path);

// Gold file: {"table": {"T1": "Observation"}, "column": {"T1-c2": "F1"},
// "header_rows": {"T1": 1}, "concepts": {"T1-r2c1": "bert"}}. Keys are local
// names in the base namespace.
struct GoldStandard {
    std::map<Term, std::string> table;
    std::map<Term, std::string> column;
    std::map<Term, std::size_t> header_rows;
    std::map<Term, std::string> concepts;
};
GoldStandard load_gold(const std::filesystem::path& path);

}  // namespace tablekb
