#include "tablekb/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "tablekb/errors.hpp"
#include "tablekb/taxonomy.hpp"
#include "tablekb/triple_io.hpp"

namespace tablekb {

namespace fs = std::filesystem;
using nlohmann::json;

// ----------------------------------------------------------------- metrics

EvalReport eval_classification(const std::map<Term, std::string>& predictions, const std::map<Term, std::string>& gold) {
    std::vector<std::string> missing;
    for (const auto& [item, label] : predictions)
        if (!gold.count(item)) missing.push_back(to_string(item));
    if (!missing.empty()) {
        std::string msg = "items without gold labels:";
        for (const auto& m : missing) msg += " " + m;
        throw EvalError(msg);
    }

    struct Counts {
        std::size_t tp = 0, fp = 0, fn = 0, support = 0;
    };
    std::map<std::string, Counts> counts;
    std::size_t correct = 0;
    for (const auto& [item, predicted] : predictions) {
        const std::string& truth = gold.at(item);
        counts[truth].support++;
        if (predicted == truth) {
            ++correct;
            counts[truth].tp++;
        } else {
            counts[predicted].fp++;
            counts[truth].fn++;
        }
    }

    auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
    auto f1 = [](double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); };

    EvalReport r;
    r.items = predictions.size();
    r.accuracy = ratio(correct, predictions.size());
    std::size_t tp = 0, fp = 0, fn = 0, macro_n = 0;
    for (const auto& [label, c] : counts) {
        ClassMetrics m;
        m.precision = ratio(c.tp, c.tp + c.fp);
        m.recall = ratio(c.tp, c.tp + c.fn);
        m.f1 = f1(m.precision, m.recall);
        m.support = c.support;
        r.per_class[label] = m;
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
        if (label != Taxonomy::kOther) {
            r.macro_precision += m.precision;
            r.macro_recall += m.recall;
            r.macro_f1 += m.f1;
            ++macro_n;
        }
    }
    if (macro_n) {
        r.macro_precision /= static_cast<double>(macro_n);
        r.macro_recall /= static_cast<double>(macro_n);
        r.macro_f1 /= static_cast<double>(macro_n);
    }
    r.micro_precision = ratio(tp, tp + fp);
    r.micro_recall = ratio(tp, tp + fn);
    r.micro_f1 = f1(r.micro_precision, r.micro_recall);
    return r;
}

json to_json(const EvalReport& r) {
    json classes = json::object();
    for (const auto& [label, m] : r.per_class)
        classes[label] = {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
    return json{{"items", r.items},
                {"accuracy", r.accuracy},
                {"micro", {{"precision", r.micro_precision}, {"recall", r.micro_recall}, {"f1", r.micro_f1}}},
                {"macro_excluding_other",
                 {{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}}},
                {"per_class", classes}};
}

json to_json(const std::vector<AblationRow>& rows) {
    json out = json::array();
    for (const auto& row : rows)
        out.push_back({{"name", row.name},
                       {"egds", row.egds},
                       {"nulls", row.nulls},
                       {"column_entities", row.column_entities},
                       {"cell_entities", row.cell_entities},
                       {"entities", row.entities},
                       {"merges_per_rule", row.merges_per_rule}});
    return out;
}

// ------------------------------------------------------------------ config

PipelineConfig::PipelineConfig() {
    table_classifier.kind = ClassifierConfig::Kind::NaiveBayes;
    column_classifier.kind = ClassifierConfig::Kind::LogisticRegression;
}

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
            throw ConfigError(where + ": unknown key '" + k + "'");
}

ClassifierConfig classifier_config(const json& j, const std::string& where, ClassifierConfig c) {
    check_keys(j, where, {"model", "alpha", "learning_rate", "l2", "epochs"});
    if (j.contains("model")) {
        auto m = j.at("model").get<std::string>();
        if (m == "nb")
            c.kind = ClassifierConfig::Kind::NaiveBayes;
        else if (m == "lr")
            c.kind = ClassifierConfig::Kind::LogisticRegression;
        else
            throw ConfigError(where + ".model: expected 'nb' or 'lr', got '" + m + "'");
    }
    c.alpha = j.value("alpha", c.alpha);
    c.lr.learning_rate = j.value("learning_rate", c.lr.learning_rate);
    c.lr.l2 = j.value("l2", c.lr.l2);
    c.lr.epochs = j.value("epochs", c.lr.epochs);
    return c;
}

void validate_classifier(const ClassifierConfig& c, const std::string& where) {
    if (!(c.alpha > 0.0)) throw ConfigError(where + ".alpha must be > 0");
    if (!(c.lr.learning_rate > 0.0)) throw ConfigError(where + ".learning_rate must be > 0");
    if (!(c.lr.l2 >= 0.0)) throw ConfigError(where + ".l2 must be >= 0");
    if (c.lr.epochs <= 0) throw ConfigError(where + ".epochs must be > 0");
}

}  // namespace

PipelineConfig config_from_json(const json& j, const fs::path& base_dir) {
    PipelineConfig cfg;
    try {
        check_keys(j, "config",
                   {"manifest", "metadata", "taxonomy", "labeling_functions", "headers", "label_model", "vocabulary",
                    "classifiers", "rules", "disable_rules", "chase", "output_dir"});
        auto path = [&](const json& v) {
            fs::path p = v.get<std::string>();
            return p.is_absolute() ? p : base_dir / p;
        };
        cfg.manifest = path(j.at("manifest"));
        cfg.taxonomy = path(j.at("taxonomy"));
        cfg.rules = path(j.at("rules"));
        cfg.output_dir = path(j.at("output_dir"));

        const json& lfs = j.at("labeling_functions");
        check_keys(lfs, "labeling_functions", {"table", "column"});
        cfg.table_lfs = path(lfs.at("table"));
        cfg.column_lfs = path(lfs.at("column"));

        if (j.contains("metadata")) {
            const json& m = j.at("metadata");
            check_keys(m, "metadata", {"fixture_dir", "endpoint", "timeout_seconds"});
            if (m.contains("endpoint")) {
                cfg.metadata.kind = MetadataSource::Kind::Remote;
                cfg.metadata.endpoint_template = m.at("endpoint").get<std::string>();
                cfg.metadata.timeout = std::chrono::seconds(m.value("timeout_seconds", 10));
            } else {
                cfg.metadata.kind = MetadataSource::Kind::Fixture;
                cfg.metadata.fixture_dir = path(m.at("fixture_dir"));
            }
        }
        if (const char* env = std::getenv("TABLEKB_FIXTURE_DIR"); env && *env) {
            cfg.metadata.kind = MetadataSource::Kind::Fixture;
            cfg.metadata.fixture_dir = env;
        }

        if (j.contains("headers")) {
            const json& h = j.at("headers");
            check_keys(h, "headers", {"tau", "fallback_first_row"});
            cfg.headers.tau = h.value("tau", cfg.headers.tau);
            cfg.headers.fallback_first_row = h.value("fallback_first_row", cfg.headers.fallback_first_row);
        }
        if (j.contains("label_model")) {
            const json& l = j.at("label_model");
            check_keys(l, "label_model",
                       {"use", "confusion", "max_iters", "tol", "smoothing", "prior_accuracy", "learn_priors"});
            cfg.use_label_model = l.value("use", cfg.use_label_model);
            if (l.contains("confusion")) {
                auto c = l.at("confusion").get<std::string>();
                if (c == "one_coin")
                    cfg.label_model.confusion = LabelModelConfig::Confusion::OneCoin;
                else if (c == "full")
                    cfg.label_model.confusion = LabelModelConfig::Confusion::Full;
                else
                    throw ConfigError("label_model.confusion: expected 'one_coin' or 'full'");
            }
            cfg.label_model.max_iters = l.value("max_iters", cfg.label_model.max_iters);
            cfg.label_model.tol = l.value("tol", cfg.label_model.tol);
            cfg.label_model.smoothing = l.value("smoothing", cfg.label_model.smoothing);
            cfg.label_model.prior_accuracy = l.value("prior_accuracy", cfg.label_model.prior_accuracy);
            cfg.label_model.learn_priors = l.value("learn_priors", cfg.label_model.learn_priors);
        }
        if (j.contains("vocabulary")) {
            const json& v = j.at("vocabulary");
            check_keys(v, "vocabulary", {"table_min_count", "column_top_k"});
            cfg.vocabulary.table_min_count = v.value("table_min_count", cfg.vocabulary.table_min_count);
            cfg.vocabulary.column_top_k = v.value("column_top_k", cfg.vocabulary.column_top_k);
        }
        if (j.contains("classifiers")) {
            const json& c = j.at("classifiers");
            check_keys(c, "classifiers", {"table", "column"});
            if (c.contains("table")) cfg.table_classifier = classifier_config(c.at("table"), "classifiers.table", cfg.table_classifier);
            if (c.contains("column"))
                cfg.column_classifier = classifier_config(c.at("column"), "classifiers.column", cfg.column_classifier);
        }
        if (j.contains("disable_rules"))
            for (const auto& r : j.at("disable_rules")) cfg.disabled_rules.insert(r.get<std::string>());
        if (j.contains("chase")) {
            const json& c = j.at("chase");
            check_keys(c, "chase", {"budget_factor"});
            cfg.chase.budget_factor = c.value("budget_factor", cfg.chase.budget_factor);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const IngestError& e) {
        throw ConfigError(e.what());
    }
    PipelineConfig cfg = config_from_json(j, path.parent_path());
    validate(cfg);
    return cfg;
}

void validate(const PipelineConfig& cfg) {
    auto need_file = [](const fs::path& p, const char* what) {
        if (!fs::is_regular_file(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
    };
    auto need_dir = [](const fs::path& p, const char* what) {
        if (!fs::is_directory(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
    };
    need_file(cfg.manifest, "manifest");
    need_file(cfg.taxonomy, "taxonomy");
    need_file(cfg.rules, "rule file");
    need_dir(cfg.table_lfs, "table labeling function directory");
    need_dir(cfg.column_lfs, "column labeling function directory");
    if (cfg.metadata.kind == MetadataSource::Kind::Fixture)
        need_dir(cfg.metadata.fixture_dir, "metadata fixture directory");
    else if (cfg.metadata.endpoint_template.find("{paper_id}") == std::string::npos)
        throw ConfigError("metadata.endpoint must contain {paper_id}");
    if (cfg.output_dir.empty()) throw ConfigError("output_dir is empty");
    try {
        validate(cfg.headers);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("headers: ") + e.what());
    }
    if (cfg.label_model.max_iters <= 0) throw ConfigError("label_model.max_iters must be > 0");
    if (!(cfg.label_model.tol > 0.0)) throw ConfigError("label_model.tol must be > 0");
    if (!(cfg.label_model.smoothing > 0.0)) throw ConfigError("label_model.smoothing must be > 0");
    if (!(cfg.label_model.prior_accuracy > 0.0 && cfg.label_model.prior_accuracy < 1.0))
        throw ConfigError("label_model.prior_accuracy must be in (0, 1)");
    if (cfg.vocabulary.column_top_k == 0) throw ConfigError("vocabulary.column_top_k must be > 0");
    validate_classifier(cfg.table_classifier, "classifiers.table");
    validate_classifier(cfg.column_classifier, "classifiers.column");
    if (!(cfg.chase.budget_factor > 0.0)) throw ConfigError("chase.budget_factor must be > 0");
}

// ------------------------------------------------------------------ stages

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> s = {Stage::Ingest, Stage::Headers,  Stage::Dump,     Stage::Label,
                                         Stage::LabelModel, Stage::Train, Stage::Annotate, Stage::Link};
    return s;
}

std::string stage_name(Stage s) {
    switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Headers: return "headers";
    case Stage::Dump: return "dump";
    case Stage::Label: return "label";
    case Stage::LabelModel: return "labelmodel";
    case Stage::Train: return "train";
    case Stage::Annotate: return "annotate";
    case Stage::Link: return "link";
    }
    return "?";
}

Stage stage_from_name(const std::string& name) {
    for (Stage s : all_stages())
        if (stage_name(s) == name) return s;
    throw ConfigError("unknown stage '" + name + "'");
}

namespace artifacts {
std::string matrix(Task t) { return "matrix_" + std::string(task_name(t)) + ".csv"; }
std::string label_model(Task t) { return "labelmodel_" + std::string(task_name(t)) + ".json"; }
std::string labels(Task t) { return "labels_" + std::string(task_name(t)) + ".json"; }
std::string model(Task t) { return "model_" + std::string(task_name(t)) + ".json"; }
std::string predictions(Task t) { return "predictions_" + std::string(task_name(t)) + ".json"; }
}  // namespace artifacts

namespace {

constexpr Task kTasks[] = {Task::Table, Task::Column};

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw StageError("write", path.string(), "cannot write file");
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw IngestError(path.string() + ": " + e.what());
    }
}

// Item iris of a task in label matrix row order.
std::vector<Term> task_items(const std::vector<TableDoc>& tables, Task task) {
    std::vector<Term> out;
    for (const auto& t : tables) {
        if (task == Task::Table)
            out.push_back(iris::table(t));
        else
            for (std::size_t c = 0; c < t.n_cols; ++c) out.push_back(iris::column(t, c));
    }
    return out;
}

LabelSpace task_labels(const Taxonomy& tax, Task task) {
    return LabelSpace(task == Task::Table ? tax.table_labels() : tax.column_labels());
}

// Runs fn(i) for i in [0, n) on all cores; results are written by index so
// the output does not depend on scheduling.
template <class F>
void parallel_for(std::size_t n, const F& fn) {
    std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), n / 64 + 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

class StageRunner {
public:
    StageRunner(const PipelineConfig& cfg, Stage stage, std::optional<Task> only)
        : cfg_(cfg), stage_(stage), name_(stage_name(stage)), only_(only) {}

    StageReport run() {
        report_.stage = stage_;
        try {
            switch (stage_) {
            case Stage::Ingest: ingest(); break;
            case Stage::Headers: headers(); break;
            case Stage::Dump: dump(); break;
            case Stage::Label: label(); break;
            case Stage::LabelModel: label_model(); break;
            case Stage::Train: train(); break;
            case Stage::Annotate: annotate(); break;
            case Stage::Link: link(); break;
            }
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError(name_, item_, e.what());
        } catch (const std::exception& e) {
            throw StageError(name_, item_, e.what());
        }
        return report_;
    }

private:
    fs::path out(const std::string& name) const { return cfg_.output_dir / name; }

    fs::path input(const std::string& name, Stage producer) const {
        fs::path p = out(name);
        if (!fs::exists(p))
            throw StageError(name_, "", "missing artifact " + p.string() + "; run stage '" + stage_name(producer) + "' first");
        return p;
    }

    void emit_text(const std::string& name, const std::string& text) {
        write_text(out(name), text);
        report_.outputs.push_back(name);
    }
    void emit_json(const std::string& name, const json& j) {
        write_json(out(name), j);
        report_.outputs.push_back(name);
    }
    void emit_store(const std::string& name, const FactStore& store) {
        write_triples(out(name), store);
        report_.outputs.push_back(name);
    }

    std::vector<Task> tasks() const {
        if (only_) return {*only_};
        return {std::begin(kTasks), std::end(kTasks)};
    }

    const Taxonomy& taxonomy() {
        if (!taxonomy_) taxonomy_ = Taxonomy::load(cfg_.taxonomy);
        return *taxonomy_;
    }

    void ingest() {
        auto entries = read_manifest(cfg_.manifest);
        std::vector<TableDoc> tables;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            item_ = entries[i].file.string();
            tables.push_back(parse_table_csv(read_file(entries[i].file), entries[i].caption, entries[i].paper_id, i + 1));
        }
        item_.clear();

        std::set<std::string> ids;
        for (const auto& t : tables) ids.insert(t.paper_id);
        json papers = json::array();
        json missing = json::array();
        for (const auto& id : ids) {
            try {
                papers.push_back(to_json(fetch_paper_metadata(id, cfg_.metadata)));
            } catch (const MetadataError& e) {
                report_.warnings.push_back(e.what());
                missing.push_back(id);
            }
        }

        json tj = json::array();
        for (const auto& t : tables) tj.push_back(to_json(t));
        emit_json(artifacts::kTables, json{{"tables", tj}});
        emit_json(artifacts::kPapers, json{{"papers", papers}, {"missing", missing}});
        report_.summary = {{"tables", tables.size()}, {"papers", papers.size()}, {"papers_missing", missing.size()}};
    }

    void headers() {
        auto tables = read_tables_json(input(artifacts::kTables, Stage::Ingest));
        std::size_t header_rows = 0;
        for (auto& t : tables) {
            item_ = iris::table(t).text();
            annotate_headers(t, cfg_.headers);
            header_rows += t.header_rows.size();
        }
        item_.clear();
        json tj = json::array();
        for (const auto& t : tables) tj.push_back(to_json(t));
        emit_json(artifacts::kTablesHeaders, json{{"tables", tj}});
        report_.summary = {{"tables", tables.size()}, {"header_rows", header_rows}};
    }

    void dump() {
        auto tables = read_tables_json(input(artifacts::kTablesHeaders, Stage::Headers));
        auto papers = read_papers_json(input(artifacts::kPapers, Stage::Ingest));
        FactStore store;
        for (const auto& t : tables) {
            item_ = iris::table(t).text();
            store.insert(dump_rdf(t));
            store.insert(header_triples(t));
        }
        item_.clear();
        for (const auto& p : papers) store.insert(dump_paper(p));
        store.insert(taxonomy_triples(taxonomy()));
        emit_store(artifacts::kNaiveKb, store);
        report_.summary = {{"triples", store.size()}};
    }

    void label() {
        FactStore store = read_triples(input(artifacts::kNaiveKb, Stage::Dump));
        auto tables = read_tables_json(input(artifacts::kTablesHeaders, Stage::Headers));
        json summary = json::object();
        for (Task task : tasks()) {
            auto dir = task == Task::Table ? cfg_.table_lfs : cfg_.column_lfs;
            auto lfs = load_labeling_functions(dir);
            auto items = task_items(tables, task);
            LabelMatrix m;
            try {
                m = build_matrix(lfs, items, store, task_labels(taxonomy(), task));
            } catch (const Error& e) {
                throw StageError(name_, dir.string(), e.what());
            }
            emit_text(artifacts::matrix(task), label_matrix_csv(m));
            std::size_t voted = 0;
            for (const auto& row : m.votes)
                if (std::any_of(row.begin(), row.end(), [](int v) { return v != kAbstain; })) ++voted;
            summary[std::string(task_name(task))] = {{"items", m.rows()}, {"lfs", m.cols()}, {"items_with_votes", voted}};
        }
        report_.summary = summary;
    }

    void label_model() {
        json summary = json::object();
        for (Task task : tasks()) {
            auto labels = task_labels(taxonomy(), task);
            auto m = label_matrix_from_csv(read_file(input(artifacts::matrix(task), Stage::Label)), labels);
            auto mv = majority_vote(m);
            json rows = json::array();
            json model_json = nullptr;
            std::optional<LabelModel> model;
            bool any_vote = std::any_of(m.votes.begin(), m.votes.end(), [](const auto& row) {
                return std::any_of(row.begin(), row.end(), [](int v) { return v != kAbstain; });
            });
            if (any_vote) {
                model = fit_label_model(m, cfg_.label_model);
                model_json = to_json(*model);
            } else {
                report_.warnings.push_back(std::string(task_name(task)) + ": every labeling function abstained");
            }
            std::size_t agree = 0, voted = 0;
            for (std::size_t i = 0; i < m.rows(); ++i) {
                std::size_t votes = static_cast<std::size_t>(
                    std::count_if(m.votes[i].begin(), m.votes[i].end(), [](int v) { return v != kAbstain; }));
                json row = {{"item", m.items[i].text()},
                            {"votes", votes},
                            {"majority", mv[i] == kAbstain ? json(nullptr) : json(labels.name(mv[i]))}};
                if (model && votes > 0) {
                    auto post = posterior(*model, m.votes[i]);
                    row["posterior"] = post;
                    ++voted;
                    if (mv[i] != kAbstain && static_cast<int>(argmax(post)) == mv[i]) ++agree;
                }
                rows.push_back(std::move(row));
            }
            emit_json(artifacts::label_model(task), json{{"model", model_json}});
            emit_json(artifacts::labels(task), json{{"labels", labels.names()}, {"items", rows}});
            summary[std::string(task_name(task))] = {
                {"items_with_votes", voted},
                {"posterior_agrees_with_majority", agree},
                {"iterations", model ? model->iterations : 0},
            };
        }
        report_.summary = summary;
    }

    // Training set of one task: features of voted items with their soft labels.
    struct TrainingSet {
        std::vector<FeatureVector> features;
        std::vector<std::vector<double>> targets;
    };

    void train() {
        auto tables = read_tables_json(input(artifacts::kTablesHeaders, Stage::Headers));
        json summary = json::object();
        for (Task task : tasks()) {
            json lj = read_json(input(artifacts::labels(task), Stage::LabelModel));
            auto classes = lj.at("labels").get<std::vector<std::string>>();
            std::map<std::string, std::vector<double>> target_of;
            for (const auto& row : lj.at("items")) {
                std::string iri = row.at("item").get<std::string>();
                if (cfg_.use_label_model) {
                    if (row.contains("posterior")) target_of[iri] = row.at("posterior").get<std::vector<double>>();
                } else if (!row.at("majority").is_null()) {
                    auto label = row.at("majority").get<std::string>();
                    std::vector<double> onehot(classes.size(), 0.0);
                    auto it = std::find(classes.begin(), classes.end(), label);
                    if (it == classes.end()) throw StageError(name_, iri, "unknown label " + label);
                    onehot[static_cast<std::size_t>(it - classes.begin())] = 1.0;
                    target_of[iri] = onehot;
                }
            }

            auto items = make_items(tables, task);
            Vocabulary vocab = build_vocabulary(items, task, cfg_.vocabulary);
            std::vector<FeatureVector> all(items.size());
            parallel_for(items.size(), [&](std::size_t i) { all[i] = extract_features(items[i], vocab); });

            TrainingSet ts;
            for (std::size_t i = 0; i < items.size(); ++i) {
                auto it = target_of.find(items[i].iri.text());
                if (it == target_of.end()) continue;
                ts.features.push_back(all[i]);
                ts.targets.push_back(it->second);
            }
            if (ts.features.empty())
                throw StageError(name_, std::string(task_name(task)), "no labelled items to train on");

            const ClassifierConfig& cc = task == Task::Table ? cfg_.table_classifier : cfg_.column_classifier;
            Classifier model;
            if (cc.kind == ClassifierConfig::Kind::NaiveBayes)
                model = train_nb(ts.features, ts.targets, classes, cc.alpha);
            else
                model = train_lr(ts.features, ts.targets, classes, cc.lr);
            emit_json(artifacts::model(task),
                      json{{"task", task_name(task)},
                           {"label_source", cfg_.use_label_model ? "label_model" : "majority_vote"},
                           {"training_items", ts.features.size()},
                           {"vocabulary", to_json(vocab)},
                           {"classifier", to_json(model)}});
            summary[std::string(task_name(task))] = {
                {"training_items", ts.features.size()},
                {"features", vocab.size()},
                {"model", cc.kind == ClassifierConfig::Kind::NaiveBayes ? "nb" : "lr"}};
        }
        report_.summary = summary;
    }

    void annotate() {
        FactStore store = read_triples(input(artifacts::kNaiveKb, Stage::Dump));
        auto tables = read_tables_json(input(artifacts::kTablesHeaders, Stage::Headers));
        json summary = json::object();
        for (Task task : kTasks) {
            json mj = read_json(input(artifacts::model(task), Stage::Train));
            Vocabulary vocab = vocabulary_from_json(mj.at("vocabulary"));
            Classifier model = classifier_from_json(mj.at("classifier"));
            auto items = make_items(tables, task);
            std::vector<std::string> predicted(items.size());
            const auto& classes = classes_of(model);
            parallel_for(items.size(), [&](std::size_t i) {
                predicted[i] = classes[argmax(predict(model, extract_features(items[i], vocab)))];
            });
            std::map<Term, std::string> predictions;
            json pj = json::object();
            std::map<std::string, std::size_t> histogram;
            for (std::size_t i = 0; i < items.size(); ++i) {
                predictions[items[i].iri] = predicted[i];
                pj[items[i].iri.text()] = predicted[i];
                ++histogram[predicted[i]];
            }
            annotate_kb(store, predictions, task, taxonomy());
            emit_json(artifacts::predictions(task), json{{"task", task_name(task)}, {"predictions", pj}});
            summary[std::string(task_name(task))] = histogram;
        }
        emit_store(artifacts::kAnnotatedKb, store);
        report_.summary = summary;
    }

    void link() {
        FactStore store = read_triples(input(artifacts::kAnnotatedKb, Stage::Annotate));
        auto papers = read_papers_json(input(artifacts::kPapers, Stage::Ingest));
        RuleSet rules = load_rules(cfg_.rules);
        for (const auto& r : cfg_.disabled_rules) {
            if (!rules.find(r)) throw StageError(name_, r, "cannot disable unknown rule");
            rules.disabled.insert(r);
        }
        ChaseResult result = restricted_chase(rules, store, papers, cfg_.chase);
        report_.warnings.insert(report_.warnings.end(), result.warnings.begin(), result.warnings.end());
        FactStore kb = store;
        kb.insert(materialize_entities(result));
        emit_store(artifacts::kKb, kb);
        json stats = {{"initial_facts", result.stats.initial_facts},
                      {"nulls_created", result.stats.nulls_created},
                      {"steps", result.stats.steps},
                      {"rounds", result.stats.rounds},
                      {"merges_per_rule", result.stats.merges_per_rule},
                      {"column_entities", result.stats.column_entities},
                      {"cell_entities", result.stats.cell_entities},
                      {"entities", result.stats.entity_count},
                      {"warnings", result.warnings}};
        emit_json(artifacts::kLinkStats, stats);
        report_.summary = stats;
        report_.summary.erase("warnings");
        report_.summary["kb_triples"] = kb.size();
    }

    const PipelineConfig& cfg_;
    Stage stage_;
    std::string name_;
    std::string item_;
    std::optional<Task> only_;
    std::optional<Taxonomy> taxonomy_;
    StageReport report_;
};

}  // namespace

StageReport run_stage(const PipelineConfig& cfg, Stage stage, std::optional<Task> task) {
    return StageRunner(cfg, stage, task).run();
}

std::vector<StageReport> run_pipeline(const PipelineConfig& cfg, Stage from) {
    std::vector<StageReport> reports;
    bool started = false;
    for (Stage s : all_stages()) {
        started = started || s == from;
        if (started) reports.push_back(run_stage(cfg, s));
    }
    json stages = json::array();
    for (const auto& r : reports)
        stages.push_back({{"stage", stage_name(r.stage)}, {"outputs", r.outputs}, {"warnings", r.warnings}, {"summary", r.summary}});
    write_json(cfg.output_dir / artifacts::kSummary, json{{"stages", stages}});
    return reports;
}

std::vector<TableDoc> read_tables_json(const fs::path& path) {
    json j = read_json(path);
    std::vector<TableDoc> out;
    try {
        for (const auto& t : j.at("tables")) out.push_back(table_from_json(t));
    } catch (const json::exception& e) {
        throw IngestError(path.string() + ": " + e.what());
    }
    return out;
}

std::vector<PaperMeta> read_papers_json(const fs::path& path) {
    json j = read_json(path);
    std::vector<PaperMeta> out;
    try {
        for (const auto& p : j.at("papers")) out.push_back(paper_meta_from_json(p.at("paperId").get<std::string>(), p));
    } catch (const json::exception& e) {
        throw IngestError(path.string() + ": " + e.what());
    }
    return out;
}

std::map<Term, std::string> read_predictions(const fs::path& path) {
    json j = read_json(path);
    std::map<Term, std::string> out;
    try {
        for (const auto& [iri, label] : j.at("predictions").items()) out[Term::iri(iri)] = label.get<std::string>();
    } catch (const json::exception& e) {
        throw IngestError(path.string() + ": " + e.what());
    }
    return out;
}

GoldStandard load_gold(const fs::path& path) {
    json j = read_json(path);
    GoldStandard g;
    try {
        auto key = [](const std::string& local) { return vocab::local(local); };
        if (j.contains("table"))
            for (const auto& [k, v] : j.at("table").items()) g.table[key(k)] = v.get<std::string>();
        if (j.contains("column"))
            for (const auto& [k, v] : j.at("column").items()) g.column[key(k)] = v.get<std::string>();
        if (j.contains("header_rows"))
            for (const auto& [k, v] : j.at("header_rows").items()) g.header_rows[key(k)] = v.get<std::size_t>();
        if (j.contains("concepts"))
            for (const auto& [k, v] : j.at("concepts").items()) g.concepts[key(k)] = v.get<std::string>();
    } catch (const json::exception& e) {
        throw EvalError(path.string() + ": " + e.what());
    }
    return g;
}

}  // namespace tablekb
