#include "tablekb/classify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "tablekb/errors.hpp"
#include "tablekb/unicode.hpp"

namespace tablekb {

std::string_view task_name(Task task) { return task == Task::Table ? "table" : "column"; }

Task task_from_name(std::string_view name) {
    if (name == "table") return Task::Table;
    if (name == "column") return Task::Column;
    throw ConfigError("unknown task '" + std::string(name) + "' (expected table or column)");
}

std::vector<std::string> tokenize(std::string_view text) {
    const std::string lowered = unicode::to_lower(text);
    const auto* p = reinterpret_cast<const uint8_t*>(lowered.data());
    const auto n = static_cast<int32_t>(lowered.size());

    std::vector<std::string> out;
    std::string cur;
    bool has_alpha = false;
    bool last_digit = false;
    auto flush = [&]() {
        if (cur.empty()) return;
        out.push_back(has_alpha ? cur : "<num>");
        cur.clear();
        has_alpha = false;
        last_digit = false;
    };

    int32_t i = 0;
    while (i < n) {
        const int32_t start = i;
        UChar32 c;
        U8_NEXT(p, i, n, c);
        if (c >= 0 && u_isalnum(c)) {
            cur.append(lowered, static_cast<std::size_t>(start), static_cast<std::size_t>(i - start));
            const bool digit = u_isdigit(c);
            if (!digit) has_alpha = true;
            last_digit = digit;
            continue;
        }
        // A decimal point between two digits stays inside the number.
        if ((c == '.' || c == ',') && last_digit && !has_alpha && i < n) {
            int32_t j = i;
            UChar32 d;
            U8_NEXT(p, j, n, d);
            if (d >= 0 && u_isdigit(d)) {
                cur += static_cast<char>(c);
                continue;
            }
        }
        flush();
    }
    flush();
    return out;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, std::size_t max_n) {
    std::vector<std::string> out;
    for (std::size_t len = 1; len <= max_n; ++len) {
        for (std::size_t i = 0; i + len <= tokens.size(); ++i) {
            std::string g = tokens[i];
            for (std::size_t k = 1; k < len; ++k) g += " " + tokens[i + k];
            out.push_back(std::move(g));
        }
    }
    return out;
}

const std::vector<std::string>& source_names(Task task) {
    static const std::vector<std::string> kTable{"content"};
    static const std::vector<std::string> kColumn{"caption", "header", "other_headers", "body"};
    return task == Task::Table ? kTable : kColumn;
}

namespace {

// Parses the numeric value of a cell whose inferred datatype is numeric.
std::optional<double> numeric_value(const std::string& text) {
    if (infer_literal_datatype(text) == Datatype::String) return std::nullopt;
    std::string s = unicode::trim(text);
    static constexpr std::string_view kPlusMinus = "\xC2\xB1";
    if (auto pm = s.find(kPlusMinus); pm != std::string::npos) s = s.substr(0, pm);
    s.erase(std::remove(s.begin(), s.end(), '%'), s.end());
    try {
        std::size_t used = 0;
        double v = std::stod(unicode::trim(s), &used);
        if (!std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::vector<std::size_t> body_rows(const TableDoc& t) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < t.n_rows; ++r)
        if (!t.is_header(r)) rows.push_back(r);
    return rows;
}

std::vector<double> column_values(const TableDoc& t, std::size_t c) {
    std::vector<double> out;
    for (std::size_t r : body_rows(t))
        if (auto v = numeric_value(t.cell(r, c))) out.push_back(*v);
    return out;
}

struct Stats {
    double min = 0, max = 0, median = 0, mean = 0, stddev = 0;
};

Stats stats_of(std::vector<double> v) {
    Stats s;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    s.min = v.front();
    s.max = v.back();
    s.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double x : v) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(n));
    return s;
}

NumericSummary summarize(const TableDoc& t, const std::vector<std::size_t>& columns) {
    NumericSummary out;
    std::size_t cells = 0;
    std::size_t numeric = 0;
    for (std::size_t c : columns)
        for (std::size_t r = 0; r < t.n_rows; ++r) {
            ++cells;
            if (numeric_value(t.cell(r, c))) ++numeric;
        }
    out.numeric_fraction = cells ? static_cast<double>(numeric) / static_cast<double>(cells) : 0.0;

    std::size_t numeric_columns = 0;
    for (std::size_t c : columns) {
        if (!is_numeric_column(t, c)) continue;
        Stats s = stats_of(column_values(t, c));
        out.min += s.min;
        out.max += s.max;
        out.median += s.median;
        out.mean += s.mean;
        out.stddev += s.stddev;
        ++numeric_columns;
    }
    if (numeric_columns) {
        const double k = static_cast<double>(numeric_columns);
        out.min /= k;
        out.max /= k;
        out.median /= k;
        out.mean /= k;
        out.stddev /= k;
    }
    return out;
}

}  // namespace

bool is_numeric_column(const TableDoc& t, std::size_t c) {
    std::size_t non_empty = 0;
    std::size_t numeric = 0;
    for (std::size_t r : body_rows(t)) {
        if (t.cell(r, c).empty()) continue;
        ++non_empty;
        if (numeric_value(t.cell(r, c))) ++numeric;
    }
    return numeric > 0 && 2 * numeric >= non_empty;
}

ClassificationItem make_table_item(const TableDoc& t) {
    ClassificationItem item;
    item.iri = iris::table(t);
    item.sources.resize(1);
    auto& content = item.sources[0];
    if (!t.caption.empty()) content.push_back(t.caption);
    for (const auto& row : t.cells)
        for (const auto& cell : row)
            if (!cell.empty()) content.push_back(cell);
    std::vector<std::size_t> all(t.n_cols);
    std::iota(all.begin(), all.end(), 0);
    item.numeric = summarize(t, all);
    return item;
}

ClassificationItem make_column_item(const TableDoc& t, std::size_t c) {
    ClassificationItem item;
    item.iri = iris::column(t, c);
    item.sources.resize(4);
    if (!t.caption.empty()) item.sources[0].push_back(t.caption);
    for (std::size_t r = 0; r < t.n_rows; ++r) {
        for (std::size_t k = 0; k < t.n_cols; ++k) {
            const auto& text = t.cell(r, k);
            if (text.empty()) continue;
            if (t.is_header(r)) {
                item.sources[k == c ? 1 : 2].push_back(text);
            } else if (k == c) {
                item.sources[3].push_back(text);
            }
        }
    }
    item.numeric = summarize(t, {c});
    return item;
}

std::vector<ClassificationItem> make_items(const std::vector<TableDoc>& tables, Task task) {
    std::vector<ClassificationItem> out;
    for (const auto& t : tables) {
        if (task == Task::Table) {
            out.push_back(make_table_item(t));
        } else {
            for (std::size_t c = 0; c < t.n_cols; ++c) out.push_back(make_column_item(t, c));
        }
    }
    return out;
}

namespace {
double squash(double x) { return std::copysign(std::log1p(std::abs(x)), x); }

std::array<double, 6> raw_numeric(const NumericSummary& n) {
    return {n.numeric_fraction, squash(n.min), squash(n.max), squash(n.median), squash(n.mean), squash(n.stddev)};
}
}  // namespace

Vocabulary build_vocabulary(std::span<const ClassificationItem> corpus, Task task, const VocabularyConfig& cfg) {
    if (corpus.empty()) throw TrainError("cannot build a vocabulary from an empty corpus");
    Vocabulary v;
    v.task = task;
    v.n_docs = corpus.size();
    v.source_names = source_names(task);
    const std::size_t n_sources = v.source_names.size();

    std::vector<std::map<std::string, std::size_t>> counts(n_sources);
    std::vector<std::map<std::string, std::size_t>> df(n_sources);
    for (const auto& item : corpus) {
        if (item.sources.size() != n_sources) throw TrainError("item has the wrong number of sources");
        for (std::size_t s = 0; s < n_sources; ++s) {
            std::set<std::string> seen;
            for (const auto& unit : item.sources[s])
                for (auto& g : ngrams(tokenize(unit))) {
                    ++counts[s][g];
                    seen.insert(std::move(g));
                }
            for (const auto& g : seen) ++df[s][g];
        }
    }

    v.index.resize(n_sources);
    for (std::size_t s = 0; s < n_sources; ++s) {
        std::vector<std::pair<std::string, std::size_t>> ranked(counts[s].begin(), counts[s].end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.second != b.second ? a.second > b.second : a.first < b.first;
        });
        if (task == Task::Table) {
            std::erase_if(ranked, [&](const auto& e) { return e.second < cfg.table_min_count; });
        } else if (ranked.size() > cfg.column_top_k) {
            ranked.resize(cfg.column_top_k);
        }
        for (const auto& [g, _] : ranked) {
            v.index[s].emplace(g, v.idf.size());
            v.idf.push_back(std::log(static_cast<double>(v.n_docs) / static_cast<double>(df[s].at(g))));
        }
    }

    v.numeric_min.fill(std::numeric_limits<double>::infinity());
    v.numeric_max.fill(-std::numeric_limits<double>::infinity());
    for (const auto& item : corpus) {
        auto raw = raw_numeric(item.numeric);
        for (std::size_t k = 0; k < 6; ++k) {
            if (!std::isfinite(raw[k])) continue;
            v.numeric_min[k] = std::min(v.numeric_min[k], raw[k]);
            v.numeric_max[k] = std::max(v.numeric_max[k], raw[k]);
        }
    }
    for (std::size_t k = 0; k < 6; ++k)
        if (!std::isfinite(v.numeric_min[k])) v.numeric_min[k] = v.numeric_max[k] = 0.0;
    return v;
}

FeatureVector extract_features(const ClassificationItem& item, const Vocabulary& vocab) {
    if (item.sources.size() != vocab.index.size()) throw ModelError("item sources do not match the vocabulary");
    std::map<std::size_t, double> tf;
    for (std::size_t s = 0; s < item.sources.size(); ++s)
        for (const auto& unit : item.sources[s])
            for (const auto& g : ngrams(tokenize(unit))) {
                auto it = vocab.index[s].find(g);
                if (it != vocab.index[s].end()) tf[it->second] += 1.0;
            }

    FeatureVector fv;
    fv.dim = vocab.size();
    double norm = 0.0;
    for (const auto& [idx, count] : tf) {
        double w = count * vocab.idf[idx];
        if (w != 0.0) {
            fv.entries.emplace_back(idx, w);
            norm += w * w;
        }
    }
    if (norm > 0.0)
        for (auto& e : fv.entries) e.second /= std::sqrt(norm);
    const std::size_t base = vocab.numeric_offset();
    const auto raw = raw_numeric(item.numeric);
    for (std::size_t k = 0; k < 6; ++k) {
        const double span = vocab.numeric_max[k] - vocab.numeric_min[k];
        if (!std::isfinite(raw[k]) || span <= 0.0) continue;
        const double x = std::clamp((raw[k] - vocab.numeric_min[k]) / span, 0.0, 1.0);
        if (x != 0.0) fv.entries.emplace_back(base + k, x);
    }
    return fv;
}

namespace {

void check_training_input(std::span<const FeatureVector> features, std::span<const std::vector<double>> soft_labels,
                          const std::vector<std::string>& classes) {
    if (features.size() != soft_labels.size()) throw TrainError("features and labels differ in length");
    if (features.empty()) throw TrainError("no training items");
    if (classes.empty()) throw TrainError("no classes");
    const std::size_t dim = features.front().dim;
    for (const auto& fv : features)
        if (fv.dim != dim) throw TrainError("feature vectors differ in dimension");
    for (const auto& y : soft_labels)
        if (y.size() != classes.size()) throw TrainError("soft label width does not match the class count");
}

std::vector<double> softmax(std::vector<double> z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& x : z) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (auto& x : z) x /= sum;
    return z;
}

}  // namespace

NBModel train_nb(std::span<const FeatureVector> features, std::span<const std::vector<double>> soft_labels,
                 const std::vector<std::string>& classes, double alpha) {
    check_training_input(features, soft_labels, classes);
    if (!(alpha > 0.0)) throw TrainError("NB smoothing must be positive");
    const std::size_t k = classes.size();
    const std::size_t dim = features.front().dim;

    NBModel m;
    m.classes = classes;
    m.alpha = alpha;
    std::vector<double> class_mass(k, 0.0);
    std::vector<std::vector<double>> counts(k, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < features.size(); ++i) {
        for (std::size_t y = 0; y < k; ++y) {
            const double w = soft_labels[i][y];
            if (w == 0.0) continue;
            class_mass[y] += w;
            for (const auto& [f, x] : features[i].entries)
                if (x > 0.0) counts[y][f] += w * x;
        }
    }
    const double total = std::accumulate(class_mass.begin(), class_mass.end(), 0.0);
    m.log_prior.resize(k);
    m.log_likelihood.assign(k, std::vector<double>(dim, 0.0));
    for (std::size_t y = 0; y < k; ++y) {
        m.log_prior[y] = std::log((class_mass[y] + alpha) / (total + alpha * static_cast<double>(k)));
        const double row = std::accumulate(counts[y].begin(), counts[y].end(), 0.0);
        const double denom = std::log(row + alpha * static_cast<double>(dim));
        for (std::size_t f = 0; f < dim; ++f) m.log_likelihood[y][f] = std::log(counts[y][f] + alpha) - denom;
    }
    return m;
}

LRGradient lr_loss_and_gradient(const LRModel& model, std::span<const FeatureVector> features,
                                std::span<const std::vector<double>> soft_labels) {
    const std::size_t k = model.classes.size();
    const std::size_t dim = model.bias.empty() ? 0 : model.weights.front().size();
    LRGradient g;
    g.d_weights.assign(k, std::vector<double>(dim, 0.0));
    g.d_bias.assign(k, 0.0);
    const double inv_m = 1.0 / static_cast<double>(features.size());

    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto p = predict(model, features[i]);
        for (std::size_t y = 0; y < k; ++y) {
            const double target = soft_labels[i][y];
            if (target > 0.0) g.loss -= inv_m * target * std::log(std::max(p[y], 1e-300));
            const double delta = inv_m * (p[y] - target);
            g.d_bias[y] += delta;
            for (const auto& [f, x] : features[i].entries) g.d_weights[y][f] += delta * x;
        }
    }
    for (std::size_t y = 0; y < k; ++y)
        for (std::size_t f = 0; f < dim; ++f) {
            const double w = model.weights[y][f];
            g.loss += 0.5 * model.l2 * w * w;
            g.d_weights[y][f] += model.l2 * w;
        }
    return g;
}

LRModel train_lr(std::span<const FeatureVector> features, std::span<const std::vector<double>> soft_labels,
                 const std::vector<std::string>& classes, const LRConfig& cfg) {
    check_training_input(features, soft_labels, classes);
    if (!(cfg.learning_rate > 0.0) || cfg.l2 < 0.0 || cfg.epochs < 0) throw TrainError("invalid LR configuration");
    const std::size_t k = classes.size();
    const std::size_t dim = features.front().dim;

    LRModel m;
    m.classes = classes;
    m.l2 = cfg.l2;
    m.weights.assign(k, std::vector<double>(dim, 0.0));
    m.bias.assign(k, 0.0);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto g = lr_loss_and_gradient(m, features, soft_labels);
        if (!std::isfinite(g.loss)) throw TrainError("LR loss became non-finite at epoch " + std::to_string(epoch));
        m.loss_history.push_back(g.loss);
        for (std::size_t y = 0; y < k; ++y) {
            m.bias[y] -= cfg.learning_rate * g.d_bias[y];
            for (std::size_t f = 0; f < dim; ++f) m.weights[y][f] -= cfg.learning_rate * g.d_weights[y][f];
        }
    }
    m.final_loss = lr_loss_and_gradient(m, features, soft_labels).loss;
    if (!std::isfinite(m.final_loss)) throw TrainError("LR loss became non-finite");
    m.loss_history.push_back(m.final_loss);
    return m;
}

namespace {
void check_dim(const FeatureVector& fv, std::size_t dim) {
    if (fv.dim != dim) throw ModelError("feature vector has dimension " + std::to_string(fv.dim) + ", model expects " + std::to_string(dim));
}
}  // namespace

std::vector<double> predict(const NBModel& model, const FeatureVector& fv) {
    check_dim(fv, model.log_likelihood.empty() ? 0 : model.log_likelihood.front().size());
    std::vector<double> z = model.log_prior;
    for (std::size_t y = 0; y < z.size(); ++y)
        for (const auto& [f, x] : fv.entries)
            if (x > 0.0) z[y] += x * model.log_likelihood[y][f];
    return softmax(std::move(z));
}

std::vector<double> predict(const LRModel& model, const FeatureVector& fv) {
    check_dim(fv, model.weights.empty() ? 0 : model.weights.front().size());
    std::vector<double> z = model.bias;
    for (std::size_t y = 0; y < z.size(); ++y)
        for (const auto& [f, x] : fv.entries) z[y] += model.weights[y][f] * x;
    return softmax(std::move(z));
}

std::vector<double> predict(const Classifier& model, const FeatureVector& fv) {
    return std::visit([&](const auto& m) { return predict(m, fv); }, model);
}

const std::vector<std::string>& classes_of(const Classifier& model) {
    return std::visit([](const auto& m) -> const std::vector<std::string>& { return m.classes; }, model);
}

std::size_t argmax(std::span<const double> xs) {
    return static_cast<std::size_t>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

void annotate_kb(FactStore& store, const std::map<Term, std::string>& predictions, Task task,
                 const Taxonomy& taxonomy) {
    const auto labels = task == Task::Table ? taxonomy.table_labels() : taxonomy.column_labels();
    const std::set<std::string> allowed(labels.begin(), labels.end());
    for (const auto& [item, cls] : predictions)
        if (!allowed.count(cls))
            throw ModelError("class '" + cls + "' is not a " + std::string(task_name(task)) + " type");

    const Term type = vocab::rdf_type();
    for (const auto& [item, cls] : predictions) {
        for (const auto& label : labels) store.erase({item, type, vocab::local(label)});
        store.insert({item, type, vocab::local(cls)});
    }
}

nlohmann::json to_json(const Vocabulary& v) {
    nlohmann::json sources = nlohmann::json::array();
    for (std::size_t s = 0; s < v.index.size(); ++s) {
        std::vector<std::string> ordered(v.index[s].size());
        std::size_t base = v.index[s].empty() ? 0 : SIZE_MAX;
        for (const auto& [g, idx] : v.index[s]) base = std::min(base, idx);
        for (const auto& [g, idx] : v.index[s]) ordered[idx - base] = g;
        sources.push_back({{"name", v.source_names[s]}, {"ngrams", ordered}});
    }
    return nlohmann::json{{"task", task_name(v.task)}, {"n_docs", v.n_docs},           {"sources", sources},
                          {"idf", v.idf},           {"numeric_min", v.numeric_min}, {"numeric_max", v.numeric_max}};
}

Vocabulary vocabulary_from_json(const nlohmann::json& j) {
    try {
        Vocabulary v;
        v.task = task_from_name(j.at("task").get<std::string>());
        v.n_docs = j.at("n_docs").get<std::size_t>();
        v.idf = j.at("idf").get<std::vector<double>>();
        v.numeric_min = j.at("numeric_min").get<std::array<double, 6>>();
        v.numeric_max = j.at("numeric_max").get<std::array<double, 6>>();
        std::size_t next = 0;
        for (const auto& s : j.at("sources")) {
            v.source_names.push_back(s.at("name").get<std::string>());
            std::map<std::string, std::size_t> idx;
            for (const auto& g : s.at("ngrams")) idx.emplace(g.get<std::string>(), next++);
            v.index.push_back(std::move(idx));
        }
        if (next != v.idf.size()) throw ModelError("vocabulary idf length mismatch");
        return v;
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed vocabulary: ") + e.what());
    }
}

nlohmann::json to_json(const Classifier& c) {
    if (const auto* nb = std::get_if<NBModel>(&c)) {
        return nlohmann::json{{"kind", "nb"},
                              {"classes", nb->classes},
                              {"alpha", nb->alpha},
                              {"log_prior", nb->log_prior},
                              {"log_likelihood", nb->log_likelihood}};
    }
    const auto& lr = std::get<LRModel>(c);
    return nlohmann::json{{"kind", "lr"},          {"classes", lr.classes},       {"l2", lr.l2},
                          {"weights", lr.weights}, {"bias", lr.bias},             {"final_loss", lr.final_loss},
                          {"loss_history", lr.loss_history}};
}

Classifier classifier_from_json(const nlohmann::json& j) {
    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "nb") {
            NBModel m;
            m.classes = j.at("classes").get<std::vector<std::string>>();
            m.alpha = j.at("alpha").get<double>();
            m.log_prior = j.at("log_prior").get<std::vector<double>>();
            m.log_likelihood = j.at("log_likelihood").get<std::vector<std::vector<double>>>();
            return m;
        }
        if (kind == "lr") {
            LRModel m;
            m.classes = j.at("classes").get<std::vector<std::string>>();
            m.l2 = j.at("l2").get<double>();
            m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
            m.bias = j.at("bias").get<std::vector<double>>();
            m.final_loss = j.at("final_loss").get<double>();
            m.loss_history = j.value("loss_history", std::vector<double>{});
            return m;
        }
        throw ModelError("unknown classifier kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("malformed classifier: ") + e.what());
    }
}

}  // namespace tablekb
