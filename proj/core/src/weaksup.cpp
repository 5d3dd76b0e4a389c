#include "tablekb/weaksup.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tablekb/errors.hpp"
#include "tablekb/unicode.hpp"

namespace tablekb {

LabelSpace::LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
    std::set<std::string> seen;
    for (const auto& n : names_)
        if (!seen.insert(n).second) throw ModelError("duplicate label '" + n + "'");
}

std::optional<std::size_t> LabelSpace::index(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

LabelingFunction parse_labeling_function(std::string name, std::string_view text) {
    LabelingFunction lf;
    lf.name = std::move(name);
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        std::string t = unicode::trim(line);
        if (t.empty()) continue;
        static constexpr std::string_view kTag = "# label:";
        if (!t.starts_with(kTag)) throw LfError("labeling function '" + lf.name + "': first line must be '# label: <Class>'");
        lf.label = unicode::trim(t.substr(kTag.size()));
        break;
    }
    if (lf.label.empty()) throw LfError("labeling function '" + lf.name + "': missing label");
    try {
        lf.query = parse_query(text);
    } catch (const ParseError& e) {
        throw LfError("labeling function '" + lf.name + "': " + e.what());
    }
    return lf;
}

std::vector<LabelingFunction> load_labeling_functions(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw LfError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".rq" || ext == ".sparql")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<LabelingFunction> out;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        out.push_back(parse_labeling_function(f.stem().string(), buf.str()));
    }
    return out;
}

std::vector<int> apply_lf(const LabelingFunction& lf, const FactStore& store, std::span<const Term> items,
                          const LabelSpace& labels) {
    auto label = labels.index(lf.label);
    if (!label) throw LfError("labeling function '" + lf.name + "': label '" + lf.label + "' is not in the label space");
    std::vector<Binding> answers;
    try {
        answers = match_bgp(store, lf.query);
    } catch (const QueryError& e) {
        throw LfError("labeling function '" + lf.name + "': " + e.what());
    }
    std::set<Term> hits;
    for (const auto& row : answers) hits.insert(row.front());
    std::vector<int> out(items.size(), kAbstain);
    for (std::size_t i = 0; i < items.size(); ++i)
        if (hits.count(store.canonical(items[i]))) out[i] = static_cast<int>(*label);
    return out;
}

LabelMatrix build_matrix(const std::vector<LabelingFunction>& lfs, std::span<const Term> items,
                         const FactStore& store, const LabelSpace& labels) {
    if (lfs.empty()) throw LfError("no labeling functions");
    if (items.empty()) throw LfError("no items to label");
    std::set<std::string> names;
    for (const auto& lf : lfs)
        if (!names.insert(lf.name).second) throw LfError("duplicate labeling function name '" + lf.name + "'");

    LabelMatrix m;
    m.items.assign(items.begin(), items.end());
    m.labels = labels;
    m.votes.assign(items.size(), std::vector<int>(lfs.size(), kAbstain));
    for (std::size_t j = 0; j < lfs.size(); ++j) {
        m.lfs.push_back(lfs[j].name);
        auto column = apply_lf(lfs[j], store, items, labels);
        for (std::size_t i = 0; i < items.size(); ++i) m.votes[i][j] = column[i];
    }
    return m;
}

namespace {
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}
}  // namespace

std::string label_matrix_csv(const LabelMatrix& m) {
    std::string out = "item";
    for (const auto& lf : m.lfs) out += "," + csv_field(lf);
    out += '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out += csv_field(m.items[i].text());
        for (int v : m.votes[i]) {
            out += ',';
            if (v != kAbstain) out += csv_field(m.labels.name(static_cast<std::size_t>(v)));
        }
        out += '\n';
    }
    return out;
}

LabelMatrix label_matrix_from_csv(std::string_view csv, const LabelSpace& labels) {
    // Simple reader for the format written above (no quoted newlines).
    auto split = [](const std::string& line) {
        std::vector<std::string> fields;
        std::string f;
        bool q = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (q) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    f += '"';
                    ++i;
                } else if (c == '"') {
                    q = false;
                } else {
                    f += c;
                }
            } else if (c == '"') {
                q = true;
            } else if (c == ',') {
                fields.push_back(std::move(f));
                f.clear();
            } else {
                f += c;
            }
        }
        fields.push_back(std::move(f));
        return fields;
    };

    std::istringstream in{std::string(csv)};
    std::string line;
    LabelMatrix m;
    m.labels = labels;
    if (!std::getline(in, line)) throw LfError("empty label matrix");
    auto header = split(line);
    if (header.empty() || header[0] != "item") throw LfError("label matrix header must start with 'item'");
    m.lfs.assign(header.begin() + 1, header.end());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split(line);
        if (fields.size() != header.size())
            throw LfError("label matrix line " + std::to_string(line_no) + ": wrong number of fields");
        m.items.push_back(Term::iri(fields[0]));
        std::vector<int> row;
        for (std::size_t j = 1; j < fields.size(); ++j) {
            if (fields[j].empty()) {
                row.push_back(kAbstain);
                continue;
            }
            auto idx = labels.index(fields[j]);
            if (!idx) throw LfError("label matrix line " + std::to_string(line_no) + ": unknown label " + fields[j]);
            row.push_back(static_cast<int>(*idx));
        }
        m.votes.push_back(std::move(row));
    }
    return m;
}

int majority_vote(std::span<const int> row) {
    std::map<int, int> counts;
    for (int v : row)
        if (v != kAbstain) ++counts[v];
    int best = kAbstain;
    int best_count = 0;
    bool tied = false;
    for (const auto& [label, count] : counts) {
        if (count > best_count) {
            best = label;
            best_count = count;
            tied = false;
        } else if (count == best_count) {
            tied = true;
        }
    }
    return tied ? kAbstain : best;
}

std::vector<int> majority_vote(const LabelMatrix& m) {
    std::vector<int> out;
    out.reserve(m.rows());
    for (const auto& row : m.votes) out.push_back(majority_vote(row));
    return out;
}

namespace {

void validate_config(const LabelModelConfig& cfg) {
    if (cfg.max_iters < 0) throw ModelError("max_iters must be non-negative");
    if (!(cfg.tol >= 0.0)) throw ModelError("tol must be non-negative");
    if (!(cfg.smoothing > 0.0)) throw ModelError("smoothing must be positive");
    if (!(cfg.prior_accuracy > 0.0 && cfg.prior_accuracy < 1.0))
        throw ModelError("prior_accuracy must lie in (0, 1)");
}

// Dirichlet pseudo-count of a Full confusion cell. Each row gets s*K in
// total, split like the one-coin prior: prior_accuracy on the diagonal, the
// rest spread over the K-1 errors.
double full_pseudo_count(const LabelModelConfig& cfg, std::size_t k, bool diagonal) {
    const double total = cfg.smoothing * static_cast<double>(k);
    return diagonal ? total * cfg.prior_accuracy : total * (1.0 - cfg.prior_accuracy) / static_cast<double>(k - 1);
}

using Posteriors = std::vector<std::vector<double>>;

// Soft majority vote: vote fractions, uniform for unvoted rows.
Posteriors initial_posteriors(const LabelMatrix& m) {
    const std::size_t k = m.labels.size();
    Posteriors q(m.rows(), std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double total = 0.0;
        for (int v : m.votes[i])
            if (v != kAbstain) {
                q[i][static_cast<std::size_t>(v)] += 1.0;
                total += 1.0;
            }
        for (auto& x : q[i]) x = total > 0 ? x / total : 1.0 / static_cast<double>(k);
    }
    return q;
}

LabelModel m_step(const LabelMatrix& m, const Posteriors& q, const LabelModelConfig& cfg) {
    const std::size_t k = m.labels.size();
    const std::size_t n = m.cols();
    const double kd = static_cast<double>(k);
    const double s = cfg.smoothing;
    const double rows = static_cast<double>(m.rows());

    LabelModel model;
    model.labels = m.labels;
    model.priors.assign(k, 1.0 / kd);
    if (cfg.learn_priors) {
        for (std::size_t y = 0; y < k; ++y) {
            double mass = 0.0;
            for (const auto& qi : q) mass += qi[y];
            model.priors[y] = (mass + s) / (rows + kd * s);
        }
    }

    model.confusion.assign(n, std::vector<std::vector<double>>(k, std::vector<double>(k, 0.0)));
    model.abstain_rate.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double abstains = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i)
            if (m.votes[i][j] == kAbstain) abstains += 1.0;
        model.abstain_rate[j] = (abstains + s) / (rows + 2.0 * s);

        auto& conf = model.confusion[j];
        if (k == 1) {
            conf[0][0] = 1.0;
            continue;
        }
        if (cfg.confusion == LabelModelConfig::Confusion::Full) {
            std::vector<double> row_mass(k, 0.0);
            for (std::size_t i = 0; i < m.rows(); ++i) {
                int v = m.votes[i][j];
                if (v == kAbstain) continue;
                for (std::size_t y = 0; y < k; ++y) {
                    conf[y][static_cast<std::size_t>(v)] += q[i][y];
                    row_mass[y] += q[i][y];
                }
            }
            for (std::size_t y = 0; y < k; ++y)
                for (std::size_t v = 0; v < k; ++v)
                    conf[y][v] = (conf[y][v] + full_pseudo_count(cfg, k, y == v)) / (row_mass[y] + kd * s);
        } else {
            const double a = s * kd * cfg.prior_accuracy;
            const double b = s * kd * (1.0 - cfg.prior_accuracy);
            double correct = 0.0;
            double voted = 0.0;
            for (std::size_t i = 0; i < m.rows(); ++i) {
                int v = m.votes[i][j];
                if (v == kAbstain) continue;
                correct += q[i][static_cast<std::size_t>(v)];
                voted += 1.0;
            }
            const double acc = (correct + a) / (voted + a + b);
            for (std::size_t y = 0; y < k; ++y)
                for (std::size_t v = 0; v < k; ++v) conf[y][v] = y == v ? acc : (1.0 - acc) / (kd - 1.0);
        }
    }
    return model;
}

std::vector<double> log_joint(const LabelModel& model, std::span<const int> row) {
    const std::size_t k = model.labels.size();
    std::vector<double> lp(k);
    for (std::size_t y = 0; y < k; ++y) {
        double acc = std::log(model.priors[y]);
        for (std::size_t j = 0; j < row.size(); ++j) {
            int v = row[j];
            if (v == kAbstain) continue;
            acc += std::log(model.confusion[j][y][static_cast<std::size_t>(v)]);
        }
        lp[y] = acc;
    }
    return lp;
}

double log_sum_exp(const std::vector<double>& xs) {
    double mx = *std::max_element(xs.begin(), xs.end());
    double sum = 0.0;
    for (double x : xs) sum += std::exp(x - mx);
    return mx + std::log(sum);
}

double max_param_change(const LabelModel& a, const LabelModel& b) {
    double d = 0.0;
    for (std::size_t y = 0; y < a.priors.size(); ++y) d = std::max(d, std::abs(a.priors[y] - b.priors[y]));
    for (std::size_t j = 0; j < a.confusion.size(); ++j)
        for (std::size_t y = 0; y < a.confusion[j].size(); ++y)
            for (std::size_t v = 0; v < a.confusion[j][y].size(); ++v)
                d = std::max(d, std::abs(a.confusion[j][y][v] - b.confusion[j][y][v]));
    return d;
}

}  // namespace

std::vector<double> posterior(const LabelModel& model, std::span<const int> row) {
    if (row.size() != model.confusion.size()) throw ModelError("vote row width does not match the model");
    auto lp = log_joint(model, row);
    const double z = log_sum_exp(lp);
    for (auto& x : lp) x = std::exp(x - z);
    return lp;
}

double label_model_objective(const LabelModel& model, const LabelMatrix& m, const LabelModelConfig& cfg) {
    const std::size_t k = model.labels.size();
    const double kd = static_cast<double>(k);
    const double s = cfg.smoothing;
    double obj = 0.0;
    for (const auto& row : m.votes) obj += log_sum_exp(log_joint(model, row));

    for (std::size_t j = 0; j < m.cols(); ++j) {
        double abstains = 0.0;
        for (const auto& row : m.votes)
            if (row[j] == kAbstain) abstains += 1.0;
        const double a = model.abstain_rate[j];
        obj += (abstains + s) * std::log(a) + (static_cast<double>(m.rows()) - abstains + s) * std::log1p(-a);

        if (k == 1) continue;
        const auto& conf = model.confusion[j];
        if (cfg.confusion == LabelModelConfig::Confusion::Full) {
            for (std::size_t y = 0; y < k; ++y)
                for (std::size_t v = 0; v < k; ++v) obj += full_pseudo_count(cfg, k, y == v) * std::log(conf[y][v]);
        } else {
            const double acc = conf[0][0];
            obj += s * kd * cfg.prior_accuracy * std::log(acc) + s * kd * (1.0 - cfg.prior_accuracy) * std::log1p(-acc);
        }
    }
    if (cfg.learn_priors)
        for (double p : model.priors) obj += s * std::log(p);
    return obj;
}

LabelModel fit_label_model(const LabelMatrix& m, const LabelModelConfig& cfg) {
    validate_config(cfg);
    if (m.labels.size() == 0) throw ModelError("empty label space");
    bool any_vote = false;
    for (const auto& row : m.votes) {
        if (row.size() != m.cols()) throw ModelError("ragged label matrix");
        for (int v : row) {
            if (v == kAbstain) continue;
            if (v < 0 || static_cast<std::size_t>(v) >= m.labels.size()) throw ModelError("vote outside the label space");
            any_vote = true;
        }
    }
    if (!any_vote) throw ModelError("label matrix has no votes: every entry abstains");

    LabelModel model = m_step(m, initial_posteriors(m), cfg);
    model.objective_trace.push_back(label_model_objective(model, m, cfg));

    Posteriors q(m.rows());
    for (int it = 0; it < cfg.max_iters; ++it) {
        for (std::size_t i = 0; i < m.rows(); ++i) q[i] = posterior(model, m.votes[i]);
        LabelModel next = m_step(m, q, cfg);
        next.objective_trace = std::move(model.objective_trace);
        next.objective_trace.push_back(label_model_objective(next, m, cfg));
        next.iterations = it + 1;
        const double change = max_param_change(model, next);
        model = std::move(next);
        if (change < cfg.tol) break;
    }
    return model;
}

nlohmann::json to_json(const LabelModel& model) {
    return nlohmann::json{
        {"labels", model.labels.names()},
        {"priors", model.priors},
        {"confusion", model.confusion},
        {"abstain_rate", model.abstain_rate},
        {"iterations", model.iterations},
        {"objective_trace", model.objective_trace},
    };
}

}  // namespace tablekb
