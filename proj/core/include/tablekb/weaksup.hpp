#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tablekb/bgp.hpp"

namespace tablekb {

// Ordered set of class names; labels are referred to by index.
class LabelSpace {
public:
    LabelSpace() = default;
    explicit LabelSpace(std::vector<std::string> names);

    std::size_t size() const { return names_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const std::vector<std::string>& names() const { return names_; }
    std::optional<std::size_t> index(std::string_view name) const;

    friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

private:
    std::vector<std::string> names_;
};

inline constexpr int kAbstain = -1;

// A query plus the class it votes for. The first projected variable of the
// query names the labelled item.
struct LabelingFunction {
    std::string name;
    std::string label;
    BgpQuery query;
};

// Parses a query file whose first non-blank line is "# label: <Class>".
LabelingFunction parse_labeling_function(std::string name, std::string_view text);

// Every *.rq / *.sparql file in dir, sorted by file name. The LF name is the
// file stem.
std::vector<LabelingFunction> load_labeling_functions(const std::filesystem::path& dir);

// items[i] -> index of lf.label when items[i] is among the answers, else
// kAbstain. Throws LfError when the query is invalid or the label is not
// in the label space.
std::vector<int> apply_lf(const LabelingFunction& lf, const FactStore& store, std::span<const Term> items,
                          const LabelSpace& labels);

// m x n matrix of votes over items x labeling functions.
struct LabelMatrix {
    std::vector<Term> items;
    std::vector<std::string> lfs;
    LabelSpace labels;
    std::vector<std::vector<int>> votes;  // votes[i][j]

    std::size_t rows() const { return items.size(); }
    std::size_t cols() const { return lfs.size(); }
};

LabelMatrix build_matrix(const std::vector<LabelingFunction>& lfs, std::span<const Term> items,
                         const FactStore& store, const LabelSpace& labels);

// CSV: header "item,<lf names...>", one row per item, abstain as empty.
std::string label_matrix_csv(const LabelMatrix& m);
LabelMatrix label_matrix_from_csv(std::string_view csv, const LabelSpace& labels);

// Plurality label among non-abstain votes; kAbstain when there are no votes
// or the plurality is tied.
int majority_vote(std::span<const int> row);
std::vector<int> majority_vote(const LabelMatrix& m);

struct LabelModelConfig {
    enum class Confusion {
        OneCoin,  // per-LF accuracy, errors spread evenly over the other classes
        Full,     // unrestricted K x K confusion table per LF
    };
    Confusion confusion = Confusion::OneCoin;
    int max_iters = 200;
    double tol = 1e-8;
    // Pseudo-counts: smoothing * K per LF and true class, split by
    // prior_accuracy between the correct vote and the errors. Also smooths
    // abstain rates and learned priors.
    double smoothing = 1.0;
    double prior_accuracy = 0.7;
    bool learn_priors = false;  // uniform class balance otherwise
};

// Generative model of the votes: class priors, and per labeling function a
// confusion table P(vote = y' | true = y, not abstained) and an abstain
// rate. Abstains are missing at random.
struct LabelModel {
    LabelSpace labels;
    std::vector<double> priors;                               // K
    std::vector<std::vector<std::vector<double>>> confusion;  // n x K x K, rows sum to 1
    std::vector<double> abstain_rate;                         // n
    std::vector<double> objective_trace;                      // penalized log-likelihood per iteration
    int iterations = 0;
};

// EM over a conditionally independent (Dawid-Skene style) model, started
// from majority vote. objective_trace records the smoothed log-likelihood,
// which EM never decreases. Throws ModelError when every entry abstains.
LabelModel fit_label_model(const LabelMatrix& m, const LabelModelConfig& cfg);

// Normalized prior * prod_j P(vote_j | y) over the label space.
std::vector<double> posterior(const LabelModel& model, std::span<const int> row);

// Penalized log-likelihood of the votes under the model.
double label_model_objective(const LabelModel& model, const LabelMatrix& m, const LabelModelConfig& cfg);

nlohmann::json to_json(const LabelModel& model);

}  // namespace tablekb
