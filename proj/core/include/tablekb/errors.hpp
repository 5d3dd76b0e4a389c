#pragma once

#include <stdexcept>
#include <string>

namespace tablekb {

// Base class for every error raised on bad input data. The CLI maps these
// to exit code 2; anything else escaping a command is an internal error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define TABLEKB_DEFINE_ERROR(Name)            \
    class Name : public Error {               \
    public:                                   \
        using Error::Error;                   \
    }

TABLEKB_DEFINE_ERROR(StoreError);
TABLEKB_DEFINE_ERROR(ParseError);
TABLEKB_DEFINE_ERROR(QueryError);
TABLEKB_DEFINE_ERROR(IngestError);
TABLEKB_DEFINE_ERROR(TaxonomyError);
TABLEKB_DEFINE_ERROR(LfError);
TABLEKB_DEFINE_ERROR(ModelError);
TABLEKB_DEFINE_ERROR(TrainError);
TABLEKB_DEFINE_ERROR(RuleError);
TABLEKB_DEFINE_ERROR(ChaseError);
TABLEKB_DEFINE_ERROR(EvalError);
TABLEKB_DEFINE_ERROR(ConfigError);

#undef TABLEKB_DEFINE_ERROR

class MetadataError : public Error {
public:
    MetadataError(std::string paper_id, const std::string& what)
        : Error("metadata for paper '" + paper_id + "': " + what), paper_id_(std::move(paper_id)) {}

    const std::string& paper_id() const { return paper_id_; }

private:
    std::string paper_id_;
};

// Wraps a failure inside one pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, std::string item, const std::string& what)
        : Error("stage '" + stage + "'" + (item.empty() ? "" : " item '" + item + "'") + ": " + what),
          stage_(std::move(stage)), item_(std::move(item)) {}

    const std::string& stage() const { return stage_; }
    const std::string& item() const { return item_; }

private:
    std::string stage_;
    std::string item_;
};

}  // namespace tablekb
