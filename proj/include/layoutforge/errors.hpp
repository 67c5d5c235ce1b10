#pragma once

#include <stdexcept>
#include <string>

namespace layoutforge {

// Base class for all toolkit errors so callers can catch the whole family.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input file; carries the index of the offending record/task.
struct ParseError : Error {
    ParseError(const std::string& msg, long index = -1)
        : Error(index >= 0 ? msg + " (record " + std::to_string(index) + ")" : msg),
          record_index(index) {}
    long record_index;
};

// A label name outside the 8-label taxonomy.
struct UnknownLabelError : Error {
    explicit UnknownLabelError(const std::string& name)
        : Error("unknown label: " + name), label_name(name) {}
    std::string label_name;
};

struct EmptyCorpusError : Error {
    EmptyCorpusError() : Error("empty corpus") {}
};

struct EmptyLabelsError : Error {
    EmptyLabelsError() : Error("empty label list") {}
};

struct EmptyClusterError : Error {
    EmptyClusterError() : Error("empty point cluster") {}
};

struct EmptyPredictionsError : Error {
    EmptyPredictionsError() : Error("no predictions to score") {}
};

struct EmptyBatchError : Error {
    EmptyBatchError() : Error("empty prompt batch") {}
};

struct BatchTooLargeError : Error {
    BatchTooLargeError(std::size_t size, std::size_t limit)
        : Error("classification batch of " + std::to_string(size) +
                " strings exceeds limit " + std::to_string(limit)) {}
};

// A model answer that cannot be aligned with the requested labels.
struct AnswerParseError : Error {
    enum class Kind { MalformedLine, UnknownLabel, MissingLabel };
    AnswerParseError(Kind k, const std::string& msg, long line = -1)
        : Error(msg), kind(k), line_number(line) {}
    Kind kind;
    long line_number;
};

}  // namespace layoutforge
