#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace retrieval {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or unreadable configuration resource (stopword list, stem table, config file).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data: corpus, queries, qrels, run and index files.
class DataError : public Error {
public:
    using Error::Error;
};

/// A scorer failed to produce a valid score vector. Carries the scorer name and,
/// when raised during reranking, the index of the failing batch.
class ScorerError : public Error {
public:
    static constexpr std::size_t kNoBatch = static_cast<std::size_t>(-1);

    ScorerError(std::string scorer, const std::string& message, std::size_t batch = kNoBatch)
        : Error(format(scorer, message, batch)), scorer_(std::move(scorer)), detail_(message), batch_(batch)
    {}

    const std::string& scorer() const noexcept { return scorer_; }
    /// The message without the scorer/batch prefix.
    const std::string& detail() const noexcept { return detail_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    static std::string format(const std::string& scorer, const std::string& message, std::size_t batch)
    {
        std::string out = "scorer '" + scorer + "'";
        if (batch != kNoBatch) {
            out += " batch " + std::to_string(batch);
        }
        return out + ": " + message;
    }

    std::string scorer_;
    std::string detail_;
    std::size_t batch_;
};

}  // namespace retrieval
