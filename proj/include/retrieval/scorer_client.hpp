#pragma once

#include "retrieval/scorer.hpp"

#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace retrieval {

/// Wire protocol of a pair-scoring service:
///
///   POST /score   {"pairs":[{"query":"...","passage":"..."}, ...]}
///              -> {"scores":[0.0..1.0, ...]}
///   GET  /health  -> {"status":"ok","model":"<name>"}
namespace wire {

std::string encode_score_request(std::span<const ScorePair> pairs);

/// Validates the response body against the request size. Throws ScorerError naming
/// `scorer` on malformed JSON, a length mismatch, or a score outside [0, 1].
std::vector<double> decode_score_response(std::string_view body, std::size_t expected, const std::string& scorer);

}  // namespace wire

/// Splits "http://host:port/prefix" into the scheme+authority and the path prefix.
struct Endpoint {
    std::string base;
    std::string prefix;
};
Endpoint parse_endpoint(std::string_view url);

/// Scorer backed by a remote scoring service. Large requests are split into chunks of
/// at most `max_batch` pairs. Transport failures and 5xx responses are retried up to
/// `retries` times; any other failure is reported immediately. At most
/// `max_in_flight` requests are outstanding at once across all threads.
class RemoteScorer final : public Scorer {
public:
    explicit RemoteScorer(const ScorerHandle& handle);
    ~RemoteScorer() override;

    const std::string& name() const noexcept override { return handle_.name; }
    std::vector<double> score_batch(std::span<const ScorePair> pairs) const override;

    /// GET /health; returns the reported model name.
    std::string health() const;

private:
    std::vector<double> post_chunk(std::span<const ScorePair> pairs) const;

    ScorerHandle handle_;
    Endpoint endpoint_;
    mutable std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

}  // namespace retrieval
