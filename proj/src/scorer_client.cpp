#include "retrieval/scorer_client.hpp"

#include "retrieval/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

namespace retrieval {

namespace wire {

std::string encode_score_request(std::span<const ScorePair> pairs)
{
    nlohmann::json items = nlohmann::json::array();
    for (const auto& pair : pairs) {
        items.push_back({{"query", pair.query}, {"passage", pair.passage}});
    }
    return nlohmann::json{{"pairs", std::move(items)}}.dump();
}

std::vector<double> decode_score_response(std::string_view body, std::size_t expected, const std::string& scorer)
{
    const auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ScorerError(scorer, "malformed response body");
    }
    const auto it = doc.find("scores");
    if (it == doc.end() || !it->is_array()) {
        throw ScorerError(scorer, "response has no \"scores\" array");
    }
    if (it->size() != expected) {
        throw ScorerError(scorer, "length mismatch: sent " + std::to_string(expected) + " pairs, received " +
                                      std::to_string(it->size()) + " scores");
    }
    std::vector<double> scores;
    scores.reserve(expected);
    for (const auto& value : *it) {
        if (!value.is_number()) {
            throw ScorerError(scorer, "non-numeric score at position " + std::to_string(scores.size()));
        }
        const auto score = value.get<double>();
        if (!(score >= 0.0 && score <= 1.0)) {
            throw ScorerError(scorer, "score " + value.dump() + " at position " + std::to_string(scores.size()) +
                                          " is outside [0, 1]");
        }
        scores.push_back(score);
    }
    return scores;
}

}  // namespace wire

Endpoint parse_endpoint(std::string_view url)
{
    const auto scheme = url.find("://");
    if (scheme == std::string_view::npos || url.substr(0, scheme) != "http") {
        throw ConfigError("scorer endpoint must be an http:// URL: " + std::string(url));
    }
    const auto path = url.find('/', scheme + 3);
    Endpoint out;
    out.base = std::string(url.substr(0, path));
    if (out.base.size() <= scheme + 3) {
        throw ConfigError("scorer endpoint has no host: " + std::string(url));
    }
    if (path != std::string_view::npos) {
        out.prefix = std::string(url.substr(path));
        while (!out.prefix.empty() && out.prefix.back() == '/') {
            out.prefix.pop_back();
        }
    }
    return out;
}

namespace {

httplib::Client make_client(const Endpoint& endpoint, std::chrono::milliseconds timeout)
{
    httplib::Client client(endpoint.base);
    const auto seconds = static_cast<time_t>(timeout.count() / 1000);
    const auto micros = static_cast<time_t>((timeout.count() % 1000) * 1000);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    return client;
}

class SemaphoreGuard {
public:
    explicit SemaphoreGuard(std::counting_semaphore<>& sem) : sem_(sem) { sem_.acquire(); }
    ~SemaphoreGuard() { sem_.release(); }
    SemaphoreGuard(const SemaphoreGuard&) = delete;
    SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

private:
    std::counting_semaphore<>& sem_;
};

}  // namespace

RemoteScorer::RemoteScorer(const ScorerHandle& handle)
    : handle_(handle),
      endpoint_(parse_endpoint(handle.endpoint)),
      in_flight_(std::make_unique<std::counting_semaphore<>>(std::max<std::ptrdiff_t>(1, handle.max_in_flight)))
{
    if (handle_.max_batch == 0) {
        throw ConfigError("scorer '" + handle_.name + "' max_batch must be positive");
    }
}

RemoteScorer::~RemoteScorer() = default;

std::vector<double> RemoteScorer::score_batch(std::span<const ScorePair> pairs) const
{
    if (pairs.empty()) {
        return {};
    }
    std::vector<double> scores;
    scores.reserve(pairs.size());
    for (std::size_t start = 0; start < pairs.size(); start += handle_.max_batch) {
        const auto chunk = post_chunk(pairs.subspan(start, std::min(handle_.max_batch, pairs.size() - start)));
        scores.insert(scores.end(), chunk.begin(), chunk.end());
    }
    return scores;
}

std::vector<double> RemoteScorer::post_chunk(std::span<const ScorePair> pairs) const
{
    const auto body = wire::encode_score_request(pairs);
    const auto path = endpoint_.prefix + "/score";
    std::string last_error;
    for (unsigned attempt = 0; attempt <= handle_.retries; ++attempt) {
        if (attempt > 0) {
            spdlog::warn("scorer '{}': retrying ({}/{}) after: {}", handle_.name, attempt, handle_.retries, last_error);
        }
        httplib::Result result = [&] {
            SemaphoreGuard guard(*in_flight_);
            auto client = make_client(endpoint_, handle_.timeout);
            return client.Post(path, body, "application/json");
        }();
        if (!result) {
            last_error = "transport failure: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status >= 500) {
            last_error = "HTTP status " + std::to_string(result->status);
            continue;
        }
        if (result->status < 200 || result->status >= 300) {
            throw ScorerError(handle_.name, "HTTP status " + std::to_string(result->status) + ": " + result->body);
        }
        return wire::decode_score_response(result->body, pairs.size(), handle_.name);
    }
    throw ScorerError(handle_.name, "giving up after " + std::to_string(handle_.retries + 1) + " attempts: " + last_error);
}

std::string RemoteScorer::health() const
{
    auto client = make_client(endpoint_, handle_.timeout);
    auto result = client.Get(endpoint_.prefix + "/health");
    if (!result) {
        throw ScorerError(handle_.name, "health check failed: " + httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        throw ScorerError(handle_.name, "health check returned HTTP " + std::to_string(result->status));
    }
    const auto doc = nlohmann::json::parse(result->body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || doc.value("status", "") != "ok") {
        throw ScorerError(handle_.name, "unhealthy response: " + result->body);
    }
    return doc.value("model", "");
}

}  // namespace retrieval
