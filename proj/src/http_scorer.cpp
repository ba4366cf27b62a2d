#include <algorithm>
#include <cmath>
#include <future>

#include <httplib.h>

#include "nuggetscore/scorer_gateway.hpp"

namespace nuggetscore {

namespace {

constexpr std::size_t kMaxParallelRequests = 8;

// "http://host:port/path" -> ("http://host:port", "/path"); path defaults to /score.
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) return {url, "/score"};
    std::string path = url.substr(path_start);
    if (path == "/") path = "/score";
    return {url.substr(0, path_start), path};
}

} // namespace

HttpScorer::HttpScorer(std::string url, ScorerOptions options) : options_(options) {
    std::tie(base_, path_) = split_url(url);
    identity_ = "http:" + base_ + path_;
}

double HttpScorer::score(const ScorerRequest& request) {
    httplib::Client client(base_);
    const auto seconds = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout);
    client.set_connection_timeout(seconds);
    client.set_read_timeout(seconds);
    client.set_write_timeout(seconds);

    auto response = client.Post(path_, wire::encode_request(request, request.request_id),
                                "application/json");
    if (!response) {
        // Refused connections and expired deadlines both mean the scorer is unreachable.
        throw Error(ErrorCode::ScorerTimeout, "scorer at " + base_ + path_ +
                                                  " unreachable: " + httplib::to_string(response.error()));
    }

    wire::Response decoded;
    try {
        decoded = wire::decode_response(response->body);
    } catch (const Error& e) {
        throw Error(ErrorCode::ScorerProtocol,
                    "HTTP " + std::to_string(response->status) + " from " + base_ + ": " + e.what());
    }
    if (decoded.id != request.request_id) {
        throw Error(ErrorCode::ScorerProtocol, "response id '" + decoded.id +
                                                   "' does not match request '" +
                                                   request.request_id + "'");
    }
    if (decoded.error) throw Error(ErrorCode::ScorerRejected, decoded.error->message);
    if (response->status != 200) {
        throw Error(ErrorCode::ScorerProtocol,
                    "HTTP " + std::to_string(response->status) + " with a score body");
    }
    if (!std::isfinite(*decoded.score)) {
        throw Error(ErrorCode::NonFiniteScore, "scorer returned a non-finite score");
    }
    return *decoded.score;
}

std::vector<ScoreResult> HttpScorer::score_batch(std::span<const ScorerRequest> requests) {
    std::vector<ScoreResult> results(requests.size());
    for (std::size_t begin = 0; begin < requests.size(); begin += kMaxParallelRequests) {
        const std::size_t end = std::min(requests.size(), begin + kMaxParallelRequests);
        std::vector<std::future<void>> workers;
        for (std::size_t i = begin; i < end; ++i) {
            workers.push_back(std::async(std::launch::async, [this, &requests, &results, i] {
                ScoreResult& result = results[i];
                result.request_id = requests[i].request_id;
                try {
                    result.score = score(requests[i]);
                } catch (const Error& e) {
                    result.error = ScorerFault{e.code(), e.what()};
                }
            }));
        }
        for (auto& w : workers) w.get();
    }
    return results;
}

} // namespace nuggetscore
