#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nuggetscore/core_model.hpp"

namespace nuggetscore {

struct ScorerRequest {
    std::string request_id;
    std::string turn_text;
    std::vector<Utterance> context;
};

struct ScorerFault {
    ErrorCode code = ErrorCode::ScorerRejected;
    std::string message;
};

/// Exactly one of `score` / `error` is set.
struct ScoreResult {
    std::string request_id;
    std::optional<double> score;
    std::optional<ScorerFault> error;

    bool ok() const { return score.has_value(); }
};

enum class ScorerKind { Builtin, Exec, Http };

struct ScorerDescriptor {
    ScorerKind kind = ScorerKind::Builtin;
    /// Builtin spec ("constant:0.5"), command line, or URL.
    std::string target;
    /// Stable string used in cache keys and reports.
    std::string identity;
};

/// Accepts "builtin:<spec>", a bare builtin spec ("length", "table:f.json"),
/// "exec:<command>" and "http:<url>" (a literal "http://host:port" also works).
ScorerDescriptor parse_scorer_descriptor(std::string_view spec);

struct ScorerOptions {
    std::chrono::milliseconds timeout{std::chrono::seconds(30)};
};

/// A turn-level scorer s(.). Implementations must be safe for concurrent use.
class Scorer {
public:
    virtual ~Scorer() = default;

    virtual const std::string& identity() const = 0;

    /// Throws Error with ScorerTimeout, ScorerProtocol, ScorerRejected or
    /// NonFiniteScore.
    virtual double score(const ScorerRequest& request) = 0;

    /// One result per request, in input order. Failures are reported per entry.
    virtual std::vector<ScoreResult> score_batch(std::span<const ScorerRequest> requests);
};

// ---------------------------------------------------------------------------
// Builtin deterministic scorers
// ---------------------------------------------------------------------------

class ConstantScorer final : public Scorer {
public:
    explicit ConstantScorer(double value);
    const std::string& identity() const override { return identity_; }
    double score(const ScorerRequest& request) override;

private:
    double value_;
    std::string identity_;
};

/// w / (w + 20) where w is the whitespace-separated token count.
class LengthScorer final : public Scorer {
public:
    LengthScorer();
    const std::string& identity() const override { return identity_; }
    double score(const ScorerRequest& request) override;

    static std::size_t token_count(std::string_view text);

private:
    std::string identity_;
};

/// Fraction of keywords occurring in the turn (case-insensitive substring).
class KeywordScorer final : public Scorer {
public:
    KeywordScorer(std::vector<std::string> keywords, std::string identity);
    const std::string& identity() const override { return identity_; }
    double score(const ScorerRequest& request) override;

private:
    std::vector<std::string> keywords_;
    std::string identity_;
};

/// Exact-text lookup; a miss is reported as SCORER_REJECTED.
class TableScorer final : public Scorer {
public:
    TableScorer(std::unordered_map<std::string, double> table, std::string identity);
    const std::string& identity() const override { return identity_; }
    double score(const ScorerRequest& request) override;

private:
    std::unordered_map<std::string, double> table_;
    std::string identity_;
};

/// Table files are JSON objects mapping turn text to score.
std::shared_ptr<TableScorer> load_table_scorer(const std::string& path);
/// Keyword files hold one keyword per line; blank lines and '#' lines are skipped.
std::shared_ptr<KeywordScorer> load_keyword_scorer(const std::string& path);

// ---------------------------------------------------------------------------
// External scorers
// ---------------------------------------------------------------------------

/// Child process speaking newline-delimited JSON on stdin/stdout. Requests are
/// pipelined and responses matched by id, so the child may answer in any order.
class ExecScorer final : public Scorer {
public:
    ExecScorer(std::string command, ScorerOptions options = {});
    ~ExecScorer() override;

    ExecScorer(const ExecScorer&) = delete;
    ExecScorer& operator=(const ExecScorer&) = delete;

    const std::string& identity() const override { return identity_; }
    double score(const ScorerRequest& request) override;
    std::vector<ScoreResult> score_batch(std::span<const ScorerRequest> requests) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string identity_;
};

/// POST <url> with one JSON request per call; `url` defaults its path to /score.
class HttpScorer final : public Scorer {
public:
    HttpScorer(std::string url, ScorerOptions options = {});

    const std::string& identity() const override { return identity_; }
    double score(const ScorerRequest& request) override;
    std::vector<ScoreResult> score_batch(std::span<const ScorerRequest> requests) override;

private:
    std::string base_;
    std::string path_;
    ScorerOptions options_;
    std::string identity_;
};

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

/// Memoizes a scorer by (identity, turn text, context). Values for a key are
/// identical by scorer purity, so concurrent inserts are last-write-wins.
class CachedScorer final : public Scorer {
public:
    explicit CachedScorer(std::shared_ptr<Scorer> inner);

    const std::string& identity() const override { return inner_->identity(); }
    double score(const ScorerRequest& request) override;
    std::vector<ScoreResult> score_batch(std::span<const ScorerRequest> requests) override;

    std::size_t hits() const { return hits_.load(); }
    std::size_t misses() const { return misses_.load(); }
    std::size_t size() const;

private:
    std::string key_for(const ScorerRequest& request) const;
    std::optional<double> lookup(const std::string& key) const;
    void store(std::string key, double value);

    std::shared_ptr<Scorer> inner_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, double> entries_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> misses_{0};
};

std::shared_ptr<Scorer> cached(std::shared_ptr<Scorer> scorer);

std::shared_ptr<Scorer> make_scorer(const ScorerDescriptor& descriptor,
                                    const ScorerOptions& options = {});

// ---------------------------------------------------------------------------
// Wire protocol
// ---------------------------------------------------------------------------

namespace wire {

/// {"id": ..., "turn": ..., "context": [{"role": ..., "text": ...}, ...]}
std::string encode_request(const ScorerRequest& request, std::string_view id);
ScorerRequest decode_request(std::string_view body);

struct Response {
    std::string id;
    std::optional<double> score;
    std::optional<ScorerFault> error;
};

std::string encode_score(std::string_view id, double score);
std::string encode_error(std::string_view id, std::string_view code, std::string_view message);
/// Throws Error(ScorerProtocol) for anything that is not a well-formed response.
Response decode_response(std::string_view body);

} // namespace wire

} // namespace nuggetscore
