#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <future>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "nuggetscore/scorer_gateway.hpp"

extern char** environ;

namespace nuggetscore {

struct ExecScorer::Impl {
    using Clock = std::chrono::steady_clock;

    std::string command;
    ScorerOptions options;
    pid_t child = -1;
    int to_child = -1;
    int from_child = -1;
    std::thread reader;

    std::mutex write_mutex;
    std::mutex pending_mutex;
    std::unordered_map<std::string, std::promise<double>> pending;
    std::uint64_t next_id = 0;
    bool dead = false;
    std::string death_reason;

    Impl(std::string cmd, ScorerOptions opts) : command(std::move(cmd)), options(opts) {
        std::signal(SIGPIPE, SIG_IGN);
        spawn();
        reader = std::thread([this] { read_loop(); });
    }

    ~Impl() {
        if (to_child >= 0) ::close(to_child);
        // Give the child a moment to exit on EOF before forcing it.
        bool exited = false;
        for (int i = 0; i < 50 && !exited; ++i) {
            int status = 0;
            if (::waitpid(child, &status, WNOHANG) == child) {
                exited = true;
            } else {
                std::this_thread::sleep_for(std::chrono::milliseconds(20));
            }
        }
        if (!exited) {
            ::kill(child, SIGKILL);
            int status = 0;
            ::waitpid(child, &status, 0);
        }
        if (reader.joinable()) reader.join();
        if (from_child >= 0) ::close(from_child);
    }

    void spawn() {
        int in_pipe[2];
        int out_pipe[2];
        if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0) {
            throw Error(ErrorCode::ScorerProtocol,
                        std::string("cannot create pipes: ") + std::strerror(errno));
        }
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
        posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

        const std::string script = "exec " + command;
        const char* argv[] = {"/bin/sh", "-c", script.c_str(), nullptr};
        const int rc = ::posix_spawn(&child, "/bin/sh", &actions, nullptr,
                                     const_cast<char* const*>(argv), environ);
        posix_spawn_file_actions_destroy(&actions);
        ::close(in_pipe[0]);
        ::close(out_pipe[1]);
        if (rc != 0) {
            ::close(in_pipe[1]);
            ::close(out_pipe[0]);
            throw Error(ErrorCode::ScorerProtocol,
                        "cannot start scorer '" + command + "': " + std::strerror(rc));
        }
        to_child = in_pipe[1];
        from_child = out_pipe[0];
    }

    void fail_all(const std::string& reason) {
        std::lock_guard lock(pending_mutex);
        dead = true;
        death_reason = reason;
        for (auto& [id, promise] : pending) {
            promise.set_exception(std::make_exception_ptr(Error(ErrorCode::ScorerProtocol, reason)));
        }
        pending.clear();
    }

    void handle_line(const std::string& line) {
        if (line.empty()) return;
        wire::Response response;
        try {
            response = wire::decode_response(line);
        } catch (const Error& e) {
            fail_all(std::string("scorer '") + command + "' sent a malformed line: " + e.what());
            return;
        }

        std::lock_guard lock(pending_mutex);
        auto it = pending.find(response.id);
        if (it == pending.end()) {
            // Late answer to a request that already timed out.
            return;
        }
        if (response.error) {
            it->second.set_exception(
                std::make_exception_ptr(Error(ErrorCode::ScorerRejected, response.error->message)));
        } else if (!std::isfinite(*response.score)) {
            it->second.set_exception(std::make_exception_ptr(
                Error(ErrorCode::NonFiniteScore, "scorer returned a non-finite score")));
        } else {
            it->second.set_value(*response.score);
        }
        pending.erase(it);
    }

    void read_loop() {
        std::string buffer;
        char chunk[4096];
        for (;;) {
            const ssize_t n = ::read(from_child, chunk, sizeof chunk);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) break;
            buffer.append(chunk, static_cast<std::size_t>(n));
            std::size_t start = 0;
            for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos;
                 start = nl + 1) {
                std::string line = buffer.substr(start, nl - start);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                handle_line(line);
            }
            buffer.erase(0, start);
        }
        fail_all("scorer process '" + command + "' exited");
    }

    struct Sent {
        std::string wire_id;
        std::future<double> future;
        Clock::time_point deadline;
    };

    /// Registers the request and writes it.
    Sent send(const ScorerRequest& request) {
        std::string wire_id;
        std::future<double> future;
        {
            std::lock_guard lock(pending_mutex);
            if (dead) throw Error(ErrorCode::ScorerProtocol, death_reason);
            wire_id = std::to_string(next_id++);
            future = pending[wire_id].get_future();
        }

        std::string line = wire::encode_request(request, wire_id);
        line += '\n';
        std::lock_guard lock(write_mutex);
        std::size_t off = 0;
        while (off < line.size()) {
            const ssize_t n = ::write(to_child, line.data() + off, line.size() - off);
            if (n < 0 && errno == EINTR) continue;
            if (n < 0) {
                forget(wire_id);
                throw Error(ErrorCode::ScorerProtocol,
                            "cannot write to scorer '" + command + "': " + std::strerror(errno));
            }
            off += static_cast<std::size_t>(n);
        }
        return {std::move(wire_id), std::move(future), Clock::now() + options.timeout};
    }

    void forget(const std::string& wire_id) {
        std::lock_guard lock(pending_mutex);
        pending.erase(wire_id);
    }

    double await(Sent& sent) {
        if (sent.future.wait_until(sent.deadline) != std::future_status::ready) {
            forget(sent.wire_id);
            throw Error(ErrorCode::ScorerTimeout,
                        "scorer '" + command + "' did not answer within " +
                            std::to_string(options.timeout.count()) + " ms");
        }
        return sent.future.get();
    }
};

ExecScorer::ExecScorer(std::string command, ScorerOptions options)
    : impl_(std::make_unique<Impl>(command, options)), identity_("exec:" + command) {}

ExecScorer::~ExecScorer() = default;

double ExecScorer::score(const ScorerRequest& request) {
    auto sent = impl_->send(request);
    return impl_->await(sent);
}

std::vector<ScoreResult> ExecScorer::score_batch(std::span<const ScorerRequest> requests) {
    struct InFlight {
        std::optional<Impl::Sent> sent;
        std::optional<ScorerFault> send_error;
    };
    std::vector<InFlight> flights(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        try {
            flights[i].sent = impl_->send(requests[i]);
        } catch (const Error& e) {
            flights[i].send_error = ScorerFault{e.code(), e.what()};
        }
    }

    std::vector<ScoreResult> results;
    results.reserve(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        ScoreResult result{requests[i].request_id, std::nullopt, flights[i].send_error};
        if (flights[i].sent) {
            try {
                result.score = impl_->await(*flights[i].sent);
            } catch (const Error& e) {
                result.error = ScorerFault{e.code(), e.what()};
            }
        }
        results.push_back(std::move(result));
    }
    return results;
}

} // namespace nuggetscore
