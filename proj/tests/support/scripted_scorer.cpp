// Scripted exec-transport scorer used by the protocol tests.
//
//   scripted_scorer --table scores.json [--mode in-order|reverse|hang|garbage|exit]
//
// reverse: holds requests until a window fills (or input pauses) and answers
//          the held batch last-first.
// hang:    reads requests and never answers.
// garbage: answers the first request with a truncated line.
// exit:    exits as soon as the first request arrives.
// Table misses are answered with {"error": {"code": "MISS", ...}}.

#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <poll.h>
#include <unistd.h>

#include <json.hpp>

using json = nlohmann::json;

namespace {

std::unordered_map<std::string, double> g_table;
std::string g_mode = "in-order";
constexpr std::size_t kWindow = 7;

std::string answer(const std::string& line) {
    json request;
    try {
        request = json::parse(line);
    } catch (const json::parse_error&) {
        return json{{"id", ""}, {"error", {{"code", "PROTOCOL"}, {"message", "bad line"}}}}.dump();
    }
    const std::string id = request.value("id", "");
    const std::string turn = request.value("turn", "");
    auto it = g_table.find(turn);
    if (it == g_table.end()) {
        return json{{"id", id}, {"error", {{"code", "MISS"}, {"message", "no entry"}}}}.dump();
    }
    return json{{"id", id}, {"score", it->second}}.dump();
}

void emit(const std::string& text) {
    std::string out = text + "\n";
    std::fwrite(out.data(), 1, out.size(), stdout);
    std::fflush(stdout);
}

void flush_reversed(std::vector<std::string>& held) {
    for (auto it = held.rbegin(); it != held.rend(); ++it) emit(answer(*it));
    held.clear();
}

} // namespace

int main(int argc, char** argv) {
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string flag = argv[i];
        if (flag == "--table") {
            std::ifstream in(argv[i + 1]);
            json table = json::parse(in);
            for (const auto& [text, value] : table.items()) g_table[text] = value.get<double>();
        } else if (flag == "--mode") {
            g_mode = argv[i + 1];
        }
    }

    std::string buffer;
    std::vector<std::string> held;
    bool first = true;
    char chunk[4096];
    for (;;) {
        pollfd pfd{STDIN_FILENO, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, held.empty() ? -1 : 30);
        if (ready == 0) {
            flush_reversed(held);
            continue;
        }
        const ssize_t n = ::read(STDIN_FILENO, chunk, sizeof chunk);
        if (n <= 0) break;
        buffer.append(chunk, static_cast<std::size_t>(n));

        std::size_t start = 0;
        for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos; start = nl + 1) {
            const std::string line = buffer.substr(start, nl - start);
            if (g_mode == "exit") return 0;
            if (g_mode == "hang") continue;
            if (g_mode == "garbage" && first) {
                emit("{\"id\": ");
            } else if (g_mode == "reverse") {
                held.push_back(line);
                if (held.size() >= kWindow) flush_reversed(held);
            } else {
                emit(answer(line));
            }
            first = false;
        }
        buffer.erase(0, start);
    }
    flush_reversed(held);
    return 0;
}
