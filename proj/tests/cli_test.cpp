#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "nuggetscore/annotation_io.hpp"
#include "support/test_support.hpp"

using namespace nuggetscore;

namespace {

struct Run {
    int exit_code = -1;
    std::string output;
};

Run run_cli(const std::string& args) {
    const std::string command = std::string(NUGGETSCORE_CLI_PATH) + " " + args + " 2>&1";
    Run run;
    FILE* pipe = ::popen(command.c_str(), "r");
    REQUIRE(pipe);
    std::array<char, 4096> buf{};
    while (const std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) run.output.append(buf.data(), n);
    const int status = ::pclose(pipe);
    run.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return run;
}

std::size_t count(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

int closed_port() {
    // Bind and release a socket so the port is very likely closed.
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    socklen_t len = sizeof addr;
    ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    ::close(fd);
    return ntohs(addr.sin_port);
}

} // namespace

TEST_CASE("evaluate") {
    const auto input = testing::fixture_path("case_study.json");
    const auto table = "table:" + testing::fixture_path("case_study_scores.json");

    const auto md = run_cli("evaluate --input " + input + " --scorer " + table + " --format markdown");
    CHECK(md.exit_code == 0);
    CHECK(count(md.output, "\n| ") == 5);
    CHECK(md.output.rfind("| Nugget | NS(T, n) |", 0) == 0);

    const auto out = (std::filesystem::temp_directory_path() / "nuggetscore_cli_report.csv").string();
    std::filesystem::remove(out);
    const auto csv = run_cli("evaluate " + input + " --scorer " + table + " --format csv --output " + out);
    CHECK(csv.exit_code == 0);
    CHECK(count(read_text_file(out), "\n") == 6);

    const auto order = run_cli("evaluate --input " + input + " --scorer " + table + " --w-phi 1 --w-diff 4");
    CHECK(order.exit_code == 1);
    CHECK(order.output.find("WEIGHT_ORDER") != std::string::npos);

    const auto down = run_cli("evaluate --input " + input + " --scorer http:127.0.0.1:" +
                              std::to_string(closed_port()) + " --timeout-secs 1");
    CHECK(down.exit_code == 2);
    CHECK(down.output.find("SCORER_TIMEOUT") != std::string::npos);

    const auto bad_format = run_cli("evaluate --input " + input + " --format xml");
    CHECK(bad_format.exit_code != 0);
}

TEST_CASE("validate and acts") {
    CHECK(run_cli("validate --input " + testing::fixture_path("case_study.json")).exit_code == 0);

    const auto dir = std::filesystem::temp_directory_path();
    const auto dup = (dir / "nuggetscore_cli_dup.json").string();
    write_file_atomic(dup, R"({"turn_id": "t",
        "nuggets": [{"id": "a", "text": "Hi.", "act": "opening"}],
        "candidates": {"a": {"diff": [{"act": "closing", "text": "Bye."},
                                      {"act": "closing", "text": "See you."}], "same": []}}})");
    const auto invalid = run_cli("validate --input " + dup);
    CHECK(invalid.exit_code == 1);
    CHECK(invalid.output.find("DUPLICATE_DIFF_ACT") != std::string::npos);

    const auto missing = run_cli("validate --input /nonexistent/file.json");
    CHECK(missing.exit_code == 1);
    CHECK(missing.output.find("IO_ERROR") != std::string::npos);

    const auto acts = run_cli("acts");
    CHECK(acts.exit_code == 0);
    CHECK(acts.output.find("apology") != std::string::npos);
}
