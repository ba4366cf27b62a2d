// nuggetscore: command-line front end.
//
//   nuggetscore evaluate --input turn.json --scorer table:scores.json --format markdown
//   nuggetscore validate --input turn.json
//   nuggetscore serve --port 8080 --scorer exec:"python3 adapter.py" --data-dir annotations/
//   nuggetscore acts

#include <csignal>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nuggetscore/annotation_io.hpp"
#include "nuggetscore/scoring_engine.hpp"
#include "nuggetscore/service.hpp"

namespace ns = nuggetscore;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitScorer = 2;

bool is_scorer_error(ns::ErrorCode code) {
    switch (code) {
        case ns::ErrorCode::ScorerFailure:
        case ns::ErrorCode::ScorerTimeout:
        case ns::ErrorCode::ScorerProtocol:
        case ns::ErrorCode::ScorerRejected:
        case ns::ErrorCode::NonFiniteScore:
        case ns::ErrorCode::EmptyTurnPerturbation:
            return true;
        default:
            return false;
    }
}

int report_error(const ns::Error& e) {
    const ns::ErrorCode shown = e.cause().value_or(e.code());
    std::cerr << "error: " << ns::to_string(shown) << ": " << e.what() << "\n";
    return is_scorer_error(e.code()) ? kExitScorer : kExitInvalid;
}

struct ScorerFlags {
    std::string scorer = "length";
    bool no_cache = false;
    double timeout_secs = 30.0;

    std::shared_ptr<ns::Scorer> build() const {
        ns::ScorerOptions options;
        options.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_secs * 1000.0));
        auto built = ns::make_scorer(ns::parse_scorer_descriptor(scorer), options);
        return no_cache ? built : ns::cached(std::move(built));
    }

    void attach(CLI::App* cmd) {
        cmd->add_option("--scorer", scorer,
                        "constant:<v> | length | keyword:<file> | table:<file> | exec:<command> | "
                        "http:<url>")
            ->capture_default_str();
        cmd->add_flag("--no-cache", no_cache, "Disable the score cache");
        cmd->add_option("--timeout-secs", timeout_secs, "Deadline per scorer request")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
    }
};

struct ConfigFlags {
    std::optional<std::string> path;
    ns::ConfigOverrides overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", path, "Scoring config JSON");
        cmd->add_option("--k", overrides.k, "Top-K for different-act substitutions");
        cmd->add_option("--l", overrides.l, "Top-L for same-act substitutions");
        cmd->add_option("--w-phi", overrides.w_phi, "Deletion weight");
        cmd->add_option("--w-diff", overrides.w_diff, "Different-act weight");
        cmd->add_option("--w-same", overrides.w_same, "Same-act weight");
        cmd->add_option("--sigmoid-slope", overrides.sigmoid_slope, "Sigmoid slope");
    }
};

int cmd_evaluate(const std::string& input, const ConfigFlags& config, const ScorerFlags& scorer_flags,
                 const std::string& format_name, const std::optional<std::string>& output) {
    const auto format = ns::parse_report_format(format_name);
    if (!format) {
        std::cerr << "error: unknown format '" << format_name << "' (json, csv, markdown)\n";
        return kExitInvalid;
    }
    try {
        const ns::Annotation annotation = ns::load_annotation(input);
        const ns::ScoringConfig cfg = ns::load_config(config.path, config.overrides);
        auto scorer = scorer_flags.build();
        const auto eval = ns::evaluate_turn(annotation.turn, annotation.candidates, cfg, *scorer);
        const auto report = ns::make_report(annotation, eval);
        if (output) {
            ns::write_report(report, *format, *output);
        } else {
            std::cout << ns::render_report(report, *format);
        }
        return kExitOk;
    } catch (const ns::ValidationError& e) {
        std::cerr << "error: VALIDATION_ERROR\n" << e.report().summary();
        return kExitInvalid;
    } catch (const ns::Error& e) {
        return report_error(e);
    }
}

int cmd_validate(const std::string& input) {
    try {
        const ns::Annotation annotation = ns::load_annotation(input);
        const auto report = ns::validate_annotation(annotation.turn, annotation.candidates);
        std::cout << report.summary() << "ok: " << annotation.turn.nuggets.size() << " nuggets, "
                  << annotation.candidates.size() << " candidate sets\n";
        return kExitOk;
    } catch (const ns::ValidationError& e) {
        std::cout << e.report().summary();
        std::cerr << "error: VALIDATION_ERROR (" << e.report().error_count() << " errors)\n";
        return kExitInvalid;
    } catch (const ns::Error& e) {
        std::cerr << "error: " << ns::to_string(e.code()) << ": " << e.what() << "\n";
        return kExitInvalid;
    }
}

ns::WorkbenchServer* g_server = nullptr;

void handle_signal(int) {
    if (g_server) g_server->stop();
}

int cmd_serve(const std::string& host, int port, const std::string& data_dir,
              const std::optional<std::string>& static_dir, const ConfigFlags& config,
              const ScorerFlags& scorer_flags) {
    try {
        const ns::ScoringConfig defaults = ns::load_config(config.path, config.overrides);
        auto service = std::make_shared<ns::WorkbenchService>(scorer_flags.build(), data_dir, defaults);
        ns::WorkbenchServer server(service, static_dir ? std::optional<std::filesystem::path>(*static_dir)
                                                       : std::nullopt);
        const int bound = server.bind(host, port);
        g_server = &server;
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        std::cerr << "serving on http://" << host << ":" << bound << "\n";
        server.listen();
        g_server = nullptr;
        return kExitOk;
    } catch (const ns::ValidationError& e) {
        std::cerr << "error: VALIDATION_ERROR\n" << e.report().summary();
        return kExitInvalid;
    } catch (const ns::Error& e) {
        return report_error(e);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nugget-level dialogue quality scores from a turn-level scorer"};
    app.require_subcommand(1);

    std::string input;
    std::string format = "json";
    std::optional<std::string> output;
    ConfigFlags eval_config;
    ScorerFlags eval_scorer;
    auto* evaluate = app.add_subcommand("evaluate", "Score every nugget of an annotated turn");
    evaluate->add_option("--input,input", input, "Annotation JSON")->required();
    evaluate->add_option("--format", format, "json | csv | markdown")->capture_default_str();
    evaluate->add_option("--output", output, "Write the report here instead of stdout");
    eval_config.attach(evaluate);
    eval_scorer.attach(evaluate);

    std::string validate_input;
    auto* validate = app.add_subcommand("validate", "Check an annotation file");
    validate->add_option("--input,input", validate_input, "Annotation JSON")->required();

    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir = "annotations";
    std::optional<std::string> static_dir;
    ConfigFlags serve_config;
    ScorerFlags serve_scorer;
    auto* serve = app.add_subcommand("serve", "Run the workbench HTTP API");
    serve->add_option("--host", host)->capture_default_str();
    serve->add_option("--port", port)->capture_default_str()->check(CLI::Range(0, 65535));
    serve->add_option("--data-dir", data_dir, "Annotation store")->capture_default_str();
    serve->add_option("--static-dir", static_dir, "Workbench UI assets served at /");
    serve_config.attach(serve);
    serve_scorer.attach(serve);

    auto* acts = app.add_subcommand("acts", "List the dialogue-act catalog");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitInvalid;
    }

    if (*evaluate) return cmd_evaluate(input, eval_config, eval_scorer, format, output);
    if (*validate) return cmd_validate(validate_input);
    if (*serve) return cmd_serve(host, port, data_dir, static_dir, serve_config, serve_scorer);
    if (*acts) {
        for (const auto& act : ns::act_catalog()) {
            std::cout << act.id << "\t" << act.display_name << "\t" << act.example << "\n";
        }
    }
    return kExitOk;
}
