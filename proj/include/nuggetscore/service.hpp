#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "nuggetscore/core_model.hpp"
#include "nuggetscore/scorer_gateway.hpp"

namespace nuggetscore {

struct ServiceResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Request handlers for the annotation workbench, independent of the HTTP
/// server so they can be driven directly.
///
/// Status mapping: 400 malformed or invalid annotations/requests, 404 unknown
/// annotation ids, 422 config violations, 502 scorer failures.
class WorkbenchService {
public:
    WorkbenchService(std::shared_ptr<Scorer> scorer, std::filesystem::path data_dir,
                     ScoringConfig defaults = {});

    ServiceResponse list_acts() const;
    ServiceResponse get_annotation(std::string_view id) const;
    /// Stores the body verbatim once it parses and validates.
    ServiceResponse put_annotation(std::string_view id, std::string_view body);
    /// {"annotation_id", "config"?} -> report JSON.
    ServiceResponse evaluate(std::string_view body);
    /// {"annotation_id", "nugget_id", "kind": deletion|diff|same, "candidate"?, "config"?}
    /// -> {"s_original", "s_perturbed", "delta", "projected_ns", ...}
    ServiceResponse whatif(std::string_view body);

    static bool valid_annotation_id(std::string_view id);

private:
    std::filesystem::path path_for(std::string_view id) const;

    std::shared_ptr<Scorer> scorer_;
    std::filesystem::path data_dir_;
    ScoringConfig defaults_;
};

/// HTTP/1.1 front end for WorkbenchService.
class WorkbenchServer {
public:
    WorkbenchServer(std::shared_ptr<WorkbenchService> service,
                    std::optional<std::filesystem::path> static_dir = std::nullopt);
    ~WorkbenchServer();

    WorkbenchServer(const WorkbenchServer&) = delete;
    WorkbenchServer& operator=(const WorkbenchServer&) = delete;

    /// Binds (port 0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace nuggetscore
