// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "framepick/config.hpp"
#include "framepick/dataset.hpp"
#include "framepick/ingest.hpp"
#include "framepick/selection.hpp"

namespace framepick::service {

// ---------------------------------------------------------------------------
// Selections log
// ---------------------------------------------------------------------------

struct SelectionRecord {
    std::uint64_t seq = 0;  // position in the log, from 1
    std::string video_id;
    std::string candidate_id;
    std::string aspect;
    std::string chosen_by;
    std::string chosen_at;
    std::string note;
    std::string action = "select";  // or "deselect"
    std::string request_id;          // client token; repeated tokens are not appended twice
};

[[nodiscard]] nlohmann::json to_json(const SelectionRecord& r);
[[nodiscard]] SelectionRecord selection_from_json(const nlohmann::json& j);

// Append-only JSONL file. Every append is fsynced before it returns. A torn
// final line (crash mid-write) is cut off when the log is opened.
class SelectionLog {
public:
    explicit SelectionLog(std::filesystem::path path, std::vector<std::string>* warnings = nullptr);

    // Assigns seq, writes durably, then calls `after_durable` (a test seam
    // standing in for the acknowledgement).
    SelectionRecord append(SelectionRecord r, const std::function<void(const SelectionRecord&)>& after_durable = {});

    [[nodiscard]] std::vector<SelectionRecord> all() const;
    // Latest record per (aspect, candidate), keeping those whose last action
    // is "select"; ordered by seq.
    [[nodiscard]] std::vector<SelectionRecord> latest() const;
    [[nodiscard]] std::optional<SelectionRecord> find_request(const std::string& request_id) const;
    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::vector<SelectionRecord> records_;
};

// ---------------------------------------------------------------------------
// Request parsing
// ---------------------------------------------------------------------------

struct FieldError {
    std::string field;
    std::string message;
};

// Parses a search body. Unknown fields and type errors are collected rather
// than thrown.
[[nodiscard]] selection::SearchQuery parse_search_query(const nlohmann::json& body, std::vector<FieldError>& errors,
                                                        const scoring::WeightConfig& default_weights = {});

// ---------------------------------------------------------------------------
// API
// ---------------------------------------------------------------------------

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

// Immutable per-video view shared by in-flight requests.
struct Snapshot {
    std::shared_ptr<const Dataset> dataset;
    std::shared_ptr<const nlohmann::json> proposals;
    std::shared_ptr<const ingest::TensorFile> embeddings;  // candidate embeddings
    std::map<int, std::string> frame_files;
    selection::ExtraKeywords extra;       // user keywords: raw cosine per candidate
    std::vector<std::string> user_keywords;  // registration order
};

class Service {
public:
    // Each bundle must contain a finished pipeline run (cache/out/dataset.json).
    Service(const std::vector<std::filesystem::path>& bundles, EngineConfig cfg);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    [[nodiscard]] ApiResponse handle(const ApiRequest& req);

    // Re-reads the dataset files of one video and swaps the snapshot in.
    void reload(const std::string& video_id);
    // Current snapshot (loads on first use). Throws ArtifactMissingError for unknown ids.
    [[nodiscard]] std::shared_ptr<const Snapshot> snapshot(const std::string& video_id);
    [[nodiscard]] std::vector<std::string> video_ids() const;

    // Test seam: called after a selection is durable and before the response.
    std::function<void(const SelectionRecord&)> after_selection_durable;

private:
    struct Video;
    Video& video(const std::string& id);
    std::shared_ptr<const Snapshot> load_snapshot(Video& v);

    ApiResponse list_videos();
    ApiResponse get_video(Video& v);
    ApiResponse get_proposals(Video& v, const ApiRequest& req);
    ApiResponse post_search(Video& v, const ApiRequest& req);
    ApiResponse get_group(Video& v, const std::string& gid);
    ApiResponse get_image(Video& v, const std::string& candidate, const ApiRequest& req);
    ApiResponse get_distributions(Video& v, const ApiRequest& req);
    ApiResponse post_selection(Video& v, const ApiRequest& req);
    ApiResponse get_selections(Video& v);
    ApiResponse post_keyword(Video& v, const ApiRequest& req);

    EngineConfig cfg_;
    std::map<std::string, std::unique_ptr<Video>> videos_;
};

// Builds an error response: {"error": {"status", "code", "message", "fields"?}}.
[[nodiscard]] ApiResponse error_response(int status, const std::string& message,
                                         const std::vector<FieldError>& fields = {});

// Serves `service` over HTTP until stop() is called. Port 0 picks a free port.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();
    // Binds and starts the listener on a background thread; returns the bound port.
    int start(const std::string& host, int port);
    // Blocks on the calling thread.
    void listen(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace framepick::service
