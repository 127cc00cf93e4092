// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "framepick/core.hpp"

namespace framepick::ingest {

// Raised when a remote reply cannot be interpreted; keeps the raw body.
struct RemoteParseError : ParseError {
    RemoteParseError(const std::string& what, std::string raw_payload)
        : ParseError(what), raw(std::move(raw_payload)) {}
    std::string raw;
};

struct RemoteUnavailable : Error {
    using Error::Error;
};

struct KeywordClientConfig {
    std::string endpoint;  // http://host:port/path ; FRAMEPICK_KEYWORD_ENDPOINT overrides when empty
    int max_keywords = 10;
    int max_tokens = 256;
    int retries = 3;
    double timeout_s = 10.0;
    std::string role_template;
    std::string user_template;
};

// Loads "keyword_role.txt" and "keyword_fewshot.txt" from `dir`.
void load_keyword_templates(KeywordClientConfig& cfg, const std::filesystem::path& dir);

// Replaces {title}, {summary} and {max_keywords}.
[[nodiscard]] std::string render_template(const std::string& tmpl, const std::string& title,
                                          const std::string& summary, int max_keywords);

// Extracts "[a, b, c]" from a completion. Case-insensitive dedup keeping the
// first spelling; capped at `max_keywords`. Throws RemoteParseError when no
// bracketed list is present.
[[nodiscard]] std::vector<std::string> parse_keyword_response(const std::string& text, int max_keywords);

struct KeywordExtraction {
    std::vector<std::string> keywords;
    bool fell_back = false;
    int attempts = 0;
    std::vector<std::string> warnings;
};

// One POST {role_prompt, user_prompt, max_tokens} -> {text} per attempt.
// Transport failures are retried up to cfg.retries times, then the metadata
// keywords are returned with fell_back set. Parse failures are not retried.
[[nodiscard]] KeywordExtraction extract_keywords_remote(const std::string& summary, const std::string& title,
                                                        const KeywordClientConfig& cfg,
                                                        const std::vector<std::string>& metadata_keywords);

// Text embedding provider for user-added keywords: POST {text} -> {embedding}.
[[nodiscard]] std::vector<float> fetch_text_embedding(const std::string& endpoint, const std::string& text,
                                                      double timeout_s = 10.0);

// Low-level JSON POST used by both clients; throws RemoteUnavailable on
// transport errors or non-2xx statuses.
[[nodiscard]] std::string post_json(const std::string& url, const std::string& body, double timeout_s);

}  // namespace framepick::ingest
