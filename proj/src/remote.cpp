// SPDX-License-Identifier: Apache-2.0
#include "framepick/remote.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>

#include "framepick/fsio.hpp"

namespace fs = std::filesystem;

namespace framepick::ingest {

namespace {

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
        s.replace(pos, from.size(), to);
}

// Splits "http://host:port/path" into the origin and path parts.
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint must be an absolute http URL: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

void load_keyword_templates(KeywordClientConfig& cfg, const fs::path& dir) {
    cfg.role_template = read_file(dir / "keyword_role.txt");
    cfg.user_template = read_file(dir / "keyword_fewshot.txt");
}

std::string render_template(const std::string& tmpl, const std::string& title, const std::string& summary,
                            int max_keywords) {
    std::string out = tmpl;
    replace_all(out, "{title}", title);
    replace_all(out, "{summary}", summary);
    replace_all(out, "{max_keywords}", std::to_string(max_keywords));
    return out;
}

std::vector<std::string> parse_keyword_response(const std::string& text, int max_keywords) {
    const auto open = text.find('[');
    const auto close = open == std::string::npos ? std::string::npos : text.find(']', open + 1);
    if (open == std::string::npos || close == std::string::npos)
        throw RemoteParseError("keyword response has no bracketed list", text);
    const std::string body = text.substr(open + 1, close - open - 1);
    std::vector<std::string> out;
    std::set<std::string> seen;
    std::size_t start = 0;
    while (start <= body.size()) {
        const auto comma = body.find(',', start);
        std::string item = trim(body.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (item.size() >= 2 && (item.front() == '"' || item.front() == '\'') && item.back() == item.front())
            item = trim(item.substr(1, item.size() - 2));
        if (!item.empty() && seen.insert(lower(item)).second) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (max_keywords > 0 && int(out.size()) > max_keywords) out.resize(std::size_t(max_keywords));
    return out;
}

std::string post_json(const std::string& url, const std::string& body, double timeout_s) {
    const auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    const auto secs = std::max<long>(1, long(timeout_s));
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    auto res = client.Post(path, body, "application/json");
    if (!res) throw RemoteUnavailable("POST " + url + ": " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
        throw RemoteUnavailable("POST " + url + ": HTTP " + std::to_string(res->status));
    return res->body;
}

KeywordExtraction extract_keywords_remote(const std::string& summary, const std::string& title,
                                          const KeywordClientConfig& cfg,
                                          const std::vector<std::string>& metadata_keywords) {
    if (summary.find_first_not_of(" \t\r\n") == std::string::npos)
        throw ValidationError("keyword extraction needs a non-blank summary");
    std::string endpoint = cfg.endpoint;
    if (endpoint.empty())
        if (const char* env = std::getenv("FRAMEPICK_KEYWORD_ENDPOINT")) endpoint = env;
    if (endpoint.empty()) throw ConfigError("no keyword endpoint configured (FRAMEPICK_KEYWORD_ENDPOINT)");

    const nlohmann::json request = {
        {"role_prompt", render_template(cfg.role_template, title, summary, cfg.max_keywords)},
        {"user_prompt", render_template(cfg.user_template, title, summary, cfg.max_keywords)},
        {"max_tokens", cfg.max_tokens}};
    const std::string body = request.dump();

    KeywordExtraction result;
    const int attempts = std::max(1, cfg.retries + 1);
    for (int i = 0; i < attempts; ++i) {
        ++result.attempts;
        std::string raw;
        try {
            raw = post_json(endpoint, body, cfg.timeout_s);
        } catch (const RemoteUnavailable& e) {
            result.warnings.push_back(e.what());
            continue;
        }
        nlohmann::json reply;
        try {
            reply = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::exception&) {
            throw RemoteParseError("keyword endpoint returned non-JSON body", raw);
        }
        if (!reply.is_object() || !reply.contains("text") || !reply["text"].is_string())
            throw RemoteParseError("keyword endpoint reply lacks a 'text' field", raw);
        result.keywords = parse_keyword_response(reply["text"].get<std::string>(), cfg.max_keywords);
        return result;
    }
    result.fell_back = true;
    result.keywords = metadata_keywords;
    if (cfg.max_keywords > 0 && int(result.keywords.size()) > cfg.max_keywords)
        result.keywords.resize(std::size_t(cfg.max_keywords));
    result.warnings.push_back("keyword endpoint unreachable after " + std::to_string(attempts) +
                              " attempts; using metadata keywords");
    return result;
}

std::vector<float> fetch_text_embedding(const std::string& endpoint, const std::string& text, double timeout_s) {
    const std::string raw = post_json(endpoint, nlohmann::json{{"text", text}}.dump(), timeout_s);
    try {
        const auto reply = nlohmann::json::parse(raw);
        auto v = reply.at("embedding").get<std::vector<float>>();
        if (v.empty()) throw RemoteParseError("embedding endpoint returned an empty vector", raw);
        return v;
    } catch (const nlohmann::json::exception&) {
        throw RemoteParseError("embedding endpoint reply lacks an 'embedding' array", raw);
    }
}

}  // namespace framepick::ingest
